#pragma once

#include "pngrasp/geometry/bvh.hpp"
#include "pngrasp/geometry/camera.hpp"
#include "pngrasp/geometry/gripper.hpp"
#include "pngrasp/geometry/kdtree.hpp"
#include "pngrasp/geometry/mass.hpp"
#include "pngrasp/geometry/mesh.hpp"
#include "pngrasp/geometry/mesh_io.hpp"
#include "pngrasp/geometry/primitives.hpp"
#include "pngrasp/geometry/sampling.hpp"
#include "pngrasp/geometry/transform.hpp"
