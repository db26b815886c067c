#pragma once

#include "pngrasp/planner/grasp_set_io.hpp"
#include "pngrasp/planner/object_spec.hpp"
#include "pngrasp/planner/planner.hpp"
