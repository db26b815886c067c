#pragma once

#include "pngrasp/quality/convex_hull.hpp"
#include "pngrasp/quality/ferrari_canny.hpp"
#include "pngrasp/quality/grasp_quality.hpp"
#include "pngrasp/quality/wrench.hpp"
