#pragma once

#include "pngrasp/scenegen/capture.hpp"
#include "pngrasp/scenegen/dataset.hpp"
#include "pngrasp/scenegen/filter.hpp"
#include "pngrasp/scenegen/labels.hpp"
#include "pngrasp/scenegen/scene.hpp"
