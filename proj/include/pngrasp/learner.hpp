#pragma once

#include "pngrasp/learner/loss.hpp"
#include "pngrasp/learner/network.hpp"
#include "pngrasp/learner/predict.hpp"
#include "pngrasp/learner/preprocess.hpp"
#include "pngrasp/learner/train.hpp"
