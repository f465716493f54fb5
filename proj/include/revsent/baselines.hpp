#pragma once

#include "revsent/baselines/cart.hpp"
#include "revsent/baselines/cross_validation.hpp"
#include "revsent/baselines/features.hpp"
#include "revsent/baselines/knn.hpp"
#include "revsent/baselines/linear_svm.hpp"
#include "revsent/baselines/model.hpp"
#include "revsent/baselines/naive_bayes.hpp"
