#pragma once

#include "revsent/baselines.hpp"
#include "revsent/config.hpp"
#include "revsent/corpus.hpp"
#include "revsent/encoder.hpp"
#include "revsent/encoder_io.hpp"
#include "revsent/eval.hpp"
#include "revsent/labeling.hpp"
#include "revsent/tokenizer.hpp"
#include "revsent/trainer.hpp"
