#pragma once

#include "ccl/config_io.hpp"
#include "ccl/envs.hpp"
#include "ccl/errors.hpp"
#include "ccl/evolution.hpp"
#include "ccl/experiment.hpp"
#include "ccl/fitness.hpp"
#include "ccl/harness.hpp"
#include "ccl/rng.hpp"
#include "ccl/snapshot.hpp"
#include "ccl/task_model.hpp"
#include "ccl/trainer.hpp"
