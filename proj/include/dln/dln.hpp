#pragma once

#include "dln/baselines.hpp"
#include "dln/checkpoint.hpp"
#include "dln/data.hpp"
#include "dln/diagnostics.hpp"
#include "dln/errors.hpp"
#include "dln/linalg.hpp"
#include "dln/matrix.hpp"
#include "dln/models.hpp"
#include "dln/operators.hpp"
#include "dln/random.hpp"
#include "dln/theory.hpp"
#include "dln/trainer.hpp"
#include "dln/trajectory.hpp"
#include "dln/experiment.hpp"
