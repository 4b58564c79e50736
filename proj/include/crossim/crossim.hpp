#pragma once

#include "crossim/core.hpp"
#include "crossim/kde.hpp"
#include "crossim/world.hpp"
#include "crossim/perception.hpp"
#include "crossim/motor.hpp"
#include "crossim/rewards.hpp"
#include "crossim/params.hpp"
#include "crossim/observe.hpp"
#include "crossim/nn.hpp"
#include "crossim/policy.hpp"
#include "crossim/env.hpp"
#include "crossim/sac.hpp"
#include "crossim/bc.hpp"
#include "crossim/data.hpp"
#include "crossim/eval.hpp"
#include "crossim/gp.hpp"
#include "crossim/fit.hpp"
#include "crossim/io.hpp"
