// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dlw/agents.hpp"
#include "dlw/config.hpp"
#include "dlw/encoders.hpp"
#include "dlw/game.hpp"
#include "dlw/harness.hpp"
#include "dlw/protocol.hpp"
#include "dlw/qlearning.hpp"
#include "dlw/rewards.hpp"
#include "dlw/rng.hpp"
#include "dlw/server.hpp"
