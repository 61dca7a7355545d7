#pragma once

#include "etac/errors.hpp"
#include "etac/linalg.hpp"
#include "etac/hybrid_ode.hpp"
#include "etac/model.hpp"
#include "etac/identifier.hpp"
#include "etac/trigger_controller.hpp"
#include "etac/systems.hpp"
#include "etac/harness/config.hpp"
#include "etac/harness/presets.hpp"
#include "etac/harness/runner.hpp"
#include "etac/harness/emit.hpp"
#include "etac/harness/compare.hpp"
