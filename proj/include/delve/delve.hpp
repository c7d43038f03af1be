#pragma once

// Umbrella header: the full simulated-client exploration harness.

#include "delve/analysis.hpp"
#include "delve/backends.hpp"
#include "delve/errors.hpp"
#include "delve/experiment.hpp"
#include "delve/fixtures.hpp"
#include "delve/http_backends.hpp"
#include "delve/mediator.hpp"
#include "delve/metrics.hpp"
#include "delve/persona.hpp"
#include "delve/prompt.hpp"
#include "delve/session.hpp"
#include "delve/transcript.hpp"

namespace delve {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace delve
