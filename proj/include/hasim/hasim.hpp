#pragma once

#include "adaptation.hpp"
#include "bandwidth_schedule.hpp"
#include "bitrate_ladder.hpp"
#include "client_engine.hpp"
#include "errors.hpp"
#include "fluid_link.hpp"
#include "metrics.hpp"
#include "runner.hpp"
#include "scenario.hpp"
#include "trace.hpp"
#include "units.hpp"
#include "version.hpp"
