#pragma once

#include "rtrack/assignment.hpp"
#include "rtrack/dataio.hpp"
#include "rtrack/error.hpp"
#include "rtrack/geometry.hpp"
#include "rtrack/gspo.hpp"
#include "rtrack/gspo_toy.hpp"
#include "rtrack/kalman.hpp"
#include "rtrack/metrics.hpp"
#include "rtrack/perception.hpp"
#include "rtrack/pipeline.hpp"
#include "rtrack/rewards.hpp"
#include "rtrack/tracker.hpp"
#include "rtrack/tracking_result.hpp"
