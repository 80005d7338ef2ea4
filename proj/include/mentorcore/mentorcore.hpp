#pragma once

#include "mentorcore/core.hpp"
#include "mentorcore/environments.hpp"
#include "mentorcore/experts.hpp"
#include "mentorcore/harness.hpp"
#include "mentorcore/metrics.hpp"
#include "mentorcore/parallel.hpp"
#include "mentorcore/reduction_budget.hpp"
#include "mentorcore/reduction_safe.hpp"
#include "mentorcore/rng.hpp"
