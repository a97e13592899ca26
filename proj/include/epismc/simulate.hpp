#pragma once

#include <cstdint>

#include "epismc/config.hpp"
#include "epismc/data.hpp"
#include "epismc/likelihood.hpp"

namespace epismc {

// Synthetic surveillance draw from the generative model at the configured
// truth. The expectations come from the same LikelihoodModel the inference
// uses, so fitted and generating models agree by construction.
//
// Scenario 1 emits confirmed-case counts daily; scenario 2 emits GP counts
// daily plus periodic virology swab rounds. Both run the serology calendar.
// Streams draw from per-(day, purpose, age) derived RNG streams, so the
// realization is independent of evaluation order.
Dataset simulate_dataset(const AppConfig& cfg, std::uint64_t seed);

// convenience: the noiseless expectations behind the draw, for tests/tools
std::vector<DayExpectation> truth_expectations(const AppConfig& cfg, int last_day);

}  // namespace epismc
