#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epismc/config.hpp"
#include "epismc/diagnostics.hpp"
#include "epismc/smc.hpp"

namespace epismc {

// One-step-ahead predictive for the count stream of (day, age), mixed over a
// weighted parameter sample. The sample is systematically thinned to at most
// max_components before the mixture is materialized; components whose
// parameters cannot produce a trajectory are skipped (they carry no posterior
// mass).
DiscretePredictive count_predictive(const LikelihoodModel& model, const Eigen::MatrixXd& u_rows,
                                    const Eigen::VectorXd& weights, int day, int age,
                                    int max_components);

// End-to-end run: synthesize surveillance from the configured truth, seed the
// filter (reference sampler at the first landmark day, or the prior at day 0),
// assimilate day by day while scoring one-step-ahead predictions, forecast at
// landmark days, compare against reference-sampler posteriors at the KL days,
// and write a manifest hashing every output. All outputs are deterministic
// functions of (config bytes, seed); wall-clock timings go to a separate
// unmanifested log so reruns stay byte-identical.
struct PipelineResult {
    std::string out_dir;
    std::vector<std::string> outputs;  // relative file names, manifest last
};

PipelineResult run_pipeline(const AppConfig& cfg, const std::string& out_dir, std::uint64_t seed);

}  // namespace epismc
