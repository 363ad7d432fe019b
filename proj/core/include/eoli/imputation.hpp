#pragma once

#include "eoli/feature_matrix.hpp"
#include "eoli/regressors.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace eoli {

struct LinearLearner {
    /// When the observed design is rank deficient, add a 1e-8 ridge to the
    /// normal equations instead of failing with SingularDesign.
    bool ridge_fallback = true;
};

struct MiceConfig {
    std::variant<LinearLearner, BoostConfig> base_learner = LinearLearner{};
    int n_cycles = 10;
    std::uint64_t seed = 0;
};

struct ForestImputeConfig {
    ForestConfig forest;
    int max_iter = 10;
    /// Stop as soon as the normalized change grows (missForest rule). When
    /// false, always run max_iter iterations.
    bool stop_on_increase = true;
};

struct ImputationResult {
    FeatureMatrix completed;
    int iterations_run = 0;
    /// Normalized change per iteration over the originally missing cells:
    /// sum (x_t - x_{t-1})^2 / sum x_t^2.
    std::vector<double> deltas;
    std::vector<std::string> warnings;
};

ImputationResult mean_impute(const FeatureMatrix &matrix);
ImputationResult mice_impute(const FeatureMatrix &matrix, const MiceConfig &config = {});
ImputationResult forest_impute(const FeatureMatrix &matrix, const ForestImputeConfig &config = {});

/// Closed set of imputer choices used by the benchmark harness and the CLI.
using ImputerConfig = std::variant<std::monostate, MiceConfig, ForestImputeConfig>;

struct NamedImputer {
    std::string name;
    ImputerConfig config; ///< monostate = column-mean baseline
};

/// Runs the configured imputer with its seed replaced by `seed`.
ImputationResult run_imputer(const FeatureMatrix &matrix, const ImputerConfig &config,
                             std::uint64_t seed);

/// Column visiting order used by MICE and the forest imputer: columns with at
/// least one missing cell, ascending by missing count, ties by column index.
std::vector<std::size_t> visit_order(const FeatureMatrix &matrix);

} // namespace eoli
