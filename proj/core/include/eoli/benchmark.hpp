#pragma once

#include "eoli/feature_matrix.hpp"
#include "eoli/imputation.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eoli {

struct HeldOutCell {
    std::size_t row = 0;
    std::size_t col = 0;
    double truth = 0.0;
};

struct MaskPlan {
    double fraction = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> target_columns;
    std::vector<HeldOutCell> held_out; ///< grouped by target column, row-ascending within
};

struct MaskResult {
    FeatureMatrix masked;
    MaskPlan plan;
};

/// MCAR deletion: per target column exactly floor(fraction * observed) cells,
/// drawn uniformly without replacement from a stream derived from (seed,
/// position of the column in `columns`).
MaskResult mask_mcar(const FeatureMatrix &matrix, double fraction,
                     const std::vector<std::string> &columns, std::uint64_t seed);

/// Writes the held-out truths back into a masked matrix.
FeatureMatrix unmask(const FeatureMatrix &masked, const MaskPlan &plan);

struct Score {
    double rmse = 0.0;
    double mae = 0.0;
};

Score score(std::span<const double> predictions, std::span<const double> truth);

struct MethodAttributeStats {
    std::string method;
    std::string attribute;
    double rmse_mean = 0.0;
    double rmse_std = 0.0;
    double mae_mean = 0.0;
    double mae_std = 0.0;
};

/// Per-run raw scores, indexed [run][method][attribute].
using RunScores = std::vector<std::vector<std::vector<Score>>>;

struct EvaluationReport {
    std::vector<MethodAttributeStats> rows; ///< method-major, attribute order as requested
    int n_runs = 0;
    std::uint64_t master_seed = 0;
    RunScores runs;
};

/// Mean and sample (n-1) standard deviation; std is 0 for a single sample.
std::pair<double, double> mean_and_std(std::span<const double> values);

/// Aggregates raw per-run scores into the report rows.
EvaluationReport aggregate(const RunScores &runs, const std::vector<std::string> &methods,
                           const std::vector<std::string> &attributes, std::uint64_t master_seed);

/// Replicated masking benchmark. Run r uses seed master_seed + r for the mask
/// and for every method.
EvaluationReport run_benchmark(const FeatureMatrix &matrix, const std::vector<NamedImputer> &methods,
                               double fraction, const std::vector<std::string> &columns, int n_runs,
                               std::uint64_t master_seed);

std::string format_benchmark_csv(const EvaluationReport &report);

enum class DensityLabel { Original, Imputed };
std::string_view to_string(DensityLabel label) noexcept;

struct DensityCurve {
    std::string variable;
    DensityLabel label = DensityLabel::Original;
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 1.0;
};

/// Silverman's rule: 0.9 * min(sd, IQR / 1.34) * n^(-1/5), falling back to sd
/// when the IQR is zero and to 1.0 when both are degenerate.
double silverman_bandwidth(std::span<const double> values);

/// `points` evenly spaced values over [min - 3h, max + 3h].
std::vector<double> default_kde_grid(std::span<const double> values, double bandwidth,
                                     std::size_t points = 256);

DensityCurve gaussian_kde(std::span<const double> values, std::span<const double> grid,
                          std::optional<double> bandwidth = std::nullopt);

std::string format_kde_csv(const std::vector<DensityCurve> &curves);

} // namespace eoli
