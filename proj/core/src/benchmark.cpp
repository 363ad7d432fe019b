#include "eoli/benchmark.hpp"

#include "eoli/error.hpp"
#include "eoli/random.hpp"

#include "csv_util.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace eoli {

MaskResult mask_mcar(const FeatureMatrix &matrix, double fraction,
                     const std::vector<std::string> &columns, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw Error(ErrorKind::FractionOutOfRange,
                    fmt::format("masking fraction {} outside [0, 1]", fraction));
    }
    std::vector<std::size_t> targets;
    for (const auto &name : columns) {
        auto col = matrix.column_index(name);
        if (!col) {
            throw Error(ErrorKind::UnknownColumn, fmt::format("no column named '{}'", name));
        }
        targets.push_back(*col);
    }

    MaskResult result{matrix, {fraction, seed, columns, {}}};
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const std::size_t col = targets[t];
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < matrix.rows(); ++i) {
            if (!result.masked.is_missing(i, col)) {
                eligible.push_back(i);
            }
        }
        // small epsilon keeps e.g. 0.3 * 10 from flooring to 2
        const auto count = static_cast<std::size_t>(
            std::floor(fraction * static_cast<double>(eligible.size()) + 1e-9));
        SplitMix64 rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t pick =
                k + rng.uniform_index(static_cast<std::uint64_t>(eligible.size() - k));
            std::swap(eligible[k], eligible[pick]);
        }
        std::vector<std::size_t> chosen(eligible.begin(),
                                        eligible.begin() + static_cast<std::ptrdiff_t>(count));
        std::sort(chosen.begin(), chosen.end());
        for (std::size_t row : chosen) {
            result.plan.held_out.push_back({row, col, matrix.value(row, col)});
            result.masked.set_missing(row, col);
        }
    }
    return result;
}

FeatureMatrix unmask(const FeatureMatrix &masked, const MaskPlan &plan) {
    FeatureMatrix out = masked;
    for (const auto &cell : plan.held_out) {
        out.set(cell.row, cell.col, cell.truth);
    }
    return out;
}

Score score(std::span<const double> predictions, std::span<const double> truth) {
    if (predictions.size() != truth.size()) {
        throw Error(ErrorKind::LengthMismatch, fmt::format("{} predictions vs {} truths",
                                                           predictions.size(), truth.size()));
    }
    if (predictions.empty()) {
        throw Error(ErrorKind::EmptyInput, "cannot score an empty set");
    }
    double sq = 0.0;
    double abs = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = predictions[i] - truth[i];
        sq += d * d;
        abs += std::abs(d);
    }
    const auto n = static_cast<double>(truth.size());
    return {std::sqrt(sq / n), abs / n};
}

std::pair<double, double> mean_and_std(std::span<const double> values) {
    if (values.empty()) {
        throw Error(ErrorKind::EmptyInput, "no values to summarize");
    }
    const auto n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / (n - 1.0))};
}

EvaluationReport aggregate(const RunScores &runs, const std::vector<std::string> &methods,
                           const std::vector<std::string> &attributes, std::uint64_t master_seed) {
    EvaluationReport report;
    report.n_runs = static_cast<int>(runs.size());
    report.master_seed = master_seed;
    report.runs = runs;
    for (std::size_t m = 0; m < methods.size(); ++m) {
        for (std::size_t a = 0; a < attributes.size(); ++a) {
            std::vector<double> rmse;
            std::vector<double> mae;
            for (const auto &run : runs) {
                rmse.push_back(run.at(m).at(a).rmse);
                mae.push_back(run.at(m).at(a).mae);
            }
            // sort so the fold does not depend on run order
            std::sort(rmse.begin(), rmse.end());
            std::sort(mae.begin(), mae.end());
            const auto [rmse_mean, rmse_std] = mean_and_std(rmse);
            const auto [mae_mean, mae_std] = mean_and_std(mae);
            report.rows.push_back({methods[m], attributes[a], rmse_mean, rmse_std, mae_mean, mae_std});
        }
    }
    return report;
}

EvaluationReport run_benchmark(const FeatureMatrix &matrix, const std::vector<NamedImputer> &methods,
                               double fraction, const std::vector<std::string> &columns, int n_runs,
                               std::uint64_t master_seed) {
    if (n_runs < 1) {
        throw Error(ErrorKind::InvalidConfig, "benchmark needs at least one run");
    }
    if (methods.empty()) {
        throw Error(ErrorKind::InvalidConfig, "benchmark needs at least one method");
    }
    RunScores runs(static_cast<std::size_t>(n_runs));
    for (int r = 0; r < n_runs; ++r) {
        const std::uint64_t seed = master_seed + static_cast<std::uint64_t>(r);
        const MaskResult masked = mask_mcar(matrix, fraction, columns, seed);
        auto &run = runs[static_cast<std::size_t>(r)];
        for (const auto &method : methods) {
            ImputationResult imputed;
            try {
                imputed = run_imputer(masked.masked, method.config, seed);
            } catch (const Error &e) {
                throw Error(e.kind(), fmt::format("method '{}' seed {}: {}", method.name, seed,
                                                  e.what()));
            }
            std::vector<Score> per_column;
            for (const auto &name : columns) {
                const std::size_t col = *matrix.column_index(name);
                std::vector<double> predicted;
                std::vector<double> truth;
                for (const auto &cell : masked.plan.held_out) {
                    if (cell.col == col) {
                        predicted.push_back(imputed.completed.value(cell.row, cell.col));
                        truth.push_back(cell.truth);
                    }
                }
                if (truth.empty()) {
                    throw Error(ErrorKind::EmptyInput,
                                fmt::format("no held-out cells for column '{}'", name));
                }
                per_column.push_back(score(predicted, truth));
            }
            run.push_back(std::move(per_column));
        }
    }
    std::vector<std::string> names;
    for (const auto &method : methods) {
        names.push_back(method.name);
    }
    return aggregate(runs, names, columns, master_seed);
}

std::string format_benchmark_csv(const EvaluationReport &report) {
    std::string out = "method,attribute,rmse_mean,rmse_std,mae_mean,mae_std,n_runs\n";
    for (const auto &row : report.rows) {
        out += fmt::format("{},{},{},{},{},{},{}\n", detail::quote_if_needed(row.method),
                           detail::quote_if_needed(row.attribute), detail::format_fixed(row.rmse_mean, 6),
                           detail::format_fixed(row.rmse_std, 6), detail::format_fixed(row.mae_mean, 6),
                           detail::format_fixed(row.mae_std, 6), report.n_runs);
    }
    return out;
}

std::string_view to_string(DensityLabel label) noexcept {
    return label == DensityLabel::Original ? "Original" : "Imputed";
}

namespace {

// Linear-interpolation quantile of sorted data.
double quantile_sorted(const std::vector<double> &sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

double silverman_bandwidth(std::span<const double> values) {
    if (values.empty()) {
        throw Error(ErrorKind::EmptyInput, "bandwidth needs at least one value");
    }
    const auto n = static_cast<double>(values.size());
    const double sd = mean_and_std(values).second;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    double spread = 0.0;
    if (sd > 0.0 && iqr > 0.0) {
        spread = std::min(sd, iqr / 1.34);
    } else if (sd > 0.0) {
        spread = sd;
    } else {
        return 1.0;
    }
    return 0.9 * spread * std::pow(n, -0.2);
}

std::vector<double> default_kde_grid(std::span<const double> values, double bandwidth,
                                     std::size_t points) {
    if (values.empty()) {
        throw Error(ErrorKind::EmptyInput, "grid needs at least one value");
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it - 3.0 * bandwidth;
    const double hi = *hi_it + 3.0 * bandwidth;
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = points == 1 ? lo
                              : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return grid;
}

DensityCurve gaussian_kde(std::span<const double> values, std::span<const double> grid,
                          std::optional<double> bandwidth) {
    if (values.empty() || grid.empty()) {
        throw Error(ErrorKind::EmptyInput, "kde needs values and a grid");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw Error(ErrorKind::NonAscendingGrid, fmt::format("grid not ascending at {}", i));
        }
    }
    const double h = bandwidth ? *bandwidth : silverman_bandwidth(values);
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw Error(ErrorKind::InvalidValue, "bandwidth must be positive");
    }
    const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    DensityCurve curve;
    curve.grid.assign(grid.begin(), grid.end());
    curve.density.resize(grid.size());
    curve.bandwidth = h;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double v : values) {
            const double u = (grid[g] - v) / h;
            acc += std::exp(-0.5 * u * u);
        }
        curve.density[g] = norm * acc;
    }
    return curve;
}

std::string format_kde_csv(const std::vector<DensityCurve> &curves) {
    std::string out = "variable,label,grid_x,density\n";
    for (const auto &curve : curves) {
        for (std::size_t g = 0; g < curve.grid.size(); ++g) {
            out += fmt::format("{},{},{},{}\n", detail::quote_if_needed(curve.variable),
                               to_string(curve.label), detail::format_fixed(curve.grid[g], 6),
                               detail::format_fixed(curve.density[g], 6));
        }
    }
    return out;
}

} // namespace eoli
