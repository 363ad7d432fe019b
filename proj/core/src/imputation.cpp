#include "eoli/imputation.hpp"

#include "eoli/error.hpp"
#include "eoli/random.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <numeric>

namespace eoli {

namespace {

void require_observed_columns(const FeatureMatrix &matrix) {
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        if (matrix.rows() > 0 && matrix.missing_count(j) == matrix.rows()) {
            throw Error(ErrorKind::AllMissingColumn,
                        fmt::format("column '{}' has no observed values", matrix.column_keys()[j]));
        }
    }
}

struct ColumnSplit {
    std::vector<Eigen::Index> observed;
    std::vector<Eigen::Index> missing;
};

std::vector<ColumnSplit> split_rows(const FeatureMatrix &matrix) {
    std::vector<ColumnSplit> out(matrix.cols());
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        for (std::size_t i = 0; i < matrix.rows(); ++i) {
            (matrix.is_missing(i, j) ? out[j].missing : out[j].observed)
                .push_back(static_cast<Eigen::Index>(i));
        }
    }
    return out;
}

Matrix mean_filled(const FeatureMatrix &matrix) {
    Matrix values = matrix.values();
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            if (!matrix.missing()(i, j)) {
                sum += values(i, j);
                ++count;
            }
        }
        const double mean = sum / static_cast<double>(count);
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            if (matrix.missing()(i, j)) {
                values(i, j) = mean;
            }
        }
    }
    return values;
}

FeatureMatrix completed_matrix(const FeatureMatrix &source, Matrix values) {
    FeatureMatrix out(source.row_keys(), source.column_keys(), std::move(values),
                      MissingMask::Constant(static_cast<Eigen::Index>(source.rows()),
                                            static_cast<Eigen::Index>(source.cols()), false));
    if (!source.means().empty()) {
        out.set_moments(source.means(), source.stds());
    }
    return out;
}

// Design matrix of all columns except `target`, restricted to `rows`.
Matrix predictors(const Matrix &values, std::size_t target, const std::vector<Eigen::Index> &rows) {
    const Eigen::Index p = values.cols();
    Matrix out(static_cast<Eigen::Index>(rows.size()), p - 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Eigen::Index c = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (static_cast<std::size_t>(j) != target) {
                out(static_cast<Eigen::Index>(r), c++) = values(rows[r], j);
            }
        }
    }
    return out;
}

Vector gather(const Matrix &values, std::size_t col, const std::vector<Eigen::Index> &rows) {
    Vector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out(static_cast<Eigen::Index>(r)) = values(rows[r], static_cast<Eigen::Index>(col));
    }
    return out;
}

double normalized_change(const Matrix &current, const Matrix &previous, const FeatureMatrix &source) {
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index j = 0; j < current.cols(); ++j) {
        for (Eigen::Index i = 0; i < current.rows(); ++i) {
            if (source.missing()(i, j)) {
                const double d = current(i, j) - previous(i, j);
                num += d * d;
                den += current(i, j) * current(i, j);
            }
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

// Least squares with intercept; QR when the design has full column rank,
// otherwise the ridge-stabilized normal equations.
Vector linear_predict(const Matrix &x_train, const Vector &y_train, const Matrix &x_new,
                      const LinearLearner &learner, std::vector<std::string> &warnings,
                      const std::string &column) {
    const Eigen::Index n = x_train.rows();
    const Eigen::Index k = x_train.cols() + 1;
    Matrix design(n, k);
    design.col(0).setOnes();
    design.rightCols(k - 1) = x_train;

    Vector beta;
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() == k) {
        beta = qr.solve(y_train);
    } else {
        if (!learner.ridge_fallback) {
            throw Error(ErrorKind::SingularDesign,
                        fmt::format("design for column '{}' has rank {} < {}", column, qr.rank(), k));
        }
        Matrix gram = design.transpose() * design;
        gram.diagonal().array() += 1e-8;
        beta = gram.ldlt().solve(design.transpose() * y_train);
        warnings.push_back(fmt::format("ridge 1e-8 applied to rank-deficient design for '{}'", column));
    }
    Matrix design_new(x_new.rows(), k);
    design_new.col(0).setOnes();
    design_new.rightCols(k - 1) = x_new;
    return design_new * beta;
}

} // namespace

std::vector<std::size_t> visit_order(const FeatureMatrix &matrix) {
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        if (matrix.missing_count(j) > 0) {
            order.push_back(j);
        }
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return matrix.missing_count(a) < matrix.missing_count(b);
    });
    return order;
}

ImputationResult mean_impute(const FeatureMatrix &matrix) {
    require_observed_columns(matrix);
    return {completed_matrix(matrix, mean_filled(matrix)), 1, {}, {}};
}

ImputationResult mice_impute(const FeatureMatrix &matrix, const MiceConfig &config) {
    if (config.n_cycles < 0) {
        throw Error(ErrorKind::InvalidConfig, "n_cycles must be nonnegative");
    }
    require_observed_columns(matrix);

    // Step 1: mean placeholders
    Matrix values = mean_filled(matrix);
    ImputationResult result{completed_matrix(matrix, values), 0, {}, {}};
    if (matrix.cols() < 2 || matrix.missing_count() == 0) {
        return result;
    }

    const auto rows = split_rows(matrix);
    const auto order = visit_order(matrix);
    for (int cycle = 0; cycle < config.n_cycles; ++cycle) {
        const Matrix previous = values;
        for (std::size_t col : order) {
            // Steps 2-4: drop this column's placeholders, regress its observed
            // rows on every other column, write predictions into its holes
            const auto &split = rows[col];
            const Matrix x_train = predictors(values, col, split.observed);
            const Vector y_train = gather(values, col, split.observed);
            const Matrix x_missing = predictors(values, col, split.missing);
            Vector imputed;
            if (const auto *linear = std::get_if<LinearLearner>(&config.base_learner)) {
                imputed = linear_predict(x_train, y_train, x_missing, *linear, result.warnings,
                                         matrix.column_keys()[col]);
            } else {
                BoostConfig boost = std::get<BoostConfig>(config.base_learner);
                boost.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(cycle), col});
                imputed = fit_boost(x_train, y_train, boost).predict(x_missing);
            }
            for (std::size_t r = 0; r < split.missing.size(); ++r) {
                values(split.missing[r], static_cast<Eigen::Index>(col)) =
                    imputed(static_cast<Eigen::Index>(r));
            }
        }
        result.deltas.push_back(normalized_change(values, previous, matrix));
        ++result.iterations_run;
    }
    std::sort(result.warnings.begin(), result.warnings.end());
    result.warnings.erase(std::unique(result.warnings.begin(), result.warnings.end()),
                          result.warnings.end());
    result.completed = completed_matrix(matrix, std::move(values));
    return result;
}

ImputationResult forest_impute(const FeatureMatrix &matrix, const ForestImputeConfig &config) {
    if (config.max_iter < 1) {
        throw Error(ErrorKind::InvalidConfig, "max_iter must be at least 1");
    }
    require_observed_columns(matrix);

    Matrix values = mean_filled(matrix);
    ImputationResult result{completed_matrix(matrix, values), 0, {}, {}};
    if (matrix.cols() < 2 || matrix.missing_count() == 0) {
        return result;
    }

    const auto rows = split_rows(matrix);
    const auto order = visit_order(matrix);
    Matrix previous = values;
    for (int iter = 0; iter < config.max_iter; ++iter) {
        previous = values;
        for (std::size_t col : order) {
            const auto &split = rows[col];
            ForestConfig forest = config.forest;
            forest.seed = derive_seed(config.forest.seed, {static_cast<std::uint64_t>(iter), col});
            const auto model = fit_forest(predictors(values, col, split.observed),
                                          gather(values, col, split.observed), forest);
            const Vector imputed = model.predict(predictors(values, col, split.missing));
            for (std::size_t r = 0; r < split.missing.size(); ++r) {
                values(split.missing[r], static_cast<Eigen::Index>(col)) =
                    imputed(static_cast<Eigen::Index>(r));
            }
        }
        ++result.iterations_run;
        const double delta = normalized_change(values, previous, matrix);
        result.deltas.push_back(delta);
        if (config.stop_on_increase && result.deltas.size() >= 2 &&
            delta > result.deltas[result.deltas.size() - 2]) {
            values = previous;
            break;
        }
    }
    result.completed = completed_matrix(matrix, std::move(values));
    return result;
}

ImputationResult run_imputer(const FeatureMatrix &matrix, const ImputerConfig &config,
                             std::uint64_t seed) {
    if (std::holds_alternative<std::monostate>(config)) {
        return mean_impute(matrix);
    }
    if (const auto *mice = std::get_if<MiceConfig>(&config)) {
        MiceConfig seeded = *mice;
        seeded.seed = seed;
        return mice_impute(matrix, seeded);
    }
    ForestImputeConfig seeded = std::get<ForestImputeConfig>(config);
    seeded.forest.seed = seed;
    return forest_impute(matrix, seeded);
}

} // namespace eoli
