#include "eoli/reduction.hpp"

#include "eoli/error.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eoli {

namespace {

void check_square_symmetric(const Matrix &a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw Error(ErrorKind::DimensionMismatch, "expected a nonempty square matrix");
    }
    if (!a.allFinite()) {
        throw Error(ErrorKind::InvalidValue, "matrix has non-finite entries");
    }
}

// Flip each column so that its largest-magnitude entry (first on ties) is positive.
void orient_columns(Matrix &m, Matrix *companion = nullptr) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (std::abs(m(i, j)) > best) {
                best = std::abs(m(i, j));
                arg = i;
            }
        }
        if (m(arg, j) < 0.0) {
            m.col(j) = -m.col(j);
            if (companion != nullptr) {
                companion->col(j) = -companion->col(j);
            }
        }
    }
}

void require_complete(const FeatureMatrix &matrix) {
    if (matrix.missing_count() > 0) {
        throw Error(ErrorKind::InvalidValue, "matrix has missing cells; impute first");
    }
}

} // namespace

SymmetricEigen symmetric_eigen(const Matrix &input, double tol, int max_sweeps) {
    check_square_symmetric(input);
    const Eigen::Index p = input.rows();
    Matrix a = 0.5 * (input + input.transpose());
    Matrix v = Matrix::Identity(p, p);
    const double scale = std::max(a.norm(), std::numeric_limits<double>::min());

    auto off_norm = [&] {
        double s = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            for (Eigen::Index i = 0; i < p; ++i) {
                if (i != j) {
                    s += a(i, j) * a(i, j);
                }
            }
        }
        return std::sqrt(s);
    };

    int sweeps = 0;
    while (off_norm() > tol * scale) {
        if (sweeps >= max_sweeps) {
            throw Error(ErrorKind::RankDeficient,
                        fmt::format("Jacobi eigensolver did not converge in {} sweeps", max_sweeps));
        }
        ++sweeps;
        for (Eigen::Index q = 1; q < p; ++q) {
            for (Eigen::Index r = 0; r < q; ++r) {
                const double apq = a(r, q);
                if (apq == 0.0) {
                    continue;
                }
                // symmetric Schur 2x2 (Golub & Van Loan, Alg. 8.4.1)
                const double tau = (a(q, q) - a(r, r)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (Eigen::Index k = 0; k < p; ++k) {
                    const double akr = a(k, r);
                    const double akq = a(k, q);
                    a(k, r) = c * akr - s * akq;
                    a(k, q) = s * akr + c * akq;
                }
                for (Eigen::Index k = 0; k < p; ++k) {
                    const double ark = a(r, k);
                    const double aqk = a(q, k);
                    a(r, k) = c * ark - s * aqk;
                    a(q, k) = s * ark + c * aqk;
                }
                for (Eigen::Index k = 0; k < p; ++k) {
                    const double vkr = v(k, r);
                    const double vkq = v(k, q);
                    v(k, r) = c * vkr - s * vkq;
                    v(k, q) = s * vkr + c * vkq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
    SymmetricEigen out;
    out.values.resize(p);
    out.vectors.resize(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
        out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
    }
    out.sweeps = sweeps;
    return out;
}

ZscoreResult zscore(const FeatureMatrix &matrix, bool drop_constant) {
    require_complete(matrix);
    if (matrix.rows() < 1) {
        throw Error(ErrorKind::EmptySelection, "zscore needs at least one row");
    }
    const Matrix &x = matrix.values();
    const auto n = static_cast<double>(x.rows());
    std::vector<std::size_t> kept;
    std::vector<double> means;
    std::vector<double> stds;
    ZscoreResult result;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).sum() / n;
        const double sd = std::sqrt((x.col(j).array() - mean).square().sum() / n);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            const auto &name = matrix.column_keys()[static_cast<std::size_t>(j)];
            if (!drop_constant) {
                throw Error(ErrorKind::ZeroVariance, fmt::format("column '{}' is constant", name));
            }
            result.dropped.push_back(name);
            continue;
        }
        kept.push_back(static_cast<std::size_t>(j));
        means.push_back(mean);
        stds.push_back(sd);
    }
    if (kept.empty()) {
        throw Error(ErrorKind::ZeroVariance, "every column is constant");
    }
    FeatureMatrix selected = matrix.select_columns(kept);
    Matrix z = selected.values();
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const auto k = static_cast<std::size_t>(j);
        z.col(j) = (z.col(j).array() - means[k]) / stds[k];
    }
    result.matrix = FeatureMatrix(selected.row_keys(), selected.column_keys(), std::move(z),
                                  MissingMask::Constant(static_cast<Eigen::Index>(selected.rows()),
                                                        static_cast<Eigen::Index>(selected.cols()),
                                                        false));
    result.matrix.set_moments(std::move(means), std::move(stds));
    return result;
}

Matrix correlation_matrix(const FeatureMatrix &standardized) {
    require_complete(standardized);
    if (standardized.rows() < 2) {
        throw Error(ErrorKind::EmptySelection, "correlation needs at least two rows");
    }
    const Matrix &z = standardized.values();
    Matrix r = z.transpose() * z / static_cast<double>(z.rows());
    r = 0.5 * (r + r.transpose());
    r.diagonal().setOnes();
    return r;
}

InverseResult invert_correlation(const Matrix &correlation) {
    check_square_symmetric(correlation);
    const Eigen::Index p = correlation.rows();
    auto attempt = [&](const Matrix &m) -> std::optional<Matrix> {
        Eigen::LLT<Matrix> llt(m);
        if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12)) {
            return std::nullopt;
        }
        Matrix inv = llt.solve(Matrix::Identity(p, p));
        if (!inv.allFinite()) {
            return std::nullopt;
        }
        return Matrix(0.5 * (inv + inv.transpose()));
    };
    if (auto inv = attempt(correlation)) {
        return {std::move(*inv), false};
    }
    Matrix ridged = correlation;
    ridged.diagonal().array() += correlation_ridge;
    if (auto inv = attempt(ridged)) {
        return {std::move(*inv), true};
    }
    throw Error(ErrorKind::SingularCorrelation,
                "correlation matrix is singular even after ridge regularization");
}

PcaResult pca_from_correlation(const Matrix &correlation, int k) {
    check_square_symmetric(correlation);
    const auto p = static_cast<int>(correlation.rows());
    if (k < 1 || k > p) {
        throw Error(ErrorKind::InvalidConfig, fmt::format("k = {} outside [1, {}]", k, p));
    }
    const SymmetricEigen eig = symmetric_eigen(correlation);
    PcaResult out;
    out.eigenvalues = eig.values.cwiseMax(0.0);
    const double total = out.eigenvalues.sum();
    out.explained_ratio = total > 0.0 ? Vector(out.eigenvalues / total) : Vector::Zero(p);
    out.components = eig.vectors.leftCols(k);
    orient_columns(out.components);
    return out;
}

PcaResult pca(const FeatureMatrix &standardized, int k) {
    if (standardized.rows() < 2) {
        throw Error(ErrorKind::EmptySelection, "pca needs at least two rows");
    }
    PcaResult out = pca_from_correlation(correlation_matrix(standardized), k);
    out.scores = standardized.values() * out.components;
    return out;
}

std::string_view to_string(Adequacy verdict) noexcept {
    switch (verdict) {
    case Adequacy::Inadequate: return "Inadequate";
    case Adequacy::Mediocre: return "Mediocre";
    case Adequacy::Adequate: return "Adequate";
    case Adequacy::Excellent: return "Excellent";
    }
    return "Inadequate";
}

Adequacy classify_kmo(double kmo) noexcept {
    if (kmo < 0.5) {
        return Adequacy::Inadequate;
    }
    if (kmo < 0.6) {
        return Adequacy::Mediocre;
    }
    if (kmo < 0.8) {
        return Adequacy::Adequate;
    }
    return Adequacy::Excellent;
}

AdequacyReport kmo_from_correlation(const Matrix &correlation) {
    check_square_symmetric(correlation);
    const Eigen::Index p = correlation.rows();
    if (p < 2) {
        throw Error(ErrorKind::InvalidConfig, "KMO needs at least two variables");
    }
    const InverseResult inv = invert_correlation(correlation);
    const Matrix &s = inv.inverse;

    AdequacyReport report;
    report.ridge_applied = inv.ridge_applied;
    report.msa.resize(p);
    double r2_total = 0.0;
    double q2_total = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        double r2 = 0.0;
        double q2 = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (i == j) {
                continue;
            }
            const double r = correlation(i, j);
            const double q = -s(i, j) / std::sqrt(s(i, i) * s(j, j));
            r2 += r * r;
            q2 += q * q;
        }
        report.msa(i) = (r2 < 1e-12 && q2 < 1e-12) ? 0.0 : r2 / (r2 + q2);
        r2_total += r2;
        q2_total += q2;
    }
    report.kmo_overall = (r2_total < 1e-12 && q2_total < 1e-12) ? 0.0 : r2_total / (r2_total + q2_total);
    report.verdict = classify_kmo(report.kmo_overall);
    return report;
}

AdequacyReport kmo(const FeatureMatrix &standardized) {
    return kmo_from_correlation(correlation_matrix(standardized));
}

double varimax_criterion(const Matrix &loadings) {
    const auto p = static_cast<double>(loadings.rows());
    double total = 0.0;
    for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
        double m2 = 0.0;
        double m4 = 0.0;
        for (Eigen::Index i = 0; i < loadings.rows(); ++i) {
            const double h = loadings.row(i).norm();
            const double l = h > 0.0 ? loadings(i, j) / h : 0.0;
            m2 += l * l;
            m4 += l * l * l * l;
        }
        m2 /= p;
        m4 /= p;
        total += m4 - m2 * m2;
    }
    return total;
}

namespace {

// Varimax contribution of two columns; used to guard each plane rotation.
double pair_criterion(const Vector &x, const Vector &y) {
    const auto p = static_cast<double>(x.size());
    auto column_term = [p](const Vector &c) {
        const double m2 = c.array().square().sum() / p;
        const double m4 = c.array().square().square().sum() / p;
        return m4 - m2 * m2;
    };
    return column_term(x) + column_term(y);
}

} // namespace

VarimaxResult varimax(const Matrix &loadings, int max_iter, double tol) {
    if (!loadings.allFinite()) {
        throw Error(ErrorKind::NonFiniteLoadings, "loadings contain NaN or infinity");
    }
    const Eigen::Index p = loadings.rows();
    const Eigen::Index k = loadings.cols();
    if (k < 2) {
        throw Error(ErrorKind::InvalidConfig, "varimax needs at least two factors");
    }
    if (!(tol > 0.0) || max_iter < 0) {
        throw Error(ErrorKind::InvalidConfig, "varimax needs tol > 0 and max_iter >= 0");
    }

    // Kaiser normalization; rotating the normalized rows is equivalent because
    // row norms are rotation invariant.
    Matrix normalized = loadings;
    for (Eigen::Index i = 0; i < p; ++i) {
        const double h = loadings.row(i).norm();
        if (h > 0.0) {
            normalized.row(i) /= h;
        }
    }
    Matrix rotation = Matrix::Identity(k, k);
    double criterion = varimax_criterion(normalized);
    const double n = static_cast<double>(p);

    int sweeps = 0;
    while (sweeps < max_iter) {
        ++sweeps;
        for (Eigen::Index a = 0; a + 1 < k; ++a) {
            for (Eigen::Index b = a + 1; b < k; ++b) {
                const Vector x = normalized.col(a);
                const Vector y = normalized.col(b);
                const Eigen::ArrayXd u = x.array().square() - y.array().square();
                const Eigen::ArrayXd v = 2.0 * x.array() * y.array();
                const double sa = u.sum();
                const double sb = v.sum();
                const double sc = (u.square() - v.square()).sum();
                const double sd = 2.0 * (u * v).sum();
                const double num = sd - 2.0 * sa * sb / n;
                const double den = sc - (sa * sa - sb * sb) / n;
                const double phi = 0.25 * std::atan2(num, den);
                if (std::abs(phi) < 1e-15) {
                    continue;
                }
                const double c = std::cos(phi);
                const double s = std::sin(phi);
                const Vector nx = c * x + s * y;
                const Vector ny = -s * x + c * y;
                if (pair_criterion(nx, ny) < pair_criterion(x, y)) {
                    continue;
                }
                normalized.col(a) = nx;
                normalized.col(b) = ny;
                const Vector ra = rotation.col(a);
                const Vector rb = rotation.col(b);
                rotation.col(a) = c * ra + s * rb;
                rotation.col(b) = -s * ra + c * rb;
            }
        }
        const double updated = varimax_criterion(normalized);
        const double gain = updated - criterion;
        criterion = std::max(criterion, updated);
        if (gain < tol) {
            break;
        }
    }
    return {loadings * rotation, rotation, sweeps, criterion};
}

namespace {

// Principal-axis factoring: eigen-decompose R with the current communality
// estimates on the diagonal until the estimates settle. Estimates, and the
// final loading rows, are capped at 1 (Heywood cases are reported).
Matrix principal_axis(const Matrix &correlation, int n_factors, std::vector<std::string> &warnings) {
    const Eigen::Index p = correlation.rows();
    Vector h2 = Vector::Ones(p);
    if (p > 1) {
        const InverseResult inv = invert_correlation(correlation);
        h2 = (Vector::Ones(p) - inv.inverse.diagonal().cwiseInverse()).cwiseMax(0.0).cwiseMin(1.0);
    }
    Matrix loadings(p, n_factors);
    bool heywood = false;
    for (int iter = 0; iter < 1000; ++iter) {
        Matrix reduced = correlation;
        reduced.diagonal() = h2;
        const SymmetricEigen eig = symmetric_eigen(reduced);
        for (int j = 0; j < n_factors; ++j) {
            loadings.col(j) = eig.vectors.col(j) * std::sqrt(std::max(eig.values(j), 0.0));
        }
        Vector next = loadings.rowwise().squaredNorm();
        if ((next.array() > 1.0).any()) {
            heywood = true;
            next = next.cwiseMin(1.0);
        }
        const double change = (next - h2).cwiseAbs().maxCoeff();
        h2 = next;
        if (change < 1e-10) {
            break;
        }
    }
    for (Eigen::Index i = 0; i < p; ++i) {
        const double norm = loadings.row(i).norm();
        if (norm > 1.0) {
            heywood = true;
            loadings.row(i) /= norm;
        }
    }
    if (heywood) {
        warnings.push_back("principal-axis communality exceeded 1 (Heywood case); capped at 1");
    }
    return loadings;
}

} // namespace

FactorModel factor_analysis_from_correlation(const Matrix &correlation, int n_factors,
                                             std::vector<std::string> variables, FactorExtraction extraction) {
    check_square_symmetric(correlation);
    const auto p = static_cast<int>(correlation.rows());
    if (n_factors < 1 || n_factors > p) {
        throw Error(ErrorKind::InvalidConfig, fmt::format("n_factors = {} outside [1, {}]", n_factors, p));
    }
    if (variables.empty()) {
        for (int i = 0; i < p; ++i) {
            variables.push_back(fmt::format("v{}", i + 1));
        }
    }
    if (static_cast<int>(variables.size()) != p) {
        throw Error(ErrorKind::DimensionMismatch, "variable names must match the correlation size");
    }

    FactorModel model;
    model.variables = std::move(variables);
    model.n_factors = n_factors;
    const SymmetricEigen eig = symmetric_eigen(correlation);
    model.eigenvalues = eig.values.cwiseMax(0.0);
    model.eigenvectors = eig.vectors;
    orient_columns(model.eigenvectors);

    if (extraction == FactorExtraction::PrincipalAxis) {
        model.unrotated = principal_axis(correlation, n_factors, model.warnings);
        orient_columns(model.unrotated);
    } else {
        model.unrotated.resize(p, n_factors);
        for (int j = 0; j < n_factors; ++j) {
            model.unrotated.col(j) = model.eigenvectors.col(j) * std::sqrt(model.eigenvalues(j));
        }
    }

    if (n_factors == 1) {
        model.rotation = Matrix::Identity(1, 1);
        model.loadings = model.unrotated;
    } else {
        VarimaxResult rotated = varimax(model.unrotated);
        // order rotated factors by explained variance, then fix signs
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n_factors));
        std::iota(order.begin(), order.end(), 0);
        const Vector ss = rotated.rotated.colwise().squaredNorm();
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return ss(a) > ss(b); });
        model.loadings.resize(p, n_factors);
        model.rotation.resize(n_factors, n_factors);
        for (int j = 0; j < n_factors; ++j) {
            model.loadings.col(j) = rotated.rotated.col(order[static_cast<std::size_t>(j)]);
            model.rotation.col(j) = rotated.rotation.col(order[static_cast<std::size_t>(j)]);
        }
        orient_columns(model.loadings, &model.rotation);
    }
    model.communalities = model.loadings.rowwise().squaredNorm();

    if (p >= 2) {
        model.adequacy = kmo_from_correlation(correlation);
        if (model.adequacy->ridge_applied) {
            model.warnings.push_back("ridge 1e-8 applied to correlation matrix for KMO");
        }
        if (model.adequacy->kmo_overall < 0.5) {
            model.warnings.push_back(
                fmt::format("KMO {:.4f} below 0.5: sampling adequacy is inadequate",
                            model.adequacy->kmo_overall));
        }
    }
    return model;
}

FactorModel factor_analysis(const FeatureMatrix &standardized, int n_factors, FactorExtraction extraction) {
    return factor_analysis_from_correlation(correlation_matrix(standardized), n_factors,
                                            standardized.column_keys(), extraction);
}

FactorScores factor_scores(const FeatureMatrix &standardized, const FactorModel &model) {
    require_complete(standardized);
    if (standardized.column_keys() != model.variables) {
        throw Error(ErrorKind::DimensionMismatch, "factor model was fitted on different columns");
    }
    if (standardized.cols() == 1) {
        return {standardized.values() * model.loadings, false};
    }
    const InverseResult inv = invert_correlation(correlation_matrix(standardized));
    return {standardized.values() * (inv.inverse * model.loadings), inv.ridge_applied};
}

} // namespace eoli
