#pragma once

#include "eoli/feature_matrix.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eoli {

/// Ridge added to correlation diagonals whenever an inverse is needed and the
/// plain factorization is singular or badly conditioned.
inline constexpr double correlation_ridge = 1e-8;

struct SymmetricEigen {
    Vector values;  ///< descending
    Matrix vectors; ///< unit columns matching `values`
    int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for symmetric matrices. Stops when the
/// off-diagonal Frobenius norm falls below tol * ||A||_F; throws RankDeficient
/// if that does not happen within max_sweeps.
SymmetricEigen symmetric_eigen(const Matrix &a, double tol = 1e-12, int max_sweeps = 10000);

struct ZscoreResult {
    FeatureMatrix matrix; ///< standardized, with means/stds recorded
    std::vector<std::string> dropped;
};

/// Column-wise (x - mean) / population std. Constant columns raise
/// ZeroVariance unless `drop_constant`, in which case they are removed.
ZscoreResult zscore(const FeatureMatrix &matrix, bool drop_constant = false);

/// Z'Z / n for a standardized matrix, symmetrized, unit diagonal.
Matrix correlation_matrix(const FeatureMatrix &standardized);

struct InverseResult {
    Matrix inverse;
    bool ridge_applied = false;
};

InverseResult invert_correlation(const Matrix &correlation);

struct PcaResult {
    Vector eigenvalues;     ///< all p, descending, nonnegative
    Vector explained_ratio; ///< all p, sums to 1
    Matrix components;      ///< p x k, orthonormal columns
    Matrix scores;          ///< n x k (empty for the correlation-only path)
};

PcaResult pca(const FeatureMatrix &standardized, int k);
PcaResult pca_from_correlation(const Matrix &correlation, int k);

enum class Adequacy { Inadequate, Mediocre, Adequate, Excellent };
std::string_view to_string(Adequacy verdict) noexcept;
/// < 0.5 Inadequate, [0.5, 0.6) Mediocre, [0.6, 0.8) Adequate, >= 0.8 Excellent.
Adequacy classify_kmo(double kmo) noexcept;

struct AdequacyReport {
    double kmo_overall = 0.0;
    Vector msa; ///< per-variable measure of sampling adequacy
    Adequacy verdict = Adequacy::Inadequate;
    bool ridge_applied = false;
};

/// Kaiser-Meyer-Olkin adequacy from anti-image partial correlations.
AdequacyReport kmo(const FeatureMatrix &standardized);
AdequacyReport kmo_from_correlation(const Matrix &correlation);

struct VarimaxResult {
    Matrix rotated;  ///< loadings * rotation
    Matrix rotation; ///< k x k orthogonal
    int sweeps = 0;
    double criterion = 0.0; ///< final criterion on Kaiser-normalized loadings
};

/// Varimax criterion sum_j [mean_i(l^4) - mean_i(l^2)^2] of the Kaiser
/// row-normalized loadings.
double varimax_criterion(const Matrix &loadings);

VarimaxResult varimax(const Matrix &loadings, int max_iter = 1000, double tol = 1e-8);

struct FactorModel {
    std::vector<std::string> variables;
    int n_factors = 0;
    Matrix loadings;   ///< p x k after rotation
    Matrix unrotated;  ///< p x k principal-component loadings
    Matrix rotation;   ///< k x k
    Vector communalities;
    Vector eigenvalues;  ///< all p eigenvalues of the correlation matrix
    Matrix eigenvectors; ///< p x p matching `eigenvalues`
    std::optional<AdequacyReport> adequacy; ///< absent when p < 2
    std::vector<std::string> warnings;
};

enum class FactorExtraction {
    PrincipalComponent, ///< loadings = eigenvector * sqrt(eigenvalue) of R (default)
    PrincipalAxis,      ///< iterated on R with communalities on the diagonal (SMC start)
};

/// Extracts n_factors factors (principal-component method by default),
/// varimax-rotated when n_factors >= 2. Rotated factors are ordered by
/// explained variance and each is oriented so its largest-magnitude loading is
/// positive.
FactorModel factor_analysis(const FeatureMatrix &standardized, int n_factors,
                            FactorExtraction extraction = FactorExtraction::PrincipalComponent);
FactorModel factor_analysis_from_correlation(const Matrix &correlation, int n_factors,
                                             std::vector<std::string> variables = {},
                                             FactorExtraction extraction = FactorExtraction::PrincipalComponent);

struct FactorScores {
    Matrix scores; ///< n x k
    bool ridge_applied = false;
};

/// Regression-method scores Z * R^-1 * Lambda.
FactorScores factor_scores(const FeatureMatrix &standardized, const FactorModel &model);

} // namespace eoli
