#include "eoli/feature_matrix.hpp"

#include "eoli/error.hpp"

#include <fmt/core.h>

#include <cmath>
#include <limits>

namespace eoli {

namespace {
constexpr double missing_value = std::numeric_limits<double>::quiet_NaN();
}

FeatureMatrix::FeatureMatrix(std::vector<RowKey> row_keys, std::vector<std::string> column_keys)
    : row_keys_{std::move(row_keys)}, column_keys_{std::move(column_keys)} {
    const auto n = static_cast<Eigen::Index>(row_keys_.size());
    const auto p = static_cast<Eigen::Index>(column_keys_.size());
    values_ = Matrix::Constant(n, p, missing_value);
    missing_ = MissingMask::Constant(n, p, true);
}

FeatureMatrix::FeatureMatrix(std::vector<RowKey> row_keys, std::vector<std::string> column_keys,
                             Matrix values, MissingMask missing)
    : row_keys_{std::move(row_keys)}, column_keys_{std::move(column_keys)},
      values_{std::move(values)}, missing_{std::move(missing)} {
    const auto n = static_cast<Eigen::Index>(row_keys_.size());
    const auto p = static_cast<Eigen::Index>(column_keys_.size());
    if (values_.rows() != n || values_.cols() != p || missing_.rows() != n ||
        missing_.cols() != p) {
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("feature matrix expects {}x{} values and mask", n, p));
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (missing_(i, j)) {
                values_(i, j) = missing_value;
            } else if (!std::isfinite(values_(i, j))) {
                throw Error(ErrorKind::InvalidValue,
                            fmt::format("non-finite value at ({}, {})", i, j));
            }
        }
    }
}

FeatureMatrix FeatureMatrix::from_values(std::vector<RowKey> row_keys,
                                         std::vector<std::string> column_keys,
                                         const Matrix &values) {
    MissingMask mask = values.array().isNaN();
    return FeatureMatrix(std::move(row_keys), std::move(column_keys), values, std::move(mask));
}

void FeatureMatrix::set(std::size_t row, std::size_t col, double value) {
    if (!std::isfinite(value)) {
        throw Error(ErrorKind::InvalidValue, fmt::format("non-finite value at ({}, {})", row, col));
    }
    values_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = value;
    missing_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = false;
}

void FeatureMatrix::set_missing(std::size_t row, std::size_t col) {
    values_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = missing_value;
    missing_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = true;
}

std::size_t FeatureMatrix::missing_count() const noexcept {
    return static_cast<std::size_t>(missing_.count());
}

std::size_t FeatureMatrix::missing_count(std::size_t col) const {
    return static_cast<std::size_t>(missing_.col(static_cast<Eigen::Index>(col)).count());
}

std::optional<std::size_t> FeatureMatrix::column_index(const std::string &name) const {
    for (std::size_t j = 0; j < column_keys_.size(); ++j) {
        if (column_keys_[j] == name) {
            return j;
        }
    }
    return std::nullopt;
}

void FeatureMatrix::set_moments(std::vector<double> means, std::vector<double> stds) {
    if (means.size() != cols() || stds.size() != cols()) {
        throw Error(ErrorKind::DimensionMismatch, "moment vectors must match column count");
    }
    means_ = std::move(means);
    stds_ = std::move(stds);
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::size_t> &columns) const {
    std::vector<std::string> keys;
    keys.reserve(columns.size());
    Matrix values(values_.rows(), static_cast<Eigen::Index>(columns.size()));
    MissingMask mask(missing_.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const auto j = static_cast<Eigen::Index>(columns.at(k));
        if (j >= values_.cols()) {
            throw Error(ErrorKind::DimensionMismatch, "column selection out of range");
        }
        keys.push_back(column_keys_[columns[k]]);
        values.col(static_cast<Eigen::Index>(k)) = values_.col(j);
        mask.col(static_cast<Eigen::Index>(k)) = missing_.col(j);
    }
    FeatureMatrix out(row_keys_, std::move(keys), std::move(values), std::move(mask));
    if (!means_.empty()) {
        std::vector<double> m, s;
        for (std::size_t c : columns) {
            m.push_back(means_[c]);
            s.push_back(stds_[c]);
        }
        out.set_moments(std::move(m), std::move(s));
    }
    return out;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t> &rows) const {
    std::vector<RowKey> keys;
    keys.reserve(rows.size());
    Matrix values(static_cast<Eigen::Index>(rows.size()), values_.cols());
    MissingMask mask(static_cast<Eigen::Index>(rows.size()), missing_.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(rows.at(k));
        if (i >= values_.rows()) {
            throw Error(ErrorKind::DimensionMismatch, "row selection out of range");
        }
        keys.push_back(row_keys_[rows[k]]);
        values.row(static_cast<Eigen::Index>(k)) = values_.row(i);
        mask.row(static_cast<Eigen::Index>(k)) = missing_.row(i);
    }
    FeatureMatrix out(std::move(keys), column_keys_, std::move(values), std::move(mask));
    if (!means_.empty()) {
        out.set_moments(means_, stds_);
    }
    return out;
}

bool operator==(const FeatureMatrix &a, const FeatureMatrix &b) {
    if (a.row_keys_ != b.row_keys_ || a.column_keys_ != b.column_keys_) {
        return false;
    }
    if ((a.missing_ != b.missing_).any()) {
        return false;
    }
    for (Eigen::Index j = 0; j < a.values_.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.values_.rows(); ++i) {
            if (!a.missing_(i, j) && a.values_(i, j) != b.values_(i, j)) {
                return false;
            }
        }
    }
    return true;
}

} // namespace eoli
