#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace eoli {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// (country, year) row identity shared by matrices and index series.
struct RowKey {
    std::string country;
    int year = 0;

    auto operator<=>(const RowKey &) const = default;
};

/// Dense numeric panel slice with explicit missing markers. Missing cells also
/// hold NaN in `values` so that accidental use is loud.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<RowKey> row_keys, std::vector<std::string> column_keys);
    FeatureMatrix(std::vector<RowKey> row_keys, std::vector<std::string> column_keys, Matrix values,
                  MissingMask missing);

    /// Builds a fully observed matrix; NaN entries become missing cells.
    static FeatureMatrix from_values(std::vector<RowKey> row_keys,
                                     std::vector<std::string> column_keys, const Matrix &values);

    std::size_t rows() const noexcept { return row_keys_.size(); }
    std::size_t cols() const noexcept { return column_keys_.size(); }

    const std::vector<RowKey> &row_keys() const noexcept { return row_keys_; }
    const std::vector<std::string> &column_keys() const noexcept { return column_keys_; }
    const Matrix &values() const noexcept { return values_; }
    const MissingMask &missing() const noexcept { return missing_; }

    bool is_missing(std::size_t row, std::size_t col) const { return missing_(row, col); }
    double value(std::size_t row, std::size_t col) const { return values_(row, col); }

    void set(std::size_t row, std::size_t col, double value);
    void set_missing(std::size_t row, std::size_t col);

    std::size_t missing_count() const noexcept;
    std::size_t missing_count(std::size_t col) const;
    std::optional<std::size_t> column_index(const std::string &name) const;

    /// Column means / population standard deviations recorded by zscore().
    const std::vector<double> &means() const noexcept { return means_; }
    const std::vector<double> &stds() const noexcept { return stds_; }
    void set_moments(std::vector<double> means, std::vector<double> stds);

    /// Copy restricted to the listed columns, in the listed order.
    FeatureMatrix select_columns(const std::vector<std::size_t> &columns) const;
    /// Copy restricted to the listed rows, in the listed order.
    FeatureMatrix select_rows(const std::vector<std::size_t> &rows) const;

    friend bool operator==(const FeatureMatrix &a, const FeatureMatrix &b);

private:
    std::vector<RowKey> row_keys_;
    std::vector<std::string> column_keys_;
    Matrix values_;
    MissingMask missing_;
    std::vector<double> means_;
    std::vector<double> stds_;
};

} // namespace eoli
