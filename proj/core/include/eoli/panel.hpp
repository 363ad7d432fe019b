#pragma once

#include "eoli/feature_matrix.hpp"

#include <array>
#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eoli {

enum class SubIndex { Economic, Institutional, QualityOfLife, Sustainability };
enum class Polarity { Beneficial, Adverse };

inline constexpr std::array<SubIndex, 4> all_sub_indices = {
    SubIndex::Economic, SubIndex::Institutional, SubIndex::QualityOfLife,
    SubIndex::Sustainability};

std::string_view to_string(SubIndex pillar) noexcept;
std::string_view to_string(Polarity polarity) noexcept;
/// Accepts the enum spelling ("QualityOfLife") and the snake_case column name
/// ("quality_of_life").
SubIndex parse_sub_index(std::string_view text);
Polarity parse_polarity(std::string_view text);
/// snake_case column name used in subindex.csv and configuration keys.
std::string_view column_name(SubIndex pillar) noexcept;

struct IndicatorSpec {
    std::string name;
    SubIndex sub_index = SubIndex::Economic;
    std::string unit;
    Polarity polarity = Polarity::Beneficial;

    bool operator==(const IndicatorSpec &) const = default;
};

/// The 26 attributes of the four pillars with default units and polarity.
std::vector<IndicatorSpec> default_schema();

/// Reads a schema file with header `name,sub_index,unit,polarity`.
std::vector<IndicatorSpec> load_schema_csv(const std::filesystem::path &path);

struct CellKey {
    std::string country;
    int year = 0;
    std::string indicator;

    auto operator<=>(const CellKey &) const = default;
};

/// Immutable country x year x indicator table. Countries and years are kept
/// sorted; a cell is either populated, explicitly missing (empty value row in
/// the source), or absent (implicitly missing).
class PanelDataset {
public:
    using CellMap = std::map<CellKey, std::optional<double>>;

    PanelDataset() = default;
    PanelDataset(std::vector<std::string> countries, std::vector<int> years,
                 std::vector<IndicatorSpec> indicators, CellMap cells);

    const std::vector<std::string> &countries() const noexcept { return countries_; }
    const std::vector<int> &years() const noexcept { return years_; }
    const std::vector<IndicatorSpec> &indicators() const noexcept { return indicators_; }
    const CellMap &cells() const noexcept { return cells_; }

    const IndicatorSpec *find_indicator(std::string_view name) const noexcept;
    std::optional<double> value(const std::string &country, int year,
                                const std::string &indicator) const;
    std::size_t populated_count() const noexcept;

    bool operator==(const PanelDataset &) const = default;

private:
    std::vector<std::string> countries_;
    std::vector<int> years_;
    std::vector<IndicatorSpec> indicators_;
    CellMap cells_;
};

/// Reads the canonical long CSV (`country,year,indicator,value`).
PanelDataset load_long_csv(const std::filesystem::path &path,
                           const std::vector<IndicatorSpec> &schema);
PanelDataset parse_long_csv(std::string_view text, const std::vector<IndicatorSpec> &schema);

/// Reads `country,year,<indicator>...` and converts it to the long form.
PanelDataset load_wide_csv(const std::filesystem::path &path,
                           const std::vector<IndicatorSpec> &schema);
PanelDataset parse_wide_csv(std::string_view text, const std::vector<IndicatorSpec> &schema);

/// Emits every stored cell (explicitly missing ones with an empty value) in
/// country, year, schema order. Values use the shortest exact decimal form.
std::string format_long_csv(const PanelDataset &dataset);
void write_long_csv(const PanelDataset &dataset, const std::filesystem::path &path);

enum class MergePrecedence { KeepBase, KeepOther };

struct MergeResult {
    PanelDataset dataset;
    std::size_t conflicts = 0;
};

MergeResult merge(const PanelDataset &base, const PanelDataset &other,
                  MergePrecedence precedence);

struct UnitRule {
    std::string indicator;
    double scale = 1.0;
    double offset = 0.0;
    std::string target_unit;
};

PanelDataset standardize_units(const PanelDataset &dataset, const std::vector<UnitRule> &rules);

struct IndicatorMissingness {
    SubIndex sub_index = SubIndex::Economic;
    std::string indicator;
    std::size_t observed = 0;
    std::size_t missing = 0;
    double pct_missing = 0.0;
};

struct MissingnessReport {
    std::vector<IndicatorMissingness> rows; // grouped by pillar, schema order within
};

MissingnessReport missingness_report(const PanelDataset &dataset);
std::string format_missingness_csv(const MissingnessReport &report);

/// Dense slice for the named indicators over all (country, year) pairs that
/// survive the filters. Absent and explicitly missing cells become missing
/// markers.
FeatureMatrix to_matrix(const PanelDataset &dataset, const std::vector<std::string> &indicator_names,
                        const std::optional<std::vector<std::string>> &country_filter = std::nullopt,
                        const std::optional<std::pair<int, int>> &year_range = std::nullopt);

/// Long-form dataset holding every cell of the matrix (row keys must carry
/// valid countries and years). Indicator specs are looked up in `schema`.
PanelDataset from_matrix(const FeatureMatrix &matrix, const std::vector<IndicatorSpec> &schema);

} // namespace eoli
