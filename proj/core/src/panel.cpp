#include "eoli/panel.hpp"

#include "eoli/error.hpp"

#include "csv_util.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>

namespace eoli {

std::string_view to_string(SubIndex pillar) noexcept {
    switch (pillar) {
    case SubIndex::Economic: return "Economic";
    case SubIndex::Institutional: return "Institutional";
    case SubIndex::QualityOfLife: return "QualityOfLife";
    case SubIndex::Sustainability: return "Sustainability";
    }
    return "Economic";
}

std::string_view to_string(Polarity polarity) noexcept {
    return polarity == Polarity::Beneficial ? "Beneficial" : "Adverse";
}

std::string_view column_name(SubIndex pillar) noexcept {
    switch (pillar) {
    case SubIndex::Economic: return "economic";
    case SubIndex::Institutional: return "institutional";
    case SubIndex::QualityOfLife: return "quality_of_life";
    case SubIndex::Sustainability: return "sustainability";
    }
    return "economic";
}

SubIndex parse_sub_index(std::string_view text) {
    for (SubIndex pillar : all_sub_indices) {
        if (text == to_string(pillar) || text == column_name(pillar)) {
            return pillar;
        }
    }
    throw Error(ErrorKind::InvalidValue, fmt::format("unknown sub-index '{}'", text));
}

Polarity parse_polarity(std::string_view text) {
    if (text == "Beneficial" || text == "beneficial") {
        return Polarity::Beneficial;
    }
    if (text == "Adverse" || text == "adverse") {
        return Polarity::Adverse;
    }
    throw Error(ErrorKind::InvalidValue, fmt::format("unknown polarity '{}'", text));
}

std::vector<IndicatorSpec> default_schema() {
    using enum SubIndex;
    constexpr auto good = Polarity::Beneficial;
    constexpr auto bad = Polarity::Adverse;
    return {
        {"gdp_growth", Economic, "percent", good},
        {"inflation_rate", Economic, "percent", bad},
        {"gdp_per_capita", Economic, "USD", good},
        {"unemployment_rate", Economic, "percent", bad},
        {"cost_of_living_index", Economic, "index", bad},
        {"local_purchasing_power_index", Economic, "index", good},
        {"control_of_corruption", Institutional, "estimate", good},
        {"government_effectiveness", Institutional, "estimate", good},
        {"political_stability", Institutional, "estimate", good},
        {"regulatory_quality", Institutional, "estimate", good},
        {"rule_of_law", Institutional, "estimate", good},
        {"voice_and_accountability", Institutional, "estimate", good},
        {"life_expectancy", QualityOfLife, "years", good},
        {"doctors_per_10k", QualityOfLife, "per 10,000", good},
        {"access_to_electricity", QualityOfLife, "percent", good},
        {"co2_per_capita", QualityOfLife, "tonnes", bad},
        {"gender_development_index", QualityOfLife, "index", good},
        {"gender_inequality_index", QualityOfLife, "index", bad},
        {"human_development_index", QualityOfLife, "index", good},
        {"health_care_index", QualityOfLife, "index", good},
        {"crime_index", QualityOfLife, "index", bad},
        {"co2_emissions", Sustainability, "kt", bad},
        {"non_renewable_electricity", Sustainability, "percent", bad},
        {"renewable_electricity", Sustainability, "percent", good},
        {"micro_air_pollution", Sustainability, "ug/m3", bad},
        {"greenhouse_emissions", Sustainability, "kt CO2e", bad},
    };
}

namespace {

void check_schema(const std::vector<IndicatorSpec> &schema) {
    std::set<std::string_view> seen;
    for (const auto &spec : schema) {
        if (spec.name.empty()) {
            throw Error(ErrorKind::InvalidValue, "indicator name must not be empty");
        }
        if (!seen.insert(spec.name).second) {
            throw Error(ErrorKind::SchemaConflict,
                        fmt::format("indicator '{}' declared twice", spec.name));
        }
    }
}

bool valid_country(std::string_view code) {
    return code.size() == 3 && std::all_of(code.begin(), code.end(), [](char c) {
               return c >= 'A' && c <= 'Z';
           });
}

std::optional<int> parse_year(std::string_view field) {
    if (field.size() != 4 ||
        !std::all_of(field.begin(), field.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return std::nullopt;
    }
    return static_cast<int>(*detail::parse_integer(field));
}

[[noreturn]] void malformed(std::size_t line, const std::string &why) {
    throw Error(ErrorKind::MalformedRow, fmt::format("line {}: {}", line, why));
}

// Collects cells and derives the sorted country and year axes.
class DatasetBuilder {
public:
    explicit DatasetBuilder(const std::vector<IndicatorSpec> &schema) : schema_{schema} {
        check_schema(schema_);
        for (const auto &spec : schema_) {
            names_.insert(spec.name);
        }
    }

    void add(std::size_t line, const std::string &country, int year, const std::string &indicator,
             std::optional<double> value) {
        if (!names_.contains(indicator)) {
            throw Error(ErrorKind::UnknownIndicator,
                        fmt::format("line {}: indicator '{}' is not in the schema", line, indicator));
        }
        CellKey key{country, year, indicator};
        if (!cells_.emplace(key, value).second) {
            throw Error(ErrorKind::DuplicateCell, fmt::format("line {}: repeated cell ({}, {}, {})",
                                                             line, country, year, indicator));
        }
        countries_.insert(country);
        years_.insert(year);
    }

    PanelDataset build() && {
        return PanelDataset({countries_.begin(), countries_.end()}, {years_.begin(), years_.end()},
                            schema_, std::move(cells_));
    }

private:
    std::vector<IndicatorSpec> schema_;
    std::set<std::string> names_;
    std::set<std::string> countries_;
    std::set<int> years_;
    PanelDataset::CellMap cells_;
};

std::pair<std::string, int> parse_row_key(std::size_t line, const std::string &country_field,
                                          const std::string &year_field) {
    if (!valid_country(country_field)) {
        malformed(line, fmt::format("'{}' is not an ISO-3166 alpha-3 code", country_field));
    }
    auto year = parse_year(year_field);
    if (!year) {
        malformed(line, fmt::format("'{}' is not a 4-digit year", year_field));
    }
    return {country_field, *year};
}

std::optional<double> parse_value(std::size_t line, const std::string &field) {
    if (field.empty()) {
        return std::nullopt;
    }
    auto value = detail::parse_real(field);
    if (!value) {
        malformed(line, fmt::format("'{}' is not a finite decimal value", field));
    }
    return value;
}

} // namespace

PanelDataset::PanelDataset(std::vector<std::string> countries, std::vector<int> years,
                           std::vector<IndicatorSpec> indicators, CellMap cells)
    : countries_{std::move(countries)}, years_{std::move(years)},
      indicators_{std::move(indicators)}, cells_{std::move(cells)} {
    check_schema(indicators_);
    if (!std::is_sorted(countries_.begin(), countries_.end()) ||
        std::adjacent_find(countries_.begin(), countries_.end()) != countries_.end()) {
        throw Error(ErrorKind::InvalidValue, "countries must be sorted and unique");
    }
    if (std::adjacent_find(years_.begin(), years_.end(),
                           [](int a, int b) { return a >= b; }) != years_.end()) {
        throw Error(ErrorKind::InvalidValue, "years must be strictly increasing");
    }
    for (const auto &[key, value] : cells_) {
        if (!std::binary_search(countries_.begin(), countries_.end(), key.country) ||
            !std::binary_search(years_.begin(), years_.end(), key.year) ||
            find_indicator(key.indicator) == nullptr) {
            throw Error(ErrorKind::InvalidValue,
                        fmt::format("cell ({}, {}, {}) references an unknown key", key.country,
                                    key.year, key.indicator));
        }
        if (value && !std::isfinite(*value)) {
            throw Error(ErrorKind::InvalidValue, "cell values must be finite");
        }
    }
}

const IndicatorSpec *PanelDataset::find_indicator(std::string_view name) const noexcept {
    for (const auto &spec : indicators_) {
        if (spec.name == name) {
            return &spec;
        }
    }
    return nullptr;
}

std::optional<double> PanelDataset::value(const std::string &country, int year,
                                          const std::string &indicator) const {
    auto it = cells_.find(CellKey{country, year, indicator});
    if (it == cells_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t PanelDataset::populated_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        cells_.begin(), cells_.end(), [](const auto &cell) { return cell.second.has_value(); }));
}

std::vector<IndicatorSpec> load_schema_csv(const std::filesystem::path &path) {
    const std::string text = detail::read_text_file(path);
    const auto lines = detail::split_lines(text);
    if (lines.empty() || lines.front() != "name,sub_index,unit,polarity") {
        throw Error(ErrorKind::MalformedRow,
                    fmt::format("{}: line 1: expected header 'name,sub_index,unit,polarity'",
                                path.string()));
    }
    std::vector<IndicatorSpec> schema;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        auto fields = detail::split_fields(lines[i]);
        if (fields.size() != 4) {
            malformed(i + 1, fmt::format("expected 4 fields, found {}", fields.size()));
        }
        try {
            schema.push_back({fields[0], parse_sub_index(fields[1]), fields[2],
                              parse_polarity(fields[3])});
        } catch (const Error &e) {
            malformed(i + 1, e.what());
        }
    }
    check_schema(schema);
    return schema;
}

PanelDataset parse_long_csv(std::string_view text, const std::vector<IndicatorSpec> &schema) {
    const auto lines = detail::split_lines(text);
    if (lines.empty() || lines.front() != "country,year,indicator,value") {
        malformed(1, "expected header 'country,year,indicator,value'");
    }
    DatasetBuilder builder(schema);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (lines[i].empty()) {
            if (i + 1 == lines.size()) {
                break;
            }
            malformed(line_no, "empty line");
        }
        auto fields = detail::split_fields(lines[i]);
        if (fields.size() != 4) {
            malformed(line_no, fmt::format("expected 4 fields, found {}", fields.size()));
        }
        auto [country, year] = parse_row_key(line_no, fields[0], fields[1]);
        builder.add(line_no, country, year, fields[2], parse_value(line_no, fields[3]));
    }
    return std::move(builder).build();
}

PanelDataset load_long_csv(const std::filesystem::path &path,
                           const std::vector<IndicatorSpec> &schema) {
    return parse_long_csv(detail::read_text_file(path), schema);
}

PanelDataset parse_wide_csv(std::string_view text, const std::vector<IndicatorSpec> &schema) {
    const auto lines = detail::split_lines(text);
    if (lines.empty()) {
        malformed(1, "missing header");
    }
    const auto header = detail::split_fields(lines.front());
    if (header.size() < 2 || header[0] != "country" || header[1] != "year") {
        malformed(1, "wide header must start with 'country,year'");
    }
    DatasetBuilder builder(schema);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (lines[i].empty()) {
            if (i + 1 == lines.size()) {
                break;
            }
            malformed(line_no, "empty line");
        }
        auto fields = detail::split_fields(lines[i]);
        if (fields.size() != header.size()) {
            malformed(line_no,
                      fmt::format("expected {} fields, found {}", header.size(), fields.size()));
        }
        auto [country, year] = parse_row_key(line_no, fields[0], fields[1]);
        for (std::size_t c = 2; c < fields.size(); ++c) {
            builder.add(line_no, country, year, header[c], parse_value(line_no, fields[c]));
        }
    }
    return std::move(builder).build();
}

PanelDataset load_wide_csv(const std::filesystem::path &path,
                           const std::vector<IndicatorSpec> &schema) {
    return parse_wide_csv(detail::read_text_file(path), schema);
}

std::string format_long_csv(const PanelDataset &dataset) {
    std::string out = "country,year,indicator,value\n";
    for (const auto &country : dataset.countries()) {
        for (int year : dataset.years()) {
            for (const auto &spec : dataset.indicators()) {
                auto it = dataset.cells().find(CellKey{country, year, spec.name});
                if (it == dataset.cells().end()) {
                    continue;
                }
                out += fmt::format("{},{},{},{}\n", country, year, spec.name,
                                   it->second ? detail::format_exact(*it->second) : "");
            }
        }
    }
    return out;
}

void write_long_csv(const PanelDataset &dataset, const std::filesystem::path &path) {
    detail::write_text_file(path, format_long_csv(dataset));
}

MergeResult merge(const PanelDataset &base, const PanelDataset &other,
                  MergePrecedence precedence) {
    std::vector<IndicatorSpec> indicators = base.indicators();
    for (const auto &spec : other.indicators()) {
        const IndicatorSpec *existing = base.find_indicator(spec.name);
        if (existing == nullptr) {
            indicators.push_back(spec);
        } else if (existing->sub_index != spec.sub_index || existing->polarity != spec.polarity) {
            throw Error(ErrorKind::SchemaConflict,
                        fmt::format("indicator '{}' differs in sub-index or polarity", spec.name));
        }
    }

    std::set<std::string> countries(base.countries().begin(), base.countries().end());
    countries.insert(other.countries().begin(), other.countries().end());
    std::set<int> years(base.years().begin(), base.years().end());
    years.insert(other.years().begin(), other.years().end());

    PanelDataset::CellMap cells = base.cells();
    std::size_t conflicts = 0;
    for (const auto &[key, value] : other.cells()) {
        auto [it, inserted] = cells.emplace(key, value);
        if (inserted || !value) {
            continue;
        }
        if (!it->second) {
            it->second = value;
        } else if (*it->second != *value) {
            ++conflicts;
            if (precedence == MergePrecedence::KeepOther) {
                it->second = value;
            }
        }
    }
    return {PanelDataset({countries.begin(), countries.end()}, {years.begin(), years.end()},
                         std::move(indicators), std::move(cells)),
            conflicts};
}

PanelDataset standardize_units(const PanelDataset &dataset, const std::vector<UnitRule> &rules) {
    std::vector<IndicatorSpec> indicators = dataset.indicators();
    std::unordered_map<std::string, const UnitRule *> by_name;
    for (const auto &rule : rules) {
        auto spec = std::find_if(indicators.begin(), indicators.end(),
                                 [&](const IndicatorSpec &s) { return s.name == rule.indicator; });
        if (spec == indicators.end()) {
            throw Error(ErrorKind::UnknownIndicator,
                        fmt::format("unit rule references unknown indicator '{}'", rule.indicator));
        }
        if (rule.scale == 0.0 || !std::isfinite(rule.scale) || !std::isfinite(rule.offset)) {
            throw Error(ErrorKind::ZeroScale,
                        fmt::format("unit rule for '{}' needs a finite nonzero scale", rule.indicator));
        }
        spec->unit = rule.target_unit;
        by_name[rule.indicator] = &rule;
    }
    PanelDataset::CellMap cells = dataset.cells();
    for (auto &[key, value] : cells) {
        auto it = by_name.find(key.indicator);
        if (it != by_name.end() && value) {
            value = it->second->scale * *value + it->second->offset;
        }
    }
    return PanelDataset(dataset.countries(), dataset.years(), std::move(indicators),
                        std::move(cells));
}

MissingnessReport missingness_report(const PanelDataset &dataset) {
    if (dataset.countries().empty() || dataset.years().empty() || dataset.indicators().empty()) {
        throw Error(ErrorKind::EmptyDataset,
                    "missingness needs at least one country, year and indicator");
    }
    const std::size_t total = dataset.countries().size() * dataset.years().size();
    std::unordered_map<std::string, std::size_t> observed;
    for (const auto &[key, value] : dataset.cells()) {
        if (value) {
            ++observed[key.indicator];
        }
    }
    MissingnessReport report;
    for (SubIndex pillar : all_sub_indices) {
        for (const auto &spec : dataset.indicators()) {
            if (spec.sub_index != pillar) {
                continue;
            }
            IndicatorMissingness row;
            row.sub_index = pillar;
            row.indicator = spec.name;
            row.observed = observed[spec.name];
            row.missing = total - row.observed;
            row.pct_missing = 100.0 * static_cast<double>(row.missing) / static_cast<double>(total);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

std::string format_missingness_csv(const MissingnessReport &report) {
    std::string out = "sub_index,indicator,observed,missing,pct_missing\n";
    for (const auto &row : report.rows) {
        out += fmt::format("{},{},{},{},{}\n", to_string(row.sub_index), row.indicator, row.observed,
                           row.missing, detail::format_fixed(row.pct_missing, 2));
    }
    return out;
}

FeatureMatrix to_matrix(const PanelDataset &dataset, const std::vector<std::string> &indicator_names,
                        const std::optional<std::vector<std::string>> &country_filter,
                        const std::optional<std::pair<int, int>> &year_range) {
    for (const auto &name : indicator_names) {
        if (dataset.find_indicator(name) == nullptr) {
            throw Error(ErrorKind::UnknownIndicator, fmt::format("no indicator named '{}'", name));
        }
    }
    std::vector<std::string> countries;
    for (const auto &country : dataset.countries()) {
        if (!country_filter || std::find(country_filter->begin(), country_filter->end(), country) !=
                                   country_filter->end()) {
            countries.push_back(country);
        }
    }
    std::vector<int> years;
    for (int year : dataset.years()) {
        if (!year_range || (year >= year_range->first && year <= year_range->second)) {
            years.push_back(year);
        }
    }
    if (countries.empty() || years.empty() || indicator_names.empty()) {
        throw Error(ErrorKind::EmptySelection, "selection leaves no rows or no columns");
    }

    std::vector<RowKey> rows;
    rows.reserve(countries.size() * years.size());
    for (const auto &country : countries) {
        for (int year : years) {
            rows.push_back({country, year});
        }
    }
    FeatureMatrix matrix(rows, indicator_names);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < indicator_names.size(); ++j) {
            if (auto v = dataset.value(rows[i].country, rows[i].year, indicator_names[j])) {
                matrix.set(i, j, *v);
            }
        }
    }
    return matrix;
}

PanelDataset from_matrix(const FeatureMatrix &matrix, const std::vector<IndicatorSpec> &schema) {
    std::vector<IndicatorSpec> indicators;
    for (const auto &name : matrix.column_keys()) {
        auto it = std::find_if(schema.begin(), schema.end(),
                               [&](const IndicatorSpec &s) { return s.name == name; });
        if (it == schema.end()) {
            throw Error(ErrorKind::UnknownIndicator, fmt::format("no indicator named '{}'", name));
        }
        indicators.push_back(*it);
    }
    std::set<std::string> countries;
    std::set<int> years;
    PanelDataset::CellMap cells;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        const auto &key = matrix.row_keys()[i];
        countries.insert(key.country);
        years.insert(key.year);
        for (std::size_t j = 0; j < matrix.cols(); ++j) {
            std::optional<double> v;
            if (!matrix.is_missing(i, j)) {
                v = matrix.value(i, j);
            }
            if (!cells.emplace(CellKey{key.country, key.year, matrix.column_keys()[j]}, v).second) {
                throw Error(ErrorKind::DuplicateCell,
                            fmt::format("row key ({}, {}) appears twice", key.country, key.year));
            }
        }
    }
    return PanelDataset({countries.begin(), countries.end()}, {years.begin(), years.end()},
                        std::move(indicators), std::move(cells));
}

} // namespace eoli
