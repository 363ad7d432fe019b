#include "eoli/index.hpp"

#include "eoli/error.hpp"

#include "csv_util.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace eoli {

int orientation_sign(std::span<const double> loadings, std::span<const Polarity> polarities) {
    if (loadings.size() != polarities.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("{} loadings vs {} polarities", loadings.size(), polarities.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < loadings.size(); ++i) {
        total += (polarities[i] == Polarity::Beneficial ? 1.0 : -1.0) * loadings[i];
    }
    return total >= 0.0 ? 1 : -1;
}

namespace {

void min_max(std::vector<std::pair<const RowKey *, double>> &items, ScoreMap &out,
             const char *scope) {
    double lo = items.front().second;
    double hi = lo;
    for (const auto &item : items) {
        lo = std::min(lo, item.second);
        hi = std::max(hi, item.second);
    }
    if (!(hi > lo)) {
        throw Error(ErrorKind::DegenerateRange, fmt::format("all {} scores are equal", scope));
    }
    const double span = hi - lo;
    for (const auto &[key, value] : items) {
        out[*key] = (value - lo) / span;
    }
}

} // namespace

SubIndexSeries build_sub_index(SubIndex pillar, const ScoreMap &scores,
                               std::span<const double> loadings,
                               std::span<const Polarity> polarities, Normalization normalization) {
    if (scores.empty()) {
        throw Error(ErrorKind::EmptyInput, "no scores to build a sub-index from");
    }
    SubIndexSeries series;
    series.pillar = pillar;
    series.orientation_sign = orientation_sign(loadings, polarities);
    const auto sign = static_cast<double>(series.orientation_sign);

    std::vector<std::pair<const RowKey *, double>> oriented;
    oriented.reserve(scores.size());
    for (const auto &[key, value] : scores) {
        if (!std::isfinite(value)) {
            throw Error(ErrorKind::InvalidValue, "sub-index scores must be finite");
        }
        oriented.emplace_back(&key, sign * value);
    }
    const auto [lo, hi] = std::minmax_element(
        oriented.begin(), oriented.end(), [](const auto &a, const auto &b) { return a.second < b.second; });
    series.raw_min = lo->second;
    series.raw_max = hi->second;

    if (normalization == Normalization::Pooled) {
        min_max(oriented, series.scores, "panel");
    } else {
        std::map<int, std::vector<std::pair<const RowKey *, double>>> by_year;
        for (const auto &item : oriented) {
            by_year[item.first->year].push_back(item);
        }
        for (auto &[year, items] : by_year) {
            min_max(items, series.scores, "same-year");
        }
    }
    return series;
}

SubIndexSeries build_sub_index(SubIndex pillar, const ScoreMap &scores, const FactorModel &model,
                               std::span<const Polarity> polarities, Normalization normalization) {
    const Vector first = model.loadings.col(0);
    return build_sub_index(pillar, scores, std::span<const double>(first.data(), static_cast<std::size_t>(first.size())),
                           polarities, normalization);
}

void CompositeWeights::validate() const {
    const auto w = as_array();
    double sum = 0.0;
    for (double v : w) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw Error(ErrorKind::WeightSum, fmt::format("weight {} outside [0, 1]", v));
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw Error(ErrorKind::WeightSum, fmt::format("weights sum to {} instead of 1", sum));
    }
}

CompositeIndex compose_eoli(const std::array<SubIndexSeries, 4> &subs, const CompositeWeights &weights) {
    weights.validate();
    for (std::size_t k = 0; k < 4; ++k) {
        if (subs[k].pillar != all_sub_indices[k]) {
            throw Error(ErrorKind::InvalidValue,
                        fmt::format("sub-index {} must be {}", k, to_string(all_sub_indices[k])));
        }
    }
    const auto w = weights.as_array();
    CompositeIndex index;
    index.weights = weights;

    std::set<RowKey> all_keys;
    std::set<std::string> countries;
    for (const auto &sub : subs) {
        for (const auto &[key, value] : sub.scores) {
            all_keys.insert(key);
            countries.insert(key.country);
        }
    }
    for (const auto &key : all_keys) {
        double total = 0.0;
        bool complete = true;
        for (std::size_t k = 0; k < 4 && complete; ++k) {
            auto it = subs[k].scores.find(key);
            if (it == subs[k].scores.end()) {
                complete = false;
            } else {
                total += w[k] * it->second;
            }
        }
        if (complete) {
            index.eoli.emplace(key, total);
        } else {
            index.incomplete_keys.push_back(key);
        }
    }
    if (index.eoli.empty()) {
        throw Error(ErrorKind::EmptyIntersection, "no (country, year) key is present in all four sub-indices");
    }
    index.countries.assign(countries.begin(), countries.end());
    return index;
}

RankTable rank_scores(const ScoreMap &scores, int year, const std::vector<std::string> &universe) {
    RankTable table;
    table.year = year;
    for (const auto &[key, value] : scores) {
        if (key.year == year) {
            table.entries.push_back({0, key.country, value});
        }
    }
    if (table.entries.empty()) {
        throw Error(ErrorKind::UnknownYear, fmt::format("no scores for year {}", year));
    }
    std::sort(table.entries.begin(), table.entries.end(), [](const RankEntry &a, const RankEntry &b) {
        return a.score > b.score || (a.score == b.score && a.country < b.country);
    });
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        table.entries[i].rank = static_cast<int>(i + 1);
        if (i > 0 && table.entries[i].score == table.entries[i - 1].score) {
            ++table.ties;
        }
    }
    for (const auto &country : universe) {
        if (!scores.contains(RowKey{country, year})) {
            table.excluded.push_back(country);
        }
    }
    return table;
}

RankTable rank_year(const CompositeIndex &index, int year) {
    return rank_scores(index.eoli, year, index.countries);
}

std::vector<int> index_years(const CompositeIndex &index) {
    std::set<int> years;
    for (const auto &[key, value] : index.eoli) {
        years.insert(key.year);
    }
    return {years.begin(), years.end()};
}

std::vector<AverageRankRow> average_ranks(const CompositeIndex &index, std::pair<int, int> year_range,
                                          const std::optional<std::array<SubIndexSeries, 4>> &per_pillar) {
    if (year_range.first > year_range.second) {
        throw Error(ErrorKind::InvalidValue,
                    fmt::format("empty year range {}-{}", year_range.first, year_range.second));
    }
    struct Accumulator {
        double eoli = 0.0;
        std::array<double, 4> pillars{};
        std::array<int, 4> pillar_years{};
        int years = 0;
    };
    std::map<std::string, Accumulator> acc;
    for (int year = year_range.first; year <= year_range.second; ++year) {
        for (const auto &entry : rank_year(index, year).entries) {
            auto &a = acc[entry.country];
            a.eoli += entry.rank;
            ++a.years;
        }
        if (per_pillar) {
            for (std::size_t k = 0; k < 4; ++k) {
                for (const auto &entry : rank_scores((*per_pillar)[k].scores, year).entries) {
                    auto &a = acc[entry.country];
                    a.pillars[k] += entry.rank;
                    ++a.pillar_years[k];
                }
            }
        }
    }
    std::vector<AverageRankRow> rows;
    for (const auto &[country, a] : acc) {
        if (a.years == 0) {
            continue;
        }
        AverageRankRow row{country, a.eoli / a.years, std::nullopt, a.years};
        if (per_pillar) {
            std::array<double, 4> means{};
            for (std::size_t k = 0; k < 4; ++k) {
                means[k] = a.pillar_years[k] > 0 ? a.pillars[k] / a.pillar_years[k]
                                                 : std::numeric_limits<double>::quiet_NaN();
            }
            row.pillars = means;
        }
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const AverageRankRow &a, const AverageRankRow &b) {
        return a.eoli < b.eoli;
    });
    return rows;
}

CorrelationTable sub_index_correlation(const std::array<SubIndexSeries, 4> &subs, bool include_year) {
    std::vector<RowKey> keys;
    for (const auto &[key, value] : subs[0].scores) {
        if (std::all_of(subs.begin() + 1, subs.end(),
                        [&](const SubIndexSeries &s) { return s.scores.contains(key); })) {
            keys.push_back(key);
        }
    }
    if (keys.size() < 2) {
        throw Error(ErrorKind::InsufficientOverlap, "need at least two shared (country, year) keys");
    }
    CorrelationTable table;
    for (const auto &sub : subs) {
        table.names.emplace_back(column_name(sub.pillar));
    }
    if (include_year) {
        table.names.emplace_back("year");
    }
    const auto n = static_cast<Eigen::Index>(keys.size());
    const auto p = static_cast<Eigen::Index>(table.names.size());
    Matrix data(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto &key = keys[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < 4; ++k) {
            data(i, k) = subs[static_cast<std::size_t>(k)].scores.at(key);
        }
        if (include_year) {
            data(i, 4) = key.year;
        }
    }
    Matrix centered = data.rowwise() - data.colwise().mean();
    const Vector sd = centered.colwise().norm();
    for (Eigen::Index k = 0; k < p; ++k) {
        if (!(sd(k) > 0.0)) {
            throw Error(ErrorKind::DegenerateRange,
                        fmt::format("'{}' is constant over the shared keys", table.names[static_cast<std::size_t>(k)]));
        }
        centered.col(k) /= sd(k);
    }
    Matrix r = centered.transpose() * centered;
    r = 0.5 * (r + r.transpose());
    r.diagonal().setOnes();
    table.values = r.cwiseMax(-1.0).cwiseMin(1.0);
    table.n_keys = keys.size();
    return table;
}

std::string_view to_string(Level level) noexcept {
    switch (level) {
    case Level::Low: return "Low";
    case Level::MediumLow: return "MediumLow";
    case Level::MediumHigh: return "MediumHigh";
    case Level::High: return "High";
    }
    return "Low";
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw Error(ErrorKind::EmptyInput, "percentile of an empty set");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::map<std::string, Level> categorize_levels(const CompositeIndex &index, int year) {
    const RankTable table = rank_year(index, year);
    if (table.entries.size() < 4) {
        throw Error(ErrorKind::TooFewCountries,
                    fmt::format("year {} has {} countries; four levels need at least 4", year,
                                table.entries.size()));
    }
    std::vector<double> values;
    for (const auto &entry : table.entries) {
        values.push_back(entry.score);
    }
    const double q1 = percentile(values, 0.25);
    const double q2 = percentile(values, 0.50);
    const double q3 = percentile(values, 0.75);
    std::map<std::string, Level> levels;
    for (const auto &entry : table.entries) {
        Level level = Level::High;
        if (entry.score <= q1) {
            level = Level::Low;
        } else if (entry.score <= q2) {
            level = Level::MediumLow;
        } else if (entry.score <= q3) {
            level = Level::MediumHigh;
        }
        levels.emplace(entry.country, level);
    }
    return levels;
}

namespace {

// Average ranks (1-based) for ties.
std::vector<double> fractional_ranks(const std::vector<double> &values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double> &a, const std::vector<double> &b) {
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) {
        return 0.0;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

} // namespace

RankComparison compare_external_ranks(const RankTable &ours, const std::map<std::string, int> &external) {
    RankComparison out;
    for (const auto &entry : ours.entries) {
        auto it = external.find(entry.country);
        if (it != external.end()) {
            out.rows.push_back({entry.country, entry.rank, it->second, entry.rank - it->second});
        }
    }
    if (out.rows.size() < 2) {
        throw Error(ErrorKind::InsufficientOverlap, "need at least two countries in common");
    }
    std::vector<double> a;
    std::vector<double> b;
    for (const auto &row : out.rows) {
        a.push_back(row.our_rank);
        b.push_back(row.external_rank);
    }
    out.spearman = pearson(fractional_ranks(a), fractional_ranks(b));
    return out;
}

std::map<std::string, int> load_external_ranks(const std::filesystem::path &path) {
    const std::string text = detail::read_text_file(path);
    const auto lines = detail::split_lines(text);
    if (lines.empty() || lines.front() != "country,rank") {
        throw Error(ErrorKind::MalformedRow, fmt::format("{}: line 1: expected header 'country,rank'", path.string()));
    }
    std::map<std::string, int> ranks;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto fields = detail::split_fields(lines[i]);
        const auto rank = fields.size() == 2 ? detail::parse_integer(fields[1]) : std::nullopt;
        if (!rank || *rank < 1) {
            throw Error(ErrorKind::MalformedRow, fmt::format("{}: line {}: expected 'country,rank'", path.string(), i + 1));
        }
        if (!ranks.emplace(fields[0], static_cast<int>(*rank)).second) {
            throw Error(ErrorKind::DuplicateCell, fmt::format("{}: line {}: country '{}' repeated", path.string(), i + 1, fields[0]));
        }
    }
    return ranks;
}

std::string format_subindex_csv(const std::array<SubIndexSeries, 4> &subs, const CompositeIndex &index) {
    std::set<RowKey> keys;
    for (const auto &sub : subs) {
        for (const auto &[key, value] : sub.scores) {
            keys.insert(key);
        }
    }
    auto cell = [](const ScoreMap &m, const RowKey &key) {
        auto it = m.find(key);
        return it == m.end() ? std::string{} : detail::format_fixed(it->second, 6);
    };
    std::string out = "country,year,economic,institutional,quality_of_life,sustainability,eoli\n";
    for (const auto &key : keys) {
        out += fmt::format("{},{},{},{},{},{},{}\n", key.country, key.year, cell(subs[0].scores, key),
                           cell(subs[1].scores, key), cell(subs[2].scores, key), cell(subs[3].scores, key),
                           cell(index.eoli, key));
    }
    return out;
}

std::string format_rankings_csv(const std::vector<RankTable> &tables) {
    std::string out = "year,rank,country,eoli\n";
    for (const auto &table : tables) {
        for (const auto &entry : table.entries) {
            out += fmt::format("{},{},{},{}\n", table.year, entry.rank, entry.country,
                               detail::format_fixed(entry.score, 6));
        }
    }
    return out;
}

std::string format_categories_csv(const std::vector<std::pair<int, std::map<std::string, Level>>> &levels) {
    std::string out = "year,country,level\n";
    for (const auto &[year, by_country] : levels) {
        for (const auto &[country, level] : by_country) {
            out += fmt::format("{},{},{}\n", year, country, to_string(level));
        }
    }
    return out;
}

std::string format_comparison_csv(const RankComparison &comparison) {
    std::string out = "country,our_rank,external_rank,gap\n";
    for (const auto &row : comparison.rows) {
        out += fmt::format("{},{},{},{}\n", row.country, row.our_rank, row.external_rank, row.gap);
    }
    out += fmt::format("# spearman={}\n", detail::format_fixed(comparison.spearman, 6));
    return out;
}

std::string format_average_ranks_csv(const std::vector<AverageRankRow> &rows) {
    std::string out = "country,years,eoli,economic,institutional,quality_of_life,sustainability\n";
    for (const auto &row : rows) {
        std::array<std::string, 4> pillars;
        if (row.pillars) {
            for (std::size_t k = 0; k < 4; ++k) {
                pillars[k] = std::isfinite((*row.pillars)[k]) ? detail::format_fixed((*row.pillars)[k], 1) : "";
            }
        }
        out += fmt::format("{},{},{},{},{},{},{}\n", row.country, row.years_present,
                           detail::format_fixed(row.eoli, 1), pillars[0], pillars[1], pillars[2], pillars[3]);
    }
    return out;
}

} // namespace eoli
