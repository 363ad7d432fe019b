#pragma once

#include "eoli/feature_matrix.hpp"
#include "eoli/panel.hpp"
#include "eoli/reduction.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eoli {

using ScoreMap = std::map<RowKey, double>;

enum class Normalization { Pooled, PerYear };

struct SubIndexSeries {
    SubIndex pillar = SubIndex::Economic;
    ScoreMap scores; ///< in [0, 1]
    int orientation_sign = 1;
    /// Raw (oriented) bounds used for min-max; per-year mode stores the
    /// overall extremes here.
    double raw_min = 0.0;
    double raw_max = 0.0;
};

/// +1 when sum_i s_i * loading_i >= 0, with s_i = +1 for Beneficial and -1 for
/// Adverse indicators; -1 otherwise.
int orientation_sign(std::span<const double> loadings, std::span<const Polarity> polarities);

SubIndexSeries build_sub_index(SubIndex pillar, const ScoreMap &scores,
                               std::span<const double> loadings,
                               std::span<const Polarity> polarities,
                               Normalization normalization = Normalization::Pooled);

/// Uses the model's first factor for orientation.
SubIndexSeries build_sub_index(SubIndex pillar, const ScoreMap &scores, const FactorModel &model,
                               std::span<const Polarity> polarities,
                               Normalization normalization = Normalization::Pooled);

struct CompositeWeights {
    double economic = 0.25;
    double institutional = 0.25;
    double quality_of_life = 0.35;
    double sustainability = 0.15;

    std::array<double, 4> as_array() const noexcept {
        return {economic, institutional, quality_of_life, sustainability};
    }
    /// Throws WeightSum unless every weight is in [0, 1] and they sum to 1 within 1e-12.
    void validate() const;
};

struct CompositeIndex {
    CompositeWeights weights;
    ScoreMap eoli;
    std::array<SubIndex, 4> provenance = all_sub_indices;
    /// Keys present in at least one sub-index but not all four.
    std::vector<RowKey> incomplete_keys;
    std::vector<std::string> countries; ///< every country seen in any sub-index
};

/// `subs` must be in pillar order: economic, institutional, quality of life,
/// sustainability.
CompositeIndex compose_eoli(const std::array<SubIndexSeries, 4> &subs,
                            const CompositeWeights &weights = {});

struct RankEntry {
    int rank = 0;
    std::string country;
    double score = 0.0;
};

struct RankTable {
    int year = 0;
    std::vector<RankEntry> entries;
    /// Number of adjacent pairs with equal scores (ranked lexicographically).
    int ties = 0;
    std::vector<std::string> excluded; ///< known countries without a score that year
};

/// Ranks a per-(country, year) score map for one year; shared by EoLI and
/// pillar rankings.
RankTable rank_scores(const ScoreMap &scores, int year, const std::vector<std::string> &universe = {});
RankTable rank_year(const CompositeIndex &index, int year);
std::vector<int> index_years(const CompositeIndex &index);

struct AverageRankRow {
    std::string country;
    double eoli = 0.0;
    std::optional<std::array<double, 4>> pillars;
    int years_present = 0;
};

std::vector<AverageRankRow> average_ranks(
    const CompositeIndex &index, std::pair<int, int> year_range,
    const std::optional<std::array<SubIndexSeries, 4>> &per_pillar = std::nullopt);

struct CorrelationTable {
    std::vector<std::string> names;
    Matrix values;
    std::size_t n_keys = 0;
};

CorrelationTable sub_index_correlation(const std::array<SubIndexSeries, 4> &subs,
                                       bool include_year = false);

enum class Level { Low, MediumLow, MediumHigh, High };
std::string_view to_string(Level level) noexcept;

/// Linear-interpolation percentile (q in [0, 1]) of the given values.
double percentile(std::vector<double> values, double q);

std::map<std::string, Level> categorize_levels(const CompositeIndex &index, int year);

struct ComparisonRow {
    std::string country;
    int our_rank = 0;
    int external_rank = 0;
    int gap = 0;
};

struct RankComparison {
    std::vector<ComparisonRow> rows; ///< ordered by our rank
    double spearman = 0.0;
};

RankComparison compare_external_ranks(const RankTable &ours,
                                      const std::map<std::string, int> &external);

/// Reads a two-column `country,rank` file.
std::map<std::string, int> load_external_ranks(const std::filesystem::path &path);

std::string format_subindex_csv(const std::array<SubIndexSeries, 4> &subs,
                                const CompositeIndex &index);
std::string format_rankings_csv(const std::vector<RankTable> &tables);
std::string format_categories_csv(const std::vector<std::pair<int, std::map<std::string, Level>>> &levels);
std::string format_comparison_csv(const RankComparison &comparison);
std::string format_average_ranks_csv(const std::vector<AverageRankRow> &rows);

} // namespace eoli
