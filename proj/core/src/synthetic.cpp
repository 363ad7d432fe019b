#include "eoli/synthetic.hpp"

#include "eoli/error.hpp"
#include "eoli/random.hpp"

#include <fmt/core.h>

#include <cmath>
#include <set>

namespace eoli {

PanelDataset generate_toy_panel(const ToyPanelOptions &options) {
    if (options.countries.empty() || options.last_year < options.first_year) {
        throw Error(ErrorKind::InvalidConfig, "toy panel needs countries and a nonempty year range");
    }
    if (!(options.missing_fraction >= 0.0 && options.missing_fraction < 1.0)) {
        throw Error(ErrorKind::FractionOutOfRange, "missing_fraction must lie in [0, 1)");
    }
    const auto schema = default_schema();
    const int n_years = options.last_year - options.first_year + 1;
    SplitMix64 rng(options.seed);

    // latent[pillar][country][year]
    std::vector<std::vector<std::vector<double>>> latent(4);
    for (std::size_t k = 0; k < 4; ++k) {
        for (std::size_t c = 0; c < options.countries.size(); ++c) {
            const double level = rng.normal();
            const double trend = 0.5 + 0.5 * rng.normal();
            double ar = 0.0;
            std::vector<double> series(static_cast<std::size_t>(n_years));
            for (int t = 0; t < n_years; ++t) {
                ar = 0.7 * ar + 0.3 * rng.normal();
                series[static_cast<std::size_t>(t)] =
                    level + trend * static_cast<double>(t) / std::max(1, n_years - 1) + ar;
            }
            latent[k].push_back(std::move(series));
        }
    }

    PanelDataset::CellMap cells;
    for (std::size_t j = 0; j < schema.size(); ++j) {
        const auto &spec = schema[j];
        const auto k = static_cast<std::size_t>(spec.sub_index);
        const double loading = 0.6 + 0.35 * rng.uniform01();
        const double sign = spec.polarity == Polarity::Beneficial ? 1.0 : -1.0;
        const double offset = 10.0 * static_cast<double>(j + 1);
        const double spread = 1.0 + static_cast<double>(j % 5);
        for (std::size_t c = 0; c < options.countries.size(); ++c) {
            for (int t = 0; t < n_years; ++t) {
                const double value =
                    offset + spread * (sign * loading * latent[k][c][static_cast<std::size_t>(t)] +
                                       options.noise_sd * rng.normal());
                const bool hole = rng.uniform01() < options.missing_fraction;
                CellKey key{options.countries[c], options.first_year + t, spec.name};
                cells.emplace(std::move(key), hole ? std::nullopt : std::optional<double>(value));
            }
        }
    }

    std::set<std::string> countries(options.countries.begin(), options.countries.end());
    std::vector<int> years;
    for (int y = options.first_year; y <= options.last_year; ++y) {
        years.push_back(y);
    }
    return PanelDataset({countries.begin(), countries.end()}, std::move(years), schema,
                        std::move(cells));
}

FeatureMatrix linear_factor_matrix(std::size_t rows, std::size_t cols, double noise_sd,
                                   std::uint64_t seed) {
    if (rows == 0 || cols == 0) {
        throw Error(ErrorKind::EmptySelection, "synthetic matrix needs rows and columns");
    }
    SplitMix64 rng(seed);
    std::vector<double> loadings(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        loadings[j] = cols == 1 ? 0.9
                                : 0.9 - 0.25 * static_cast<double>(j) / static_cast<double>(cols - 1);
    }
    std::vector<RowKey> keys;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < cols; ++j) {
        names.push_back(fmt::format("x{}", j + 1));
    }
    Matrix values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t country = i / 25;
        std::string code = "AAA";
        code[0] = static_cast<char>('A' + (country / 676) % 26);
        code[1] = static_cast<char>('A' + (country / 26) % 26);
        code[2] = static_cast<char>('A' + country % 26);
        keys.push_back({code, 2000 + static_cast<int>(i % 25)});
        const double z = rng.normal();
        for (std::size_t j = 0; j < cols; ++j) {
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                loadings[j] * z + noise_sd * rng.normal();
        }
    }
    return FeatureMatrix::from_values(std::move(keys), std::move(names), values);
}

} // namespace eoli
