#pragma once

#include "eoli/feature_matrix.hpp"
#include "eoli/panel.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace eoli {

struct ToyPanelOptions {
    std::vector<std::string> countries = {"AUS", "BRA", "CHN", "DEU", "GBR",
                                          "IND", "JPN", "MYS", "USA"};
    int first_year = 1970;
    int last_year = 2021;
    double missing_fraction = 0.15;
    double noise_sd = 0.35;
    std::uint64_t seed = 2024;
};

/// Toy panel over default_schema(): per pillar a latent series
/// (country level + country trend + AR(1) noise); each indicator is an affine
/// map of its pillar latent (sign-flipped for Adverse indicators) plus noise,
/// then cells are deleted MCAR with probability missing_fraction.
PanelDataset generate_toy_panel(const ToyPanelOptions &options = {});

/// n x p matrix x_ij = a_j * z_i + noise_sd * e_ij with z, e standard normal
/// and loadings a_j spaced evenly from 0.9 down to 0.65. Row keys use
/// synthetic country codes (AAA, AAB, ...) and years 2000-2024.
FeatureMatrix linear_factor_matrix(std::size_t rows, std::size_t cols, double noise_sd,
                                   std::uint64_t seed);

} // namespace eoli
