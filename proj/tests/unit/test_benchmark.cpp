#include "eoli/benchmark.hpp"
#include "eoli/synthetic.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace eoli;

namespace {

FeatureMatrix column_of(std::size_t n) {
    Matrix v(static_cast<Eigen::Index>(n), 2);
    std::vector<RowKey> rows;
    for (std::size_t i = 0; i < n; ++i) {
        v(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i) + 0.5;
        v(static_cast<Eigen::Index>(i), 1) = -static_cast<double>(i);
        rows.push_back({"AAA", 2000 + static_cast<int>(i)});
    }
    return FeatureMatrix::from_values(rows, {"a", "b"}, v);
}

double trapezoid(const std::vector<double> &x, const std::vector<double> &y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    }
    return s;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return g;
}

} // namespace

TEST(MaskMcar, ExactCountAndPlan) {
    const auto m = column_of(10);
    const auto r = mask_mcar(m, 0.4, {"a"}, 7);
    EXPECT_EQ(r.plan.held_out.size(), 4u);
    EXPECT_EQ(r.masked.missing_count(0), 4u);
    EXPECT_EQ(r.masked.missing_count(1), 0u);
    for (const auto &cell : r.plan.held_out) {
        EXPECT_EQ(cell.truth, m.value(cell.row, cell.col));
        EXPECT_TRUE(r.masked.is_missing(cell.row, cell.col));
    }
}

TEST(MaskMcar, ZeroFractionIsNoOp) {
    const auto m = column_of(10);
    const auto r = mask_mcar(m, 0.0, {"a", "b"}, 7);
    EXPECT_TRUE(r.plan.held_out.empty());
    EXPECT_EQ(r.masked.values(), m.values());
}

TEST(MaskMcar, DeterministicAndSeedSensitive) {
    const auto m = column_of(50);
    const auto a = mask_mcar(m, 0.3, {"a", "b"}, 1);
    const auto b = mask_mcar(m, 0.3, {"a", "b"}, 1);
    const auto c = mask_mcar(m, 0.3, {"a", "b"}, 2);
    EXPECT_TRUE((a.masked.missing() == b.masked.missing()).all());
    EXPECT_FALSE((a.masked.missing() == c.masked.missing()).all());
}

TEST(MaskMcar, CountFollowsFloorAndSkipsMissingCells) {
    auto m = column_of(13);
    m.set_missing(2, 0);
    m.set_missing(5, 0);
    const auto r = mask_mcar(m, 0.5, {"a"}, 3); // 11 eligible -> 5
    EXPECT_EQ(r.plan.held_out.size(), 5u);
    for (const auto &cell : r.plan.held_out) {
        EXPECT_NE(cell.row, 2u);
        EXPECT_NE(cell.row, 5u);
    }
    const auto full = mask_mcar(column_of(7), 1.0, {"a"}, 3);
    EXPECT_EQ(full.plan.held_out.size(), 7u);
}

TEST(MaskMcar, UnmaskRestoresOriginal) {
    const auto m = column_of(40);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = mask_mcar(m, 0.37, {"b", "a"}, seed);
        EXPECT_EQ(unmask(r.masked, r.plan), m);
        EXPECT_EQ(unmask(r.masked, r.plan).values(), m.values());
    }
}

TEST(MaskMcar, Errors) {
    const auto m = column_of(5);
    EXPECT_ERROR_KIND(mask_mcar(m, 0.5, {"zzz"}, 0), ErrorKind::UnknownColumn);
    EXPECT_ERROR_KIND(mask_mcar(m, 1.5, {"a"}, 0), ErrorKind::FractionOutOfRange);
    EXPECT_ERROR_KIND(mask_mcar(m, -0.1, {"a"}, 0), ErrorKind::FractionOutOfRange);
}

TEST(Score, Examples) {
    const std::vector<double> t{1.0, 2.0, 3.0};
    const auto zero = score(t, t);
    EXPECT_EQ(zero.rmse, 0.0);
    EXPECT_EQ(zero.mae, 0.0);
    const std::vector<double> p{0.0, 0.0};
    const std::vector<double> q{3.0, 4.0};
    const auto s = score(p, q);
    EXPECT_NEAR(s.rmse, std::sqrt(12.5), 1e-15);
    EXPECT_NEAR(s.rmse, 3.53553, 1e-5);
    EXPECT_EQ(s.mae, 3.5);
    const std::vector<double> four{1, 2, 3, 4};
    EXPECT_ERROR_KIND(score(t, four), ErrorKind::LengthMismatch);
    EXPECT_ERROR_KIND(score(std::vector<double>{}, std::vector<double>{}), ErrorKind::EmptyInput);
}

TEST(Score, SymmetricAndRmseDominatesMae) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(1 + trial % 17), b(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = z(gen);
            b[i] = z(gen) * 3.0;
        }
        const auto ab = score(a, b);
        const auto ba = score(b, a);
        EXPECT_EQ(ab.rmse, ba.rmse);
        EXPECT_EQ(ab.mae, ba.mae);
        EXPECT_GE(ab.rmse, ab.mae * (1.0 - 1e-15));
    }
}

TEST(Aggregate, SingleRunHasZeroStd) {
    RunScores runs = {{{{1.0, 0.5}, {2.0, 1.0}}}};
    const auto r = aggregate(runs, {"m"}, {"x", "y"}, 0);
    ASSERT_EQ(r.rows.size(), 2u);
    for (const auto &row : r.rows) {
        EXPECT_EQ(row.rmse_std, 0.0);
        EXPECT_EQ(row.mae_std, 0.0);
    }
}

TEST(Aggregate, SampleStdAndOrderIndependence) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    RunScores runs(9, std::vector<std::vector<Score>>(2, std::vector<Score>(3)));
    for (auto &run : runs) {
        for (auto &method : run) {
            for (auto &s : method) {
                s.mae = u(gen);
                s.rmse = s.mae + u(gen);
            }
        }
    }
    const auto base = aggregate(runs, {"m1", "m2"}, {"a", "b", "c"}, 3);
    // direct two-pass oracle for one cell
    double mean = 0.0;
    for (const auto &run : runs) {
        mean += run[1][2].rmse / 9.0;
    }
    double var = 0.0;
    for (const auto &run : runs) {
        var += (run[1][2].rmse - mean) * (run[1][2].rmse - mean) / 8.0;
    }
    const auto &row = base.rows[5];
    EXPECT_EQ(row.method, "m2");
    EXPECT_EQ(row.attribute, "c");
    EXPECT_NEAR(row.rmse_mean, mean, 1e-12);
    EXPECT_NEAR(row.rmse_std, std::sqrt(var), 1e-12);
    for (int k = 0; k < 10; ++k) {
        std::shuffle(runs.begin(), runs.end(), gen);
        const auto shuffled = aggregate(runs, {"m1", "m2"}, {"a", "b", "c"}, 3);
        EXPECT_EQ(format_benchmark_csv(shuffled), format_benchmark_csv(base));
    }
}

TEST(RunBenchmark, ShapeDeterminismAndForestBeatsMean) {
    const auto m = linear_factor_matrix(500, 4, 0.5, 17);
    ForestImputeConfig forest;
    forest.forest.n_trees = 30;
    const std::vector<NamedImputer> methods = {{"mean", std::monostate{}}, {"forest", forest}};
    const auto report = run_benchmark(m, methods, 0.4, m.column_keys(), 30, 100);
    ASSERT_EQ(report.rows.size(), 8u);
    EXPECT_EQ(report.n_runs, 30);
    for (std::size_t j = 0; j < 4; ++j) {
        const auto &mean_row = report.rows[j];
        const auto &forest_row = report.rows[4 + j];
        EXPECT_EQ(mean_row.method, "mean");
        EXPECT_EQ(forest_row.attribute, m.column_keys()[j]);
        EXPECT_LT(forest_row.rmse_mean, mean_row.rmse_mean) << forest_row.attribute;
    }
    for (const auto &row : report.rows) {
        EXPECT_TRUE(std::isfinite(row.rmse_mean) && row.rmse_mean >= 0.0);
        EXPECT_TRUE(std::isfinite(row.rmse_std) && row.rmse_std >= 0.0);
        EXPECT_GE(row.rmse_mean, row.mae_mean);
    }
    for (const auto &run : report.runs) {
        for (const auto &method : run) {
            for (const auto &s : method) {
                EXPECT_GE(s.rmse, s.mae * (1.0 - 1e-15));
            }
        }
    }
    const auto csv = format_benchmark_csv(report);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,attribute,rmse_mean,rmse_std,mae_mean,mae_std,n_runs");
    const auto again = run_benchmark(m, methods, 0.4, m.column_keys(), 30, 100);
    EXPECT_EQ(format_benchmark_csv(again), csv);
}

TEST(RunBenchmark, MeanBaselineMatchesHandOracle) {
    const auto m = linear_factor_matrix(60, 3, 0.3, 2);
    const auto report = run_benchmark(m, {{"mean", std::monostate{}}}, 0.25, {"x1"}, 1, 9);
    const auto mask = mask_mcar(m, 0.25, {"x1"}, 9);
    double sum = 0.0;
    int count = 0;
    const std::size_t col = *m.column_index("x1");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (!mask.masked.is_missing(i, col)) {
            sum += m.value(i, col);
            ++count;
        }
    }
    const double fill = sum / count;
    double se = 0.0;
    for (const auto &cell : mask.plan.held_out) {
        se += (cell.truth - fill) * (cell.truth - fill);
    }
    EXPECT_NEAR(report.rows[0].rmse_mean, std::sqrt(se / static_cast<double>(mask.plan.held_out.size())), 1e-12);
    EXPECT_EQ(report.rows[0].rmse_std, 0.0);
}

TEST(Kde, SinglePointPeak) {
    const std::vector<double> v{0.0};
    const std::vector<double> g{-1.0, 0.0, 1.0};
    const auto c = gaussian_kde(v, g, 1.0);
    EXPECT_NEAR(c.density[1], 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-12);
    EXPECT_NEAR(c.density[1], 0.39894, 1e-5);
    const auto narrow = gaussian_kde(v, g, 0.25);
    EXPECT_NEAR(narrow.density[1], 1.0 / (0.25 * std::sqrt(2.0 * std::numbers::pi)), 1e-12);
}

TEST(Kde, IntegratesToOneAndIsNonnegative) {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> z;
    std::exponential_distribution<double> e(0.5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(5 + trial * 3);
        for (auto &x : v) {
            x = trial % 2 ? z(gen) * 4.0 : e(gen);
        }
        const double h = silverman_bandwidth(v);
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        const auto grid = linspace(*lo - 5 * h, *hi + 5 * h, 4001);
        const auto c = gaussian_kde(v, grid);
        EXPECT_EQ(c.bandwidth, h);
        EXPECT_NEAR(trapezoid(c.grid, c.density), 1.0, 1e-3);
        for (double d : c.density) {
            EXPECT_GE(d, 0.0);
        }
    }
}

TEST(Kde, SilvermanRuleAndFallbacks) {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8};
    // sample sd (n-1) and type-7 quartiles
    const double mean = 4.5;
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(ss / 7.0);
    const double iqr = 6.25 - 2.75;
    EXPECT_NEAR(silverman_bandwidth(v), 0.9 * std::min(sd, iqr / 1.34) * std::pow(8.0, -0.2), 1e-12);
    const std::vector<double> spike{5, 5, 5, 5, 5, 5, 9};
    EXPECT_GT(silverman_bandwidth(spike), 0.0);
    const std::vector<double> flat{2, 2, 2};
    EXPECT_EQ(silverman_bandwidth(flat), 1.0);
}

TEST(Kde, DefaultGridAndErrors) {
    const std::vector<double> v{0.0, 1.0, 4.0};
    const auto g = default_kde_grid(v, 0.5);
    ASSERT_EQ(g.size(), 256u);
    EXPECT_DOUBLE_EQ(g.front(), -1.5);
    EXPECT_DOUBLE_EQ(g.back(), 5.5);
    for (std::size_t i = 1; i < g.size(); ++i) {
        EXPECT_LT(g[i - 1], g[i]);
    }
    EXPECT_ERROR_KIND(gaussian_kde(std::vector<double>{}, g), ErrorKind::EmptyInput);
    const std::vector<double> bad{0.0, 2.0, 1.0};
    EXPECT_ERROR_KIND(gaussian_kde(v, bad), ErrorKind::NonAscendingGrid);
    const auto csv = format_kde_csv({gaussian_kde(v, g)});
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "variable,label,grid_x,density");
}
