#include "eoli/benchmark.hpp"
#include "eoli/imputation.hpp"
#include "eoli/reduction.hpp"
#include "eoli/regressors.hpp"
#include "eoli/synthetic.hpp"

#include <benchmark/benchmark.h>

using namespace eoli;

namespace {

struct Data {
    Matrix x;
    Vector y;
};

Data regression_data(std::size_t n, std::size_t p) {
    const auto m = linear_factor_matrix(n, p + 1, 0.4, 11);
    return {m.values().leftCols(static_cast<Eigen::Index>(p)), m.values().col(static_cast<Eigen::Index>(p))};
}

FeatureMatrix holed(std::size_t n, std::size_t p, double fraction) {
    const auto m = linear_factor_matrix(n, p, 0.5, 12);
    return mask_mcar(m, fraction, m.column_keys(), 3).masked;
}

void BM_Tree(benchmark::State &state) {
    const auto d = regression_data(static_cast<std::size_t>(state.range(0)), 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_tree(d.x, d.y));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Tree)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_Forest(benchmark::State &state) {
    const auto d = regression_data(static_cast<std::size_t>(state.range(0)), 8);
    ForestConfig cfg;
    cfg.n_trees = 50;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_forest(d.x, d.y, cfg));
    }
}
BENCHMARK(BM_Forest)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Boost(benchmark::State &state) {
    const auto d = regression_data(static_cast<std::size_t>(state.range(0)), 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_boost(d.x, d.y));
    }
}
BENCHMARK(BM_Boost)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_MiceLinear(benchmark::State &state) {
    const auto m = holed(500, 6, 0.4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mice_impute(m));
    }
}
BENCHMARK(BM_MiceLinear)->Unit(benchmark::kMillisecond);

void BM_MiceBoost(benchmark::State &state) {
    const auto m = holed(500, 6, 0.4);
    MiceConfig cfg;
    cfg.base_learner = BoostConfig{};
    for (auto _ : state) {
        benchmark::DoNotOptimize(mice_impute(m, cfg));
    }
}
BENCHMARK(BM_MiceBoost)->Unit(benchmark::kMillisecond);

void BM_ForestImpute(benchmark::State &state) {
    const auto m = holed(500, 6, 0.4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forest_impute(m));
    }
}
BENCHMARK(BM_ForestImpute)->Unit(benchmark::kMillisecond);

void BM_FactorAnalysis(benchmark::State &state) {
    const auto p = static_cast<std::size_t>(state.range(0));
    const auto z = zscore(linear_factor_matrix(1000, p, 0.5, 13)).matrix;
    for (auto _ : state) {
        benchmark::DoNotOptimize(factor_analysis(z, 2));
    }
}
BENCHMARK(BM_FactorAnalysis)->Arg(6)->Arg(12)->Arg(24);

} // namespace
BENCHMARK_MAIN();
