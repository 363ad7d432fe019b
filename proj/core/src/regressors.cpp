#include "eoli/regressors.hpp"

#include "eoli/error.hpp"
#include "eoli/random.hpp"

#include <fmt/core.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eoli {

namespace {

void validate(const TreeConfig &config) {
    if (config.max_depth && *config.max_depth < 0) {
        throw Error(ErrorKind::InvalidConfig, "max_depth must be nonnegative");
    }
    if (config.min_samples_split < 2) {
        throw Error(ErrorKind::InvalidConfig, "min_samples_split must be at least 2");
    }
    if (config.min_samples_leaf < 1) {
        throw Error(ErrorKind::InvalidConfig, "min_samples_leaf must be at least 1");
    }
}

void check_training_data(const Matrix &x, const Vector &y) {
    if (x.rows() == 0) {
        throw Error(ErrorKind::EmptyTrainingSet, "no training rows");
    }
    if (y.size() != x.rows()) {
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("X has {} rows but y has {} entries", x.rows(), y.size()));
    }
    if (!x.allFinite() || !y.allFinite()) {
        throw Error(ErrorKind::InvalidValue, "training data must be finite (impute first)");
    }
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Grows one CART regression tree over a list of sample slots. Each slot maps
// to a training row, so bootstrap duplicates are just repeated slots. Every
// feature keeps its own slot ordering sorted by feature value; a node owns the
// same [begin, end) segment in all of them, which stays true because children
// are produced by a stable partition.
class TreeGrower {
public:
    // `sorted` holds, per feature, the slots ordered by (value, slot index);
    // see slot_orders().
    TreeGrower(const Matrix &x, const Vector &y, std::vector<int> slot_rows,
               std::vector<std::vector<int>> sorted, const TreeConfig &config, int mtry, SplitMix64 *rng)
        : x_{x}, y_{y}, rows_{std::move(slot_rows)}, config_{config}, mtry_{mtry}, rng_{rng},
          p_{static_cast<int>(x.cols())}, sorted_{std::move(sorted)} {
        const std::size_t m = rows_.size();
        if (p_ == 0) {
            base_order_.resize(m);
            std::iota(base_order_.begin(), base_order_.end(), 0);
        }
        goes_left_.assign(m, 0);
        scratch_.resize(m);
        features_.resize(static_cast<std::size_t>(p_));
        std::iota(features_.begin(), features_.end(), 0);
    }

    DecisionTree grow() {
        nodes_.clear();
        build(0, rows_.size(), 0);
        return DecisionTree(std::move(nodes_));
    }

private:
    const std::vector<int> &order(int f) const {
        return p_ == 0 ? base_order_ : sorted_[static_cast<std::size_t>(f)];
    }

    double target(int slot) const { return y_(rows_[static_cast<std::size_t>(slot)]); }

    int build(std::size_t begin, std::size_t end, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        const std::size_t n = end - begin;
        const auto &slots = order(0);

        double sum = 0.0;
        double lo = target(slots[begin]);
        double hi = lo;
        for (std::size_t k = begin; k < end; ++k) {
            const double v = target(slots[k]);
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double mean = sum / static_cast<double>(n);
        nodes_[static_cast<std::size_t>(id)].value = mean;
        nodes_[static_cast<std::size_t>(id)].n_samples = n;

        const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
        const bool depth_ok = !config_.max_depth || depth < *config_.max_depth;
        if (!depth_ok || lo == hi || p_ == 0 ||
            n < static_cast<std::size_t>(config_.min_samples_split) || n < 2 * min_leaf) {
            return id;
        }

        double sse = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            const double d = target(slots[k]) - mean;
            sse += d * d;
        }

        const SplitChoice best = find_split(begin, end, mean, sse);
        if (best.feature < 0) {
            return id;
        }

        // mark sides by slot, then stable-partition every feature ordering
        const auto &chosen = order(best.feature);
        std::size_t n_left = 0;
        for (std::size_t k = begin; k < end; ++k) {
            const int slot = chosen[k];
            const bool left = x_(rows_[static_cast<std::size_t>(slot)], best.feature) <= best.threshold;
            goes_left_[static_cast<std::size_t>(slot)] = left ? 1 : 0;
            n_left += left ? 1 : 0;
        }
        for (int f = 0; f < p_; ++f) {
            auto &ord = sorted_[static_cast<std::size_t>(f)];
            std::size_t l = begin;
            std::size_t r = 0;
            for (std::size_t k = begin; k < end; ++k) {
                const int slot = ord[k];
                if (goes_left_[static_cast<std::size_t>(slot)]) {
                    ord[l++] = slot;
                } else {
                    scratch_[r++] = slot;
                }
            }
            std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                      ord.begin() + static_cast<std::ptrdiff_t>(l));
        }

        nodes_[static_cast<std::size_t>(id)].feature = best.feature;
        nodes_[static_cast<std::size_t>(id)].threshold = best.threshold;
        const int left = build(begin, begin + n_left, depth + 1);
        const int right = build(begin + n_left, end, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    // Variance-reduction search. Gains are computed on node-centred targets:
    // gain = S_L^2 / n_L + S_R^2 / n_R with S the centred sums. Candidates are
    // visited by ascending feature, then ascending threshold; a candidate must
    // beat the incumbent by more than 1e-12 * SSE, so gains equal up to rounding
    // (the same partition reached through another feature) count as ties.
    SplitChoice find_split(std::size_t begin, std::size_t end, double mean, double sse) {
        std::vector<int> candidates;
        if (mtry_ >= p_) {
            candidates = features_;
        } else {
            std::vector<int> pool = features_;
            for (int k = 0; k < mtry_; ++k) {
                const auto pick = static_cast<std::size_t>(k) +
                                  rng_->uniform_index(static_cast<std::uint64_t>(p_ - k));
                std::swap(pool[static_cast<std::size_t>(k)], pool[pick]);
            }
            candidates.assign(pool.begin(), pool.begin() + mtry_);
            std::sort(candidates.begin(), candidates.end());
        }

        const std::size_t n = end - begin;
        const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
        const double tie_eps = 1e-12 * sse;
        SplitChoice best;
        for (int f : candidates) {
            const auto &ord = sorted_[static_cast<std::size_t>(f)];
            double total = 0.0;
            for (std::size_t k = begin; k < end; ++k) {
                total += target(ord[k]) - mean;
            }
            double left_sum = 0.0;
            for (std::size_t k = begin; k + 1 < end; ++k) {
                left_sum += target(ord[k]) - mean;
                const std::size_t n_left = k - begin + 1;
                const std::size_t n_right = n - n_left;
                if (n_left < min_leaf) {
                    continue;
                }
                if (n_right < min_leaf) {
                    break;
                }
                const double xl = x_(rows_[static_cast<std::size_t>(ord[k])], f);
                const double xr = x_(rows_[static_cast<std::size_t>(ord[k + 1])], f);
                if (!(xl < xr)) {
                    continue;
                }
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                                    right_sum * right_sum / static_cast<double>(n_right);
                if (gain > best.gain + tie_eps) {
                    double threshold = xl + 0.5 * (xr - xl);
                    if (!(threshold < xr)) {
                        threshold = xl;
                    }
                    best = {f, threshold, gain};
                }
            }
        }
        return best;
    }

    const Matrix &x_;
    const Vector &y_;
    std::vector<int> rows_;
    TreeConfig config_;
    int mtry_;
    SplitMix64 *rng_;
    int p_;
    std::vector<std::vector<int>> sorted_;
    std::vector<int> base_order_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<int> scratch_;
    std::vector<int> features_;
    std::vector<TreeNode> nodes_;
};

// Rows of x sorted by each feature, ties by row index. Computed once per fit.
std::vector<std::vector<int>> row_orders(const Matrix &x) {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
        auto &order = out[static_cast<std::size_t>(f)];
        order.resize(static_cast<std::size_t>(x.rows()));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double xa = x(a, f);
            const double xb = x(b, f);
            return xa < xb || (xa == xb && a < b);
        });
    }
    return out;
}

// Per-feature slot orderings by (value, slot index), built from the row
// orderings by bucketing slots under their row. Only runs of equal values need
// a re-sort, since slot order there need not follow row order.
std::vector<std::vector<int>> slot_orders(const Matrix &x, const std::vector<int> &slot_rows,
                                          const std::vector<std::vector<int>> &rows_sorted) {
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<int> start(n + 1, 0);
    for (int r : slot_rows) {
        ++start[static_cast<std::size_t>(r) + 1];
    }
    for (std::size_t r = 0; r < n; ++r) {
        start[r + 1] += start[r];
    }
    std::vector<int> by_row(slot_rows.size());
    {
        std::vector<int> fill(start.begin(), start.end() - 1);
        for (std::size_t slot = 0; slot < slot_rows.size(); ++slot) {
            by_row[static_cast<std::size_t>(fill[static_cast<std::size_t>(slot_rows[slot])]++)] =
                static_cast<int>(slot);
        }
    }
    std::vector<std::vector<int>> out(rows_sorted.size());
    for (std::size_t f = 0; f < rows_sorted.size(); ++f) {
        auto &order = out[f];
        order.reserve(slot_rows.size());
        const auto fi = static_cast<Eigen::Index>(f);
        const auto &rows = rows_sorted[f];
        for (std::size_t k = 0; k < rows.size();) {
            // group rows sharing one value
            std::size_t e = k + 1;
            while (e < rows.size() && x(rows[e], fi) == x(rows[k], fi)) {
                ++e;
            }
            const std::size_t run_begin = order.size();
            int distinct_rows = 0;
            for (std::size_t q = k; q < e; ++q) {
                const auto r = static_cast<std::size_t>(rows[q]);
                if (start[r] != start[r + 1]) {
                    ++distinct_rows;
                }
                order.insert(order.end(), by_row.begin() + start[r], by_row.begin() + start[r + 1]);
            }
            if (distinct_rows > 1) {
                std::sort(order.begin() + static_cast<std::ptrdiff_t>(run_begin), order.end());
            }
            k = e;
        }
    }
    return out;
}

std::vector<int> identity_slots(Eigen::Index n) {
    std::vector<int> slots(static_cast<std::size_t>(n));
    std::iota(slots.begin(), slots.end(), 0);
    return slots;
}

nlohmann::json node_json(const DecisionTree &tree, std::size_t id) {
    const auto &node = tree.nodes()[id];
    if (node.is_leaf()) {
        return {{"leaf", node.value}, {"n", node.n_samples}};
    }
    return {{"feature", node.feature},
            {"threshold", node.threshold},
            {"n", node.n_samples},
            {"left", node_json(tree, static_cast<std::size_t>(node.left))},
            {"right", node_json(tree, static_cast<std::size_t>(node.right))}};
}

std::string_view kind_name(ModelKind kind) {
    switch (kind) {
    case ModelKind::Tree: return "tree";
    case ModelKind::Forest: return "forest";
    case ModelKind::Boost: return "boost";
    }
    return "tree";
}

} // namespace

std::size_t DecisionTree::depth() const {
    if (nodes_.empty()) {
        return 0;
    }
    std::vector<std::size_t> depth(nodes_.size(), 0);
    std::size_t deepest = 0;
    // children always have larger ids than their parent (preorder build)
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (!nodes_[i].is_leaf()) {
            depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
            depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
        }
    }
    return deepest;
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(),
                                                  [](const TreeNode &n) { return n.is_leaf(); }));
}

RegressionModel::RegressionModel(ModelKind kind, std::size_t n_features,
                                 std::vector<DecisionTree> trees, double base_prediction,
                                 double learning_rate)
    : kind_{kind}, n_features_{n_features}, trees_{std::move(trees)},
      base_prediction_{base_prediction}, learning_rate_{learning_rate} {}

void RegressionModel::check_input(const Matrix &x) const {
    if (static_cast<std::size_t>(x.cols()) != n_features_) {
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("model expects {} features, got {}", n_features_, x.cols()));
    }
    if (!x.allFinite()) {
        throw Error(ErrorKind::InvalidValue, "prediction input must be finite");
    }
}

Matrix RegressionModel::predict_per_tree(const Matrix &x) const {
    check_input(x);
    Matrix out(x.rows(), static_cast<Eigen::Index>(trees_.size()));
    for (std::size_t t = 0; t < trees_.size(); ++t) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            out(i, static_cast<Eigen::Index>(t)) = trees_[t].predict_row(x.row(i));
        }
    }
    return out;
}

Vector RegressionModel::predict(const Matrix &x) const {
    check_input(x);
    Vector out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        double acc = 0.0;
        for (const auto &tree : trees_) {
            acc += tree.predict_row(row);
        }
        switch (kind_) {
        case ModelKind::Tree: out(i) = acc; break;
        case ModelKind::Forest: out(i) = acc / static_cast<double>(trees_.size()); break;
        case ModelKind::Boost: out(i) = base_prediction_ + learning_rate_ * acc; break;
        }
    }
    return out;
}

std::string RegressionModel::to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto &tree : trees_) {
        trees.push_back(tree.nodes().empty() ? nlohmann::json{} : node_json(tree, 0));
    }
    nlohmann::json doc = {{"kind", kind_name(kind_)},
                          {"n_features", n_features_},
                          {"base_prediction", base_prediction_},
                          {"learning_rate", learning_rate_},
                          {"trees", std::move(trees)}};
    return doc.dump();
}

Vector predict(const RegressionModel &model, const Matrix &x) { return model.predict(x); }

int resolve_mtry(const ForestConfig &config, std::size_t n_features) {
    const int p = static_cast<int>(n_features);
    const int mtry = config.mtry.value_or(std::max(1, p / 3));
    if (mtry < 1 || (p > 0 && mtry > p)) {
        throw Error(ErrorKind::InvalidConfig,
                    fmt::format("mtry {} outside [1, {}] features", mtry, p));
    }
    return mtry;
}

RegressionModel fit_tree(const Matrix &x, const Vector &y, const TreeConfig &config) {
    validate(config);
    check_training_data(x, y);
    const int p = static_cast<int>(x.cols());
    TreeGrower grower(x, y, identity_slots(x.rows()), row_orders(x), config, p, nullptr);
    std::vector<DecisionTree> trees;
    trees.push_back(grower.grow());
    return RegressionModel(ModelKind::Tree, static_cast<std::size_t>(p), std::move(trees));
}

RegressionModel fit_forest(const Matrix &x, const Vector &y, const ForestConfig &config) {
    validate(config.tree);
    check_training_data(x, y);
    if (config.n_trees < 1) {
        throw Error(ErrorKind::InvalidConfig, "n_trees must be at least 1");
    }
    const int mtry = resolve_mtry(config, static_cast<std::size_t>(x.cols()));
    const auto n = static_cast<std::uint64_t>(x.rows());

    const auto rows_sorted = row_orders(x);
    std::vector<DecisionTree> trees;
    trees.reserve(static_cast<std::size_t>(config.n_trees));
    for (int t = 0; t < config.n_trees; ++t) {
        // each tree's stream depends only on (seed, tree index)
        SplitMix64 rng(derive_seed(config.seed, {static_cast<std::uint64_t>(t)}));
        std::vector<int> slots;
        if (config.bootstrap) {
            slots.resize(n);
            for (auto &slot : slots) {
                slot = static_cast<int>(rng.uniform_index(n));
            }
        } else {
            slots = identity_slots(x.rows());
        }
        auto sorted = config.bootstrap ? slot_orders(x, slots, rows_sorted) : rows_sorted;
        TreeGrower grower(x, y, std::move(slots), std::move(sorted), config.tree, mtry, &rng);
        trees.push_back(grower.grow());
    }
    return RegressionModel(ModelKind::Forest, static_cast<std::size_t>(x.cols()), std::move(trees));
}

RegressionModel fit_boost(const Matrix &x, const Vector &y, const BoostConfig &config) {
    validate(config.tree);
    check_training_data(x, y);
    if (config.n_rounds < 0) {
        throw Error(ErrorKind::InvalidConfig, "n_rounds must be nonnegative");
    }
    if (!(config.learning_rate > 0.0 && config.learning_rate <= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "learning_rate must lie in (0, 1]");
    }
    const double base = y.mean();
    Vector fitted = Vector::Constant(y.size(), base);
    Vector residual(y.size());
    const int p = static_cast<int>(x.cols());
    const std::vector<int> slots = identity_slots(x.rows());
    const auto rows_sorted = row_orders(x);

    std::vector<DecisionTree> trees;
    trees.reserve(static_cast<std::size_t>(config.n_rounds));
    for (int round = 0; round < config.n_rounds; ++round) {
        residual = y - fitted;
        TreeGrower grower(x, residual, slots, rows_sorted, config.tree, p, nullptr);
        DecisionTree tree = grower.grow();
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            fitted(i) += config.learning_rate * tree.predict_row(x.row(i));
        }
        trees.push_back(std::move(tree));
    }
    return RegressionModel(ModelKind::Boost, static_cast<std::size_t>(p), std::move(trees), base,
                           config.learning_rate);
}

} // namespace eoli
