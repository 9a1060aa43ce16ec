#include "modperf/forest.hpp"

#include <algorithm>
#include <cmath>

#include "modperf/errors.hpp"
#include "modperf/seed.hpp"

namespace modperf {

void ForestParams::validate() const {
    if (n_trees < 1) throw RangeError("n_trees must be >= 1");
    if (max_depth < 1) throw RangeError("max_depth must be >= 1");
    if (min_samples_leaf < 1) throw RangeError("min_samples_leaf must be >= 1");
    if (!(feature_subsample > 0.0 && feature_subsample <= 1.0)) throw RangeError("feature_subsample outside (0,1]");
}

namespace {

// Global row order per continuous feature, shared by every tree of a forest.
struct PresortedColumns {
    std::vector<std::vector<int>> rows_by_value;  // empty for binary features
};

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<char>& binary,
                const PresortedColumns& presorted, const ForestParams& params, Rng& rng)
        : X_(X), y_(y), binary_(binary), presorted_(presorted), params_(params), rng_(rng) {
        const auto d = static_cast<int>(X.cols());
        features_.resize(static_cast<std::size_t>(d));
        for (int f = 0; f < d; ++f) features_[static_cast<std::size_t>(f)] = f;
        per_split_ = std::clamp(static_cast<int>(std::lround(params.feature_subsample * d)), 1, d);
    }

    /// `rows` is the bootstrap sample; each entry becomes one slot.
    RegressionTree build(std::vector<int> rows) {
        rows_ = std::move(rows);
        const auto m = rows_.size();
        slots_.resize(m);
        for (std::size_t i = 0; i < m; ++i) slots_[i] = static_cast<int>(i);
        goes_left_.assign(m, 0);
        scratch_.resize(m);
        slot_y_.resize(m);
        for (std::size_t i = 0; i < m; ++i) slot_y_[i] = y_[rows_[i]];
        // Gathered copy so split scans read one contiguous column per feature.
        slot_x_ = X_(rows_, Eigen::all);

        // Slots grouped by row, then laid out in each feature's global row order.
        const auto n = static_cast<std::size_t>(X_.rows());
        std::vector<int> first(n + 1, 0);
        for (int r : rows_) ++first[static_cast<std::size_t>(r) + 1];
        for (std::size_t r = 0; r < n; ++r) first[r + 1] += first[r];
        std::vector<int> by_row(m);
        {
            std::vector<int> fill(first.begin(), first.end() - 1);
            for (std::size_t i = 0; i < m; ++i) by_row[static_cast<std::size_t>(fill[static_cast<std::size_t>(rows_[i])]++)] = static_cast<int>(i);
        }
        ordered_.assign(static_cast<std::size_t>(X_.cols()), {});
        for (Eigen::Index f = 0; f < X_.cols(); ++f) {
            const auto& order = presorted_.rows_by_value[static_cast<std::size_t>(f)];
            if (order.empty()) continue;
            auto& out = ordered_[static_cast<std::size_t>(f)];
            out.reserve(m);
            for (int r : order)
                for (int k = first[static_cast<std::size_t>(r)]; k < first[static_cast<std::size_t>(r) + 1]; ++k)
                    out.push_back(by_row[static_cast<std::size_t>(k)]);
        }

        nodes_.clear();
        grow(0, m, 0);
        return RegressionTree(std::move(nodes_));
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = -1.0;
    };

    double value(int slot, int f) const { return slot_x_(slot, f); }

    int grow(std::size_t begin, std::size_t end, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        const double n = static_cast<double>(end - begin);
        double sum = 0.0;
        double sumsq = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const double v = slot_y_[static_cast<std::size_t>(slots_[i])];
            sum += v;
            sumsq += v * v;
        }
        nodes_[static_cast<std::size_t>(id)].value = sum / n;

        const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
        const double sse = sumsq - sum * sum / n;
        if (depth >= params_.max_depth || end - begin < 2 * min_leaf || sse <= 1e-12 * std::max(1.0, sumsq)) return id;

        const Split best = find_split(begin, end, sum);
        const double parent_score = sum * sum / n;
        if (best.feature < 0 || best.score <= parent_score + 1e-12 * std::max(1.0, std::abs(parent_score))) return id;

        for (std::size_t i = begin; i < end; ++i) {
            const int s = slots_[i];
            goes_left_[static_cast<std::size_t>(s)] = value(s, best.feature) <= best.threshold ? 1 : 0;
        }
        const std::size_t mid = stable_split(slots_, begin, end);
        for (auto& order : ordered_)
            if (!order.empty()) stable_split(order, begin, end);

        nodes_[static_cast<std::size_t>(id)].feature = best.feature;
        nodes_[static_cast<std::size_t>(id)].threshold = best.threshold;
        const int left = grow(begin, mid, depth + 1);
        const int right = grow(mid, end, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    // Left-going slots first, both halves keeping their order; returns the boundary.
    std::size_t stable_split(std::vector<int>& v, std::size_t begin, std::size_t end) {
        std::size_t out = begin;
        std::size_t spill = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const int s = v[i];
            if (goes_left_[static_cast<std::size_t>(s)]) v[out++] = s;
            else scratch_[spill++] = s;
        }
        std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(spill),
                  v.begin() + static_cast<std::ptrdiff_t>(out));
        return out;
    }

    Split find_split(std::size_t begin, std::size_t end, double total) {
        Split best;
        const std::size_t d = features_.size();
        int examined = 0;
        // Incremental Fisher-Yates: features_[0..i) is this node's random prefix.
        for (std::size_t i = 0; i < d && examined < per_split_; ++i) {
            const auto j = static_cast<std::size_t>(uniform_int(rng_, static_cast<std::int64_t>(i), static_cast<std::int64_t>(d) - 1));
            std::swap(features_[i], features_[j]);
            const int f = features_[i];
            const bool varied = binary_[static_cast<std::size_t>(f)] ? binary_split(f, begin, end, total, best)
                                                                     : sorted_split(f, begin, end, total, best);
            if (varied) ++examined;
        }
        return best;
    }

    bool binary_split(int f, std::size_t begin, std::size_t end, double total, Split& best) {
        // Values are exactly 0 or 1, so the scan can stay branch-free.
        const double* col = slot_x_.col(f).data();
        double s1 = 0.0;
        double ones = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const auto s = static_cast<std::size_t>(slots_[i]);
            s1 += col[s] * slot_y_[s];
            ones += col[s];
        }
        const auto n1 = static_cast<std::size_t>(ones);
        const std::size_t n = end - begin;
        if (n1 == 0 || n1 == n) return false;
        const std::size_t n0 = n - n1;
        const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
        if (n0 >= min_leaf && n1 >= min_leaf) {
            const double s0 = total - s1;
            const double score = s0 * s0 / static_cast<double>(n0) + s1 * s1 / static_cast<double>(n1);
            if (score > best.score) best = {f, 0.5, score};
        }
        return true;
    }

    bool sorted_split(int f, std::size_t begin, std::size_t end, double total, Split& best) {
        const auto& order = ordered_[static_cast<std::size_t>(f)];
        if (value(order[begin], f) == value(order[end - 1], f)) return false;
        const std::size_t n = end - begin;
        const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
        double left = 0.0;
        double current = value(order[begin], f);
        for (std::size_t i = begin; i + 1 < end; ++i) {
            left += slot_y_[static_cast<std::size_t>(order[i])];
            const double next = value(order[i + 1], f);
            const std::size_t nl = i + 1 - begin;
            const bool tie = current == next;
            const double here = current;
            current = next;
            if (tie || nl < min_leaf || n - nl < min_leaf) continue;
            const double right = total - left;
            const double score = left * left / static_cast<double>(nl) + right * right / static_cast<double>(n - nl);
            if (score > best.score) best = {f, 0.5 * (here + next), score};
        }
        return true;
    }

    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    const std::vector<char>& binary_;
    const PresortedColumns& presorted_;
    const ForestParams& params_;
    Rng& rng_;
    std::vector<int> features_;
    int per_split_ = 1;
    std::vector<int> rows_;
    std::vector<int> slots_;
    std::vector<double> slot_y_;
    Eigen::MatrixXd slot_x_;
    std::vector<char> goes_left_;
    std::vector<int> scratch_;
    std::vector<std::vector<int>> ordered_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

int RegressionTree::depth() const {
    std::vector<int> depth(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (nodes_[i].feature >= 0) {
            depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
            depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
        }
    }
    return deepest;
}

nlohmann::json RegressionTree::to_json() const {
    // Nested split records, built bottom-up (children always follow parents).
    std::vector<nlohmann::json> built(nodes_.size());
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        const auto& n = nodes_[i];
        if (n.feature < 0) {
            built[i] = {{"value", n.value}};
        } else {
            built[i] = {{"feature", n.feature},
                        {"threshold", n.threshold},
                        {"value", n.value},
                        {"left", std::move(built[static_cast<std::size_t>(n.left)])},
                        {"right", std::move(built[static_cast<std::size_t>(n.right)])}};
        }
    }
    return nodes_.empty() ? nlohmann::json{} : built[0];
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
    std::vector<TreeNode> nodes;
    auto visit = [&](auto&& self, const nlohmann::json& node) -> int {
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[static_cast<std::size_t>(id)].value = node.at("value").get<double>();
        if (node.contains("feature")) {
            nodes[static_cast<std::size_t>(id)].feature = node.at("feature").get<int>();
            nodes[static_cast<std::size_t>(id)].threshold = node.at("threshold").get<double>();
            const int l = self(self, node.at("left"));
            const int r = self(self, node.at("right"));
            nodes[static_cast<std::size_t>(id)].left = l;
            nodes[static_cast<std::size_t>(id)].right = r;
        }
        return id;
    };
    visit(visit, j);
    return RegressionTree(std::move(nodes));
}

double FittedForest::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict([&](int f) { return row(f); });
    return sum / static_cast<double>(trees_.size());
}

Eigen::VectorXd FittedForest::predict(const Eigen::MatrixXd& X) const {
    if (X.cols() != n_features_) throw InputError("forest expects " + std::to_string(n_features_) + " features");
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double sum = 0.0;
        for (const auto& t : trees_) sum += t.predict([&](int f) { return X(i, f); });
        out[i] = sum / static_cast<double>(trees_.size());
    }
    return out;
}

nlohmann::json FittedForest::to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return {{"n_features", n_features_},
            {"params",
             {{"n_trees", params_.n_trees},
              {"max_depth", params_.max_depth},
              {"min_samples_leaf", params_.min_samples_leaf},
              {"feature_subsample", params_.feature_subsample},
              {"bootstrap_seed", params_.bootstrap_seed}}},
            {"trees", trees}};
}

FittedForest FittedForest::from_json(const nlohmann::json& j) {
    ForestParams p;
    const auto& pj = j.at("params");
    p.n_trees = pj.at("n_trees").get<int>();
    p.max_depth = pj.at("max_depth").get<int>();
    p.min_samples_leaf = pj.at("min_samples_leaf").get<int>();
    p.feature_subsample = pj.at("feature_subsample").get<double>();
    p.bootstrap_seed = pj.at("bootstrap_seed").get<std::uint64_t>();
    std::vector<RegressionTree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(RegressionTree::from_json(t));
    return FittedForest(std::move(trees), j.at("n_features").get<int>(), p);
}

FittedForest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestParams& params) {
    params.validate();
    if (X.rows() < 1 || X.rows() != y.size()) throw InputError("forest needs matching, non-empty X and y");
    if (X.cols() < 1) throw InputError("forest needs at least one feature");
    if (!y.allFinite() || !X.allFinite()) throw InputError("forest inputs must be finite");

    std::vector<char> binary(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index f = 0; f < X.cols(); ++f)
        binary[static_cast<std::size_t>(f)] =
            (X.col(f).array() == 0.0 || X.col(f).array() == 1.0).all() ? 1 : 0;

    const auto n = static_cast<int>(X.rows());
    PresortedColumns presorted;
    presorted.rows_by_value.resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        if (binary[static_cast<std::size_t>(f)]) continue;
        auto& order = presorted.rows_by_value[static_cast<std::size_t>(f)];
        order.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return X(a, f) < X(b, f); });
    }
    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(params.n_trees));
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(derive_seed(params.bootstrap_seed, "tree", static_cast<std::uint64_t>(t)));
        std::vector<int> sample(static_cast<std::size_t>(n));
        for (auto& s : sample) s = static_cast<int>(uniform_int(rng, 0, n - 1));
        TreeBuilder builder(X, y, binary, presorted, params, rng);
        trees.push_back(builder.build(std::move(sample)));
    }
    return FittedForest(std::move(trees), static_cast<int>(X.cols()), params);
}

}  // namespace modperf
