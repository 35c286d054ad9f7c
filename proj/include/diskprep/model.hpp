#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "features.hpp"
#include "tree.hpp"

namespace diskprep {

enum class ModelKind : std::uint8_t { GBDT = 0, RandomForest = 1 };

enum class SamplingPolicy : std::uint8_t {
    WholePhasePositivesLastDayNegatives = 0,
    Undersample1to10 = 1,
};

inline std::string_view to_string(ModelKind k) noexcept { return k == ModelKind::GBDT ? "gbdt" : "rf"; }
inline std::string_view to_string(SamplingPolicy p) noexcept {
    return p == SamplingPolicy::WholePhasePositivesLastDayNegatives ? "lastday" : "undersample";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
    if (s == "gbdt") return ModelKind::GBDT;
    if (s == "rf" || s == "random_forest") return ModelKind::RandomForest;
    return std::nullopt;
}

inline std::optional<SamplingPolicy> parse_sampling_policy(std::string_view s) {
    if (s == "lastday") return SamplingPolicy::WholePhasePositivesLastDayNegatives;
    if (s == "undersample") return SamplingPolicy::Undersample1to10;
    return std::nullopt;
}

struct TrainConfig {
    ModelKind model_kind = ModelKind::GBDT;
    int n_trees = 200;
    int max_depth = 0;  ///< 0 = kind default (GBDT 6, RF 16)
    double learning_rate = 0.1;
    double feature_subsample = 0.1;  ///< RF: fraction of features tried per split
    std::uint64_t seed = 1;
    SamplingPolicy sampling_policy = SamplingPolicy::WholePhasePositivesLastDayNegatives;
    double l2 = 1.0;                ///< GBDT leaf regularization
    double min_child_weight = 1.0;  ///< GBDT: hessian; RF: bootstrap weight

    int effective_depth() const noexcept {
        if (max_depth > 0) return max_depth;
        return model_kind == ModelKind::GBDT ? 6 : 16;
    }

    void validate() const {
        if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
        if (!(learning_rate > 0 && learning_rate <= 1)) throw ConfigError("learning_rate must be in (0,1]");
        if (!(feature_subsample > 0 && feature_subsample <= 1)) throw ConfigError("feature_subsample must be in (0,1]");
        if (max_depth < 0) throw ConfigError("max_depth must be >= 0");
    }

    std::uint64_t fingerprint() const {
        Fnv1a h;
        h.update("train-config/1")
            .update_u64(static_cast<std::uint64_t>(model_kind))
            .update_u64(static_cast<std::uint64_t>(n_trees))
            .update_u64(static_cast<std::uint64_t>(effective_depth()))
            .update(learning_rate)
            .update(feature_subsample)
            .update_u64(seed)
            .update_u64(static_cast<std::uint64_t>(sampling_policy))
            .update(l2)
            .update(min_child_weight);
        return h.digest();
    }
};

struct TrainedModel {
    ModelKind kind = ModelKind::GBDT;
    double base_score = 0;  ///< GBDT initial log-odds
    std::vector<DecisionTree> trees;
    std::vector<std::string> column_names;
    std::uint64_t schema_hash = 0;
    std::uint64_t config_fingerprint = 0;
    std::vector<double> training_loss;  ///< GBDT mean log-loss after each stage (not serialized)

    double score(std::span<const double> row) const {
        if (kind == ModelKind::GBDT) {
            double f = base_score;
            for (const auto& t : trees) f += t.predict(row);
            return 1.0 / (1.0 + std::exp(-f));
        }
        std::size_t votes = 0;
        for (const auto& t : trees) votes += t.predict(row) > 0.5 ? 1 : 0;
        return static_cast<double>(votes) / static_cast<double>(trees.size());
    }

    /// Hash of everything that determines predictions.
    std::uint64_t fingerprint() const {
        Fnv1a h;
        h.update_u64(static_cast<std::uint64_t>(kind)).update(base_score).update_u64(schema_hash);
        for (const auto& t : trees) {
            h.update_u64(t.nodes.size());
            for (const auto& n : t.nodes) {
                h.update_u64(static_cast<std::uint64_t>(static_cast<std::uint32_t>(n.feature)))
                    .update(n.threshold)
                    .update_u64(static_cast<std::uint64_t>(static_cast<std::uint32_t>(n.left)))
                    .update_u64(static_cast<std::uint64_t>(static_cast<std::uint32_t>(n.right)))
                    .update(n.value);
            }
        }
        return h.digest();
    }
};

namespace detail {

/// Row permutation sorting by (serial, day); stable for duplicate keys.
inline std::vector<std::size_t> canonical_order(const FeatureMatrix& m) {
    std::vector<std::size_t> order(m.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (m.serials[a] != m.serials[b]) return m.serials[a] < m.serials[b];
        return m.days[a] < m.days[b];
    });
    return order;
}

inline double log_loss(std::span<const double> margin, std::span<const double> y) {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double f = margin[i];
        // log(1 + exp(-f)) for y=1, log(1 + exp(f)) for y=0, computed stably.
        const double z = y[i] > 0.5 ? -f : f;
        s += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    return s / static_cast<double>(y.size());
}

} // namespace detail

/// Trains on a labeled matrix (labels Positive / Negative). Rows are put in
/// canonical (serial, day) order first, so the result does not depend on the
/// input row order.
inline TrainedModel train(const FeatureMatrix& data, const TrainConfig& config) {
    config.validate();
    if (data.labels.size() != data.rows()) throw DataError("train: matrix is not labeled");
    const std::size_t n = data.rows(), F = data.cols();
    const auto order = detail::canonical_order(data);
    std::vector<double> X(n * F), y(n);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = order[i];
        std::copy_n(data.values.begin() + static_cast<std::ptrdiff_t>(src * F), F,
                    X.begin() + static_cast<std::ptrdiff_t>(i * F));
        y[i] = data.labels[src] == Label::Positive ? 1.0 : 0.0;
        positives += data.labels[src] == Label::Positive;
    }
    if (positives == 0 || positives == n) throw DataError("train: need at least one example of each class");

    TrainedModel model;
    model.kind = config.model_kind;
    model.column_names = data.column_names;
    model.schema_hash = data.schema();
    model.config_fingerprint = config.fingerprint();

    const PresortedColumns cols(X, n, F);
    std::vector<SplitStats> stats(n);
    GrowOptions grow;
    grow.max_depth = config.effective_depth();

    if (config.model_kind == ModelKind::GBDT) {
        const double p0 = static_cast<double>(positives) / static_cast<double>(n);
        model.base_score = std::log(p0 / (1 - p0));
        std::vector<double> margin(n, model.base_score);
        const std::vector<std::uint8_t> active(n, 1);
        NewtonCriterion crit;
        crit.lambda = config.l2;
        crit.min_child_weight = config.min_child_weight;
        crit.learning_rate = config.learning_rate;
        for (int t = 0; t < config.n_trees; ++t) {
            for (std::size_t i = 0; i < n; ++i) {
                const double p = 1.0 / (1.0 + std::exp(-margin[i]));
                stats[i] = {p - y[i], std::max(p * (1 - p), 1e-16)};
            }
            grow.seed = detail::splitmix64(config.seed + static_cast<std::uint64_t>(t));
            DecisionTree tree = grow_tree(cols, stats, active, crit, grow);
            for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict(std::span<const double>(&X[i * F], F));
            model.trees.push_back(std::move(tree));
            model.training_loss.push_back(detail::log_loss(margin, y));
        }
        return model;
    }

    GiniCriterion crit;
    crit.min_leaf_weight = config.min_child_weight;
    grow.features_per_node =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(config.feature_subsample * static_cast<double>(F))));
    std::vector<std::uint8_t> active(n);
    for (int t = 0; t < config.n_trees; ++t) {
        std::mt19937_64 rng(detail::splitmix64(config.seed ^ (0x5bd1e995ULL * static_cast<std::uint64_t>(t + 1))));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<double> weight(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) weight[pick(rng)] += 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            active[i] = weight[i] > 0;
            stats[i] = {weight[i] * y[i], weight[i]};
        }
        grow.seed = rng();
        model.trees.push_back(grow_tree(cols, stats, active, crit, grow));
    }
    return model;
}

/// Scores in [0,1]: GBDT sigmoid of the summed leaves, RF fraction of trees
/// voting positive. Throws when the matrix schema differs from training.
inline std::vector<double> predict_scores(const TrainedModel& model, const FeatureMatrix& m) {
    if (m.rows() == 0) return {};
    if (m.schema() != model.schema_hash) throw DataError("feature schema does not match the model");
    std::vector<double> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = model.score(m.row(i));
    return out;
}

// ---------------------------------------------------------------------------
// Training-set sampling

struct RowKey {
    std::string serial;
    Day day = 0;
    Label label = Label::Negative;
    bool operator==(const RowKey&) const = default;
};

/// Picks training rows from labeled candidates (already in (serial, day)
/// order). WholePhasePositivesLastDayNegatives keeps every positive plus the
/// last negative day of each healthy disk; Undersample1to10 keeps every
/// positive plus ten uniformly drawn negatives per positive.
inline std::vector<std::size_t> select_training_rows(const std::vector<RowKey>& candidates, const LabelPlan& plan,
                                                     SamplingPolicy policy, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].label == Label::Positive) pos.push_back(i);
        else if (candidates[i].label == Label::Negative) neg.push_back(i);
    }
    if (pos.empty()) throw DataError("training set has no positive samples");

    std::vector<std::size_t> chosen = pos;
    if (policy == SamplingPolicy::WholePhasePositivesLastDayNegatives) {
        std::map<std::string, std::size_t> last;
        for (std::size_t i : neg) {
            const auto& key = candidates[i];
            auto p = plan.disks.find(key.serial);
            if (p == plan.disks.end() || p->second.failed) continue;
            auto [it, inserted] = last.emplace(key.serial, i);
            if (!inserted && candidates[it->second].day < key.day) it->second = i;
        }
        for (const auto& [_, i] : last) chosen.push_back(i);
    } else {
        const std::size_t want = std::min(neg.size(), pos.size() * 10);
        std::mt19937_64 rng(seed);
        std::vector<std::size_t> picked;
        picked.reserve(want);
        std::sample(neg.begin(), neg.end(), std::back_inserter(picked), want, rng);
        chosen.insert(chosen.end(), picked.begin(), picked.end());
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

/// Applies a sampling policy to an already featurized, labeled matrix.
inline FeatureMatrix assemble_training_set(const FeatureMatrix& matrix, const LabelPlan& plan, SamplingPolicy policy,
                                           std::uint64_t seed = 1) {
    if (matrix.labels.size() != matrix.rows()) throw DataError("assemble_training_set: matrix is not labeled");
    const auto order = detail::canonical_order(matrix);
    std::vector<RowKey> keys;
    keys.reserve(order.size());
    for (std::size_t i : order) keys.push_back({matrix.serials[i], matrix.days[i], matrix.labels[i]});
    FeatureMatrix out;
    out.column_names = matrix.column_names;
    for (std::size_t k : select_training_rows(keys, plan, policy, seed)) {
        const std::size_t i = order[k];
        out.append(matrix.serials[i], matrix.days[i], matrix.row(i));
        out.labels.push_back(matrix.labels[i]);
    }
    return out;
}

/// Streaming variant: enumerates labeled training-phase samples of `ds` from
/// the plan, applies the policy, and featurizes only the chosen rows.
inline FeatureMatrix build_training_set(const Dataset& ds, const std::string& model,
                                        const std::vector<std::string>& basic_attrs, const LabelPlan& plan,
                                        SamplingPolicy policy, std::uint64_t seed, Day train_start_day = 0) {
    std::vector<RowKey> keys;
    for (const auto& [serial, d] : ds.disks) {
        if (d.model != model) continue;
        for (Day day : d.days) {
            if (day < train_start_day) continue;
            const Label l = plan.label(serial, day);
            if (l == Label::Positive || l == Label::Negative) keys.push_back({serial, day, l});
        }
    }
    const auto chosen = select_training_rows(keys, plan, policy, seed);

    FeatureMatrix out;
    out.column_names = feature_names(basic_attrs);
    std::vector<std::size_t> idx;
    for (const auto& a : basic_attrs) idx.push_back(ds.attribute_index(model, a));
    std::vector<double> buf(out.cols());
    std::size_t k = 0;
    while (k < chosen.size()) {
        const std::string& serial = keys[chosen[k]].serial;
        const DiskSeries& d = ds.disks.at(serial);
        FeatureBuilder b(d, idx);
        for (; k < chosen.size() && keys[chosen[k]].serial == serial; ++k) {
            const auto& key = keys[chosen[k]];
            b.row(*d.index_of(key.day), buf);
            out.append(serial, key.day, buf);
            out.labels.push_back(key.label);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: little-endian binary, versioned.

inline constexpr char kModelMagic[8] = {'D', 'P', 'M', 'O', 'D', 'E', 'L', '\0'};
inline constexpr std::uint32_t kModelVersion = 1;

inline void save_model(const TrainedModel& m, const std::string& path) {
    auto out = csv::open_output(path);
    out.write(kModelMagic, sizeof kModelMagic);
    detail::put(out, kModelVersion);
    detail::put(out, static_cast<std::uint8_t>(m.kind));
    detail::put(out, m.schema_hash);
    detail::put(out, m.config_fingerprint);
    detail::put(out, m.base_score);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.column_names.size()));
    for (const auto& c : m.column_names) detail::put_string(out, c);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.trees.size()));
    for (const auto& t : m.trees) {
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.nodes.size()));
        for (const auto& n : t.nodes) {
            detail::put(out, n.feature);
            detail::put(out, n.threshold);
            detail::put(out, n.left);
            detail::put(out, n.right);
            detail::put(out, n.value);
        }
    }
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    char magic[8];
    if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kModelMagic))
        throw DataError(path + " is not a model file");
    if (detail::get<std::uint32_t>(in) != kModelVersion) throw DataError("unsupported model version");
    TrainedModel m;
    m.kind = static_cast<ModelKind>(detail::get<std::uint8_t>(in));
    m.schema_hash = detail::get<std::uint64_t>(in);
    m.config_fingerprint = detail::get<std::uint64_t>(in);
    m.base_score = detail::get<double>(in);
    const auto ncols = detail::get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < ncols; ++i) m.column_names.push_back(detail::get_string(in));
    if (schema_hash(m.column_names) != m.schema_hash) throw DataError("model column names do not match schema hash");
    const auto ntrees = detail::get<std::uint32_t>(in);
    m.trees.resize(ntrees);
    for (auto& t : m.trees) {
        t.nodes.resize(detail::get<std::uint32_t>(in));
        for (auto& n : t.nodes) {
            n.feature = detail::get<std::int32_t>(in);
            n.threshold = detail::get<double>(in);
            n.left = detail::get<std::int32_t>(in);
            n.right = detail::get<std::int32_t>(in);
            n.value = detail::get<double>(in);
        }
    }
    return m;
}

} // namespace diskprep
