#pragma once

// Baselines, the reference kNN classifier, and the paired repeated-seed
// experiment that compares PVQ sampling with uniform random sampling.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvq/core.hpp"
#include "pvq/ingest.hpp"
#include "pvq/metrics.hpp"
#include "pvq/parallel.hpp"
#include "pvq/random.hpp"
#include "pvq/sampler.hpp"

namespace pvq::eval {

/// Uniform sample without replacement; rows reported in ascending order.
inline SampleResult random_sample(const DataMatrix& data, std::size_t size, const RandomSource& rng) {
    if (size < 1 || size > data.rows()) throw std::invalid_argument("random_sample: need 1 <= size <= n");
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto gen = rng.generator();
    // Partial Fisher-Yates: the first `size` slots are the sample.
    for (std::size_t i = 0; i < size; ++i) {
        const auto j = i + static_cast<std::size_t>(gen.below(order.size() - i));
        std::swap(order[i], order[j]);
    }
    order.resize(size);
    std::sort(order.begin(), order.end());

    SampleResult result;
    result.sampler = "random";
    result.input_rows = data.rows();
    result.seed = rng.seed();
    result.target = size;
    result.estimated_size = static_cast<double>(size);
    result.size_bound = size;
    result.rows.reserve(size);
    for (std::size_t p : order) result.rows.push_back(data.row_id(p));
    return result;
}

/// Positions of the given row ids inside `data`.
inline std::vector<std::size_t> positions_of(const DataMatrix& data, std::span<const RowId> ids) {
    const auto all = data.row_ids();
    bool identity = true;
    for (std::size_t i = 0; i < all.size() && identity; ++i) identity = all[i] == i;
    if (identity) {
        std::vector<std::size_t> out;
        out.reserve(ids.size());
        for (RowId id : ids) {
            if (id >= all.size()) throw std::out_of_range("row id " + std::to_string(id) + " not in data");
            out.push_back(static_cast<std::size_t>(id));
        }
        return out;
    }
    std::map<RowId, std::size_t> where;
    for (std::size_t i = 0; i < data.rows(); ++i) where.emplace(data.row_id(i), i);
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (RowId id : ids) {
        const auto it = where.find(id);
        if (it == where.end()) throw std::out_of_range("row id " + std::to_string(id) + " not in data");
        out.push_back(it->second);
    }
    return out;
}

/// Prediction interface; kNN is the built-in implementation.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual LabelVector predict(const DataMatrix& queries) const = 0;
};

/// Brute-force Euclidean k-nearest-neighbour majority vote. Expects features
/// already in the standardized space shared with the queries.
/// Distance ties go to the lower training row; vote ties to the
/// lexicographically smallest label.
class KnnClassifier final : public Classifier {
public:
    KnnClassifier(DataMatrix train, LabelVector labels, std::size_t k)
        : train_(std::move(train)), labels_(std::move(labels)), k_(k) {
        if (labels_.size() != train_.rows()) throw std::invalid_argument("knn_fit: label count mismatch");
        if (k_ < 1 || k_ > train_.rows()) throw std::invalid_argument("knn_fit: need 1 <= k <= training rows");
    }

    std::size_t k() const noexcept { return k_; }

    std::string predict_one(std::span<const double> query) const {
        if (query.size() != train_.cols()) throw std::invalid_argument("knn_predict: dimension mismatch");
        std::vector<std::pair<double, std::size_t>> dist(train_.rows());
        for (std::size_t i = 0; i < train_.rows(); ++i) {
            const auto r = train_.row(i);
            double acc = 0.0;
            for (std::size_t j = 0; j < r.size(); ++j) {
                const double diff = r[j] - query[j];
                acc += diff * diff;
            }
            dist[i] = {acc, i};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());

        std::map<std::string, std::size_t> votes;
        for (std::size_t i = 0; i < k_; ++i) ++votes[labels_[dist[i].second]];
        // std::map iterates in lexicographic order, so the first maximum wins ties.
        auto best = votes.begin();
        for (auto it = votes.begin(); it != votes.end(); ++it)
            if (it->second > best->second) best = it;
        return best->first;
    }

    LabelVector predict(const DataMatrix& queries) const override {
        LabelVector out;
        out.reserve(queries.rows());
        for (std::size_t i = 0; i < queries.rows(); ++i) out.push_back(predict_one(queries.row(i)));
        return out;
    }

private:
    DataMatrix train_;
    LabelVector labels_;
    std::size_t k_;
};

inline KnnClassifier knn_fit(DataMatrix train, LabelVector labels, std::size_t k) {
    return KnnClassifier(std::move(train), std::move(labels), k);
}

inline LabelVector knn_predict(const KnnClassifier& model, const DataMatrix& queries) {
    return model.predict(queries);
}

/// Number of distinct labels.
inline std::size_t class_coverage(std::span<const std::string> labels) {
    if (labels.empty()) throw std::invalid_argument("class_coverage: labels are absent");
    return std::set<std::string>(labels.begin(), labels.end()).size();
}

inline std::size_t class_coverage(const LabelVector& labels) {
    return class_coverage(std::span<const std::string>(labels));
}

inline std::size_t class_coverage(const std::optional<LabelVector>& labels) {
    if (!labels) throw std::invalid_argument("class_coverage: labels are absent");
    return class_coverage(std::span<const std::string>(*labels));
}

enum class SamplerKind { pvq, random };

inline std::string to_string(SamplerKind s) { return s == SamplerKind::pvq ? "pvq" : "random"; }

struct ExperimentConfig {
    SamplerKind sampler = SamplerKind::pvq;
    std::size_t sample_size = 0;
    std::size_t repetitions = 50;
    std::uint64_t seed_base = 0;
    std::size_t k = 5;
    std::optional<std::size_t> test_size; // default: 3.2% of the test window
    std::optional<ingest::LabelMap> label_map;
    som::TrainSchedule schedule;
    std::size_t workers = 1;

    std::size_t resolved_test_size(std::size_t test_rows) const {
        if (test_size) return *test_size;
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.032 * static_cast<double>(test_rows))));
    }
};

struct RunRecord {
    std::string sampler;
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    std::size_t sample_rows = 0;
    std::size_t classes_covered = 0;
    metrics::MetricSet scores;
    double sampling_seconds = 0.0;
    double training_seconds = 0.0;
    double scoring_seconds = 0.0;
};

/// Stream ids under each repetition's source. The test draw depends only on
/// (seed_base, repetition), which pairs the samplers.
inline constexpr std::uint64_t kTestStream = 0x54455354ULL;   // "TEST"
inline constexpr std::uint64_t kSampleStream = 0x53414D50ULL; // "SAMP"

inline RandomSource repetition_source(std::uint64_t seed_base, std::size_t repetition) {
    return RandomSource(seed_base).derive(repetition);
}

/// Prepared windows shared by all repetitions: features standardized with a
/// scaler fitted on the training window, labels optionally aggregated, and
/// the label universe fixed as the union of train and test labels.
struct PreparedWindows {
    DataMatrix train;
    LabelVector train_labels;
    DataMatrix test;
    LabelVector test_labels;
    std::vector<std::string> universe;
};

inline PreparedWindows prepare(const ExperimentConfig& config, const Dataset& train, const Dataset& test) {
    if (!train.labels || !test.labels) throw std::invalid_argument("run_experiment: both windows need labels");
    if (train.features.cols() != test.features.cols())
        throw std::invalid_argument("run_experiment: train and test feature counts differ");
    const auto scaler = ingest::fit_scaler(train.features);
    LabelVector train_labels = *train.labels;
    LabelVector test_labels = *test.labels;
    if (config.label_map) {
        train_labels = ingest::aggregate_labels(train_labels, *config.label_map);
        test_labels = ingest::aggregate_labels(test_labels, *config.label_map);
    }
    auto universe = metrics::label_universe({train_labels, test_labels});
    return {scaler.apply(train.features), std::move(train_labels), scaler.apply(test.features),
            std::move(test_labels), std::move(universe)};
}

/// Test-window positions scored in a repetition; independent of the sampler.
inline std::vector<std::size_t> test_draw(const ExperimentConfig& config, const PreparedWindows& w,
                                          std::size_t repetition) {
    const std::size_t size = std::min(config.resolved_test_size(w.test.rows()), w.test.rows());
    const auto draw = random_sample(w.test, size, repetition_source(config.seed_base, repetition).derive(kTestStream));
    return positions_of(w.test, draw.rows);
}

inline RunRecord run_repetition(const ExperimentConfig& config, const PreparedWindows& w, std::size_t repetition) {
    using clock = std::chrono::steady_clock;
    auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };

    const RandomSource rep = repetition_source(config.seed_base, repetition);
    RunRecord rec;
    rec.sampler = to_string(config.sampler);
    rec.repetition = repetition;
    rec.seed = rep.seed();

    const auto t0 = clock::now();
    const SampleResult sample =
        config.sampler == SamplerKind::pvq
            ? pvq_to_target(w.train, config.sample_size, config.schedule, rep.derive(kSampleStream), 1)
            : random_sample(w.train, config.sample_size, rep.derive(kSampleStream));
    const auto t1 = clock::now();

    const auto positions = positions_of(w.train, sample.rows);
    LabelVector sample_labels;
    sample_labels.reserve(positions.size());
    for (std::size_t p : positions) sample_labels.push_back(w.train_labels[p]);
    rec.sample_rows = positions.size();
    rec.classes_covered = class_coverage(std::span<const std::string>(sample_labels));
    const std::size_t k = std::min(config.k, positions.size());
    const KnnClassifier model(w.train.select(positions), std::move(sample_labels), k);
    const auto t2 = clock::now();

    const auto test_positions = test_draw(config, w, repetition);
    LabelVector truth;
    truth.reserve(test_positions.size());
    for (std::size_t p : test_positions) truth.push_back(w.test_labels[p]);
    const LabelVector predicted = model.predict(w.test.select(test_positions));
    rec.scores = metrics::evaluate(metrics::confusion(truth, predicted, w.universe));
    const auto t3 = clock::now();

    rec.sampling_seconds = seconds(t0, t1);
    rec.training_seconds = seconds(t1, t2);
    rec.scoring_seconds = seconds(t2, t3);
    return rec;
}

/// All repetitions for one sampler, in repetition order.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const Dataset& train,
                                             const Dataset& test) {
    if (config.repetitions < 1) throw std::invalid_argument("run_experiment: repetitions must be >= 1");
    if (config.sample_size < 1 || config.sample_size > train.rows())
        throw std::invalid_argument("run_experiment: need 1 <= sample_size <= training rows");
    const PreparedWindows w = prepare(config, train, test);
    std::vector<RunRecord> records(config.repetitions);
    parallel_for(config.repetitions, config.workers,
                 [&](std::size_t r) { records[r] = run_repetition(config, w, r); });
    return records;
}

struct Stats {
    double median = 0.0;
    double mean = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty input");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline Stats describe(const std::vector<double>& v) {
    Stats s;
    s.median = quantile(v, 0.5);
    s.q1 = quantile(v, 0.25);
    s.q3 = quantile(v, 0.75);
    s.iqr = s.q3 - s.q1;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    return s;
}

inline const std::vector<std::string>& summary_metrics() {
    static const std::vector<std::string> names{"accuracy", "macro_recall", "weighted_precision",
                                                "balanced_accuracy", "mcc", "classes_covered"};
    return names;
}

inline double metric_value(const RunRecord& r, const std::string& name) {
    if (name == "accuracy") return r.scores.accuracy;
    if (name == "macro_recall") return r.scores.macro_recall;
    if (name == "weighted_precision") return r.scores.weighted_precision;
    if (name == "balanced_accuracy") return r.scores.balanced_accuracy;
    if (name == "mcc") return r.scores.mcc;
    if (name == "classes_covered") return static_cast<double>(r.classes_covered);
    throw std::invalid_argument("unknown metric " + name);
}

/// sampler -> metric -> statistics.
using Summary = std::map<std::string, std::map<std::string, Stats>>;

inline Summary summarize(const std::vector<RunRecord>& records) {
    std::map<std::string, std::vector<const RunRecord*>> by_sampler;
    for (const auto& r : records) by_sampler[r.sampler].push_back(&r);
    Summary out;
    for (const auto& [sampler, runs] : by_sampler) {
        for (const auto& name : summary_metrics()) {
            std::vector<double> v;
            for (const auto* r : runs) v.push_back(metric_value(*r, name));
            out[sampler][name] = describe(v);
        }
    }
    return out;
}

/// Fraction of paired repetitions where pvq's value >= random's.
inline double paired_win_rate(const std::vector<RunRecord>& pvq_runs, const std::vector<RunRecord>& random_runs,
                              const std::string& metric) {
    const std::size_t n = std::min(pvq_runs.size(), random_runs.size());
    if (n == 0) throw std::invalid_argument("paired_win_rate: no runs");
    std::size_t wins = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (metric_value(pvq_runs[i], metric) >= metric_value(random_runs[i], metric)) ++wins;
    return static_cast<double>(wins) / static_cast<double>(n);
}

} // namespace pvq::eval
