#pragma once

// Multi-class evaluation over an explicit label universe.
// Confusion matrix layout: rows = predicted class, columns = actual class.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvq/core.hpp"

namespace pvq::metrics {

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::vector<std::string> universe)
        : universe_(std::move(universe)), counts_(universe_.size() * universe_.size(), 0) {
        for (std::size_t i = 0; i < universe_.size(); ++i) {
            if (!index_.emplace(universe_[i], i).second)
                throw std::invalid_argument("ConfusionMatrix: duplicate label in universe: " + universe_[i]);
        }
    }

    std::size_t classes() const noexcept { return universe_.size(); }
    const std::vector<std::string>& universe() const noexcept { return universe_; }

    std::size_t index_of(const std::string& label) const {
        const auto it = index_.find(label);
        if (it == index_.end())
            throw std::invalid_argument("label '" + label + "' is not in the declared label universe");
        return it->second;
    }

    std::uint64_t at(std::size_t predicted, std::size_t actual) const noexcept {
        return counts_[predicted * classes() + actual];
    }
    void add(std::size_t predicted, std::size_t actual, std::uint64_t n = 1) noexcept {
        counts_[predicted * classes() + actual] += n;
    }

    std::uint64_t predicted_total(std::size_t c) const noexcept {
        std::uint64_t s = 0;
        for (std::size_t a = 0; a < classes(); ++a) s += at(c, a);
        return s;
    }
    std::uint64_t actual_total(std::size_t c) const noexcept {
        std::uint64_t s = 0;
        for (std::size_t p = 0; p < classes(); ++p) s += at(p, c);
        return s;
    }
    std::uint64_t total() const noexcept {
        std::uint64_t s = 0;
        for (auto v : counts_) s += v;
        return s;
    }
    std::uint64_t trace() const noexcept {
        std::uint64_t s = 0;
        for (std::size_t c = 0; c < classes(); ++c) s += at(c, c);
        return s;
    }

    /// Builds a matrix from nested rows (predicted x actual) with labels "0".."k-1".
    static ConfusionMatrix from_counts(const std::vector<std::vector<std::uint64_t>>& rows) {
        std::vector<std::string> universe;
        for (std::size_t i = 0; i < rows.size(); ++i) universe.push_back(std::to_string(i));
        ConfusionMatrix m(std::move(universe));
        for (std::size_t p = 0; p < rows.size(); ++p) {
            if (rows[p].size() != rows.size()) throw std::invalid_argument("ConfusionMatrix: not square");
            for (std::size_t a = 0; a < rows.size(); ++a) m.add(p, a, rows[p][a]);
        }
        return m;
    }

private:
    std::vector<std::string> universe_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::uint64_t> counts_;
};

/// Sorted union of every label seen in any of the given vectors.
inline std::vector<std::string> label_universe(std::initializer_list<std::span<const std::string>> parts) {
    std::set<std::string> all;
    for (auto part : parts) all.insert(part.begin(), part.end());
    return {all.begin(), all.end()};
}

inline ConfusionMatrix confusion(std::span<const std::string> truth, std::span<const std::string> pred,
                                 std::vector<std::string> universe) {
    if (truth.size() != pred.size())
        throw std::invalid_argument("confusion: truth and prediction lengths differ");
    ConfusionMatrix m(std::move(universe));
    for (std::size_t i = 0; i < truth.size(); ++i) m.add(m.index_of(pred[i]), m.index_of(truth[i]));
    return m;
}

namespace detail {
inline void require_nonempty(const ConfusionMatrix& m, const char* what) {
    if (m.total() == 0) throw std::invalid_argument(std::string(what) + ": empty confusion matrix");
}
} // namespace detail

/// trace / total.
inline double accuracy(const ConfusionMatrix& m) {
    detail::require_nonempty(m, "accuracy");
    return static_cast<double>(m.trace()) / static_cast<double>(m.total());
}

/// Recall of each class with at least one true instance (others are skipped).
inline std::vector<double> populated_recalls(const ConfusionMatrix& m) {
    std::vector<double> out;
    for (std::size_t c = 0; c < m.classes(); ++c) {
        const auto t = m.actual_total(c);
        if (t > 0) out.push_back(static_cast<double>(m.at(c, c)) / static_cast<double>(t));
    }
    return out;
}

/// Unweighted mean recall over classes present in the truth.
inline double macro_recall(const ConfusionMatrix& m) {
    const auto recalls = populated_recalls(m);
    if (recalls.empty()) throw std::invalid_argument("macro_recall: no class has a true instance");
    double s = 0.0;
    for (double r : recalls) s += r;
    return s / static_cast<double>(recalls.size());
}

/// Truth-frequency weighted precision; never-predicted classes count as 0.
inline double weighted_precision(const ConfusionMatrix& m) {
    detail::require_nonempty(m, "weighted_precision");
    const double n = static_cast<double>(m.total());
    double s = 0.0;
    for (std::size_t c = 0; c < m.classes(); ++c) {
        const auto t = m.actual_total(c);
        const auto p = m.predicted_total(c);
        if (t == 0 || p == 0) continue;
        s += (static_cast<double>(t) / n) * (static_cast<double>(m.at(c, c)) / static_cast<double>(p));
    }
    return s;
}

/// Defined as macro recall (mean per-class recall over populated classes).
inline double balanced_accuracy(const ConfusionMatrix& m) { return macro_recall(m); }

/// Gorodkin's R_K. Returns 0 when either denominator factor vanishes.
inline double mcc_multiclass(const ConfusionMatrix& m) {
    detail::require_nonempty(m, "mcc_multiclass");
    const double s = static_cast<double>(m.total());
    const double c = static_cast<double>(m.trace());
    double pt = 0.0, pp = 0.0, tt = 0.0;
    for (std::size_t k = 0; k < m.classes(); ++k) {
        const double p = static_cast<double>(m.predicted_total(k));
        const double t = static_cast<double>(m.actual_total(k));
        pt += p * t;
        pp += p * p;
        tt += t * t;
    }
    const double a = s * s - pp;
    const double b = s * s - tt;
    if (a <= 0.0 || b <= 0.0) return 0.0;
    return std::clamp((c * s - pt) / std::sqrt(a * b), -1.0, 1.0);
}

struct MetricSet {
    double accuracy = 0.0;
    double macro_recall = 0.0;
    double weighted_precision = 0.0;
    double balanced_accuracy = 0.0;
    double mcc = 0.0;
};

inline MetricSet evaluate(const ConfusionMatrix& m) {
    return {accuracy(m), macro_recall(m), weighted_precision(m), balanced_accuracy(m), mcc_multiclass(m)};
}

} // namespace pvq::metrics
