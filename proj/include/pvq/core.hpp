#pragma once

// Shared domain types: the observation matrix, labels, and the balanced
// random shard partition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pvq/random.hpp"

namespace pvq {

using RowId = std::uint64_t;

/// Dense row-major n x d matrix of finite reals. Each row carries a stable
/// identifier (its position in the source by default) that survives slicing.
class DataMatrix {
public:
    DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
               std::vector<RowId> row_ids = {})
        : rows_(rows), cols_(cols), values_(std::move(values)), row_ids_(std::move(row_ids)) {
        if (rows_ == 0 || cols_ == 0)
            throw std::invalid_argument("DataMatrix: need at least one row and one column");
        if (values_.size() != rows_ * cols_)
            throw std::invalid_argument("DataMatrix: value count does not match rows * cols");
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("DataMatrix: non-finite value");
        if (row_ids_.empty()) {
            row_ids_.resize(rows_);
            std::iota(row_ids_.begin(), row_ids_.end(), RowId{0});
        } else {
            if (row_ids_.size() != rows_)
                throw std::invalid_argument("DataMatrix: row id count does not match rows");
            std::vector<RowId> sorted = row_ids_;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw std::invalid_argument("DataMatrix: duplicate row id");
        }
    }

    /// Builds a matrix from nested rows; convenient for fixtures.
    static DataMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) throw std::invalid_argument("DataMatrix: need at least one row");
        const std::size_t d = rows.front().size();
        std::vector<double> flat;
        flat.reserve(rows.size() * d);
        for (const auto& r : rows) {
            if (r.size() != d) throw std::invalid_argument("DataMatrix: ragged rows");
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return DataMatrix(rows.size(), d, std::move(flat));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * cols_, cols_};
    }
    double at(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<const RowId> row_ids() const noexcept { return row_ids_; }
    RowId row_id(std::size_t i) const noexcept { return row_ids_[i]; }

    /// Rows at the given positions, in the given order, ids preserved.
    DataMatrix select(std::span<const std::size_t> positions) const {
        std::vector<double> values;
        std::vector<RowId> ids;
        values.reserve(positions.size() * cols_);
        ids.reserve(positions.size());
        for (std::size_t p : positions) {
            if (p >= rows_) throw std::out_of_range("DataMatrix::select: position out of range");
            const auto r = row(p);
            values.insert(values.end(), r.begin(), r.end());
            ids.push_back(row_ids_[p]);
        }
        return DataMatrix(Trusted{}, positions.size(), cols_, std::move(values), std::move(ids));
    }

    /// Contiguous rows [begin, end).
    DataMatrix slice(std::size_t begin, std::size_t end) const {
        if (begin >= end || end > rows_) throw std::out_of_range("DataMatrix::slice: bad range");
        std::vector<double> values(values_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
                                   values_.begin() + static_cast<std::ptrdiff_t>(end * cols_));
        std::vector<RowId> ids(row_ids_.begin() + static_cast<std::ptrdiff_t>(begin),
                               row_ids_.begin() + static_cast<std::ptrdiff_t>(end));
        return DataMatrix(Trusted{}, end - begin, cols_, std::move(values), std::move(ids));
    }

    friend bool operator==(const DataMatrix&, const DataMatrix&) = default;

private:
    struct Trusted {};
    DataMatrix(Trusted, std::size_t rows, std::size_t cols, std::vector<double> values,
               std::vector<RowId> ids)
        : rows_(rows), cols_(cols), values_(std::move(values)), row_ids_(std::move(ids)) {
        if (rows_ == 0) throw std::invalid_argument("DataMatrix: need at least one row");
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
    std::vector<RowId> row_ids_;
};

/// One categorical label per row. Labels never feed the sampler.
using LabelVector = std::vector<std::string>;

/// Features plus optional labels travelling beside them.
struct Dataset {
    DataMatrix features;
    std::optional<LabelVector> labels;
    std::vector<std::string> feature_names;

    explicit Dataset(DataMatrix f, std::optional<LabelVector> l = std::nullopt,
                     std::vector<std::string> names = {})
        : features(std::move(f)), labels(std::move(l)), feature_names(std::move(names)) {
        if (labels && labels->size() != features.rows())
            throw std::invalid_argument("Dataset: label count does not match row count");
        if (!feature_names.empty() && feature_names.size() != features.cols())
            throw std::invalid_argument("Dataset: feature name count does not match columns");
    }

    std::size_t rows() const noexcept { return features.rows(); }

    /// Rows at the given positions (features and labels together).
    Dataset select(std::span<const std::size_t> positions) const {
        std::optional<LabelVector> picked;
        if (labels) {
            picked.emplace();
            picked->reserve(positions.size());
            for (std::size_t p : positions) picked->push_back((*labels)[p]);
        }
        return Dataset(features.select(positions), std::move(picked), feature_names);
    }
};

/// Assignment of every row to one of `shard_count` shards.
struct Partition {
    std::vector<std::uint32_t> assignments;
    std::size_t shard_count = 0;
    std::uint64_t seed = 0;

    /// Row positions per shard, ascending within each shard.
    std::vector<std::vector<std::size_t>> members() const {
        std::vector<std::vector<std::size_t>> out(shard_count);
        for (std::size_t i = 0; i < assignments.size(); ++i) out[assignments[i]].push_back(i);
        return out;
    }

    std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> out(shard_count, 0);
        for (auto a : assignments) ++out[a];
        return out;
    }
};

/// Uniformly random balanced split of n rows into L shards: shuffle the row
/// positions, then deal them round-robin. Shard sizes are floor(n/L) or ceil(n/L).
inline Partition split_balanced(std::size_t n, std::size_t shard_count, const RandomSource& rng) {
    if (shard_count < 1 || shard_count > n)
        throw std::invalid_argument("split_balanced: need 1 <= L <= n");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto gen = rng.generator();
    gen.shuffle(std::span<std::size_t>(order));

    Partition p;
    p.shard_count = shard_count;
    p.seed = rng.seed();
    p.assignments.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos)
        p.assignments[order[pos]] = static_cast<std::uint32_t>(pos % shard_count);
    return p;
}

} // namespace pvq
