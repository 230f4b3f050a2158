#pragma once

// Parallel vector-quantization sampling.
//
// The rows are split into L random balanced shards. Each shard is quantized
// independently by a batch SOM with ceil(5 sqrt(|shard|)) units (map phase),
// and for every non-empty Voronoi cell the shard row nearest to the centroid
// is kept. The per-shard picks are appended in shard order (reduce phase).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvq/core.hpp"
#include "pvq/parallel.hpp"
#include "pvq/random.hpp"
#include "pvq/som.hpp"

namespace pvq {

struct ShardSample {
    std::size_t shard_index = 0;
    std::size_t shard_rows = 0;
    std::vector<RowId> representative_rows; // in centroid order
    std::size_t codebook_size_used = 0;
    std::size_t grid_rows = 0;
    std::size_t grid_cols = 0;
    std::size_t non_empty_cells = 0;

    friend bool operator==(const ShardSample&, const ShardSample&) = default;
};

struct SampleResult {
    std::string sampler; // "pvq" or "random"
    std::vector<RowId> rows;
    std::vector<ShardSample> shards; // empty for samplers without shards
    std::size_t input_rows = 0;
    std::size_t shard_count = 0;
    std::uint64_t seed = 0;
    std::optional<som::TrainSchedule> schedule;
    std::optional<std::size_t> target;
    double estimated_size = 0.0; // 5 sqrt(n L) for pvq
    std::size_t size_bound = 0;  // sum_k ceil(5 sqrt(|s_k|)) for pvq

    friend bool operator==(const SampleResult&, const SampleResult&) = default;
};

/// Stream ids under the caller's RandomSource.
inline constexpr std::uint64_t kPartitionStream = 0x5041525449ULL; // "PARTI"
inline constexpr std::uint64_t kShardStreamBase = 0x5348415244ULL; // "SHARD"

inline RandomSource partition_source(const RandomSource& rng) { return rng.derive(kPartitionStream); }
inline RandomSource shard_source(const RandomSource& rng, std::size_t shard) {
    return rng.derive(kShardStreamBase + shard);
}

/// Upper bound on the sample size for the given shard sizes.
inline std::size_t size_bound(const std::vector<std::size_t>& shard_sizes) {
    std::size_t total = 0;
    for (std::size_t s : shard_sizes) total += som::codebook_size(s);
    return total;
}

inline double estimated_size(std::size_t n, std::size_t shard_count) {
    return 5.0 * std::sqrt(static_cast<double>(n) * static_cast<double>(shard_count));
}

struct ShardPlan {
    std::size_t shard_count = 1;
    double estimated_size = 0.0;
};

/// Inverts |Pi| ~ 5 sqrt(n L): L = clamp(round(target^2 / (25 n)), 1, n).
/// Targets too small for one shard clamp to L = 1; the estimate reports what
/// that yields.
inline ShardPlan choose_shard_count(std::size_t n, std::size_t target) {
    if (n < 1) throw std::invalid_argument("choose_shard_count: n must be >= 1");
    if (target < 1) throw std::invalid_argument("choose_shard_count: target must be >= 1");
    // round(t^2 / (25 n)) with half-up rounding, in integers.
    const unsigned __int128 t2 = static_cast<unsigned __int128>(target) * target;
    const unsigned __int128 denom = 25 * static_cast<unsigned __int128>(n);
    const unsigned __int128 rounded = (2 * t2 + denom) / (2 * denom);
    const std::size_t shards =
        rounded < 1 ? 1 : (rounded > n ? n : static_cast<std::size_t>(rounded));
    return {shards, estimated_size(n, shards)};
}

/// Quantize one shard and keep the nearest row of every non-empty cell
/// (ties: lowest row position).
inline ShardSample sample_shard(const DataMatrix& shard, const som::TrainSchedule& schedule,
                                const RandomSource& rng) {
    const std::size_t m = som::codebook_size(shard.rows());
    const auto topology = som::plan_topology(m, shard);
    auto codebook = som::init_codebook(shard, topology, rng);
    codebook = som::batch_train(shard, std::move(codebook), schedule);
    const auto mapping = som::map_to_bmu(shard, codebook);

    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> nearest(m, none);
    for (std::size_t i = 0; i < shard.rows(); ++i) {
        auto& slot = nearest[mapping.bmu[i]];
        if (slot == none || mapping.distance[i] < mapping.distance[slot]) slot = i;
    }

    ShardSample out;
    out.shard_rows = shard.rows();
    out.codebook_size_used = m;
    out.grid_rows = topology.rows;
    out.grid_cols = topology.cols;
    for (std::size_t j = 0; j < m; ++j) {
        if (nearest[j] == none) continue;
        out.representative_rows.push_back(shard.row_id(nearest[j]));
    }
    out.non_empty_cells = out.representative_rows.size();
    return out;
}

/// Full sampler with L shards. `workers` only changes wall-clock time; the
/// result is a function of (data values, L, schedule, rng seed).
inline SampleResult pvq(const DataMatrix& data, std::size_t shard_count, const som::TrainSchedule& schedule,
                        const RandomSource& rng, std::size_t workers = 1) {
    if (shard_count < 1 || shard_count > data.rows())
        throw std::invalid_argument("pvq: need 1 <= L <= n");
    schedule.validate();

    const Partition partition = split_balanced(data.rows(), shard_count, partition_source(rng));
    const auto members = partition.members();

    std::vector<ShardSample> shards(shard_count);
    parallel_for(shard_count, workers, [&](std::size_t k) {
        const DataMatrix shard = data.select(members[k]);
        shards[k] = sample_shard(shard, schedule, shard_source(rng, k));
        shards[k].shard_index = k;
    });

    SampleResult result;
    result.sampler = "pvq";
    result.input_rows = data.rows();
    result.shard_count = shard_count;
    result.seed = rng.seed();
    result.schedule = schedule;
    result.estimated_size = estimated_size(data.rows(), shard_count);
    result.size_bound = size_bound(partition.sizes());
    for (const auto& s : shards)
        result.rows.insert(result.rows.end(), s.representative_rows.begin(), s.representative_rows.end());
    result.shards = std::move(shards);
    return result;
}

inline SampleResult pvq_to_target(const DataMatrix& data, std::size_t target, const som::TrainSchedule& schedule,
                                  const RandomSource& rng, std::size_t workers = 1) {
    const ShardPlan plan = choose_shard_count(data.rows(), target);
    SampleResult result = pvq(data, plan.shard_count, schedule, rng, workers);
    result.target = target;
    return result;
}

} // namespace pvq
