#pragma once

// Stable serialized forms: sample results (JSON, CSV), codebooks (JSON),
// run records (CSV) and experiment summaries (JSON). None of the
// deterministic outputs carry wall-clock values; timings go to sidecars.

#include <charconv>
#include <cstddef>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pvq/core.hpp"
#include "pvq/eval.hpp"
#include "pvq/random.hpp"
#include "pvq/sampler.hpp"
#include "pvq/som.hpp"

namespace pvq::io {

inline constexpr const char* kVersion = "1.0.0";

using nlohmann::json;

/// Shortest representation that round-trips.
inline std::string format_real(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline json schedule_json(const som::TrainSchedule& s) {
    json j{{"rough_epochs", s.rough_epochs},
           {"fine_epochs", s.fine_epochs},
           {"rough_radius_end", s.rough_radius_end},
           {"fine_radius_start", s.fine_radius_start},
           {"fine_radius_end", s.fine_radius_end},
           {"kernel", "gaussian exp(-g^2/(2r^2)), r=0 -> bmu indicator"},
           {"lattice", "rectangular, partial last row"},
           {"initialization", "linear (top-2 principal components, +-2 sd); random rows if degenerate"},
           {"topology_rule", "aspect sqrt(lambda1/lambda2) clamped to [1,10]"}};
    j["rough_radius_start"] = s.rough_radius_start ? json(*s.rough_radius_start) : json("max(rows,cols)/4");
    return j;
}

inline json metadata(const json& parameters) {
    return json{{"tool", "pvq"},
                {"version", kVersion},
                {"rng", std::string(RandomSource::algorithm)},
                {"parameters", parameters}};
}

inline json to_json(const SampleResult& r, bool include_rows = true) {
    json j;
    j["sampler"] = r.sampler;
    j["input_rows"] = r.input_rows;
    j["seed"] = r.seed;
    j["shard_count"] = r.shard_count;
    j["target"] = r.target ? json(*r.target) : json(nullptr);
    j["estimated_size"] = r.estimated_size;
    j["size_bound"] = r.size_bound;
    j["realized_size"] = r.rows.size();
    j["schedule"] = r.schedule ? schedule_json(*r.schedule) : json(nullptr);
    json shards = json::array();
    for (const auto& s : r.shards) {
        json sj{{"index", s.shard_index},
                {"rows", s.shard_rows},
                {"codebook_size", s.codebook_size_used},
                {"grid_rows", s.grid_rows},
                {"grid_cols", s.grid_cols},
                {"non_empty_cells", s.non_empty_cells}};
        if (include_rows) sj["representatives"] = s.representative_rows;
        shards.push_back(std::move(sj));
    }
    j["shards"] = std::move(shards);
    if (include_rows) j["rows"] = r.rows;
    return j;
}

/// Shard index of every sampled row, or -1 when the sampler has no shards.
inline std::vector<long long> provenance(const SampleResult& r) {
    std::vector<long long> out;
    out.reserve(r.rows.size());
    if (r.shards.empty()) {
        out.assign(r.rows.size(), -1);
        return out;
    }
    for (const auto& s : r.shards)
        out.insert(out.end(), s.representative_rows.size(), static_cast<long long>(s.shard_index));
    return out;
}

/// Sampled rows with their original (unscaled) feature values:
/// `row,shard,<features...>[,label]`.
inline void write_sample_csv(std::ostream& out, const SampleResult& r, const Dataset& source) {
    const auto positions = eval::positions_of(source.features, r.rows);
    const auto shard = provenance(r);
    out << "row,shard";
    for (std::size_t j = 0; j < source.features.cols(); ++j)
        out << ',' << (source.feature_names.empty() ? "f" + std::to_string(j) : source.feature_names[j]);
    if (source.labels) out << ",label";
    out << '\n';
    for (std::size_t i = 0; i < positions.size(); ++i) {
        out << r.rows[i] << ',' << shard[i];
        for (double v : source.features.row(positions[i])) out << ',' << format_real(v);
        if (source.labels) out << ',' << (*source.labels)[positions[i]];
        out << '\n';
    }
}

inline json to_json(const som::Codebook& cb) {
    return json{{"units", cb.units()},
                {"dim", cb.dim},
                {"grid_rows", cb.topology.rows},
                {"grid_cols", cb.topology.cols},
                {"lattice", "rectangular"},
                {"centroids", cb.centroids}};
}

inline som::Codebook codebook_from_json(const json& j) {
    som::Codebook cb;
    cb.topology = som::SomTopology::rectangular(j.at("units").get<std::size_t>(), j.at("grid_rows").get<std::size_t>(),
                                                j.at("grid_cols").get<std::size_t>());
    cb.dim = j.at("dim").get<std::size_t>();
    cb.centroids = j.at("centroids").get<std::vector<double>>();
    if (cb.centroids.size() != cb.units() * cb.dim) throw std::invalid_argument("codebook: centroid count mismatch");
    return cb;
}

inline const char* kRunCsvHeader =
    "seed,repetition,sampler,classifier,sample_rows,accuracy,macro_recall,weighted_precision,"
    "balanced_accuracy,mcc,classes_covered";

inline void write_runs_csv(std::ostream& out, const std::vector<eval::RunRecord>& records, std::size_t k) {
    out << kRunCsvHeader << '\n';
    const std::string classifier = "knn(k=" + std::to_string(k) + ")";
    for (const auto& r : records) {
        out << r.seed << ',' << r.repetition << ',' << r.sampler << ',' << classifier << ',' << r.sample_rows << ','
            << format_real(r.scores.accuracy) << ',' << format_real(r.scores.macro_recall) << ','
            << format_real(r.scores.weighted_precision) << ',' << format_real(r.scores.balanced_accuracy) << ','
            << format_real(r.scores.mcc) << ',' << r.classes_covered << '\n';
    }
}

inline void write_timings_csv(std::ostream& out, const std::vector<eval::RunRecord>& records) {
    out << "seed,repetition,sampler,sampling_seconds,training_seconds,scoring_seconds\n";
    for (const auto& r : records)
        out << r.seed << ',' << r.repetition << ',' << r.sampler << ',' << format_real(r.sampling_seconds) << ','
            << format_real(r.training_seconds) << ',' << format_real(r.scoring_seconds) << '\n';
}

inline json to_json(const eval::Summary& summary) {
    json j = json::object();
    for (const auto& [sampler, per_metric] : summary) {
        for (const auto& [name, s] : per_metric) {
            j[sampler][name] = json{{"median", s.median}, {"mean", s.mean}, {"q1", s.q1},   {"q3", s.q3},
                                    {"iqr", s.iqr},       {"min", s.min},   {"max", s.max}};
        }
    }
    return j;
}

} // namespace pvq::io
