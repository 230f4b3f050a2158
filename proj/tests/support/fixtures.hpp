#pragma once

// Test-only oracles and synthetic data. Oracles deliberately avoid the
// library's code paths: plain loops, full distance sums, no early exit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <iterator>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pvq/core.hpp"
#include "pvq/random.hpp"

namespace pvq::testing {

/// Exhaustive argmin over every (row, centroid) pair; lowest index on ties.
inline std::vector<std::uint32_t> brute_force_bmu(const std::vector<std::vector<double>>& rows,
                                                  const std::vector<std::vector<double>>& centroids) {
    std::vector<std::uint32_t> out;
    for (const auto& x : rows) {
        std::vector<double> d2;
        for (const auto& c : centroids) {
            double s = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - c[k]) * (x[k] - c[k]);
            d2.push_back(s);
        }
        out.push_back(static_cast<std::uint32_t>(std::min_element(d2.begin(), d2.end()) - d2.begin()));
    }
    return out;
}

/// One Lloyd step: assign by brute force, then replace each centroid with
/// the mean of its members (empty clusters keep their centroid).
inline std::vector<std::vector<double>> lloyd_step(const std::vector<std::vector<double>>& rows,
                                                   std::vector<std::vector<double>> centroids) {
    const auto assign = brute_force_bmu(rows, centroids);
    const std::size_t d = rows.front().size();
    std::vector<std::vector<double>> sums(centroids.size(), std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < d; ++k) sums[assign[i]][k] += rows[i][k];
        ++counts[assign[i]];
    }
    for (std::size_t j = 0; j < centroids.size(); ++j)
        if (counts[j] > 0)
            for (std::size_t k = 0; k < d; ++k) centroids[j][k] = sums[j][k] / static_cast<double>(counts[j]);
    return centroids;
}

inline std::vector<std::vector<double>> to_rows(const DataMatrix& m) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

/// Classical binary MCC from a 2x2 (predicted x actual) table, class 1 positive.
inline double binary_mcc(double tn, double fn, double fp, double tp) {
    const double denom = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    if (denom == 0.0) return 0.0;
    return (tp * tn - fp * fn) / denom;
}

/// Uniform random matrix in [lo, hi).
inline DataMatrix uniform_matrix(std::size_t n, std::size_t d, std::uint64_t seed, double lo = -1.0,
                                 double hi = 1.0) {
    auto gen = RandomSource(seed).generator();
    std::vector<double> v(n * d);
    for (auto& x : v) x = lo + (hi - lo) * gen.uniform();
    return DataMatrix(n, d, std::move(v));
}

struct MixtureSpec {
    std::vector<std::size_t> class_counts;
    std::size_t dim = 8;
    double center_half_width = 5.0; // centers uniform in [-w, w]^dim
    double spread = 1.0;            // per-class isotropic standard deviation
    std::uint64_t seed = 1;
};

/// Isotropic Gaussian blobs, one per class, rows shuffled into stream order.
/// Class c is labelled "cNN". Centers depend only on (seed, dim, width), so a
/// train and a test window from different `draw_seed`s share geometry.
inline Dataset gaussian_mixture(const MixtureSpec& spec, std::uint64_t draw_seed) {
    const RandomSource root(spec.seed);
    auto centers_gen = root.derive(1).generator();
    std::vector<std::vector<double>> centers(spec.class_counts.size(), std::vector<double>(spec.dim));
    for (auto& c : centers)
        for (auto& x : c) x = spec.center_half_width * (2.0 * centers_gen.uniform() - 1.0);

    auto gen = root.derive(draw_seed + 2).generator();
    struct Row {
        std::vector<double> x;
        std::size_t cls;
    };
    std::vector<Row> rows;
    for (std::size_t c = 0; c < spec.class_counts.size(); ++c)
        for (std::size_t i = 0; i < spec.class_counts[c]; ++i) {
            Row r{std::vector<double>(spec.dim), c};
            for (std::size_t k = 0; k < spec.dim; ++k) r.x[k] = centers[c][k] + spec.spread * gen.normal();
            rows.push_back(std::move(r));
        }
    gen.shuffle(std::span<Row>(rows));

    std::vector<double> values;
    LabelVector labels;
    values.reserve(rows.size() * spec.dim);
    for (const auto& r : rows) {
        values.insert(values.end(), r.x.begin(), r.x.end());
        char name[8];
        std::snprintf(name, sizeof(name), "c%02zu", r.cls);
        labels.emplace_back(name);
    }
    return Dataset(DataMatrix(rows.size(), spec.dim, std::move(values)), std::move(labels));
}

/// KDDCUP-like imbalance over 12 classes: 100,000 rows, largest 56,000,
/// smallest 10 (ratio 5,600:1).
inline std::vector<std::size_t> imbalanced_profile_12() {
    return {56000, 20000, 10000, 6000, 3500, 2000, 1200, 650, 380, 180, 80, 10};
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("pvq_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace pvq::testing
