#pragma once

/**
 * @file som.hpp
 * @brief Batch self-organizing map used as the vector quantizer of each shard.
 *
 * Units sit on a rectangular lattice. Training alternates a best-matching-unit
 * pass with a batch update that sets every centroid to the neighborhood-kernel
 * weighted mean of the rows, c_j = sum_i h(b(i), j) x_i / sum_i h(b(i), j).
 * With the kernel radius at zero the update is exactly one Lloyd (k-means) step.
 *
 * Everything here is sequential and accumulates in row order, so a result is
 * bitwise reproducible regardless of how shards are scheduled.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pvq/core.hpp"
#include "pvq/random.hpp"

namespace pvq::som {

struct GridPosition {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const GridPosition&, const GridPosition&) = default;
};

/// Rectangular lattice holding `units` codebook vectors. When rows * cols
/// exceeds `units`, the last lattice row is only partially occupied: units
/// fill lattice points in row-major order, so the codebook has exactly
/// `units` centroids.
struct SomTopology {
    std::size_t units = 1;
    std::size_t rows = 1;
    std::size_t cols = 1;
    std::vector<GridPosition> positions;

    static SomTopology rectangular(std::size_t units, std::size_t rows, std::size_t cols) {
        if (units < 1 || rows < 1 || cols < 1)
            throw std::invalid_argument("SomTopology: units, rows and cols must be >= 1");
        if (rows * cols < units || rows * cols - units >= std::min(rows, cols))
            throw std::invalid_argument("SomTopology: grid does not fit the unit count");
        SomTopology t;
        t.units = units;
        t.rows = rows;
        t.cols = cols;
        t.positions.reserve(units);
        for (std::size_t u = 0; u < units; ++u) t.positions.push_back({u / cols, u % cols});
        return t;
    }

    friend bool operator==(const SomTopology&, const SomTopology&) = default;
};

struct Codebook {
    SomTopology topology;
    std::size_t dim = 0;
    std::vector<double> centroids; // units x dim, row-major

    std::size_t units() const noexcept { return topology.units; }
    std::span<const double> centroid(std::size_t j) const noexcept {
        return {centroids.data() + j * dim, dim};
    }
    std::span<double> centroid(std::size_t j) noexcept { return {centroids.data() + j * dim, dim}; }

    friend bool operator==(const Codebook&, const Codebook&) = default;
};

/// Two training phases, each with a radius that decays linearly from start to
/// end over its epochs. Radii are in lattice-distance units.
struct TrainSchedule {
    std::size_t rough_epochs = 10;
    std::size_t fine_epochs = 10;
    std::optional<double> rough_radius_start; // default: max(rows, cols) / 4
    double rough_radius_end = 1.0;
    double fine_radius_start = 1.0;
    double fine_radius_end = 0.0;

    /// Pure k-means: every epoch at radius zero.
    static TrainSchedule lloyd(std::size_t epochs) {
        TrainSchedule s;
        s.rough_epochs = 1;
        s.fine_epochs = std::max<std::size_t>(epochs, 2) - 1;
        s.rough_radius_start = 0.0;
        s.rough_radius_end = 0.0;
        s.fine_radius_start = 0.0;
        s.fine_radius_end = 0.0;
        return s;
    }

    void validate() const {
        if (rough_epochs < 1 || fine_epochs < 1)
            throw std::invalid_argument("TrainSchedule: each phase needs at least one epoch");
        auto ok = [](double a, double b) { return std::isfinite(a) && std::isfinite(b) && a >= b && b >= 0; };
        if ((rough_radius_start && !ok(*rough_radius_start, rough_radius_end)) ||
            !ok(rough_radius_end, 0.0) || !ok(fine_radius_start, fine_radius_end))
            throw std::invalid_argument("TrainSchedule: radii must satisfy start >= end >= 0");
    }

    /// Radius of every epoch in order, rough phase first.
    std::vector<double> radii(const SomTopology& topology) const {
        validate();
        const double rough_start = rough_radius_start.value_or(
            std::max(static_cast<double>(std::max(topology.rows, topology.cols)) / 4.0, rough_radius_end));
        std::vector<double> out;
        auto phase = [&out](std::size_t epochs, double start, double end) {
            for (std::size_t e = 0; e < epochs; ++e) {
                const double t = epochs == 1 ? 1.0 : static_cast<double>(e) / static_cast<double>(epochs - 1);
                out.push_back(start + (end - start) * t);
            }
        };
        phase(rough_epochs, rough_start, rough_radius_end);
        phase(fine_epochs, fine_radius_start, fine_radius_end);
        return out;
    }

    friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;
};

struct VoronoiMapping {
    std::vector<std::uint32_t> bmu;
    std::vector<double> distance; // Euclidean, row to its BMU
};

/// ceil(5 * sqrt(n_rows)), computed exactly as the smallest m with m^2 >= 25 n.
inline std::size_t codebook_size(std::size_t n_rows) {
    if (n_rows == 0) throw std::invalid_argument("codebook_size: n_rows must be >= 1");
    const std::uint64_t target = 25ULL * n_rows;
    auto m = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(target)));
    while (m * m < target) ++m;
    while (m > 0 && (m - 1) * (m - 1) >= target) --m;
    return static_cast<std::size_t>(m);
}

/// Mean and leading two principal directions of a matrix.
struct PrincipalAxes {
    Eigen::VectorXd mean;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    Eigen::VectorXd axis1;
    Eigen::VectorXd axis2;
    bool all_rows_identical = false;

    /// True when the top-two principal plane cannot orient a lattice.
    bool degenerate() const noexcept {
        constexpr double rel = 1e-12;
        return all_rows_identical || axis2.size() == 0 || !(lambda1 > 0.0) || !(lambda2 > rel * lambda1);
    }
};

inline PrincipalAxes principal_axes(const DataMatrix& data) {
    const auto n = static_cast<Eigen::Index>(data.rows());
    const auto d = static_cast<Eigen::Index>(data.cols());
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMajor> x(data.values().data(), n, d);

    PrincipalAxes axes;
    axes.mean = x.colwise().mean().transpose();

    const auto first = data.row(0);
    axes.all_rows_identical = true;
    for (std::size_t i = 1; i < data.rows() && axes.all_rows_identical; ++i)
        axes.all_rows_identical = std::equal(first.begin(), first.end(), data.row(i).begin());
    if (axes.all_rows_identical) {
        for (Eigen::Index j = 0; j < d; ++j) axes.mean(j) = first[static_cast<std::size_t>(j)];
        return axes;
    }

    const Eigen::MatrixXd centered = x.rowwise() - axes.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const auto& values = solver.eigenvalues(); // ascending
    const auto& vectors = solver.eigenvectors();

    // Fix eigenvector signs so the largest-magnitude component is positive.
    auto oriented = [](Eigen::VectorXd v) {
        Eigen::Index k = 0;
        v.cwiseAbs().maxCoeff(&k);
        if (v(k) < 0) v = -v;
        return v;
    };
    axes.lambda1 = std::max(values(d - 1), 0.0);
    axes.axis1 = oriented(vectors.col(d - 1));
    if (d >= 2) {
        axes.lambda2 = std::max(values(d - 2), 0.0);
        axes.axis2 = oriented(vectors.col(d - 2));
    }
    return axes;
}

/// Lattice shape for m units. The long side follows the first principal
/// direction with aspect ratio sqrt(lambda1 / lambda2) clamped to [1, 10];
/// degenerate covariance falls back to a near-square grid.
inline SomTopology plan_topology(std::size_t m, const DataMatrix& data) {
    if (m < 1) throw std::invalid_argument("plan_topology: m must be >= 1");
    const PrincipalAxes axes = principal_axes(data);
    const double ratio =
        axes.degenerate() ? 1.0 : std::clamp(std::sqrt(axes.lambda1 / axes.lambda2), 1.0, 10.0);

    auto cols = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(m) / ratio)));
    cols = std::clamp<std::size_t>(cols, 1, m);
    std::size_t rows = (m + cols - 1) / cols;
    if (rows < cols) std::swap(rows, cols);
    return SomTopology::rectangular(m, rows, cols);
}

/// Linear initialization: a regular lattice spanning +-2 standard deviations
/// along the top two principal components. Falls back to distinct random rows
/// when d < 2 or the principal plane is degenerate. A single unit starts at
/// the data mean.
inline Codebook init_codebook(const DataMatrix& data, const SomTopology& topology, const RandomSource& rng) {
    Codebook cb{topology, data.cols(), std::vector<double>(topology.units * data.cols())};
    const PrincipalAxes axes = principal_axes(data);

    if (topology.units == 1) {
        for (std::size_t k = 0; k < cb.dim; ++k) cb.centroids[k] = axes.mean(static_cast<Eigen::Index>(k));
        return cb;
    }

    if (data.cols() < 2 || axes.degenerate()) {
        std::vector<std::size_t> order(data.rows());
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto gen = rng.generator();
        gen.shuffle(std::span<std::size_t>(order));
        for (std::size_t j = 0; j < topology.units; ++j) {
            const auto src = data.row(order[j % order.size()]);
            std::copy(src.begin(), src.end(), cb.centroid(j).begin());
        }
        return cb;
    }

    const double sd1 = std::sqrt(axes.lambda1);
    const double sd2 = std::sqrt(axes.lambda2);
    auto coord = [](std::size_t i, std::size_t extent) {
        return extent > 1 ? 4.0 * static_cast<double>(i) / static_cast<double>(extent - 1) - 2.0 : 0.0;
    };
    for (std::size_t j = 0; j < topology.units; ++j) {
        const auto [r, c] = topology.positions[j];
        const double a = coord(r, topology.rows) * sd1;
        const double b = coord(c, topology.cols) * sd2;
        auto out = cb.centroid(j);
        for (std::size_t k = 0; k < cb.dim; ++k) {
            const auto e = static_cast<Eigen::Index>(k);
            out[k] = axes.mean(e) + a * axes.axis1(e) + b * axes.axis2(e);
        }
    }
    return cb;
}

/// Exact nearest centroid per row; ties go to the lowest centroid index.
inline VoronoiMapping map_to_bmu(const DataMatrix& data, const Codebook& codebook) {
    if (codebook.dim != data.cols())
        throw std::invalid_argument("map_to_bmu: codebook dimension does not match data");
    const std::size_t d = data.cols();
    const std::size_t m = codebook.units();
    VoronoiMapping out;
    out.bmu.resize(data.rows());
    out.distance.resize(data.rows());

    for (std::size_t i = 0; i < data.rows(); ++i) {
        const double* x = data.row(i).data();
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_j = 0;
        for (std::size_t j = 0; j < m; ++j) {
            const double* c = codebook.centroids.data() + j * d;
            // Partial sums only grow, so abandoning once past `best` is exact.
            double acc = 0.0;
            std::size_t k = 0;
            for (; k + 4 <= d; k += 4) {
                const double d0 = x[k] - c[k], d1 = x[k + 1] - c[k + 1];
                const double d2 = x[k + 2] - c[k + 2], d3 = x[k + 3] - c[k + 3];
                acc += d0 * d0;
                acc += d1 * d1;
                acc += d2 * d2;
                acc += d3 * d3;
                if (acc > best) break;
            }
            if (acc > best) continue;
            for (; k < d; ++k) {
                const double diff = x[k] - c[k];
                acc += diff * diff;
            }
            if (acc < best) {
                best = acc;
                best_j = static_cast<std::uint32_t>(j);
            }
        }
        out.bmu[i] = best_j;
        out.distance[i] = std::sqrt(best);
    }
    return out;
}

/// Mean squared distance of rows to their BMU.
inline double quantization_error(const DataMatrix& data, const Codebook& codebook) {
    const auto mapping = map_to_bmu(data, codebook);
    double acc = 0.0;
    for (double dist : mapping.distance) acc += dist * dist;
    return acc / static_cast<double>(data.rows());
}

/// One batch update at the given kernel radius. Gaussian kernel
/// exp(-g^2 / (2 r^2)) over squared lattice distance g^2; radius 0 is the
/// indicator of the BMU itself. Centroids with zero kernel mass stay put.
inline void batch_epoch(const DataMatrix& data, Codebook& codebook, double radius) {
    const std::size_t d = codebook.dim;
    const std::size_t m = codebook.units();
    const auto& topo = codebook.topology;
    const auto mapping = map_to_bmu(data, codebook);

    std::vector<double> sums(m * d, 0.0);
    std::vector<std::size_t> counts(m, 0);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const std::size_t u = mapping.bmu[i];
        const auto x = data.row(i);
        double* s = sums.data() + u * d;
        for (std::size_t k = 0; k < d; ++k) s[k] += x[k];
        ++counts[u];
    }

    std::vector<std::size_t> occupied;
    for (std::size_t u = 0; u < m; ++u)
        if (counts[u] > 0) occupied.push_back(u);

    // Kernel depends only on the lattice offset.
    std::vector<double> kernel(topo.rows * topo.cols, 0.0);
    if (radius > 0.0) {
        const double denom = 2.0 * radius * radius;
        for (std::size_t dr = 0; dr < topo.rows; ++dr)
            for (std::size_t dc = 0; dc < topo.cols; ++dc)
                kernel[dr * topo.cols + dc] = std::exp(-static_cast<double>(dr * dr + dc * dc) / denom);
    } else {
        kernel[0] = 1.0;
    }

    std::vector<double> numer(d);
    for (std::size_t j = 0; j < m; ++j) {
        const auto pj = topo.positions[j];
        std::fill(numer.begin(), numer.end(), 0.0);
        double mass = 0.0;
        for (std::size_t u : occupied) {
            const auto pu = topo.positions[u];
            const std::size_t dr = pu.row > pj.row ? pu.row - pj.row : pj.row - pu.row;
            const std::size_t dc = pu.col > pj.col ? pu.col - pj.col : pj.col - pu.col;
            const double w = kernel[dr * topo.cols + dc];
            if (w == 0.0) continue;
            const double* s = sums.data() + u * d;
            if (w == 1.0) {
                for (std::size_t k = 0; k < d; ++k) numer[k] += s[k];
            } else {
                for (std::size_t k = 0; k < d; ++k) numer[k] += w * s[k];
            }
            mass += w * static_cast<double>(counts[u]);
        }
        if (mass > 0.0) {
            auto c = codebook.centroid(j);
            for (std::size_t k = 0; k < d; ++k) c[k] = numer[k] / mass;
        }
    }
}

inline Codebook batch_train(const DataMatrix& data, Codebook codebook, const TrainSchedule& schedule) {
    if (codebook.dim != data.cols())
        throw std::invalid_argument("batch_train: codebook dimension does not match data");
    if (codebook.centroids.size() != codebook.units() * codebook.dim ||
        codebook.topology.positions.size() != codebook.units())
        throw std::invalid_argument("batch_train: malformed codebook");
    for (double v : codebook.centroids)
        if (!std::isfinite(v)) throw std::invalid_argument("batch_train: non-finite centroid");
    for (double r : schedule.radii(codebook.topology)) batch_epoch(data, codebook, r);
    return codebook;
}

} // namespace pvq::som
