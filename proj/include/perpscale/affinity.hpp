#ifndef PERPSCALE_AFFINITY_HPP
#define PERPSCALE_AFFINITY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "perpscale/dataset.hpp"
#include "perpscale/distance.hpp"
#include "perpscale/error.hpp"
#include "perpscale/parallel.hpp"

namespace perpscale {

/// Perplexity of a discrete distribution: 2^(base-2 entropy), with
/// 0 * log 0 = 0. Lies in [1, m] for m strictly positive entries.
inline double row_perplexity(std::span<const double> probabilities) {
    double sum = 0.0;
    for (double p : probabilities) {
        if (p < 0.0) throw UsageError("row_perplexity: negative entry " + std::to_string(p));
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw UsageError("row_perplexity: entries sum to " + std::to_string(sum) + ", not 1");
    }
    double entropy = 0.0;
    for (double p : probabilities) {
        if (p > 0.0) entropy -= p * std::log2(p);
    }
    return std::exp2(entropy);
}

enum class BandwidthFlag : std::uint8_t {
    none = 0,
    clamped_high,    // target above the reachable maximum (support size bound)
    clamped_low,     // target below the reachable minimum (tied nearest neighbors)
    degenerate_row,  // all distances equal: perplexity is constant in sigma
};

inline const char* to_string(BandwidthFlag f) {
    switch (f) {
        case BandwidthFlag::none: return "none";
        case BandwidthFlag::clamped_high: return "clamped_high";
        case BandwidthFlag::clamped_low: return "clamped_low";
        case BandwidthFlag::degenerate_row: return "degenerate_row";
    }
    return "unknown";
}

struct BandwidthResult {
    double sigma = 0.0;
    double achieved = 0.0;  // perplexity realized by sigma on this row
    BandwidthFlag flag = BandwidthFlag::none;
    int iterations = 0;
};

/// Conditional Gaussian probabilities for one row at bandwidth `sigma`,
/// normalized over the row's support. Evaluated in the shifted form
/// exp(-(d_ij^2 - d_min^2) / (2 sigma^2)) to avoid underflow at small sigma;
/// the shift cancels in the normalization.
inline void conditional_probabilities(const DistanceRow& row, double sigma, std::span<double> out) {
    const std::size_t m = row.sq_dists.size();
    const double shift = *std::min_element(row.sq_dists.begin(), row.sq_dists.end());
    const double inv = 1.0 / (2.0 * sigma * sigma);
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double e = std::exp(-(row.sq_dists[j] - shift) * inv);
        out[j] = e;
        sum += e;
    }
    for (std::size_t j = 0; j < m; ++j) out[j] /= sum;
}

namespace detail {

inline double perplexity_at_sigma(const DistanceRow& row, double sigma, std::vector<double>& scratch) {
    scratch.resize(row.sq_dists.size());
    conditional_probabilities(row, sigma, scratch);
    double entropy = 0.0;
    for (double p : scratch) {
        if (p > 0.0) entropy -= p * std::log2(p);
    }
    return std::exp2(entropy);
}

} // namespace detail

/// Solves the per-point bandwidth so that the row's conditional distribution
/// has the target perplexity, by bisection on log2(sigma) over the bracket
/// sigma in [1e-12, 1e12] (expanded when the data's scale demands it).
/// Unreachable targets clamp to the bracket bound and are flagged; rows with
/// all-equal distances have constant perplexity and are flagged degenerate
/// unless the target already matches.
inline BandwidthResult find_bandwidth(const DistanceRow& row, double target, double tol = 1e-5, int max_iter = 64) {
    const std::size_t m = row.sq_dists.size();
    if (m < 1) throw UsageError("find_bandwidth: row has no neighbors");
    if (!(target > 1.0)) throw UsageError("find_bandwidth: target perplexity must exceed 1");

    const double dmin = *std::min_element(row.sq_dists.begin(), row.sq_dists.end());
    const double dmax = *std::max_element(row.sq_dists.begin(), row.sq_dists.end());
    std::vector<double> scratch;

    if (dmin == dmax) {
        const double achieved = static_cast<double>(m);
        BandwidthResult r{1.0, achieved, BandwidthFlag::none, 0};
        if (std::abs(achieved - target) > tol) r.flag = BandwidthFlag::degenerate_row;
        return r;
    }

    double lo = 1e-12, hi = 1e12;
    double perp_lo = detail::perplexity_at_sigma(row, lo, scratch);
    double perp_hi = detail::perplexity_at_sigma(row, hi, scratch);
    for (int e = 0; e < 8 && perp_hi < target - tol; ++e) {
        hi *= 1e6;
        perp_hi = detail::perplexity_at_sigma(row, hi, scratch);
    }
    for (int e = 0; e < 8 && perp_lo > target + tol; ++e) {
        lo *= 1e-6;
        perp_lo = detail::perplexity_at_sigma(row, lo, scratch);
    }
    if (perp_hi < target - tol) return {hi, perp_hi, BandwidthFlag::clamped_high, 0};
    if (perp_lo > target + tol) return {lo, perp_lo, BandwidthFlag::clamped_low, 0};

    double llo = std::log2(lo), lhi = std::log2(hi);
    double best_sigma = std::exp2(0.5 * (llo + lhi));
    double best_perp = std::numeric_limits<double>::quiet_NaN();
    for (int it = 1; it <= max_iter; ++it) {
        const double mid = 0.5 * (llo + lhi);
        const double sigma = std::exp2(mid);
        const double perp = detail::perplexity_at_sigma(row, sigma, scratch);
        if (!(std::abs(best_perp - target) < std::abs(perp - target))) {
            best_sigma = sigma;
            best_perp = perp;
        }
        if (std::abs(perp - target) <= tol) {
            return {sigma, perp, BandwidthFlag::none, it};
        }
        if (perp > target) lhi = mid; else llo = mid;
    }
    return {best_sigma, best_perp, BandwidthFlag::none, max_iter};
}

enum class AffinityMode { dense, sparse };

/// Pre-symmetrization neighborhood size for sparse mode.
inline std::size_t sparse_neighbor_count(std::size_t n, double perplexity) {
    const auto k = static_cast<std::size_t>(std::floor(3.0 * perplexity));
    return std::min(n - 1, std::max<std::size_t>(std::size_t{1}, k));
}

inline constexpr std::size_t kDefaultDenseBytes = std::size_t{8} << 30;

/// Symmetrized, normalized joint probabilities P together with the solved
/// per-point bandwidths. Dense mode stores the full n-by-n matrix; sparse
/// mode stores a symmetric CSR structure built from per-row kNN support.
/// Entries sum to 1 (joint normalization divides by 2n).
struct Affinities {
    AffinityMode mode = AffinityMode::dense;
    std::size_t n = 0;
    double target_perplexity = 0.0;
    std::vector<std::int64_t> ids;
    std::vector<double> bandwidths;
    std::vector<BandwidthFlag> flags;

    std::vector<double> dense;          // n * n, row-major (dense mode)
    std::vector<std::size_t> row_ptr;   // n + 1 (sparse mode)
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;

    double total() const {
        double s = 0.0;
        if (mode == AffinityMode::dense) {
            for (double v : dense) s += v;
        } else {
            for (double v : vals) s += v;
        }
        return s;
    }

    /// Joint probability for a pair of row indices.
    double at(std::size_t i, std::size_t j) const {
        if (mode == AffinityMode::dense) return dense[i * n + j];
        const auto begin = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
        const auto end = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
        const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(j));
        if (it == end || *it != j) return 0.0;
        return vals[static_cast<std::size_t>(it - cols.begin())];
    }
};

/// Builds the joint probability matrix for a dataset at the given perplexity.
/// Bandwidths are solved independently per row (parallel across rows with
/// deterministic output); conditional rows are normalized and symmetrized as
/// p_ij = (p_{j|i} + p_{i|j}) / (2n).
inline Affinities build_affinities(const Dataset& dataset, double perplexity, AffinityMode mode,
                                   int threads = 1, std::size_t max_dense_bytes = kDefaultDenseBytes) {
    const std::size_t n = dataset.n;
    if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n))) {
        throw UsageError("build_affinities: perplexity " + std::to_string(perplexity) +
                         " outside (1, n) for n = " + std::to_string(n));
    }

    Affinities aff;
    aff.mode = mode;
    aff.n = n;
    aff.target_perplexity = perplexity;
    aff.ids = dataset.ids;
    aff.bandwidths.resize(n);
    aff.flags.resize(n);

    if (mode == AffinityMode::dense) {
        const std::size_t bytes = n * n * sizeof(double);
        if (bytes > max_dense_bytes) {
            throw BudgetError("build_affinities: dense mode needs " + std::to_string(bytes) +
                              " bytes, cap is " + std::to_string(max_dense_bytes));
        }
        aff.dense.assign(n * n, 0.0);
        parallel_for(n, threads, [&](std::size_t i) {
            DistanceRow row = full_distance_row(dataset, i);
            if (*std::max_element(row.sq_dists.begin(), row.sq_dists.end()) == 0.0) {
                throw DataError("build_affinities: point id " + std::to_string(dataset.ids[i]) +
                                " duplicates every other point (all-zero distance row)");
            }
            const BandwidthResult bw = find_bandwidth(row, perplexity);
            aff.bandwidths[i] = bw.sigma;
            aff.flags[i] = bw.flag;
            std::vector<double> cond(n - 1);
            conditional_probabilities(row, bw.sigma, cond);
            double* out = aff.dense.data() + i * n;
            std::size_t c = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                out[j] = cond[c++];
            }
        });
        // Symmetrize in place: P <- (P + P^T) / (2n).
        const double inv2n = 1.0 / (2.0 * static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double v = (aff.dense[i * n + j] + aff.dense[j * n + i]) * inv2n;
                aff.dense[i * n + j] = v;
                aff.dense[j * n + i] = v;
            }
            aff.dense[i * n + i] = 0.0;
        }
        return aff;
    }

    // Sparse mode: conditional rows restricted to kNN support.
    const std::size_t k = sparse_neighbor_count(n, perplexity);
    const std::vector<DistanceRow> rows = knn_graph(dataset, k, threads);

    std::unordered_map<std::int64_t, std::uint32_t> index_of;
    index_of.reserve(n);
    for (std::size_t i = 0; i < n; ++i) index_of.emplace(dataset.ids[i], static_cast<std::uint32_t>(i));

    std::vector<std::vector<double>> cond(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const DistanceRow& row = rows[i];
        if (*std::max_element(row.sq_dists.begin(), row.sq_dists.end()) == 0.0) {
            throw DataError("build_affinities: point id " + std::to_string(dataset.ids[i]) +
                            " duplicates all of its nearest neighbors (all-zero distance row)");
        }
        const BandwidthResult bw = find_bandwidth(row, perplexity);
        aff.bandwidths[i] = bw.sigma;
        aff.flags[i] = bw.flag;
        cond[i].resize(k);
        conditional_probabilities(row, bw.sigma, cond[i]);
    });

    struct Entry {
        std::uint32_t row, col;
        double val;
        bool operator<(const Entry& o) const { return row != o.row ? row < o.row : col < o.col; }
    };
    std::vector<Entry> entries;
    entries.reserve(2 * n * k);
    const double inv2n = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < k; ++m) {
            const std::uint32_t j = index_of.at(rows[i].neighbor_ids[m]);
            const double v = cond[i][m] * inv2n;
            entries.push_back({static_cast<std::uint32_t>(i), j, v});
            entries.push_back({j, static_cast<std::uint32_t>(i), v});
        }
    }
    std::sort(entries.begin(), entries.end());

    aff.row_ptr.assign(n + 1, 0);
    aff.cols.reserve(entries.size());
    aff.vals.reserve(entries.size());
    for (std::size_t e = 0; e < entries.size();) {
        std::size_t f = e;
        double v = 0.0;
        while (f < entries.size() && entries[f].row == entries[e].row && entries[f].col == entries[e].col) {
            v += entries[f].val;
            ++f;
        }
        aff.cols.push_back(entries[e].col);
        aff.vals.push_back(v);
        ++aff.row_ptr[entries[e].row + 1];
        e = f;
    }
    for (std::size_t i = 0; i < n; ++i) aff.row_ptr[i + 1] += aff.row_ptr[i];
    return aff;
}

} // namespace perpscale

#endif
