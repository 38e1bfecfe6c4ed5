#ifndef PERPSCALE_GRADIENT_HPP
#define PERPSCALE_GRADIENT_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "perpscale/affinity.hpp"
#include "perpscale/embedding.hpp"
#include "perpscale/error.hpp"
#include "perpscale/parallel.hpp"
#include "perpscale/quadtree.hpp"

namespace perpscale {

namespace detail {

inline void require_id_match(const Affinities& aff, const Embedding& emb, const char* op) {
    if (aff.n != emb.n || aff.ids != emb.ids) {
        throw UsageError(std::string(op) + ": embedding ids do not match affinity ids");
    }
}

} // namespace detail

struct GradientEval {
    std::vector<double> grad;  // n * dim
    double cost = 0.0;         // unexaggerated KL divergence
    double grad_norm = 0.0;
};

/// One evaluation of the KL gradient (Eq.-5 form) and the unexaggerated cost.
/// The attractive term runs exactly over the stored P support with the
/// exaggeration multiplier applied at read time; the repulsive term and the
/// q-normalization Z either run exactly over all pairs or through the
/// Barnes-Hut quadtree. All per-point partials are reduced in index order, so
/// results are identical for any worker count.
inline GradientEval eval_gradient(const Affinities& aff, const Embedding& emb, double exaggeration,
                                  bool use_bh, double theta, int threads) {
    detail::require_id_match(aff, emb, "eval_gradient");
    const std::size_t n = emb.n;
    const std::size_t dim = emb.dim;
    if (use_bh && dim != 2) throw UsageError("eval_gradient: Barnes-Hut path requires 2-D embeddings");

    GradientEval out;
    out.grad.assign(n * dim, 0.0);

    std::vector<double> attract(n * dim, 0.0);
    std::vector<double> repulse(n * dim, 0.0);
    std::vector<double> z_part(n, 0.0);
    std::vector<double> cost_part(n, 0.0);  // sum_j p ln p - p ln w
    std::vector<double> p_part(n, 0.0);     // sum_j p

    // Attractive forces and the P-dependent cost terms over the support.
    auto attractive_row = [&](std::size_t i, std::size_t j, double p) {
        if (p <= 0.0) return;
        const double* yi = emb.row(i);
        const double* yj = emb.row(j);
        double dist_sq = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            const double dcoord = yi[c] - yj[c];
            dist_sq += dcoord * dcoord;
        }
        const double w = 1.0 / (1.0 + dist_sq);
        const double pw = exaggeration * p * w;
        double* a = attract.data() + i * dim;
        for (std::size_t c = 0; c < dim; ++c) a[c] += pw * (yi[c] - yj[c]);
        cost_part[i] += p * std::log(p) - p * std::log(w);
        p_part[i] += p;
    };

    if (aff.mode == AffinityMode::dense) {
        parallel_for(n, threads, [&](std::size_t i) {
            const double* prow = aff.dense.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) attractive_row(i, j, prow[j]);
            }
        });
    } else {
        parallel_for(n, threads, [&](std::size_t i) {
            for (std::size_t e = aff.row_ptr[i]; e < aff.row_ptr[i + 1]; ++e) {
                attractive_row(i, aff.cols[e], aff.vals[e]);
            }
        });
    }

    if (use_bh) {
        const QuadTree tree(emb.coords.data(), n);
        parallel_for(n, threads, [&](std::size_t i) {
            const auto rep = tree.repulsion(emb.coords[2 * i], emb.coords[2 * i + 1], theta);
            z_part[i] = rep.z - 1.0;  // remove the query's own w = 1 term
            repulse[2 * i] = rep.fx;
            repulse[2 * i + 1] = rep.fy;
        });
    } else {
        parallel_for(n, threads, [&](std::size_t i) {
            const double* yi = emb.row(i);
            double z = 0.0;
            double* r = repulse.data() + i * dim;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double* yj = emb.row(j);
                double dist_sq = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    const double dcoord = yi[c] - yj[c];
                    dist_sq += dcoord * dcoord;
                }
                const double w = 1.0 / (1.0 + dist_sq);
                z += w;
                const double ww = w * w;
                for (std::size_t c = 0; c < dim; ++c) r[c] += ww * (yi[c] - yj[c]);
            }
            z_part[i] = z;
        });
    }

    double z_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) z_total += z_part[i];

    double cost = 0.0, p_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cost += cost_part[i];
        p_total += p_part[i];
    }
    out.cost = cost + p_total * std::log(z_total);

    const double inv_z = 1.0 / z_total;
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < n * dim; ++i) {
        out.grad[i] = 4.0 * (attract[i] - repulse[i] * inv_z);
        norm_sq += out.grad[i] * out.grad[i];
    }
    out.grad_norm = std::sqrt(norm_sq);
    return out;
}

/// KL divergence C = sum_{p>0} p log(p / q) with q from the Student-t kernel
/// over all ordered pairs (Eq. 3/4). Natural log.
inline double kl_cost(const Affinities& aff, const Embedding& emb, int threads = 1) {
    detail::require_id_match(aff, emb, "kl_cost");
    const std::size_t n = emb.n;
    const std::size_t dim = emb.dim;

    std::vector<double> z_part(n, 0.0);
    parallel_for(n, threads, [&](std::size_t i) {
        const double* yi = emb.row(i);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* yj = emb.row(j);
            double dist_sq = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double dcoord = yi[c] - yj[c];
                dist_sq += dcoord * dcoord;
            }
            z += 1.0 / (1.0 + dist_sq);
        }
        z_part[i] = z;
    });
    double z_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) z_total += z_part[i];

    std::vector<double> cost_part(n, 0.0);
    std::vector<double> p_part(n, 0.0);
    auto accumulate = [&](std::size_t i, std::size_t j, double p) {
        if (p <= 0.0) return;
        const double* yi = emb.row(i);
        const double* yj = emb.row(j);
        double dist_sq = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            const double dcoord = yi[c] - yj[c];
            dist_sq += dcoord * dcoord;
        }
        const double w = 1.0 / (1.0 + dist_sq);
        cost_part[i] += p * std::log(p) - p * std::log(w);
        p_part[i] += p;
    };
    if (aff.mode == AffinityMode::dense) {
        parallel_for(n, threads, [&](std::size_t i) {
            const double* prow = aff.dense.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) accumulate(i, j, prow[j]);
            }
        });
    } else {
        parallel_for(n, threads, [&](std::size_t i) {
            for (std::size_t e = aff.row_ptr[i]; e < aff.row_ptr[i + 1]; ++e) {
                accumulate(i, aff.cols[e], aff.vals[e]);
            }
        });
    }
    double cost = 0.0, p_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cost += cost_part[i];
        p_total += p_part[i];
    }
    return cost + p_total * std::log(z_total);
}

/// Exact KL gradient per Eq. (5). Rows sum to the zero vector (pairwise
/// antisymmetry), which callers may rely on for recentering.
inline std::vector<double> exact_gradient(const Affinities& aff, const Embedding& emb, int threads = 1) {
    return eval_gradient(aff, emb, 1.0, false, 0.0, threads).grad;
}

/// Barnes-Hut approximated KL gradient. The attractive term is exact over
/// the sparse P support; the repulsive term uses the quadtree with the given
/// opening threshold. theta = 0 reproduces exact_gradient up to summation
/// order. Only 2-D embeddings are supported; use exact_gradient otherwise.
inline std::vector<double> bh_gradient(const Affinities& aff, const Embedding& emb, double theta, int threads = 1) {
    if (emb.dim != 2) throw UsageError("bh_gradient: only 2-D embeddings are supported; use exact_gradient");
    if (theta < 0.0 || theta > 1.0) throw UsageError("bh_gradient: theta must lie in [0, 1]");
    return eval_gradient(aff, emb, 1.0, true, theta, threads).grad;
}

} // namespace perpscale

#endif
