#ifndef PERPSCALE_PCA_HPP
#define PERPSCALE_PCA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "perpscale/dataset.hpp"
#include "perpscale/embedding.hpp"
#include "perpscale/error.hpp"
#include "perpscale/random.hpp"

namespace perpscale {

struct PcaResult {
    Embedding embedding;
    bool rank_deficient = false;
    /// Variance captured by each component (eigenvalues of the 1/n
    /// covariance), before the small-norm rescale.
    std::vector<double> component_variance;
};

/// PCA initialization: projects the mean-centered data onto its top
/// `out_dim` principal components, then rescales so the first coordinate's
/// standard deviation is 1e-4. Components come from power iteration with
/// deflation on the d-by-d covariance; the start vectors are seeded, every
/// later step is deterministic, and each component's largest-magnitude
/// loading is made positive, so the output is reproducible bit-for-bit.
/// Fewer than `out_dim` nonzero singular values pad the remaining
/// coordinates with zeros and raise the rank flag.
inline PcaResult pca_init(const Dataset& dataset, std::size_t out_dim = 2, std::uint64_t seed = 0) {
    const std::size_t n = dataset.n;
    const std::size_t d = dataset.dim;
    if (out_dim < 1 || out_dim > d) {
        throw UsageError("pca_init: output dimension " + std::to_string(out_dim) + " outside [1, " + std::to_string(d) + "]");
    }

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += dataset.points[i * d + j];
    }
    for (double& m : mean) m /= static_cast<double>(n);

    std::vector<double> centered(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) centered[i * d + j] = dataset.points[i * d + j] - mean[j];
    }

    // 1/n covariance, upper storage mirrored.
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = centered.data() + i * d;
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a; b < d; ++b) cov[a * d + b] += x[a] * x[b];
        }
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            cov[a * d + b] /= static_cast<double>(n);
            cov[b * d + a] = cov[a * d + b];
        }
    }
    double trace = 0.0;
    for (std::size_t a = 0; a < d; ++a) trace += cov[a * d + a];

    PcaResult result;
    result.component_variance.assign(out_dim, 0.0);
    std::vector<std::vector<double>> components;

    SplitMix64 rng(mix64(seed) ^ 0x50CA50CA50CA50CAULL);
    std::vector<double> v(d), w(d);
    for (std::size_t c = 0; c < out_dim; ++c) {
        if (trace <= 0.0) {
            result.rank_deficient = true;
            components.emplace_back(d, 0.0);
            continue;
        }
        for (std::size_t j = 0; j < d; ++j) v[j] = rng.next_gaussian();
        double lambda = 0.0;
        for (int it = 0; it < 20000; ++it) {
            // Re-orthogonalize against earlier components to stop deflation drift.
            for (const auto& u : components) {
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += v[j] * u[j];
                for (std::size_t j = 0; j < d; ++j) v[j] -= dot * u[j];
            }
            double norm = 0.0;
            for (std::size_t j = 0; j < d; ++j) norm += v[j] * v[j];
            norm = std::sqrt(norm);
            if (norm == 0.0) {
                // Start vector fell in the span of earlier components; redraw.
                for (std::size_t j = 0; j < d; ++j) v[j] = rng.next_gaussian();
                continue;
            }
            for (std::size_t j = 0; j < d; ++j) v[j] /= norm;

            for (std::size_t a = 0; a < d; ++a) {
                double s = 0.0;
                const double* rowp = cov.data() + a * d;
                for (std::size_t b = 0; b < d; ++b) s += rowp[b] * v[b];
                w[a] = s;
            }
            lambda = 0.0;
            for (std::size_t j = 0; j < d; ++j) lambda += v[j] * w[j];

            double delta = 0.0;
            double wnorm = 0.0;
            for (std::size_t j = 0; j < d; ++j) wnorm += w[j] * w[j];
            wnorm = std::sqrt(wnorm);
            if (wnorm == 0.0) { lambda = 0.0; break; }
            for (std::size_t j = 0; j < d; ++j) {
                const double next = w[j] / wnorm;
                const double diff = next - v[j];
                delta += diff * diff;
                v[j] = next;
            }
            if (std::sqrt(delta) <= 1e-14) break;
        }
        {
            // Rayleigh quotient of the converged vector.
            double s = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                double wa = 0.0;
                const double* rowp = cov.data() + a * d;
                for (std::size_t b = 0; b < d; ++b) wa += rowp[b] * v[b];
                s += v[a] * wa;
            }
            lambda = s;
        }

        if (lambda <= 1e-12 * trace) {
            result.rank_deficient = true;
            components.emplace_back(d, 0.0);
            result.component_variance[c] = 0.0;
            continue;
        }

        // Sign convention: largest-magnitude loading positive (first index on ties).
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j) {
            if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
        }
        if (v[arg] < 0.0) {
            for (std::size_t j = 0; j < d; ++j) v[j] = -v[j];
        }

        result.component_variance[c] = lambda;
        components.push_back(v);
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) cov[a * d + b] -= lambda * v[a] * v[b];
        }
    }

    Embedding& e = result.embedding;
    e.n = n;
    e.dim = out_dim;
    e.ids = dataset.ids;
    e.coords.assign(n * out_dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = centered.data() + i * d;
        for (std::size_t c = 0; c < out_dim; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += x[j] * components[c][j];
            e.coords[i * out_dim + c] = s;
        }
    }
    rescale_first_coordinate_std(e, 1e-4);
    return result;
}

} // namespace perpscale

#endif
