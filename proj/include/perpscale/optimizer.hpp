#ifndef PERPSCALE_OPTIMIZER_HPP
#define PERPSCALE_OPTIMIZER_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perpscale/affinity.hpp"
#include "perpscale/dataset.hpp"
#include "perpscale/embedding.hpp"
#include "perpscale/error.hpp"
#include "perpscale/gradient.hpp"
#include "perpscale/pca.hpp"

namespace perpscale {

/// Two-phase schedule: early exaggeration followed by plain gradient
/// descent, with momentum and per-coordinate adaptive gains.
struct OptimizerConfig {
    int ee_iters = 250;
    double ee_factor = 12.0;
    int main_iters = 750;
    double momentum_early = 0.5;
    double momentum_main = 0.8;
    std::optional<double> learning_rate;   // empty: max(n / 12, 50)
    double theta = 0.5;                    // 0 selects the exact gradient
    double gain_floor = 0.01;
    std::uint64_t seed = 0;

    void validate() const {
        if (ee_iters < 0 || main_iters < 0) throw UsageError("OptimizerConfig: iteration counts must be >= 0");
        if (ee_factor < 1.0) throw UsageError("OptimizerConfig: exaggeration factor must be >= 1");
        if (momentum_early < 0.0 || momentum_early >= 1.0 || momentum_main < 0.0 || momentum_main >= 1.0) {
            throw UsageError("OptimizerConfig: momenta must lie in [0, 1)");
        }
        if (theta < 0.0 || theta > 1.0) throw UsageError("OptimizerConfig: theta must lie in [0, 1]");
        if (learning_rate && !(*learning_rate > 0.0)) throw UsageError("OptimizerConfig: learning rate must be positive");
        if (!(gain_floor > 0.0)) throw UsageError("OptimizerConfig: gain floor must be positive");
    }

    double resolved_learning_rate(std::size_t n) const {
        if (learning_rate) return *learning_rate;
        return std::max(static_cast<double>(n) / 12.0, 50.0);
    }
};

enum class Phase : std::uint8_t { early, main };

inline const char* to_string(Phase p) { return p == Phase::early ? "early" : "main"; }

struct TracePoint {
    int iteration = 0;
    Phase phase = Phase::early;
    double cost = 0.0;       // unexaggerated KL at the start of the iteration
    double grad_norm = 0.0;
};

struct OptimizationTrace {
    std::vector<TracePoint> points;   // exactly ee_iters + main_iters entries
    double final_cost = 0.0;          // unexaggerated KL of the returned embedding
};

struct TsneResult {
    Embedding embedding;
    OptimizationTrace trace;
};

namespace detail {

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

} // namespace detail

/// Gradient descent on prebuilt affinities from a given init. The update per
/// iteration is the Jacobs scheme: gains adapt per coordinate, velocity
/// carries momentum, and coordinates are recentered to zero mean (harmless
/// under translation invariance, keeps the quadtree domain bounded).
inline TsneResult optimize(const Affinities& aff, Embedding init, const OptimizerConfig& config, int threads = 1) {
    config.validate();
    if (!init.all_finite()) throw NumericError("optimize: init contains non-finite coordinates", -1);
    const std::size_t n = init.n;
    const std::size_t dim = init.dim;
    const bool use_bh = config.theta > 0.0 && dim == 2;
    const double eta = config.resolved_learning_rate(n);
    const int total_iters = config.ee_iters + config.main_iters;

    TsneResult result;
    result.embedding = std::move(init);
    Embedding& emb = result.embedding;
    result.trace.points.reserve(static_cast<std::size_t>(total_iters));

    std::vector<double> velocity(n * dim, 0.0);
    std::vector<double> gains(n * dim, 1.0);

    for (int t = 0; t < total_iters; ++t) {
        const bool early = t < config.ee_iters;
        const double multiplier = early ? config.ee_factor : 1.0;
        const double momentum = early ? config.momentum_early : config.momentum_main;

        GradientEval eval = eval_gradient(aff, emb, multiplier, use_bh, config.theta, threads);
        result.trace.points.push_back({t, early ? Phase::early : Phase::main, eval.cost, eval.grad_norm});

        for (std::size_t i = 0; i < n * dim; ++i) {
            double& g = gains[i];
            g = detail::sign_of(eval.grad[i]) != detail::sign_of(velocity[i]) ? g + 0.2 : g * 0.8;
            if (g < config.gain_floor) g = config.gain_floor;
            velocity[i] = momentum * velocity[i] - eta * g * eval.grad[i];
            emb.coords[i] += velocity[i];
        }

        for (std::size_t c = 0; c < dim; ++c) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += emb.coords[i * dim + c];
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) emb.coords[i * dim + c] -= mean;
        }

        if (!emb.all_finite()) {
            throw NumericError("optimize: embedding diverged to a non-finite coordinate at iteration " + std::to_string(t), t);
        }
    }

    result.trace.final_cost = eval_gradient(aff, emb, 1.0, use_bh, config.theta, threads).cost;
    return result;
}

/// Full t-SNE: affinity construction, PCA init when none is supplied, and
/// the two-phase optimization. Sparse affinities with the Barnes-Hut
/// gradient when theta > 0 and the embedding is 2-D; dense affinities with
/// the exact gradient otherwise. Identical seeds give bit-identical results
/// for any worker count.
inline TsneResult run_tsne(const Dataset& dataset, double perplexity, const OptimizerConfig& config,
                           const std::optional<Embedding>& init = std::nullopt, int threads = 1,
                           std::size_t max_dense_bytes = kDefaultDenseBytes) {
    config.validate();
    std::size_t dim = 2;
    if (init) {
        if (init->n != dataset.n || init->ids != dataset.ids) {
            throw UsageError("run_tsne: init ids do not match dataset ids");
        }
        dim = init->dim;
    }
    const bool use_bh = config.theta > 0.0 && dim == 2;
    const Affinities aff = build_affinities(dataset, perplexity,
                                            use_bh ? AffinityMode::sparse : AffinityMode::dense,
                                            threads, max_dense_bytes);
    Embedding start = init ? *init : pca_init(dataset, dim, config.seed).embedding;
    return optimize(aff, std::move(start), config, threads);
}

} // namespace perpscale

#endif
