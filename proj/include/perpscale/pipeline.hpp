#ifndef PERPSCALE_PIPELINE_HPP
#define PERPSCALE_PIPELINE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "perpscale/dataset.hpp"
#include "perpscale/embedding.hpp"
#include "perpscale/error.hpp"
#include "perpscale/optimizer.hpp"
#include "perpscale/pca.hpp"
#include "perpscale/sampling.hpp"

namespace perpscale {

/// Perplexity exploration on one sample: several perplexities, one shared
/// sample and one shared init.
struct GridSpec {
    double rate = 0.1;
    std::vector<double> perplexities;   // strictly ascending
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
};

struct GridCell {
    double perplexity = 0.0;
    Embedding embedding;
    OptimizationTrace trace;
};

struct GridResult {
    Dataset sample;
    Embedding init;              // shared by every cell, byte-identical
    std::vector<GridCell> cells;  // ordered by perplexity
};

namespace detail {

/// Rows of a full-set embedding at the given (sorted) ids.
inline Embedding sample_embedding_rows(const Embedding& full, const std::vector<std::int64_t>& ids) {
    std::vector<std::pair<std::int64_t, std::size_t>> by_id(full.n);
    for (std::size_t i = 0; i < full.n; ++i) by_id[i] = {full.ids[i], i};
    std::sort(by_id.begin(), by_id.end());
    Embedding out;
    out.n = ids.size();
    out.dim = full.dim;
    out.ids = ids;
    out.coords.reserve(out.n * out.dim);
    for (std::int64_t id : ids) {
        const auto it = std::lower_bound(by_id.begin(), by_id.end(), std::make_pair(id, std::size_t{0}));
        if (it == by_id.end() || it->first != id) {
            throw UsageError("sample id " + std::to_string(id) + " missing from the full embedding");
        }
        out.coords.insert(out.coords.end(), full.row(it->second), full.row(it->second) + full.dim);
    }
    return out;
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace detail

/// Embeds one nested sample at each requested perplexity. Every cell starts
/// from the same init: the full dataset's PCA embedding restricted to the
/// sampled ids, so differences between cells are due to perplexity alone.
inline GridResult explore_grid(const Dataset& dataset, const GridSpec& spec, int threads = 1) {
    if (spec.perplexities.empty()) throw UsageError("explore_grid: no perplexities given");
    for (std::size_t i = 1; i < spec.perplexities.size(); ++i) {
        if (!(spec.perplexities[i] > spec.perplexities[i - 1])) {
            throw UsageError("explore_grid: perplexities must be strictly ascending");
        }
    }
    const SamplePlan plan = draw_nested_samples(dataset, {spec.rate}, spec.seed);
    GridResult result;
    result.sample = materialize_sample(dataset, plan, spec.rate);
    for (double per : spec.perplexities) {
        if (!(per > 1.0) || per >= static_cast<double>(result.sample.n)) {
            throw UsageError("explore_grid: perplexity " + std::to_string(per) + " invalid for sample size " +
                             std::to_string(result.sample.n));
        }
    }

    const PcaResult full_pca = pca_init(dataset, 2, spec.optimizer.seed);
    result.init = detail::sample_embedding_rows(full_pca.embedding, result.sample.ids);

    for (double per : spec.perplexities) {
        TsneResult run = run_tsne(result.sample, per, spec.optimizer, result.init, threads);
        result.cells.push_back({per, std::move(run.embedding), std::move(run.trace)});
    }
    return result;
}

/// The four-step sample-based scheme: uniform downsample, t-SNE on the
/// sample at a user-chosen perplexity, nearest-neighbor prolongation of the
/// remaining points, and a full-set refinement run from that init.
struct PipelinePlan {
    double rate = 0.1;
    double per_sample = 0.0;
    double per_full = 30.0;
    int prolong_k = 10;
    OptimizerConfig stage_sample;
    OptimizerConfig stage_full;
    std::uint64_t seed = 0;   // seeds the stage-(i) sample draw
};

struct StageReport {
    std::string stage;
    double rho = 1.0;
    double perplexity = 0.0;   // 0 for stages without one
    std::size_t n = 0;
    double seconds = 0.0;
    double kl_initial = 0.0;
    double kl_final = 0.0;
    bool has_kl = false;
};

struct PipelineResult {
    Embedding embedding;                 // final full-set embedding
    Embedding sample_embedding;          // stage-(ii) output
    Embedding prolonged_init;            // stage-(iii) output before rescale
    std::vector<StageReport> stages;
};

/// Runs steps (i)-(iv). Prolonged points are placed at the coordinate mean
/// of their `prolong_k` nearest sampled points measured in high-dimensional
/// space, which pins them inside the anchors' convex hull. The stage-(iv)
/// init is recentered and rescaled to first-coordinate std 1e-4 before the
/// full run.
inline PipelineResult sample_based_embed(const Dataset& dataset, const PipelinePlan& plan, int threads = 1) {
    if (plan.prolong_k < 1) throw UsageError("sample_based_embed: prolong_k must be >= 1");
    PipelineResult result;

    // (i) uniform sample at the requested rate.
    const SamplePlan sampling = draw_nested_samples(dataset, {plan.rate}, plan.seed);
    const Dataset sample = materialize_sample(dataset, sampling, plan.rate);
    if (static_cast<std::size_t>(plan.prolong_k) > sample.n) {
        throw UsageError("sample_based_embed: prolong_k " + std::to_string(plan.prolong_k) +
                         " exceeds sample size " + std::to_string(sample.n));
    }

    // (ii) t-SNE on the sample, initialized from the full-set PCA embedding.
    auto t0 = std::chrono::steady_clock::now();
    const PcaResult full_pca = pca_init(dataset, 2, plan.stage_sample.seed);
    const Embedding sample_init = detail::sample_embedding_rows(full_pca.embedding, sample.ids);
    TsneResult stage2 = run_tsne(sample, plan.per_sample, plan.stage_sample, sample_init, threads);
    {
        StageReport r;
        r.stage = "sample";
        r.rho = plan.rate;
        r.perplexity = plan.per_sample;
        r.n = sample.n;
        r.seconds = detail::seconds_since(t0);
        r.has_kl = !stage2.trace.points.empty();
        r.kl_initial = r.has_kl ? stage2.trace.points.front().cost : 0.0;
        r.kl_final = stage2.trace.final_cost;
        result.stages.push_back(r);
    }
    result.sample_embedding = stage2.embedding;

    // (iii) prolongation: mean of the k nearest sampled anchors in high-d.
    t0 = std::chrono::steady_clock::now();
    std::unordered_map<std::int64_t, std::size_t> sample_row;
    sample_row.reserve(sample.n);
    for (std::size_t s = 0; s < sample.n; ++s) sample_row.emplace(sample.ids[s], s);

    Embedding init_full;
    init_full.n = dataset.n;
    init_full.dim = 2;
    init_full.ids = dataset.ids;
    init_full.coords.assign(dataset.n * 2, 0.0);
    const std::size_t k = static_cast<std::size_t>(plan.prolong_k);
    parallel_for(dataset.n, threads, [&](std::size_t i) {
        const auto it = sample_row.find(dataset.ids[i]);
        if (it != sample_row.end()) {
            init_full.coords[2 * i] = stage2.embedding.coords[2 * it->second];
            init_full.coords[2 * i + 1] = stage2.embedding.coords[2 * it->second + 1];
            return;
        }
        std::vector<std::pair<double, std::size_t>> cand;
        cand.reserve(sample.n);
        for (std::size_t s = 0; s < sample.n; ++s) {
            cand.emplace_back(squared_distance(dataset.row(i), sample.row(s), dataset.dim), s);
        }
        std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k) - 1, cand.end(),
                         [&](const auto& a, const auto& b) {
                             if (a.first != b.first) return a.first < b.first;
                             return sample.ids[a.second] < sample.ids[b.second];
                         });
        double mx = 0.0, my = 0.0;
        for (std::size_t m = 0; m < k; ++m) {
            mx += stage2.embedding.coords[2 * cand[m].second];
            my += stage2.embedding.coords[2 * cand[m].second + 1];
        }
        init_full.coords[2 * i] = mx / static_cast<double>(k);
        init_full.coords[2 * i + 1] = my / static_cast<double>(k);
    });
    result.prolonged_init = init_full;
    {
        StageReport r;
        r.stage = "prolong";
        r.rho = plan.rate;
        r.n = dataset.n - sample.n;
        r.seconds = detail::seconds_since(t0);
        result.stages.push_back(r);
    }

    // (iv) full-set refinement from the rescaled prolonged init.
    t0 = std::chrono::steady_clock::now();
    rescale_first_coordinate_std(init_full, 1e-4);
    TsneResult stage4 = run_tsne(dataset, plan.per_full, plan.stage_full, init_full, threads);
    {
        StageReport r;
        r.stage = "full";
        r.rho = 1.0;
        r.perplexity = plan.per_full;
        r.n = dataset.n;
        r.seconds = detail::seconds_since(t0);
        r.has_kl = !stage4.trace.points.empty();
        r.kl_initial = r.has_kl ? stage4.trace.points.front().cost : 0.0;
        r.kl_final = stage4.trace.final_cost;
        result.stages.push_back(r);
    }
    result.embedding = std::move(stage4.embedding);
    return result;
}

/// Affinity memory model for budget planning.
struct Budget {
    std::size_t max_bytes = 0;
    double bytes_per_entry = 8.0;
    AffinityMode mode = AffinityMode::dense;
};

struct BudgetPlan {
    bool feasible = false;
    double rate = 1.0;
    double scaled_perplexity = 0.0;
};

/// Modeled affinity storage cost at a sampling rate: dense mode stores the
/// full square matrix; sparse mode stores 3 * scaled-perplexity entries per
/// point, doubled by symmetrization (an upper bound).
inline double affinity_cost_bytes(std::size_t n, double rho, double desired_perplexity, const Budget& budget) {
    const auto m = static_cast<double>(sample_size(n, rho));
    if (budget.mode == AffinityMode::dense) return budget.bytes_per_entry * m * m;
    return budget.bytes_per_entry * m * 3.0 * (rho * desired_perplexity) * 2.0;
}

/// Largest sampling rate (granularity 0.01) whose modeled affinity cost fits
/// the budget, with the perplexity scaled along. Infeasible when even
/// rho = 0.01 exceeds the budget or the scaled perplexity drops to 1 or
/// below; planning itself never throws.
inline BudgetPlan budget_plan(std::size_t n, double desired_perplexity, const Budget& budget) {
    if (budget.max_bytes == 0 || !(budget.bytes_per_entry > 0.0) || !(desired_perplexity > 0.0) || n < 2) {
        return {false, 1.0, desired_perplexity};
    }
    for (int i = 100; i >= 1; --i) {
        const double rho = static_cast<double>(i) / 100.0;
        const double cost = affinity_cost_bytes(n, rho, desired_perplexity, budget);
        if (cost <= static_cast<double>(budget.max_bytes)) {
            const double scaled = rho * desired_perplexity;
            if (scaled <= 1.0) return {false, 1.0, desired_perplexity};
            return {true, rho, scaled};
        }
    }
    return {false, 1.0, desired_perplexity};
}

} // namespace perpscale

#endif
