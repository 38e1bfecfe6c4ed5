#ifndef PERPSCALE_SAMPLING_HPP
#define PERPSCALE_SAMPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "perpscale/dataset.hpp"
#include "perpscale/error.hpp"
#include "perpscale/random.hpp"

namespace perpscale {

/// A seeded chain of nested uniform subsamples keyed by sampling rate.
/// Levels are sorted id lists; each smaller level is a subset of the next
/// larger one.
struct SamplePlan {
    std::uint64_t seed = 0;
    std::vector<double> rates;                       // strictly descending, in (0, 1]
    std::vector<std::vector<std::int64_t>> levels;   // levels[i] sorted, |levels[i]| = ceil(n * rates[i])
};

/// ceil(n * rate) with a snap to the nearest integer when the product is one
/// up to floating-point rounding (e.g. 70000 * 0.1).
inline std::size_t sample_size(std::size_t n, double rate) {
    const double t = static_cast<double>(n) * rate;
    const double nearest = std::round(t);
    if (std::abs(t - nearest) <= 1e-9 * std::max(1.0, std::abs(t))) {
        return static_cast<std::size_t>(nearest);
    }
    return static_cast<std::size_t>(std::ceil(t));
}

namespace detail {

/// Partial Fisher-Yates: permutes the first `m` slots of `pool` uniformly
/// without replacement, consuming `rng`.
inline void partial_shuffle(std::vector<std::int64_t>& pool, std::size_t m, SplitMix64& rng) {
    const std::size_t n = pool.size();
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[i], pool[j]);
    }
}

/// Uniform sample of `m` ids from `pool`, returned sorted.
inline std::vector<std::int64_t> uniform_sample(std::vector<std::int64_t> pool, std::size_t m, SplitMix64& rng) {
    partial_shuffle(pool, m, rng);
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace detail

/// Draws a nested chain of uniform subsamples: each level is drawn without
/// replacement from the previous (larger) level, so subset relations hold by
/// construction. Bit-for-bit reproducible from (seed, rates, ids).
inline SamplePlan draw_nested_samples(const Dataset& dataset, std::vector<double> rates, std::uint64_t seed) {
    if (rates.empty()) throw UsageError("draw_nested_samples: empty rate list");
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (!(rates[i] > 0.0) || rates[i] > 1.0) {
            throw UsageError("draw_nested_samples: rate " + std::to_string(rates[i]) + " outside (0, 1]");
        }
        if (i > 0 && !(rates[i] < rates[i - 1])) {
            throw UsageError("draw_nested_samples: rates must be strictly descending");
        }
    }
    if (sample_size(dataset.n, rates.back()) < 2) {
        throw UsageError("draw_nested_samples: smallest rate " + std::to_string(rates.back()) +
                         " yields fewer than 2 points (n = " + std::to_string(dataset.n) + ")");
    }

    SamplePlan plan;
    plan.seed = seed;
    plan.rates = std::move(rates);
    plan.levels.reserve(plan.rates.size());

    SplitMix64 rng(seed);
    std::vector<std::int64_t> parent(dataset.ids);
    std::sort(parent.begin(), parent.end());
    for (double rate : plan.rates) {
        const std::size_t m = sample_size(dataset.n, rate);
        parent = detail::uniform_sample(std::move(parent), m, rng);
        plan.levels.push_back(parent);
    }
    return plan;
}

/// Restricts a dataset to the plan's level for `rate`. Ids and labels are
/// preserved; rows are ordered by id.
inline Dataset materialize_sample(const Dataset& dataset, const SamplePlan& plan, double rate) {
    std::size_t level_index = plan.rates.size();
    for (std::size_t i = 0; i < plan.rates.size(); ++i) {
        if (plan.rates[i] == rate) { level_index = i; break; }
    }
    if (level_index == plan.rates.size()) {
        throw UsageError("materialize_sample: rate " + std::to_string(rate) + " not in plan");
    }
    const auto& level = plan.levels[level_index];

    // Source row lookup by id.
    std::vector<std::pair<std::int64_t, std::size_t>> by_id(dataset.n);
    for (std::size_t i = 0; i < dataset.n; ++i) by_id[i] = {dataset.ids[i], i};
    std::sort(by_id.begin(), by_id.end());

    Dataset out;
    out.n = level.size();
    out.dim = dataset.dim;
    out.name = dataset.name;
    out.points.reserve(out.n * out.dim);
    out.ids = level;  // already sorted
    if (dataset.labels) out.labels.emplace();
    for (std::int64_t id : level) {
        const auto it = std::lower_bound(by_id.begin(), by_id.end(), std::make_pair(id, std::size_t{0}));
        if (it == by_id.end() || it->first != id) {
            throw UsageError("materialize_sample: plan id " + std::to_string(id) + " not present in dataset");
        }
        const std::size_t src = it->second;
        out.points.insert(out.points.end(), dataset.row(src), dataset.row(src) + dataset.dim);
        if (dataset.labels) out.labels->push_back((*dataset.labels)[src]);
    }
    out.validate();
    return out;
}

} // namespace perpscale

#endif
