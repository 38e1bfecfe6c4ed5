#ifndef PERPSCALE_SCALING_HPP
#define PERPSCALE_SCALING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "perpscale/affinity.hpp"
#include "perpscale/dataset.hpp"
#include "perpscale/distance.hpp"
#include "perpscale/error.hpp"
#include "perpscale/parallel.hpp"
#include "perpscale/random.hpp"
#include "perpscale/sampling.hpp"

namespace perpscale {

enum class Rounding { nearest, ceil, none };

/// The linear rule Per' = Per * n' / n, expressed against a base
/// (perplexity, cardinality) pair so it composes across arbitrary sizes.
struct ScalingRule {
    double base_perplexity = 0.0;
    std::size_t base_n = 0;
    Rounding rounding = Rounding::nearest;

    void validate() const {
        if (base_n < 2) throw UsageError("ScalingRule: base_n must be >= 2");
        if (!(base_perplexity > 1.0) || !(base_perplexity < static_cast<double>(base_n))) {
            throw UsageError("ScalingRule: base perplexity must lie in (1, base_n)");
        }
    }
};

/// Scales the rule's perplexity to a target cardinality. Values below 1 are
/// rejected: bandwidths become too narrow to relate any points, the rule's
/// lower bound of validity. A result of exactly 1 is allowed (it occurs in
/// legitimate downscaling, e.g. 10 at n scaled to n/10).
inline double scale_perplexity(const ScalingRule& rule, std::size_t target_n) {
    rule.validate();
    if (target_n < 2) throw UsageError("scale_perplexity: target_n must be >= 2");
    const double exact = rule.base_perplexity * static_cast<double>(target_n) / static_cast<double>(rule.base_n);
    if (exact < 1.0) {
        throw UsageError("scale_perplexity: perplexity_underflow, scaled value " + std::to_string(exact) + " is below 1");
    }
    switch (rule.rounding) {
        case Rounding::nearest: return std::round(exact);
        case Rounding::ceil: return std::ceil(exact);
        case Rounding::none: return exact;
    }
    return exact;
}

/// Per-point sample perplexity with its bandwidth-search flag. Flagged
/// points mark unreachable bandwidth targets on the full set and are kept
/// out of medians and trend fits.
struct PointPerplexity {
    std::int64_t id = 0;
    double value = 0.0;
    BandwidthFlag flag = BandwidthFlag::none;
};

/// Bandwidths for every point, solved against the full dataset at the given
/// perplexity with all points in the row (dense mode), as the Monte Carlo
/// estimator requires.
inline std::vector<BandwidthResult> full_set_bandwidths(const Dataset& full, double perplexity, int threads = 1) {
    if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(full.n))) {
        throw UsageError("full_set_bandwidths: perplexity " + std::to_string(perplexity) + " outside (1, n)");
    }
    std::vector<BandwidthResult> out(full.n);
    parallel_for(full.n, threads, [&](std::size_t i) {
        out[i] = find_bandwidth(full_distance_row(full, i), perplexity);
    });
    return out;
}

namespace detail {

/// Sample perplexity of one sampled point: conditional probabilities over
/// the sample only, using the full-set bandwidth, then 2^entropy.
inline double sample_point_perplexity(const Dataset& sample, std::size_t s, double sigma) {
    DistanceRow row;
    row.center_id = sample.ids[s];
    row.sq_dists.reserve(sample.n - 1);
    for (std::size_t j = 0; j < sample.n; ++j) {
        if (j == s) continue;
        row.sq_dists.push_back(squared_distance(sample.row(s), sample.row(j), sample.dim));
    }
    std::vector<double> scratch;
    return perplexity_at_sigma(row, sigma, scratch);
}

inline std::unordered_map<std::int64_t, std::size_t> row_index_by_id(const Dataset& d) {
    std::unordered_map<std::int64_t, std::size_t> map;
    map.reserve(d.n);
    for (std::size_t i = 0; i < d.n; ++i) map.emplace(d.ids[i], i);
    return map;
}

inline Dataset subset_by_ids(const Dataset& full, const std::vector<std::int64_t>& ids,
                             const std::unordered_map<std::int64_t, std::size_t>& index) {
    Dataset out;
    out.n = ids.size();
    out.dim = full.dim;
    out.name = full.name;
    out.ids = ids;
    out.points.reserve(out.n * out.dim);
    if (full.labels) out.labels.emplace();
    for (std::int64_t id : ids) {
        const std::size_t src = index.at(id);
        out.points.insert(out.points.end(), full.row(src), full.row(src) + full.dim);
        if (full.labels) out.labels->push_back((*full.labels)[src]);
    }
    return out;
}

inline std::vector<PointPerplexity> sample_perplexities(const Dataset& sample,
                                                        const std::vector<BandwidthResult>& full_bw,
                                                        const std::unordered_map<std::int64_t, std::size_t>& full_index,
                                                        int threads) {
    std::vector<PointPerplexity> out(sample.n);
    parallel_for(sample.n, threads, [&](std::size_t s) {
        const auto it = full_index.find(sample.ids[s]);
        if (it == full_index.end()) {
            throw UsageError("monte_carlo_perplexities: sample id " + std::to_string(sample.ids[s]) +
                             " is not part of the full dataset");
        }
        const BandwidthResult& bw = full_bw[it->second];
        out[s] = {sample.ids[s], sample_point_perplexity(sample, s, bw.sigma), bw.flag};
    });
    return out;
}

} // namespace detail

/// Algorithm-1 estimator: for each sampled point, solve the bandwidth on the
/// full dataset at `perplexity`, renormalize the conditional probabilities
/// over the sample only, and report 2^entropy as that point's sample
/// perplexity. With sample == full this reproduces `perplexity` at every
/// unclamped point up to the bandwidth tolerance.
inline std::vector<PointPerplexity> monte_carlo_perplexities(const Dataset& full, const Dataset& sample,
                                                             double perplexity, int threads = 1) {
    if (sample.n < 2) throw UsageError("monte_carlo_perplexities: sample must hold at least 2 points");
    if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(full.n))) {
        throw UsageError("monte_carlo_perplexities: perplexity outside (1, n) for the full dataset");
    }
    const auto full_index = detail::row_index_by_id(full);
    for (std::int64_t id : sample.ids) {
        if (!full_index.count(id)) {
            throw UsageError("monte_carlo_perplexities: sample id " + std::to_string(id) + " is not part of the full dataset");
        }
    }
    // Bandwidths only for the sampled ids; each against the full point set.
    std::vector<BandwidthResult> bw(full.n);
    std::vector<std::size_t> rows(sample.n);
    for (std::size_t s = 0; s < sample.n; ++s) rows[s] = full_index.at(sample.ids[s]);
    parallel_for(sample.n, threads, [&](std::size_t s) {
        bw[rows[s]] = find_bandwidth(full_distance_row(full, rows[s]), perplexity);
    });
    return detail::sample_perplexities(sample, bw, full_index, threads);
}

/// One Monte Carlo cell: the per-point sample perplexities of one
/// independent uniform sample at one rate.
struct MonteCarloCell {
    double rate = 0.0;
    int repeat = 0;
    std::vector<PointPerplexity> values;
};

struct MonteCarloReport {
    double perplexity = 0.0;
    std::vector<double> rates;
    int repeats = 0;
    std::vector<MonteCarloCell> cells;                      // (rate-major, repeat-minor) order
    std::vector<std::pair<double, double>> medians;         // (rate, median over unflagged values)
    std::vector<std::pair<double, std::size_t>> excluded;   // (rate, flagged point count)
    double fit_slope = 0.0;
    double fit_r2 = 0.0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

/// Least-squares line through the anchor (1, per): y = per + slope (x - 1).
/// When every point sits at x = 1 the slope is undetermined and the
/// Proposition-1 limit (the line through the origin and the anchor, slope =
/// per) is reported, with R^2 = 1 for zero residuals.
inline void anchored_fit(const std::vector<std::pair<double, double>>& medians, double per,
                         double& slope, double& r2) {
    std::vector<std::pair<double, double>> data(medians);
    data.emplace_back(1.0, per);

    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : data) {
        sxx += (x - 1.0) * (x - 1.0);
        sxy += (x - 1.0) * (y - per);
    }
    if (sxx == 0.0) {
        // Every point sits at the anchor rate; any slope fits. Report the
        // Proposition-1 limit line, a perfect fit by convention.
        slope = per;
        r2 = 1.0;
        return;
    }
    slope = sxy / sxx;

    double mean_y = 0.0;
    for (const auto& [x, y] : data) mean_y += y;
    mean_y /= static_cast<double>(data.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& [x, y] : data) {
        const double fitted = per + slope * (x - 1.0);
        ss_res += (y - fitted) * (y - fitted);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res <= 1e-18 ? 1.0 : 0.0);
}

} // namespace detail

/// Runs the Monte Carlo experiment: independent (non-nested) uniform samples
/// per (rate, repeat) cell with per-cell seeds derived from the base seed,
/// per-point sample perplexities via the Algorithm-1 estimator, medians over
/// the union of repeats, and the anchored linear fit. Bandwidths are solved
/// once per point on the full dataset and shared across cells; flagged
/// points are excluded from medians and fit but counted.
inline MonteCarloReport mc_report(const Dataset& full, const std::vector<double>& rates, int repeats,
                                  double perplexity, std::uint64_t seed, int threads = 1) {
    if (repeats < 1) throw UsageError("mc_report: repeats must be >= 1");
    if (rates.empty()) throw UsageError("mc_report: empty rate list");
    for (double r : rates) {
        if (!(r > 0.0) || r > 1.0) throw UsageError("mc_report: rate " + std::to_string(r) + " outside (0, 1]");
        if (sample_size(full.n, r) < 2) {
            throw UsageError("mc_report: rate " + std::to_string(r) + " yields a sample of fewer than 2 points");
        }
    }

    MonteCarloReport report;
    report.perplexity = perplexity;
    report.rates = rates;
    report.repeats = repeats;

    const auto full_index = detail::row_index_by_id(full);
    const std::vector<BandwidthResult> bw = full_set_bandwidths(full, perplexity, threads);

    std::vector<std::int64_t> all_ids(full.ids);
    std::sort(all_ids.begin(), all_ids.end());

    for (std::size_t ri = 0; ri < rates.size(); ++ri) {
        for (int rep = 0; rep < repeats; ++rep) {
            SplitMix64 rng(substream_seed(seed, ri, static_cast<std::uint64_t>(rep)));
            const std::size_t m = sample_size(full.n, rates[ri]);
            const std::vector<std::int64_t> ids = detail::uniform_sample(all_ids, m, rng);
            const Dataset sample = detail::subset_by_ids(full, ids, full_index);
            MonteCarloCell cell;
            cell.rate = rates[ri];
            cell.repeat = rep;
            cell.values = detail::sample_perplexities(sample, bw, full_index, threads);
            report.cells.push_back(std::move(cell));
        }
    }

    for (std::size_t ri = 0; ri < rates.size(); ++ri) {
        std::vector<double> pooled;
        std::size_t flagged = 0;
        for (const auto& cell : report.cells) {
            if (cell.rate != rates[ri]) continue;
            for (const auto& pv : cell.values) {
                if (pv.flag == BandwidthFlag::none) {
                    pooled.push_back(pv.value);
                } else {
                    ++flagged;
                }
            }
        }
        report.excluded.emplace_back(rates[ri], flagged);
        if (!pooled.empty()) {
            report.medians.emplace_back(rates[ri], detail::median_of(std::move(pooled)));
        }
    }

    detail::anchored_fit(report.medians, perplexity, report.fit_slope, report.fit_r2);
    return report;
}

} // namespace perpscale

#endif
