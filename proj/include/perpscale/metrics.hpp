#ifndef PERPSCALE_METRICS_HPP
#define PERPSCALE_METRICS_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "perpscale/dataset.hpp"
#include "perpscale/distance.hpp"
#include "perpscale/embedding.hpp"
#include "perpscale/error.hpp"

namespace perpscale {

/// Mean shared-neighbor fraction between two embeddings over their common
/// ids; this artifact's operationalization of "structurally consistent".
struct ConsistencyScore {
    double knn_overlap = 0.0;
    std::size_t k = 0;
    std::size_t n_shared = 0;
};

namespace detail {

/// k nearest neighbor ids of point `i` among `coords` (n x dim), ties broken
/// by smaller id. Returned sorted by id for fast intersection.
inline std::vector<std::int64_t> knn_ids(const std::vector<double>& coords, std::size_t n, std::size_t dim,
                                         const std::vector<std::int64_t>& ids, std::size_t i, std::size_t k) {
    std::vector<std::pair<double, std::int64_t>> cand;
    cand.reserve(n - 1);
    const double* a = coords.data() + i * dim;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        cand.emplace_back(squared_distance(a, coords.data() + j * dim, dim), ids[j]);
    }
    std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k) - 1, cand.end());
    cand.resize(k);
    std::vector<std::int64_t> out(k);
    for (std::size_t m = 0; m < k; ++m) out[m] = cand[m].second;
    std::sort(out.begin(), out.end());
    return out;
}

inline std::size_t sorted_intersection_size(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
    std::size_t i = 0, j = 0, count = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (b[j] < a[i]) ++j;
        else { ++count; ++i; ++j; }
    }
    return count;
}

/// Restriction of an embedding to a sorted id list, rows in id order.
inline Embedding restrict_to_ids(const Embedding& e, const std::vector<std::int64_t>& ids) {
    std::vector<std::pair<std::int64_t, std::size_t>> by_id(e.n);
    for (std::size_t i = 0; i < e.n; ++i) by_id[i] = {e.ids[i], i};
    std::sort(by_id.begin(), by_id.end());
    Embedding out;
    out.n = ids.size();
    out.dim = e.dim;
    out.ids = ids;
    out.coords.reserve(out.n * out.dim);
    for (std::int64_t id : ids) {
        const auto it = std::lower_bound(by_id.begin(), by_id.end(), std::make_pair(id, std::size_t{0}));
        out.coords.insert(out.coords.end(), e.row(it->second), e.row(it->second) + e.dim);
    }
    return out;
}

} // namespace detail

/// Mean over shared points of |kNN_a intersect kNN_b| / k, with both
/// neighborhoods computed among the shared ids only. Invariant under
/// rotation, reflection, translation and uniform scaling of either side
/// (only neighbor ranks enter), and symmetric in its arguments.
inline ConsistencyScore knn_overlap(const Embedding& a, const Embedding& b, std::size_t k) {
    std::vector<std::int64_t> ids_a(a.ids), ids_b(b.ids);
    std::sort(ids_a.begin(), ids_a.end());
    std::sort(ids_b.begin(), ids_b.end());
    std::vector<std::int64_t> shared;
    std::set_intersection(ids_a.begin(), ids_a.end(), ids_b.begin(), ids_b.end(), std::back_inserter(shared));
    if (shared.size() <= k) {
        throw UsageError("knn_overlap: only " + std::to_string(shared.size()) + " shared ids for k = " + std::to_string(k));
    }
    const Embedding ra = detail::restrict_to_ids(a, shared);
    const Embedding rb = detail::restrict_to_ids(b, shared);
    double total = 0.0;
    for (std::size_t i = 0; i < shared.size(); ++i) {
        const auto na = detail::knn_ids(ra.coords, ra.n, ra.dim, ra.ids, i, k);
        const auto nb = detail::knn_ids(rb.coords, rb.n, rb.dim, rb.ids, i, k);
        total += static_cast<double>(detail::sorted_intersection_size(na, nb)) / static_cast<double>(k);
    }
    return {total / static_cast<double>(shared.size()), k, shared.size()};
}

/// Mean fraction of each point's high-dimensional k nearest neighbors that
/// are recovered among its embedding k nearest neighbors.
inline double neighborhood_recall(const Dataset& dataset, const Embedding& embedding, std::size_t k) {
    if (k < 1 || k >= dataset.n) throw UsageError("neighborhood_recall: k outside [1, n)");
    std::vector<std::int64_t> ids_d(dataset.ids), ids_e(embedding.ids);
    std::sort(ids_d.begin(), ids_d.end());
    std::sort(ids_e.begin(), ids_e.end());
    if (ids_d != ids_e) throw UsageError("neighborhood_recall: dataset and embedding must cover the same ids");

    // Align both to id order.
    Embedding emb = detail::restrict_to_ids(embedding, ids_d);
    Dataset data;
    data.n = dataset.n;
    data.dim = dataset.dim;
    data.ids = ids_d;
    data.points.reserve(dataset.n * dataset.dim);
    {
        std::vector<std::pair<std::int64_t, std::size_t>> by_id(dataset.n);
        for (std::size_t i = 0; i < dataset.n; ++i) by_id[i] = {dataset.ids[i], i};
        std::sort(by_id.begin(), by_id.end());
        for (const auto& [id, src] : by_id) {
            data.points.insert(data.points.end(), dataset.row(src), dataset.row(src) + dataset.dim);
        }
    }

    double total = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        const auto nh = detail::knn_ids(data.points, data.n, data.dim, data.ids, i, k);
        const auto ne = detail::knn_ids(emb.coords, emb.n, emb.dim, emb.ids, i, k);
        total += static_cast<double>(detail::sorted_intersection_size(nh, ne)) / static_cast<double>(k);
    }
    return total / static_cast<double>(data.n);
}

/// Standard mean silhouette over points with Euclidean distance in the
/// embedding. Requires at least two labels, each with at least two members.
/// Points with a(i) = b(i) = 0 score 0.
inline double silhouette(const Embedding& embedding, std::span<const std::int32_t> labels) {
    const std::size_t n = embedding.n;
    if (labels.size() != n) throw UsageError("silhouette: label count does not match embedding size");
    std::map<std::int32_t, std::size_t> counts;
    for (std::int32_t lab : labels) ++counts[lab];
    if (counts.size() < 2) throw UsageError("silhouette: degenerate labeling, need at least 2 labels");
    for (const auto& [lab, c] : counts) {
        if (c < 2) {
            throw UsageError("silhouette: degenerate labeling, label " + std::to_string(lab) + " has fewer than 2 members");
        }
    }

    double total = 0.0;
    std::map<std::int32_t, double> sums;
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& [lab, s] : sums) s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dist = std::sqrt(squared_distance(embedding.row(i), embedding.row(j), embedding.dim));
            sums[labels[j]] += dist;
        }
        const std::int32_t own = labels[i];
        const double a = sums[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [lab, s] : sums) {
            if (lab == own) continue;
            b = std::min(b, s / static_cast<double>(counts[lab]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

} // namespace perpscale

#endif
