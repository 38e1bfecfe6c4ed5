#ifndef PERPSCALE_DISTANCE_HPP
#define PERPSCALE_DISTANCE_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "perpscale/dataset.hpp"
#include "perpscale/error.hpp"
#include "perpscale/parallel.hpp"

namespace perpscale {

/// Squared Euclidean distances from one center point to a set of neighbors.
/// The center itself is never among the neighbors.
struct DistanceRow {
    std::int64_t center_id = 0;
    std::vector<std::int64_t> neighbor_ids;
    std::vector<double> sq_dists;
};

inline double squared_distance(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

/// Distance row from point `i` to every other point, in row order.
inline DistanceRow full_distance_row(const Dataset& dataset, std::size_t i) {
    DistanceRow row;
    row.center_id = dataset.ids[i];
    row.neighbor_ids.reserve(dataset.n - 1);
    row.sq_dists.reserve(dataset.n - 1);
    for (std::size_t j = 0; j < dataset.n; ++j) {
        if (j == i) continue;
        row.neighbor_ids.push_back(dataset.ids[j]);
        row.sq_dists.push_back(squared_distance(dataset.row(i), dataset.row(j), dataset.dim));
    }
    return row;
}

/// Exact k-nearest-neighbor graph by brute force. Ties in distance are broken
/// by the smaller id, which makes the graph fully deterministic.
inline std::vector<DistanceRow> knn_graph(const Dataset& dataset, std::size_t k, int threads = 1) {
    if (k < 1 || k > dataset.n - 1) {
        throw UsageError("knn_graph: k = " + std::to_string(k) + " outside [1, " + std::to_string(dataset.n - 1) + "]");
    }
    std::vector<DistanceRow> rows(dataset.n);
    parallel_for(dataset.n, threads, [&](std::size_t i) {
        std::vector<std::pair<double, std::int64_t>> cand;
        cand.reserve(dataset.n - 1);
        for (std::size_t j = 0; j < dataset.n; ++j) {
            if (j == i) continue;
            cand.emplace_back(squared_distance(dataset.row(i), dataset.row(j), dataset.dim), dataset.ids[j]);
        }
        std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k) - 1, cand.end());
        cand.resize(k);
        std::sort(cand.begin(), cand.end());
        DistanceRow& row = rows[i];
        row.center_id = dataset.ids[i];
        row.neighbor_ids.resize(k);
        row.sq_dists.resize(k);
        for (std::size_t m = 0; m < k; ++m) {
            row.sq_dists[m] = cand[m].first;
            row.neighbor_ids[m] = cand[m].second;
        }
    });
    return rows;
}

} // namespace perpscale

#endif
