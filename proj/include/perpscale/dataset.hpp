#ifndef PERPSCALE_DATASET_HPP
#define PERPSCALE_DATASET_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "perpscale/error.hpp"

namespace perpscale {

/// A row-major matrix of n points in `dim` dimensions with stable point ids.
/// Ids are the identity across the whole system and survive every sampling
/// operation; labels are carry-along metadata used only for plotting.
struct Dataset {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<double> points;                        // n * dim, row-major
    std::vector<std::int64_t> ids;                     // unique, non-negative
    std::optional<std::vector<std::int32_t>> labels;   // n entries when present
    std::string name;

    const double* row(std::size_t i) const { return points.data() + i * dim; }
    double* row(std::size_t i) { return points.data() + i * dim; }

    /// Throws DataError on any invariant violation, naming the offending
    /// row/column or id.
    void validate() const {
        if (n < 2) throw DataError("dataset '" + name + "': n = " + std::to_string(n) + " but at least 2 points are required");
        if (dim < 1) throw DataError("dataset '" + name + "': dimension must be >= 1");
        if (points.size() != n * dim) throw DataError("dataset '" + name + "': point buffer size mismatch");
        if (ids.size() != n) throw DataError("dataset '" + name + "': id count mismatch");
        if (labels && labels->size() != n) throw DataError("dataset '" + name + "': label count mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                if (!std::isfinite(points[i * dim + j])) {
                    throw DataError("dataset '" + name + "': non-finite value at row " + std::to_string(i) +
                                    ", column " + std::to_string(j));
                }
            }
        }
        std::unordered_set<std::int64_t> seen;
        seen.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (ids[i] < 0) throw DataError("dataset '" + name + "': negative id " + std::to_string(ids[i]) + " at row " + std::to_string(i));
            if (!seen.insert(ids[i]).second) {
                throw DataError("dataset '" + name + "': duplicate id " + std::to_string(ids[i]) + " at row " + std::to_string(i));
            }
        }
    }
};

/// Builds a dataset with ids 0..n-1. Validates before returning.
inline Dataset make_dataset(std::size_t n, std::size_t dim, std::vector<double> points,
                            std::optional<std::vector<std::int32_t>> labels = std::nullopt,
                            std::string name = "dataset") {
    Dataset d;
    d.n = n;
    d.dim = dim;
    d.points = std::move(points);
    d.ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.ids[i] = static_cast<std::int64_t>(i);
    d.labels = std::move(labels);
    d.name = std::move(name);
    d.validate();
    return d;
}

} // namespace perpscale

#endif
