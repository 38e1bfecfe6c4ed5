#ifndef PERPSCALE_EMBEDDING_HPP
#define PERPSCALE_EMBEDDING_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "perpscale/error.hpp"

namespace perpscale {

/// Low-dimensional coordinates keyed by the same point ids as the source
/// dataset. Coordinates are finite at all times; the optimizer treats a
/// non-finite value as divergence, not as a representable state.
struct Embedding {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<double> coords;        // n * dim, row-major
    std::vector<std::int64_t> ids;

    const double* row(std::size_t i) const { return coords.data() + i * dim; }
    double* row(std::size_t i) { return coords.data() + i * dim; }

    bool all_finite() const {
        for (double v : coords) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
};

/// Centers columns to zero mean, then scales all coordinates uniformly so the
/// first coordinate's standard deviation equals `target_std`. This is the
/// small-norm convention shared by the PCA init and prolongation-based inits;
/// with it, early-exaggeration attraction behaves identically regardless of
/// where an init came from. No-op scaling when the first column is constant.
inline void rescale_first_coordinate_std(Embedding& e, double target_std = 1e-4) {
    if (e.n == 0 || e.dim == 0) return;
    for (std::size_t c = 0; c < e.dim; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < e.n; ++i) mean += e.coords[i * e.dim + c];
        mean /= static_cast<double>(e.n);
        for (std::size_t i = 0; i < e.n; ++i) e.coords[i * e.dim + c] -= mean;
    }
    double var = 0.0;
    for (std::size_t i = 0; i < e.n; ++i) {
        const double v = e.coords[i * e.dim];
        var += v * v;
    }
    var /= static_cast<double>(e.n);
    if (var <= 0.0) return;
    const double scale = target_std / std::sqrt(var);
    for (double& v : e.coords) v *= scale;
}

} // namespace perpscale

#endif
