#ifndef PERPSCALE_TESTS_SUPPORT_HPP
#define PERPSCALE_TESTS_SUPPORT_HPP

// Shared fixtures and independent oracles for the test suites. Oracle code
// here must stay independent of the library paths it checks.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "perpscale/dataset.hpp"
#include "perpscale/random.hpp"

namespace testsup {

// ------------------------------------------------------ synthetic data ----

/// Gaussian blobs at explicit centers, round-robin assignment, labeled.
inline perpscale::Dataset blob_dataset(std::size_t n, const std::vector<std::vector<double>>& centers,
                                       double sigma, std::uint64_t seed, const std::string& name = "blobs") {
    const std::size_t d = centers.front().size();
    perpscale::SplitMix64 rng(seed);
    std::vector<double> points(n * d);
    std::vector<std::int32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % centers.size();
        labels[i] = static_cast<std::int32_t>(c);
        for (std::size_t j = 0; j < d; ++j) {
            points[i * d + j] = centers[c][j] + sigma * rng.next_gaussian();
        }
    }
    return perpscale::make_dataset(n, d, std::move(points), std::move(labels), name);
}

/// The acceptance-style mixture: k equal spherical clusters with centers
/// drawn i.i.d. from a ball of the given radius.
inline perpscale::Dataset gaussian_mixture(std::size_t n, std::size_t d, std::size_t k, double cluster_sigma,
                                           double center_radius, std::uint64_t seed,
                                           const std::string& name = "mixture") {
    perpscale::SplitMix64 rng(seed);
    std::vector<std::vector<double>> centers(k, std::vector<double>(d));
    for (auto& c : centers) {
        double norm = 0.0;
        for (auto& v : c) {
            v = rng.next_gaussian();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        const double r = center_radius * std::pow(rng.next_double(), 1.0 / static_cast<double>(d));
        for (auto& v : c) v = v / norm * r;
    }
    return blob_dataset(n, centers, cluster_sigma, perpscale::mix64(seed ^ 0xB10B5), name);
}

inline perpscale::Dataset random_gaussian(std::size_t n, std::size_t d, std::uint64_t seed,
                                          const std::string& name = "gauss") {
    perpscale::SplitMix64 rng(seed);
    std::vector<double> points(n * d);
    for (auto& v : points) v = rng.next_gaussian();
    return perpscale::make_dataset(n, d, std::move(points), std::nullopt, name);
}

// ------------------------------------------------------- eigen oracle ----

/// Cyclic Jacobi eigenvalues of a symmetric matrix, descending. Independent
/// of the library's power-iteration PCA.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t d) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
        }
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a[p * d + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = a[p * d + p];
                const double aqq = a[q * d + q];
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a[k * d + p];
                    const double akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a[p * d + k];
                    const double aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(d);
    for (std::size_t i = 0; i < d; ++i) eig[i] = a[i * d + i];
    std::sort(eig.rbegin(), eig.rend());
    return eig;
}

// ----------------------------------------------------- geometry oracle ----

/// Convex hull by monotone chain, then point-in-polygon with a tolerance.
/// Degenerate hulls (segments, single points) are handled via distance.
inline bool point_in_convex_hull(double px, double py, std::vector<std::pair<double, double>> pts, double eps) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() == 1) {
        return std::hypot(px - pts[0].first, py - pts[0].second) <= eps;
    }
    auto cross = [](const std::pair<double, double>& o, const std::pair<double, double>& a,
                    const std::pair<double, double>& b) {
        return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
    };
    std::vector<std::pair<double, double>> hull;
    for (const auto& p : pts) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0) hull.pop_back();
        hull.push_back(p);
    }
    const std::size_t lower = hull.size() + 1;
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
        while (hull.size() >= lower && cross(hull[hull.size() - 2], hull.back(), *it) <= 0) hull.pop_back();
        hull.push_back(*it);
    }
    hull.pop_back();
    if (hull.size() <= 2) {
        // Collinear: distance to the segment between extremes.
        const auto& a = pts.front();
        const auto& b = pts.back();
        const double vx = b.first - a.first, vy = b.second - a.second;
        const double len_sq = vx * vx + vy * vy;
        double t = len_sq > 0.0 ? ((px - a.first) * vx + (py - a.second) * vy) / len_sq : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        return std::hypot(px - (a.first + t * vx), py - (a.second + t * vy)) <= eps;
    }
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        const double c = (b.first - a.first) * (py - a.second) - (b.second - a.second) * (px - a.first);
        const double edge = std::hypot(b.first - a.first, b.second - a.second);
        if (c < -eps * std::max(edge, 1.0)) return false;
    }
    return true;
}

// --------------------------------------------------------- XML checker ----

/// Minimal well-formedness check: balanced tags, quoted attributes, known
/// entities. Returns an empty string on success, else a diagnostic.
inline std::string xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    const std::size_t n = text.size();
    auto fail = [&](const std::string& why) { return why + " at offset " + std::to_string(i); };

    while (i < n) {
        if (text[i] != '<') {
            if (text[i] == '&') {
                const std::size_t semi = text.find(';', i);
                if (semi == std::string::npos || semi - i > 10) return fail("unterminated entity");
                const std::string ent = text.substr(i + 1, semi - i - 1);
                if (ent != "amp" && ent != "lt" && ent != "gt" && ent != "quot" && ent != "apos" &&
                    !(ent.size() > 1 && ent[0] == '#')) {
                    return fail("unknown entity &" + ent + ";");
                }
                i = semi + 1;
                continue;
            }
            if (text[i] == '>') return fail("stray '>'");
            ++i;
            continue;
        }
        // '<' seen.
        if (text.compare(i, 5, "<?xml") == 0) {
            const std::size_t end = text.find("?>", i);
            if (end == std::string::npos) return fail("unterminated prologue");
            i = end + 2;
            continue;
        }
        if (text.compare(i, 4, "<!--") == 0) {
            const std::size_t end = text.find("-->", i);
            if (end == std::string::npos) return fail("unterminated comment");
            i = end + 3;
            continue;
        }
        const bool closing = i + 1 < n && text[i + 1] == '/';
        std::size_t j = i + (closing ? 2 : 1);
        std::size_t name_start = j;
        while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == ':' || text[j] == '-' || text[j] == '_')) ++j;
        const std::string name = text.substr(name_start, j - name_start);
        if (name.empty()) return fail("missing tag name");
        if (closing) {
            while (j < n && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j >= n || text[j] != '>') return fail("malformed closing tag");
            if (stack.empty() || stack.back() != name) return fail("mismatched </" + name + ">");
            stack.pop_back();
            i = j + 1;
            continue;
        }
        // Attributes.
        bool self_closing = false;
        while (j < n && text[j] != '>') {
            if (text[j] == '/' && j + 1 < n && text[j + 1] == '>') {
                self_closing = true;
                j += 1;
                break;
            }
            if (std::isspace(static_cast<unsigned char>(text[j]))) { ++j; continue; }
            std::size_t attr_start = j;
            while (j < n && text[j] != '=' && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != '>') ++j;
            if (j >= n || text[j] != '=') return fail("attribute without value near " + text.substr(attr_start, 12));
            ++j;
            if (j >= n || (text[j] != '"' && text[j] != '\'')) return fail("unquoted attribute value");
            const char quote = text[j];
            ++j;
            while (j < n && text[j] != quote) {
                if (text[j] == '<') return fail("'<' in attribute value");
                ++j;
            }
            if (j >= n) return fail("unterminated attribute value");
            ++j;
        }
        if (j >= n) return fail("unterminated tag <" + name);
        if (!self_closing) stack.push_back(name);
        i = j + 1;
    }
    if (!stack.empty()) return "unclosed tag <" + stack.back() + ">";
    return "";
}

// ----------------------------------------------------------- tmp files ----

inline std::filesystem::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("perpscale_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace testsup

#endif
