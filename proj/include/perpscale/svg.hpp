#ifndef PERPSCALE_SVG_HPP
#define PERPSCALE_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "perpscale/embedding.hpp"
#include "perpscale/random.hpp"
#include "perpscale/scaling.hpp"

namespace perpscale {

namespace svg {

/// Fixed 10-color palette; labels map through modulo.
inline const char* label_color(std::int64_t label) {
    static const char* palette[10] = {
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    };
    return palette[((label % 10) + 10) % 10];
}

inline std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Panel {
    std::string title;
    const Embedding* embedding = nullptr;                 // null for infeasible cells
    const std::vector<std::int32_t>* labels = nullptr;    // optional, aligned to embedding rows
    bool infeasible = false;
};

inline constexpr double kPanelSize = 320.0;
inline constexpr double kPanelPad = 36.0;

namespace detail {

struct Bounds {
    double min_x = 0.0, max_x = 1.0, min_y = 0.0, max_y = 1.0;

    void expand(const Embedding& e) {
        for (std::size_t i = 0; i < e.n; ++i) {
            min_x = std::min(min_x, e.coords[i * e.dim]);
            max_x = std::max(max_x, e.coords[i * e.dim]);
            min_y = std::min(min_y, e.coords[i * e.dim + 1]);
            max_y = std::max(max_y, e.coords[i * e.dim + 1]);
        }
    }

    static Bounds of(const Embedding& e) {
        Bounds b{e.coords[0], e.coords[0], e.coords[1], e.coords[1]};
        b.expand(e);
        b.pad();
        return b;
    }

    void pad() {
        const double wx = std::max(max_x - min_x, 1e-12);
        const double wy = std::max(max_y - min_y, 1e-12);
        min_x -= 0.05 * wx; max_x += 0.05 * wx;
        min_y -= 0.05 * wy; max_y += 0.05 * wy;
    }
};

inline void draw_panel(std::string& out, const Panel& panel, const Bounds& b, double ox, double oy,
                       std::uint64_t seed, std::size_t max_points) {
    out += "<g transform=\"translate(" + num(ox) + "," + num(oy) + ")\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + num(kPanelSize) + "\" height=\"" + num(kPanelSize) +
           "\" fill=\"" + (panel.infeasible ? "#eeeeee" : "white") + "\" stroke=\"#888888\"/>\n";
    out += "<text x=\"" + num(kPanelSize / 2) + "\" y=\"-8\" text-anchor=\"middle\" font-size=\"13\" "
           "font-family=\"sans-serif\">" + escape(panel.title) + "</text>\n";
    if (panel.infeasible || panel.embedding == nullptr) {
        out += "<text x=\"" + num(kPanelSize / 2) + "\" y=\"" + num(kPanelSize / 2) +
               "\" text-anchor=\"middle\" font-size=\"16\" font-family=\"sans-serif\" fill=\"#666666\">infeasible</text>\n";
        out += "</g>\n";
        return;
    }
    const Embedding& e = *panel.embedding;

    // Display-only downsampling; the computation and any CSV carry all points.
    std::vector<std::uint32_t> order(e.n);
    for (std::size_t i = 0; i < e.n; ++i) order[i] = static_cast<std::uint32_t>(i);
    std::size_t shown = e.n;
    if (e.n > max_points) {
        SplitMix64 rng(seed);
        for (std::size_t i = 0; i < max_points; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(e.n - i));
            std::swap(order[i], order[j]);
        }
        shown = max_points;
        std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(shown));
    }

    const double sx = kPanelSize / (b.max_x - b.min_x);
    const double sy = kPanelSize / (b.max_y - b.min_y);
    for (std::size_t m = 0; m < shown; ++m) {
        const std::size_t i = order[m];
        const double x = (e.coords[i * e.dim] - b.min_x) * sx;
        const double y = kPanelSize - (e.coords[i * e.dim + 1] - b.min_y) * sy;
        const char* color = panel.labels ? label_color((*panel.labels)[i]) : "#1f77b4";
        out += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"1.6\" fill=\"" + color + "\" fill-opacity=\"0.7\"/>\n";
    }
    out += "</g>\n";
}

} // namespace detail

/// Matrix of scatter panels with shared axes per column. Infeasible cells
/// render as grayed panels.
inline std::string scatter_grid(const std::vector<std::vector<Panel>>& rows, std::uint64_t seed = 0,
                                std::size_t max_points_per_panel = 20000) {
    std::size_t ncols = 0;
    for (const auto& r : rows) ncols = std::max(ncols, r.size());
    const std::size_t nrows = rows.size();
    const double width = kPanelPad + static_cast<double>(ncols) * (kPanelSize + kPanelPad);
    const double height = kPanelPad + static_cast<double>(nrows) * (kPanelSize + kPanelPad);

    // Column-shared bounds across every feasible panel in that column.
    std::vector<detail::Bounds> col_bounds(ncols);
    for (std::size_t c = 0; c < ncols; ++c) {
        bool seen = false;
        detail::Bounds b;
        for (const auto& r : rows) {
            if (c >= r.size() || r[c].infeasible || r[c].embedding == nullptr) continue;
            if (!seen) {
                b = detail::Bounds{r[c].embedding->coords[0], r[c].embedding->coords[0],
                                   r[c].embedding->coords[1], r[c].embedding->coords[1]};
                seen = true;
            }
            b.expand(*r[c].embedding);
        }
        b.pad();
        col_bounds[c] = b;
    }

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
           "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
    for (std::size_t r = 0; r < nrows; ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const double ox = kPanelPad + static_cast<double>(c) * (kPanelSize + kPanelPad);
            const double oy = kPanelPad + static_cast<double>(r) * (kPanelSize + kPanelPad);
            detail::draw_panel(out, rows[r][c], col_bounds[c], ox, oy,
                               substream_seed(seed, r, c), max_points_per_panel);
        }
    }
    out += "</svg>\n";
    return out;
}

/// Single scatter panel.
inline std::string scatter(const Embedding& embedding, const std::vector<std::int32_t>* labels,
                           const std::string& title, std::uint64_t seed = 0) {
    Panel p;
    p.title = title;
    p.embedding = &embedding;
    p.labels = labels;
    return scatter_grid({{p}}, seed);
}

/// Fig.-2 style summary of a Monte Carlo report: one violin per sampling
/// rate, median markers, and the anchored trend line ending at the anchor
/// (1.0, Per).
inline std::string mc_violin(const MonteCarloReport& report) {
    const double width = 640.0, height = 420.0;
    const double ml = 56.0, mr = 24.0, mt = 28.0, mb = 44.0;
    const double plot_w = width - ml - mr, plot_h = height - mt - mb;

    double vmax = report.perplexity;
    for (const auto& cell : report.cells) {
        for (const auto& pv : cell.values) vmax = std::max(vmax, pv.value);
    }
    vmax *= 1.05;
    const double x_lo = 0.0, x_hi = 1.05;

    auto X = [&](double rate) { return ml + (rate - x_lo) / (x_hi - x_lo) * plot_w; };
    auto Y = [&](double v) { return mt + plot_h - v / vmax * plot_h; };

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
           "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) + "\" fill=\"white\"/>\n";
    out += "<rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(plot_w) + "\" height=\"" + num(plot_h) +
           "\" fill=\"none\" stroke=\"#888888\"/>\n";

    // Axis ticks.
    for (int t = 0; t <= 5; ++t) {
        const double v = vmax * t / 5.0;
        out += "<line x1=\"" + num(ml - 4) + "\" y1=\"" + num(Y(v)) + "\" x2=\"" + num(ml) + "\" y2=\"" + num(Y(v)) +
               "\" stroke=\"#888888\"/>\n";
        out += "<text x=\"" + num(ml - 8) + "\" y=\"" + num(Y(v) + 4) +
               "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" + num(v) + "</text>\n";
    }
    for (double rate : report.rates) {
        out += "<text x=\"" + num(X(rate)) + "\" y=\"" + num(height - mb + 16) +
               "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" + num(rate) + "</text>\n";
    }
    out += "<text x=\"" + num(ml + plot_w / 2) + "\" y=\"" + num(height - 8) +
           "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">sampling rate</text>\n";

    // Violin per rate over the pooled unflagged values.
    const double half_width = plot_w / (x_hi - x_lo) * 0.035;
    for (double rate : report.rates) {
        std::vector<double> vals;
        for (const auto& cell : report.cells) {
            if (cell.rate != rate) continue;
            for (const auto& pv : cell.values) {
                if (pv.flag == BandwidthFlag::none) vals.push_back(pv.value);
            }
        }
        if (vals.empty()) continue;
        std::sort(vals.begin(), vals.end());
        const double lo = vals.front(), hi = vals.back();
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double sd = 0.0;
        for (double v : vals) sd += (v - mean) * (v - mean);
        sd = std::sqrt(sd / static_cast<double>(vals.size()));
        const double bw = sd > 0.0 ? 1.06 * sd * std::pow(static_cast<double>(vals.size()), -0.2) : 1.0;

        constexpr int kGrid = 41;
        double density[kGrid];
        double dmax = 0.0;
        for (int g = 0; g < kGrid; ++g) {
            const double y = lo + (hi - lo) * g / (kGrid - 1);
            double dsum = 0.0;
            for (double v : vals) {
                const double u = (y - v) / bw;
                dsum += std::exp(-0.5 * u * u);
            }
            density[g] = dsum;
            dmax = std::max(dmax, dsum);
        }
        if (dmax <= 0.0) dmax = 1.0;

        std::string path = "M";
        for (int g = 0; g < kGrid; ++g) {
            const double y = lo + (hi - lo) * g / (kGrid - 1);
            path += num(X(rate) - half_width * density[g] / dmax) + "," + num(Y(y)) + " L";
        }
        for (int g = kGrid - 1; g >= 0; --g) {
            const double y = lo + (hi - lo) * g / (kGrid - 1);
            path += num(X(rate) + half_width * density[g] / dmax) + "," + num(Y(y));
            if (g > 0) path += " L";
        }
        path += " Z";
        out += "<path d=\"" + path + "\" fill=\"#1f77b4\" fill-opacity=\"0.45\" stroke=\"#1f77b4\"/>\n";
    }

    // Anchored trend line and the anchor itself.
    if (!report.rates.empty()) {
        const double r0 = *std::min_element(report.rates.begin(), report.rates.end());
        const double y0 = report.perplexity + report.fit_slope * (r0 - 1.0);
        out += "<line x1=\"" + num(X(r0)) + "\" y1=\"" + num(Y(y0)) + "\" x2=\"" + num(X(1.0)) + "\" y2=\"" +
               num(Y(report.perplexity)) + "\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"6,3\"/>\n";
    }
    for (const auto& [rate, median] : report.medians) {
        out += "<line x1=\"" + num(X(rate) - half_width) + "\" y1=\"" + num(Y(median)) + "\" x2=\"" +
               num(X(rate) + half_width) + "\" y2=\"" + num(Y(median)) + "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    }
    out += "<circle cx=\"" + num(X(1.0)) + "\" cy=\"" + num(Y(report.perplexity)) +
           "\" r=\"4\" fill=\"#d62728\"/>\n";
    out += "</svg>\n";
    return out;
}

} // namespace svg

} // namespace perpscale

#endif
