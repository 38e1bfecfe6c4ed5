#ifndef PERPSCALE_EXPORT_HPP
#define PERPSCALE_EXPORT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "perpscale/embedding.hpp"
#include "perpscale/error.hpp"
#include "perpscale/io.hpp"
#include "perpscale/optimizer.hpp"
#include "perpscale/pipeline.hpp"
#include "perpscale/scaling.hpp"
#include "perpscale/svg.hpp"

namespace perpscale {

/// Embedding CSV: header `id,x,y[,label]`, 17-significant-digit floats.
/// Dimensions other than 2 use generic coordinate names c0..c{k-1}.
inline void write_embedding_csv(const Embedding& e, const std::filesystem::path& path,
                                const std::vector<std::int32_t>* labels = nullptr) {
    std::string out = "id";
    if (e.dim == 2) {
        out += ",x,y";
    } else {
        for (std::size_t c = 0; c < e.dim; ++c) out += ",c" + std::to_string(c);
    }
    if (labels) out += ",label";
    out += "\n";
    for (std::size_t i = 0; i < e.n; ++i) {
        out += std::to_string(e.ids[i]);
        for (std::size_t c = 0; c < e.dim; ++c) {
            out += ',';
            out += detail::format_double(e.coords[i * e.dim + c]);
        }
        if (labels) out += ',' + std::to_string((*labels)[i]);
        out += '\n';
    }
    detail::write_file_bytes(path, out);
}

struct LoadedEmbedding {
    Embedding embedding;
    std::optional<std::vector<std::int32_t>> labels;
};

/// Reads an embedding CSV written by write_embedding_csv (or any CSV with an
/// id column, coordinate columns, and an optional trailing label column).
inline LoadedEmbedding read_embedding_csv(const std::filesystem::path& path) {
    const Dataset d = load_matrix(path, FileFormat::csv);
    LoadedEmbedding out;
    out.embedding.n = d.n;
    out.embedding.dim = d.dim;
    out.embedding.coords = d.points;
    out.embedding.ids = d.ids;
    out.labels = d.labels;
    return out;
}

/// Trace CSV: iteration, phase, cost, grad_norm.
inline void write_trace_csv(const OptimizationTrace& trace, const std::filesystem::path& path) {
    std::string out = "iteration,phase,cost,grad_norm\n";
    for (const auto& p : trace.points) {
        out += std::to_string(p.iteration);
        out += ',';
        out += to_string(p.phase);
        out += ',';
        out += detail::format_double(p.cost);
        out += ',';
        out += detail::format_double(p.grad_norm);
        out += '\n';
    }
    detail::write_file_bytes(path, out);
}

/// Monte Carlo per-point CSV: rho, repeat, id, perplexity_prime.
inline void write_mc_csv(const MonteCarloReport& report, const std::filesystem::path& path) {
    std::string out = "rho,repeat,id,perplexity_prime\n";
    for (const auto& cell : report.cells) {
        for (const auto& pv : cell.values) {
            out += detail::format_double(cell.rate);
            out += ',' + std::to_string(cell.repeat);
            out += ',' + std::to_string(pv.id);
            out += ',';
            out += detail::format_double(pv.value);
            out += '\n';
        }
    }
    detail::write_file_bytes(path, out);
}

inline nlohmann::ordered_json mc_summary_json(const MonteCarloReport& report) {
    nlohmann::ordered_json j;
    j["perplexity"] = report.perplexity;
    j["rates"] = report.rates;
    j["repeats"] = report.repeats;
    nlohmann::ordered_json medians = nlohmann::ordered_json::object();
    for (const auto& [rate, median] : report.medians) medians[svg::num(rate)] = median;
    j["medians"] = medians;
    j["slope"] = report.fit_slope;
    j["r2"] = report.fit_r2;
    nlohmann::ordered_json clamps = nlohmann::ordered_json::object();
    for (const auto& [rate, count] : report.excluded) clamps[svg::num(rate)] = count;
    j["clamped_point_counts"] = clamps;
    return j;
}

inline nlohmann::ordered_json stage_reports_json(const std::vector<StageReport>& stages) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& s : stages) {
        nlohmann::ordered_json j;
        j["stage"] = s.stage;
        j["rho"] = s.rho;
        if (s.perplexity > 0.0) j["perplexity"] = s.perplexity; else j["perplexity"] = nullptr;
        j["n"] = s.n;
        j["seconds"] = s.seconds;
        if (s.has_kl) {
            j["kl_initial"] = s.kl_initial;
            j["kl_final"] = s.kl_final;
        } else {
            j["kl_initial"] = nullptr;
            j["kl_final"] = nullptr;
        }
        arr.push_back(j);
    }
    return arr;
}

} // namespace perpscale

#endif
