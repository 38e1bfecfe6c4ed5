#ifndef PERPSCALE_IO_HPP
#define PERPSCALE_IO_HPP

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "perpscale/dataset.hpp"
#include "perpscale/error.hpp"

namespace perpscale {

enum class FileFormat { csv, binary };

namespace detail {

inline constexpr char kBinaryMagic[4] = {'P', 'S', 'C', '1'};

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_int64(std::string_view s, std::int64_t& out) {
    s = trim(s);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

inline void put_u32_le(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
    buf.push_back(static_cast<char>((v >> 16) & 0xFF));
    buf.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw DataError("failed reading file: " + path.string());
    return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing file: " + path.string());
}

inline Dataset load_csv(const std::filesystem::path& path) {
    const std::string text = read_file_bytes(path);
    const std::string fname = path.string();

    std::vector<std::string_view> lines;
    {
        std::string_view rest(text);
        while (!rest.empty()) {
            const std::size_t nl = rest.find('\n');
            std::string_view line = rest.substr(0, nl);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (!trim(line).empty()) lines.push_back(line);
            if (nl == std::string_view::npos) break;
            rest.remove_prefix(nl + 1);
        }
    }
    if (lines.empty()) throw DataError(fname + ": file is empty");

    // Header row: present when any first-line field is non-numeric.
    bool has_header = false;
    {
        for (auto f : split_csv_line(lines[0])) {
            double tmp;
            if (!parse_double(f, tmp)) { has_header = true; break; }
        }
    }
    bool has_id_col = false;
    bool has_label_col = false;
    std::size_t first_data_line = 0;
    std::size_t ncols = split_csv_line(lines[0]).size();
    if (has_header) {
        const auto header = split_csv_line(lines[0]);
        has_id_col = !header.empty() && trim(header.front()) == "id";
        has_label_col = header.size() > 1 && trim(header.back()) == "label";
        first_data_line = 1;
        if (lines.size() < 2) throw DataError(fname + ": header but no data rows");
        ncols = header.size();
    }
    const std::size_t dim = ncols - (has_id_col ? 1 : 0) - (has_label_col ? 1 : 0);
    if (dim < 1) throw DataError(fname + ": no feature columns");

    Dataset d;
    d.dim = dim;
    d.name = path.stem().string();
    if (has_label_col) d.labels.emplace();

    for (std::size_t li = first_data_line; li < lines.size(); ++li) {
        const std::size_t row = li - first_data_line;
        const auto fields = split_csv_line(lines[li]);
        if (fields.size() != ncols) {
            throw DataError(fname + ": ragged row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(ncols));
        }
        std::size_t col = 0;
        if (has_id_col) {
            std::int64_t id;
            if (!parse_int64(fields[col], id) || id < 0) {
                throw DataError(fname + ": bad id at row " + std::to_string(row) + ", column 0");
            }
            d.ids.push_back(id);
            ++col;
        } else {
            d.ids.push_back(static_cast<std::int64_t>(row));
        }
        for (std::size_t j = 0; j < dim; ++j, ++col) {
            double v;
            if (!parse_double(fields[col], v)) {
                throw DataError(fname + ": non-numeric cell at row " + std::to_string(row) + ", column " + std::to_string(col));
            }
            if (!std::isfinite(v)) {
                throw DataError(fname + ": NaN/Inf cell at row " + std::to_string(row) + ", column " + std::to_string(col));
            }
            d.points.push_back(v);
        }
        if (has_label_col) {
            std::int64_t lab;
            if (!parse_int64(fields[col], lab)) {
                throw DataError(fname + ": bad label at row " + std::to_string(row) + ", column " + std::to_string(col));
            }
            d.labels->push_back(static_cast<std::int32_t>(lab));
        }
    }
    d.n = d.ids.size();
    if (d.n < 2) throw DataError(fname + ": " + std::to_string(d.n) + " data rows, need at least 2");
    d.validate();
    return d;
}

inline Dataset load_binary(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    const std::string fname = path.string();
    if (bytes.size() < 16) throw DataError(fname + ": truncated header (need 16 bytes)");
    if (std::memcmp(bytes.data(), kBinaryMagic, 4) != 0) throw DataError(fname + ": bad magic, expected PSC1");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t n = get_u32_le(p + 4);
    const std::uint32_t dim = get_u32_le(p + 8);
    const std::uint32_t flags = get_u32_le(p + 12);
    const bool has_labels = (flags & 1u) != 0;
    if (n < 2) throw DataError(fname + ": n = " + std::to_string(n) + ", need at least 2");
    if (dim < 1) throw DataError(fname + ": d must be >= 1");
    const std::size_t need = 16 + static_cast<std::size_t>(n) * dim * 4 + (has_labels ? static_cast<std::size_t>(n) * 4 : 0);
    if (bytes.size() != need) {
        throw DataError(fname + ": size " + std::to_string(bytes.size()) + " bytes, expected " + std::to_string(need));
    }

    Dataset d;
    d.n = n;
    d.dim = dim;
    d.name = path.stem().string();
    d.points.resize(static_cast<std::size_t>(n) * dim);
    const unsigned char* q = p + 16;
    for (std::size_t i = 0; i < d.points.size(); ++i, q += 4) {
        const std::uint32_t u = get_u32_le(q);
        float f;
        std::memcpy(&f, &u, 4);
        if (!std::isfinite(f)) {
            throw DataError(fname + ": NaN/Inf cell at row " + std::to_string(i / dim) + ", column " + std::to_string(i % dim));
        }
        d.points[i] = static_cast<double>(f);
    }
    if (has_labels) {
        d.labels.emplace(n);
        for (std::size_t i = 0; i < n; ++i, q += 4) {
            const std::uint32_t u = get_u32_le(q);
            std::int32_t lab;
            std::memcpy(&lab, &u, 4);
            (*d.labels)[i] = lab;
        }
    }
    d.ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.ids[i] = static_cast<std::int64_t>(i);
    d.validate();
    return d;
}

} // namespace detail

/// Loads a point matrix. CSV: optional header row, optional leading `id` and
/// trailing `label` integer columns detected by header names. Binary: PSC1
/// header, little-endian float32 rows, optional int32 labels.
inline Dataset load_matrix(const std::filesystem::path& path, FileFormat format) {
    return format == FileFormat::csv ? detail::load_csv(path) : detail::load_binary(path);
}

/// Writes a dataset in the named format. CSV carries ids (and labels when
/// present) with 17-significant-digit floats; binary narrows to float32.
inline void store_matrix(const Dataset& dataset, const std::filesystem::path& path, FileFormat format) {
    dataset.validate();
    std::string out;
    if (format == FileFormat::csv) {
        out += "id";
        for (std::size_t j = 0; j < dataset.dim; ++j) out += ",f" + std::to_string(j);
        if (dataset.labels) out += ",label";
        out += "\n";
        for (std::size_t i = 0; i < dataset.n; ++i) {
            out += std::to_string(dataset.ids[i]);
            for (std::size_t j = 0; j < dataset.dim; ++j) {
                out += ',';
                out += detail::format_double(dataset.points[i * dataset.dim + j]);
            }
            if (dataset.labels) {
                out += ',';
                out += std::to_string((*dataset.labels)[i]);
            }
            out += '\n';
        }
    } else {
        out.assign(detail::kBinaryMagic, 4);
        detail::put_u32_le(out, static_cast<std::uint32_t>(dataset.n));
        detail::put_u32_le(out, static_cast<std::uint32_t>(dataset.dim));
        detail::put_u32_le(out, dataset.labels ? 1u : 0u);
        for (double v : dataset.points) {
            const float f = static_cast<float>(v);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            detail::put_u32_le(out, u);
        }
        if (dataset.labels) {
            for (std::int32_t lab : *dataset.labels) {
                std::uint32_t u;
                std::memcpy(&u, &lab, 4);
                detail::put_u32_le(out, u);
            }
        }
    }
    detail::write_file_bytes(path, out);
}

} // namespace perpscale

#endif
