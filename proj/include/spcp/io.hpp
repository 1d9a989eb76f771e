#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "linalg.hpp"
#include "metrics.hpp"
#include "report.hpp"

namespace spcp {

enum class IoErrc {
    file_not_found = 1,
    malformed_header,
    non_finite,
    truncated_payload,
    parse_error,
    write_failed,
};

inline std::string_view to_string(IoErrc e) {
    switch (e) {
    case IoErrc::file_not_found: return "file not found";
    case IoErrc::malformed_header: return "malformed header";
    case IoErrc::non_finite: return "non-finite entry";
    case IoErrc::truncated_payload: return "truncated payload";
    case IoErrc::parse_error: return "parse error";
    case IoErrc::write_failed: return "write failed";
    }
    return "unknown";
}

class IoError : public std::runtime_error {
public:
    IoError(IoErrc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    IoErrc code() const noexcept { return code_; }

private:
    IoErrc code_;
};

enum class MatrixFormat { csv, binary };

/// `.csv` selects CSV, anything else the binary format.
inline MatrixFormat format_for_path(const std::filesystem::path& p) {
    return p.extension() == ".csv" ? MatrixFormat::csv : MatrixFormat::binary;
}

namespace detail {

inline constexpr char kMagic[4] = {'S', 'L', 'R', 'M'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8;

template <class UInt>
void put_le(std::string& out, UInt v) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <class UInt>
UInt get_le(const unsigned char* p) {
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i)
        v |= static_cast<UInt>(p[i]) << (8 * i);
    return v;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(IoErrc::file_not_found, path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

} // namespace detail

/// Serialize to the binary layout: "SLRM", version u32, rows u64, cols u64,
/// then rows * cols IEEE-754 doubles in row-major order, all little-endian.
inline std::string encode_binary(const DenseMatrix& a) {
    std::string out;
    out.reserve(detail::kHeaderBytes + 8 * static_cast<std::size_t>(a.size()));
    out.append(detail::kMagic, 4);
    detail::put_le<std::uint32_t>(out, detail::kVersion);
    detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(a.rows()));
    detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(a.cols()));
    for (Index i = 0; i < a.size(); ++i)
        detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(a.data()[i]));
    return out;
}

inline DenseMatrix decode_binary(std::string_view bytes, const std::string& name = "<memory>") {
    if (bytes.size() < detail::kHeaderBytes || bytes.substr(0, 4) != std::string_view(detail::kMagic, 4))
        throw IoError(IoErrc::malformed_header, name + ": missing SLRM header");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const auto version = detail::get_le<std::uint32_t>(p + 4);
    if (version != detail::kVersion)
        throw IoError(IoErrc::malformed_header, name + ": unsupported version " + std::to_string(version));
    const auto rows = detail::get_le<std::uint64_t>(p + 8);
    const auto cols = detail::get_le<std::uint64_t>(p + 16);
    const auto max_index = static_cast<std::uint64_t>(std::numeric_limits<Index>::max());
    if (rows > max_index || cols > max_index || (cols != 0 && rows > max_index / 8 / cols))
        throw IoError(IoErrc::malformed_header, name + ": dimensions overflow");
    const std::uint64_t expected = rows * cols * 8;
    const std::uint64_t payload = bytes.size() - detail::kHeaderBytes;
    if (payload < expected)
        throw IoError(IoErrc::truncated_payload, name + ": expected " + std::to_string(expected) +
                                                     " payload bytes, found " + std::to_string(payload));
    if (payload > expected)
        throw IoError(IoErrc::parse_error, name + ": trailing bytes after payload");
    DenseMatrix a(static_cast<Index>(rows), static_cast<Index>(cols));
    const unsigned char* body = p + detail::kHeaderBytes;
    for (Index i = 0; i < a.size(); ++i)
        a.data()[i] = std::bit_cast<double>(detail::get_le<std::uint64_t>(body + 8 * i));
    if (!a.allFinite())
        throw IoError(IoErrc::non_finite, name);
    return a;
}

/// Comma-separated rows, '.' decimal point, no header. Values are written in
/// shortest round-trip form.
inline std::string encode_csv(const DenseMatrix& a) {
    std::string out;
    char buf[64];
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (j > 0)
                out.push_back(',');
            const auto res = std::to_chars(buf, buf + sizeof(buf), a(i, j));
            out.append(buf, res.ptr);
        }
        out.push_back('\n');
    }
    return out;
}

inline DenseMatrix decode_csv(std::string_view text, const std::string& name = "<memory>") {
    std::vector<double> values;
    Index cols = -1;
    Index rows = 0;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = detail::trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty())
            continue;
        Index count = 0;
        for (;;) {
            const auto comma = line.find(',');
            const std::string_view field = detail::trim(line.substr(0, comma));
            double v = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size())
                throw IoError(IoErrc::parse_error, name + ":" + std::to_string(line_no) +
                                                       ": bad number '" + std::string(field) + "'");
            if (!std::isfinite(v))
                throw IoError(IoErrc::non_finite, name + ":" + std::to_string(line_no));
            values.push_back(v);
            ++count;
            if (comma == std::string_view::npos)
                break;
            line = line.substr(comma + 1);
        }
        if (cols >= 0 && count != cols)
            throw IoError(IoErrc::parse_error, name + ":" + std::to_string(line_no) +
                                                   ": ragged row (" + std::to_string(count) +
                                                   " fields, expected " + std::to_string(cols) + ")");
        cols = count;
        ++rows;
    }
    if (rows == 0)
        throw IoError(IoErrc::parse_error, name + ": no rows");
    DenseMatrix a(rows, cols);
    std::copy(values.begin(), values.end(), a.data());
    return a;
}

inline DenseMatrix read_matrix(const std::filesystem::path& path, MatrixFormat format) {
    const std::string bytes = detail::read_file(path);
    return format == MatrixFormat::csv ? decode_csv(bytes, path.string())
                                       : decode_binary(bytes, path.string());
}

inline DenseMatrix read_matrix(const std::filesystem::path& path) {
    return read_matrix(path, format_for_path(path));
}

/// Write via a sibling temporary file and rename, so readers never observe a
/// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError(IoErrc::write_failed, tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out)
            throw IoError(IoErrc::write_failed, tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError(IoErrc::write_failed, path.string() + ": " + ec.message());
}

inline void write_matrix(const std::filesystem::path& path, const DenseMatrix& a,
                         MatrixFormat format) {
    write_file_atomic(path, format == MatrixFormat::csv ? encode_csv(a) : encode_binary(a));
}

inline void write_matrix(const std::filesystem::path& path, const DenseMatrix& a) {
    write_matrix(path, a, format_for_path(path));
}

inline Mask mask_from_matrix(const DenseMatrix& a) { return (a.array() != 0.0); }

inline DenseMatrix mask_to_matrix(const Mask& m) { return m.cast<double>().matrix(); }

// JSON views of the reports.

inline nlohmann::json to_json(const CertificateReport& c) {
    return {
        {"e_norm", c.e_norm},
        {"terms", {c.terms[0], c.terms[1], c.terms[2], c.terms[3]}},
        {"f_bound", c.f_bound},
        {"gap_bound", c.gap_bound},
        {"rank", c.rank},
    };
}

inline nlohmann::json to_json(const IterationRecord& r, bool with_elapsed = true) {
    nlohmann::json j = {{"iter", r.iter}, {"objective", r.objective}, {"grad_norm", r.grad_norm}};
    if (with_elapsed)
        j["elapsed_s"] = r.elapsed_s;
    if (r.cert)
        j["cert"] = *r.cert;
    return j;
}

inline nlohmann::json to_json(const SolveReport& rep, bool with_elapsed = true) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& r : rep.trace)
        trace.push_back(to_json(r, with_elapsed));
    nlohmann::json j = {
        {"solver", rep.solver},
        {"termination", std::string(to_string(rep.termination))},
        {"iterations", rep.iterations},
        {"objective", rep.objective},
        {"trace", std::move(trace)},
    };
    if (rep.factors)
        j["k"] = rep.factors->rank_bound();
    if (rep.certificate)
        j["certificate"] = to_json(*rep.certificate);
    return j;
}

inline nlohmann::json to_json(const AiccReport& a) {
    nlohmann::json j = {
        {"p", a.p},
        {"loglik", a.loglik},
        {"aicc", a.aicc ? nlohmann::json(*a.aicc) : nlohmann::json(nullptr)},
        {"dof_rank", a.dof.rank_part},
        {"dof_sparse", a.dof.sparse_part},
        {"dof_resid", a.dof.resid_part},
        {"rank", a.dof.rank},
        {"sigma2_hat", a.sigma2_hat},
        {"b_hat", a.b_hat},
        {"bstar_hat", a.bstar_hat},
        {"sparse_terms_dropped", a.sparse_terms_dropped},
        {"lowrank_terms_dropped", a.lowrank_terms_dropped},
    };
    return j;
}

} // namespace spcp
