#include "fastglz/matrix_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "fastglz/error.hpp"

namespace fastglz::io {

namespace {

constexpr char kMagic[8] = {'F', 'G', 'L', 'Z', 'M', 'A', 'T', '1'};
constexpr std::uint64_t kTypeBinary64 = 1;
constexpr std::size_t kHeaderBytes = 32;

std::uint64_t load_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void store_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool parse_double(std::string_view field, double& out) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
    if (field.empty()) return false;
    if (field.front() == '+') field.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc() && ptr == field.data() + field.size();
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace

Format parse_format(std::string_view name) {
    if (name == "csv") return Format::Csv;
    if (name == "fglzmat") return Format::Fglzmat;
    throw ValidationError("unknown matrix format '" + std::string(name) + "' (csv or fglzmat)");
}

Orientation parse_orientation(std::string_view name) {
    if (name == "features_by_trials") return Orientation::FeaturesByTrials;
    if (name == "trials_by_features") return Orientation::TrialsByFeatures;
    throw ValidationError("unknown orientation '" + std::string(name) +
                          "' (features_by_trials or trials_by_features)");
}

Format format_from_path(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".csv") return Format::Csv;
    if (ext == ".fglzmat") return Format::Fglzmat;
    throw ValidationError("cannot infer matrix format from '" + path.string() + "'");
}

Matrix read_fglzmat(const std::filesystem::path& path) {
    const std::string bytes = read_all(path);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < kHeaderBytes) {
        throw ParseError(path.string() + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
    }
    if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw ParseError(path.string() + ": bad magic at byte 0");
    const std::uint64_t rows = load_u64_le(p + 8);
    const std::uint64_t cols = load_u64_le(p + 16);
    const std::uint64_t tag = load_u64_le(p + 24);
    if (tag != kTypeBinary64) {
        throw ParseError(path.string() + ": unsupported element type tag " + std::to_string(tag) + " at byte 24");
    }
    std::uint64_t count = 0;
    if (__builtin_mul_overflow(rows, cols, &count) || count > (std::uint64_t{1} << 60)) {
        throw ParseError(path.string() + ": dimensions overflow");
    }
    const std::uint64_t expected = kHeaderBytes + 8 * count;
    if (bytes.size() != expected) {
        throw ParseError(path.string() + ": payload has " + std::to_string(bytes.size() - kHeaderBytes) +
                         " bytes, expected " + std::to_string(8 * count));
    }
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t raw = load_u64_le(p + kHeaderBytes + 8 * i);
        m.data()[i] = std::bit_cast<double>(raw);
    }
    return m;
}

void write_fglzmat(const std::filesystem::path& path, const Matrix& m) {
    std::string out;
    out.reserve(kHeaderBytes + 8 * static_cast<std::size_t>(m.size()));
    out.append(kMagic, 8);
    store_u64_le(out, static_cast<std::uint64_t>(m.rows()));
    store_u64_le(out, static_cast<std::uint64_t>(m.cols()));
    store_u64_le(out, kTypeBinary64);
    for (Index i = 0; i < m.size(); ++i) store_u64_le(out, std::bit_cast<std::uint64_t>(m.data()[i]));
    write_file_atomic(path, out);
}

Matrix read_csv(const std::filesystem::path& path) {
    const std::string text = read_all(path);
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool first = true;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        const auto fields = split(line);
        std::vector<double> values(fields.size());
        bool numeric = true;
        std::size_t bad = 0;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (!parse_double(fields[i], values[i])) {
                numeric = false;
                bad = i;
                break;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;  // header row
            }
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + ", field " +
                             std::to_string(bad + 1) + " is not a number");
        }
        first = false;
        if (!rows.empty() && values.size() != rows.front().size()) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + " has " +
                             std::to_string(values.size()) + " fields, expected " +
                             std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw ParseError(path.string() + ": no data rows");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return m;
}

void write_csv(const std::filesystem::path& path, const Matrix& m) {
    std::string out;
    char buf[64];
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out.push_back(',');
            const auto res = std::to_chars(buf, buf + sizeof(buf), m(i, j));
            out.append(buf, res.ptr);
        }
        out.push_back('\n');
    }
    write_file_atomic(path, out);
}

Matrix load_matrix(const std::filesystem::path& path, Format format, Orientation orientation) {
    Matrix m = format == Format::Csv ? read_csv(path) : read_fglzmat(path);
    if (orientation == Orientation::TrialsByFeatures) m.transposeInPlace();
    return m;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m, Format format) {
    if (format == Format::Csv) {
        write_csv(path, m);
    } else {
        write_fglzmat(path, m);
    }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at " + path.string());
    }
}

}  // namespace fastglz::io
