#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

#include "fastglz/error.hpp"
#include "fastglz/matrix_io.hpp"
#include "fastglz/random.hpp"

using namespace fastglz;
using namespace fastglz::io;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("fastglz_io_" + std::to_string(Rng(std::random_device{}()).next_u64()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("binary format round-trips every bit") {
    TempDir dir;
    Rng rng(1);
    Matrix m(7, 3);
    for (Index j = 0; j < 3; ++j)
        for (Index i = 0; i < 7; ++i) m(i, j) = rng.normal() * std::pow(10.0, static_cast<double>(i) - 3.0);
    m(0, 0) = -0.0;
    m(1, 0) = std::numeric_limits<double>::denorm_min();
    m(2, 0) = std::numeric_limits<double>::max();
    const fs::path p = dir.path / "m.fglzmat";
    write_fglzmat(p, m);
    const Matrix back = read_fglzmat(p);
    REQUIRE(back.rows() == 7);
    REQUIRE(back.cols() == 3);
    CHECK(std::memcmp(back.data(), m.data(), sizeof(double) * 21) == 0);

    // Header layout, read byte by byte.
    const std::string bytes = read_bytes(p);
    CHECK(bytes.size() == 32 + 8 * 21);
    CHECK(bytes.substr(0, 8) == "FGLZMAT1");
    CHECK(static_cast<unsigned char>(bytes[8]) == 7);
    CHECK(static_cast<unsigned char>(bytes[16]) == 3);
    CHECK(static_cast<unsigned char>(bytes[24]) == 1);
    for (int i = 9; i < 16; ++i) CHECK(bytes[static_cast<std::size_t>(i)] == 0);
}

TEST_CASE("malformed binary files") {
    TempDir dir;
    const fs::path p = dir.path / "bad.fglzmat";
    write_text(p, "FGLZ");
    CHECK_THROWS_AS(read_fglzmat(p), ParseError);

    write_fglzmat(p, Matrix::Ones(2, 2));
    std::string bytes = read_bytes(p);
    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    write_text(p, wrong_magic);
    CHECK_THROWS_AS(read_fglzmat(p), ParseError);

    std::string wrong_tag = bytes;
    wrong_tag[24] = 2;
    write_text(p, wrong_tag);
    CHECK_THROWS_WITH_AS(read_fglzmat(p), doctest::Contains("byte 24"), ParseError);

    write_text(p, bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_fglzmat(p), ParseError);
    CHECK_THROWS_AS(read_fglzmat(dir.path / "missing.fglzmat"), ParseError);
}

TEST_CASE("CSV reading and writing") {
    TempDir dir;
    const fs::path p = dir.path / "a.csv";
    write_text(p, "x,y,z\n1,2,3\n4.5,-6e-3,7\n");
    const Matrix a = read_csv(p);
    REQUIRE(a.rows() == 2);
    REQUIRE(a.cols() == 3);
    CHECK(a(1, 1) == -6e-3);
    CHECK(a(1, 0) == 4.5);

    Rng rng(2);
    Matrix m(4, 5);
    for (Index j = 0; j < 5; ++j)
        for (Index i = 0; i < 4; ++i) m(i, j) = rng.normal() / 3.0;
    write_csv(p, m);
    CHECK(read_csv(p) == m);

    write_text(p, "1,2\n3\n");
    CHECK_THROWS_WITH_AS(read_csv(p), doctest::Contains("line 2"), ParseError);
    write_text(p, "1,2\n3,abc\n");
    CHECK_THROWS_WITH_AS(read_csv(p), doctest::Contains("field"), ParseError);
    write_text(p, "");
    CHECK_THROWS_AS(read_csv(p), ParseError);
}

TEST_CASE("orientation, format names and atomic writes") {
    TempDir dir;
    Matrix m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    const fs::path p = dir.path / "m.csv";
    save_matrix(p, m, format_from_path(p));
    CHECK(load_matrix(p, Format::Csv, Orientation::FeaturesByTrials) == m);
    CHECK(load_matrix(p, Format::Csv, Orientation::TrialsByFeatures) == m.transpose());

    CHECK(parse_format("csv") == Format::Csv);
    CHECK(parse_format("fglzmat") == Format::Fglzmat);
    CHECK_THROWS_AS(parse_format("npy"), ValidationError);
    CHECK(parse_orientation("trials_by_features") == Orientation::TrialsByFeatures);
    CHECK_THROWS_AS(parse_orientation("rows"), ValidationError);
    CHECK(format_from_path("x/y.fglzmat") == Format::Fglzmat);
    CHECK_THROWS_AS(format_from_path("x/y.txt"), ValidationError);

    const fs::path out = dir.path / "out.json";
    write_file_atomic(out, "{\"a\": 1}");
    CHECK(read_bytes(out) == "{\"a\": 1}");
    write_file_atomic(out, "{}");
    CHECK(read_bytes(out) == "{}");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir.path)) files += e.is_regular_file();
    CHECK(files == 2);
    CHECK_THROWS_AS(write_file_atomic(dir.path / "no" / "such" / "dir.json", "x"), IoError);
}
