#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include <spcp/io.hpp>

#include "oracles.hpp"

using namespace spcp;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("spcp_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

IoErrc decode_error(const std::string& bytes) {
    try {
        decode_binary(bytes);
    } catch (const IoError& e) {
        return e.code();
    }
    return IoErrc{};
}

IoErrc csv_error(const std::string& text) {
    try {
        decode_csv(text);
    } catch (const IoError& e) {
        return e.code();
    }
    return IoErrc{};
}

bool bit_identical(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

} // namespace

TEST(BinaryFormat, HeaderLayout) {
    DenseMatrix a(2, 3);
    a << 1, 2, 3, 4, 5, 6;
    const std::string bytes = encode_binary(a);
    ASSERT_EQ(bytes.size(), 24u + 48u);
    EXPECT_EQ(bytes.substr(0, 4), "SLRM");
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
    EXPECT_EQ(p[4], 1);
    EXPECT_EQ(p[5] | p[6] | p[7], 0);
    EXPECT_EQ(p[8], 2);
    EXPECT_EQ(p[16], 3);
    // Row-major payload: second value is a(0, 1) = 2.0 = 0x4000000000000000.
    EXPECT_EQ(p[24 + 8 + 7], 0x40);
    EXPECT_EQ(p[24 + 8 + 6], 0x00);
}

TEST(BinaryFormat, RoundTripBitExact) {
    std::mt19937_64 gen(81);
    DenseMatrix a = oracle::random_matrix(7, 3, gen);
    a(0, 0) = -0.0;
    a(1, 1) = std::numeric_limits<double>::denorm_min();
    a(2, 2) = std::numeric_limits<double>::max();
    EXPECT_TRUE(bit_identical(decode_binary(encode_binary(a)), a));
}

TEST(BinaryFormat, DistinctErrorCodes) {
    const DenseMatrix a = DenseMatrix::Ones(3, 2);
    const std::string good = encode_binary(a);
    EXPECT_EQ(decode_error(good.substr(0, good.size() - 3)), IoErrc::truncated_payload);
    EXPECT_EQ(decode_error(good.substr(0, 10)), IoErrc::malformed_header);
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_EQ(decode_error(bad_magic), IoErrc::malformed_header);
    std::string bad_version = good;
    bad_version[4] = 2;
    EXPECT_EQ(decode_error(bad_version), IoErrc::malformed_header);
    EXPECT_EQ(decode_error(good + "x"), IoErrc::parse_error);
    DenseMatrix nan = a;
    nan(1, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_EQ(decode_error(encode_binary(nan)), IoErrc::non_finite);
    DenseMatrix inf = a;
    inf(0, 1) = -std::numeric_limits<double>::infinity();
    EXPECT_EQ(decode_error(encode_binary(inf)), IoErrc::non_finite);
}

TEST(BinaryFormat, HugeDimensionsRejected) {
    std::string bytes = encode_binary(DenseMatrix::Ones(1, 1));
    for (int i = 8; i < 16; ++i)
        bytes[i] = static_cast<char>(0xFF);
    EXPECT_EQ(decode_error(bytes), IoErrc::malformed_header);
}

TEST(BinaryFormat, EmptyMatrix) {
    const DenseMatrix e(0, 4);
    const DenseMatrix back = decode_binary(encode_binary(e));
    EXPECT_EQ(back.rows(), 0);
    EXPECT_EQ(back.cols(), 4);
}

TEST(CsvFormat, ParsesSimple) {
    const DenseMatrix a = decode_csv("1,2\n3,4");
    ASSERT_EQ(a.rows(), 2);
    ASSERT_EQ(a.cols(), 2);
    EXPECT_EQ(a(0, 0), 1.0);
    EXPECT_EQ(a(0, 1), 2.0);
    EXPECT_EQ(a(1, 0), 3.0);
    EXPECT_EQ(a(1, 1), 4.0);
}

TEST(CsvFormat, WhitespaceAndLineEndings) {
    const DenseMatrix a = decode_csv(" 1.5 , -2e-3\r\n\n3,4 \n");
    ASSERT_EQ(a.rows(), 2);
    EXPECT_EQ(a(0, 0), 1.5);
    EXPECT_EQ(a(0, 1), -2e-3);
}

TEST(CsvFormat, RoundTripExact) {
    std::mt19937_64 gen(82);
    DenseMatrix a = oracle::random_matrix(6, 5, gen, 1e3);
    a(0, 0) = 1.0 / 3.0;
    a(1, 0) = 5e-324;
    EXPECT_TRUE(bit_identical(decode_csv(encode_csv(a)), a));
}

TEST(CsvFormat, Errors) {
    EXPECT_EQ(csv_error("1,2\n3\n"), IoErrc::parse_error);
    EXPECT_EQ(csv_error("1,abc\n"), IoErrc::parse_error);
    EXPECT_EQ(csv_error("1,,2\n"), IoErrc::parse_error);
    EXPECT_EQ(csv_error("1,nan\n"), IoErrc::non_finite);
    EXPECT_EQ(csv_error("inf,1\n"), IoErrc::non_finite);
    EXPECT_EQ(csv_error(""), IoErrc::parse_error);
}

TEST_F(TempDir, FileRoundTripAndFormatByExtension) {
    std::mt19937_64 gen(83);
    const DenseMatrix a = oracle::random_matrix(7, 3, gen);
    write_matrix(dir_ / "a.bin", a);
    write_matrix(dir_ / "a.csv", a);
    EXPECT_TRUE(bit_identical(read_matrix(dir_ / "a.bin"), a));
    EXPECT_TRUE(bit_identical(read_matrix(dir_ / "a.csv"), a));
    EXPECT_EQ(format_for_path("x.csv"), MatrixFormat::csv);
    EXPECT_EQ(format_for_path("x.slrm"), MatrixFormat::binary);
    for (const auto& entry : fs::directory_iterator(dir_))
        EXPECT_NE(entry.path().extension(), ".tmp");
}

TEST_F(TempDir, MissingFile) {
    try {
        read_matrix(dir_ / "nope.bin");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_EQ(e.code(), IoErrc::file_not_found);
    }
}

TEST_F(TempDir, WriteIntoMissingDirectoryFails) {
    try {
        write_matrix(dir_ / "no" / "such" / "a.bin", DenseMatrix::Ones(1, 1));
        FAIL();
    } catch (const IoError& e) {
        EXPECT_EQ(e.code(), IoErrc::write_failed);
    }
}

TEST_F(TempDir, AtomicOverwrite) {
    write_matrix(dir_ / "m.bin", DenseMatrix::Ones(2, 2));
    write_matrix(dir_ / "m.bin", DenseMatrix::Zero(3, 1));
    const DenseMatrix back = read_matrix(dir_ / "m.bin");
    EXPECT_EQ(back.rows(), 3);
    EXPECT_FALSE(fs::exists(dir_ / "m.bin.tmp"));
}

TEST(MaskConversion, RoundTrip) {
    Mask m(2, 3);
    m << true, false, true, false, false, true;
    const DenseMatrix d = mask_to_matrix(m);
    EXPECT_EQ(d.sum(), 3.0);
    EXPECT_TRUE((mask_from_matrix(d) == m).all());
}

TEST(Json, SolveReportShape) {
    SolveReport rep;
    rep.solver = "split";
    rep.trace.push_back({0, 10.0, 1.0, 0.5, std::nullopt});
    rep.trace.push_back({1, 9.0, 0.5, 0.7, 0.25});
    rep.termination = Termination::converged;
    rep.iterations = 1;
    rep.objective = 9.0;
    rep.certificate = CertificateReport{1e-3, {1, 2, 3, 4}, 5.0, 6.0, 2};
    const nlohmann::json j = to_json(rep);
    EXPECT_EQ(j["solver"], "split");
    EXPECT_EQ(j["termination"], "converged");
    ASSERT_EQ(j["trace"].size(), 2u);
    EXPECT_EQ(j["trace"][0]["iter"], 0);
    EXPECT_FALSE(j["trace"][0].contains("cert"));
    EXPECT_EQ(j["trace"][1]["cert"], 0.25);
    EXPECT_EQ(j["trace"][1]["elapsed_s"], 0.7);
    EXPECT_EQ(j["certificate"]["gap_bound"], 6.0);
    EXPECT_EQ(j["certificate"]["terms"].size(), 4u);
    const nlohmann::json no_time = to_json(rep, false);
    EXPECT_FALSE(no_time["trace"][1].contains("elapsed_s"));
}

TEST(Json, AiccUndefinedIsNull) {
    AiccReport a;
    a.p = 10;
    EXPECT_TRUE(to_json(a)["aicc"].is_null());
    a.aicc = 3.5;
    EXPECT_EQ(to_json(a)["aicc"], 3.5);
}
