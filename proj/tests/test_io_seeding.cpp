#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "muonpp/errors.hpp"
#include "muonpp/matrix_io.hpp"
#include "muonpp/seeding.hpp"
#include "oracles.hpp"

using namespace muonpp;
namespace fs = std::filesystem;

TEST(Mat1, RoundTripIsExact) {
  std::mt19937_64 rng(1);
  linalg::Matrix m = oracle::gaussian(5, 3, rng);
  m(0, 0) = 0.1;
  m(1, 2) = -1e-300;
  std::istringstream in(io::to_mat1(m));
  const linalg::Matrix back = io::read_mat1(in);
  ASSERT_EQ(back.rows(), 5);
  ASSERT_EQ(back.cols(), 3);
  EXPECT_EQ((back - m).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Mat1, ParsesHandWrittenFixture) {
  std::istringstream in("2 3\n1 2 3\n-4.5 5e-1 6\n");
  const linalg::Matrix m = io::read_mat1(in);
  EXPECT_EQ(m(1, 0), -4.5);
  EXPECT_EQ(m(1, 1), 0.5);
  EXPECT_EQ(m(0, 2), 3.0);
}

TEST(Mat1, RejectsMalformedInput) {
  for (const char* text : {"", "2\n1 2\n", "2 2\n1 2\n3\n", "2 2\n1 2\n3 x\n", "1 1\nnan\n", "1 1\n1\n2\n",
                           "0 2\n", "-1 2\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(io::read_mat1(in), InvalidInput) << "input: " << text;
  }
}

TEST(Mat1, FileRoundTripAndAtomicWrite) {
  const fs::path dir = fs::temp_directory_path() / "muonpp_io_test";
  fs::create_directories(dir);
  const fs::path p = dir / "m.mat1";
  linalg::Matrix m(2, 2);
  m << 1, 2, 3, 4;
  io::write_file_atomic(p, io::to_mat1(m));
  EXPECT_FALSE(fs::exists(dir / "m.mat1.tmp"));
  EXPECT_EQ(io::read_mat1_file(p), m);
  EXPECT_THROW(io::read_mat1_file(dir / "missing.mat1"), std::runtime_error);
  fs::remove_all(dir);
}

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(io::format_double(2000.0), "2000");
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(io::format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Seeding, StreamKeysAreDeterministicAndDistinct) {
  EXPECT_EQ(stream_key(7, 128, 3), stream_key(7, 128, 3));
  EXPECT_NE(stream_key(7, 128, 3), stream_key(7, 128, 4));
  EXPECT_NE(stream_key(7, 128, 3), stream_key(7, 256, 3));
  EXPECT_NE(stream_key(7, 128, 3), stream_key(8, 128, 3));
  EXPECT_EQ(stream_key(7, 128, 3), splitmix64(splitmix64(splitmix64(7) ^ 128) ^ 3));
}

TEST(Seeding, SplitmixReferenceValue) {
  // First output of the reference splitmix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Seeding, GaussianMatrixIsRowMajorAndReproducible) {
  Rng a = make_rng(42);
  Rng b = make_rng(42);
  const linalg::Matrix m = gaussian_matrix(3, 4, a);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_EQ(m(r, c), normal(b));
}
