#include "muonpp/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "muonpp/errors.hpp"

namespace muonpp::io {

namespace {

double parse_double(std::string_view token, long line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw InvalidInput("MAT1 line " + std::to_string(line) + ": cannot parse '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) {
    throw InvalidInput("MAT1 line " + std::to_string(line) + ": non-finite value");
  }
  return value;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

linalg::Matrix read_mat1(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw InvalidInput("MAT1: missing header line");
  std::istringstream hs(header);
  long rows = 0;
  long cols = 0;
  std::string extra;
  if (!(hs >> rows >> cols) || (hs >> extra) || rows <= 0 || cols <= 0) {
    throw InvalidInput("MAT1: header must be 'rows cols' with positive integers");
  }
  linalg::Matrix m(rows, cols);
  std::string line;
  for (long r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) {
      throw InvalidInput("MAT1: expected " + std::to_string(rows) + " data rows, got " + std::to_string(r));
    }
    std::istringstream ls(line);
    std::string token;
    long c = 0;
    while (ls >> token) {
      if (c >= cols) throw InvalidInput("MAT1 line " + std::to_string(r + 2) + ": too many values");
      m(r, c++) = parse_double(token, r + 2);
    }
    if (c != cols) throw InvalidInput("MAT1 line " + std::to_string(r + 2) + ": too few values");
  }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      throw InvalidInput("MAT1: trailing data after " + std::to_string(rows) + " rows");
    }
  }
  return m;
}

linalg::Matrix read_mat1_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_mat1(in);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void write_mat1(std::ostream& out, const linalg::Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

std::string to_mat1(const linalg::Matrix& m) {
  std::ostringstream os;
  write_mat1(os, m);
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace muonpp::io
