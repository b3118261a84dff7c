#pragma once

// Helpers shared by the test binaries: scratch directories and random data.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "vlaudit/demographics.hpp"
#include "vlaudit/embedding_store.hpp"

namespace vlaudit::test {

/// A fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  ScratchDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "vlaudit";
    if (info) name += std::string("_") + info->test_suite_name() + "_" + info->name();
    for (auto& c : name) {
      if (c == '/') c = '_';
    }
    path_ = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

/// Metadata cycling through the 14 intersections: row i gets race
/// (i / 2) % 7 and gender i % 2.
inline std::vector<DemographicRecord> cycled_metadata(std::size_t n) {
  std::vector<DemographicRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"r" + std::to_string(i), kAllRaces[(i / 2) % kRaceCount],
                   kAllGenders[i % kGenderCount], std::nullopt});
  }
  return out;
}

/// Random rows, L2-normalized with a naive per-row loop.
inline EmbeddingSet random_unit_set(std::mt19937_64& rng, std::size_t rows, std::size_t dim) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> values(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      values[r * dim + c] = dist(rng);
      s += values[r * dim + c] * values[r * dim + c];
    }
    for (std::size_t c = 0; c < dim; ++c) values[r * dim + c] /= std::sqrt(s);
  }
  return EmbeddingSet(dim, std::move(values), true);
}

}  // namespace vlaudit::test
