#pragma once

// Reference implementations written straight from the metric definitions,
// sharing no code with the engine. Slow on purpose.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

namespace vlaudit::oracle {

/// (mean over G - mean over the rest) / population std over everything.
/// Group membership given as a set so nothing depends on sortedness.
inline double casc(const std::vector<double>& s, const std::set<std::size_t>& g) {
  double sum_g = 0, sum_r = 0, sum_all = 0;
  std::size_t n_g = 0, n_r = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sum_all += s[i];
    if (g.count(i)) {
      sum_g += s[i];
      ++n_g;
    } else {
      sum_r += s[i];
      ++n_r;
    }
  }
  const double mu = sum_all / static_cast<double>(s.size());
  double var = 0;
  for (double v : s) var += (v - mu) * (v - mu);
  var /= static_cast<double>(s.size());
  return (sum_g / static_cast<double>(n_g) - sum_r / static_cast<double>(n_r)) / std::sqrt(var);
}

/// Full stable sort by descending similarity; equal values keep ascending
/// index order.
inline std::vector<std::size_t> topk_indices(const std::vector<double>& s, std::size_t k) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

/// Entropy in bits over the base-2 log of the label count.
inline double normalized_entropy(const std::vector<double>& p) {
  double h = 0;
  for (double x : p) {
    if (x > 0) h += x * std::log2(1.0 / x);
  }
  return h / std::log2(static_cast<double>(p.size()));
}

/// Fraction of baseline entries strictly below x, by counting.
inline double relevance(double x, const std::vector<double>& baseline) {
  std::size_t below = 0;
  for (double b : baseline) below += (b < x) ? 1 : 0;
  return static_cast<double>(below) / static_cast<double>(baseline.size());
}

/// Cosine of two raw vectors.
inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace vlaudit::oracle
