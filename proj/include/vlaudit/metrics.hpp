#pragma once

// Numeric kernels: cosine similarity, C-ASC effect size, exact top-k,
// group distributions, normalized entropy and the relevance percentile.
// Everything accumulates in binary64.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vlaudit/demographics.hpp"
#include "vlaudit/embedding_store.hpp"
#include "vlaudit/error.hpp"
#include "vlaudit/parallel.hpp"

namespace vlaudit {

inline constexpr std::size_t kDefaultTopK = 100;

/// Cosine similarity of one caption to every image row.
struct SimilarityVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// One-vs-rest partition: `members` is G, every other row is the complement.
struct GroupMask {
  std::string selector;
  std::vector<std::size_t> members;  // sorted, unique

  /// Checks the invariants against a population of `n` rows.
  void validate(std::size_t n) const {
    if (members.empty()) throw DomainError("group '" + selector + "' is empty");
    if (members.size() >= n) {
      throw DomainError("group '" + selector + "' covers every row; its complement is empty");
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (members[i] >= n) {
        throw DomainError("group '" + selector + "' index " + std::to_string(members[i]) +
                          " out of range");
      }
      if (i > 0 && members[i] <= members[i - 1]) {
        throw DomainError("group '" + selector + "' indices must be strictly increasing");
      }
    }
  }
};

/// Complement of `mask` within n rows.
inline GroupMask complement(const GroupMask& mask, std::size_t n) {
  GroupMask out{"not(" + mask.selector + ")", {}};
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (j < mask.members.size() && mask.members[j] == i) {
      ++j;
    } else {
      out.members.push_back(i);
    }
  }
  return out;
}

/// Rows whose group on `axis` is `group` (an index into group_labels(axis)).
inline GroupMask make_group_mask(std::span<const DemographicRecord> metadata, Axis axis,
                                 std::size_t group) {
  GroupMask mask{group_labels(axis).at(group), {}};
  for (std::size_t i = 0; i < metadata.size(); ++i) {
    if (group_index(axis, metadata[i]) == group) mask.members.push_back(i);
  }
  return mask;
}

struct GroupDistribution {
  std::vector<std::string> group_labels;
  std::vector<double> probabilities;
  std::vector<std::size_t> counts;  // empty when built from probabilities alone

  std::size_t argmax() const {
    return static_cast<std::size_t>(
        std::max_element(probabilities.begin(), probabilities.end()) - probabilities.begin());
  }

  friend bool operator==(const GroupDistribution&, const GroupDistribution&) = default;
};

struct Neighbor {
  std::size_t index;
  double similarity;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Entry i is <caption, image row i>. Both sides must be unit norm. Rows are
/// split into blocks across `threads` workers; every entry is computed
/// independently, so the result does not depend on the partition.
inline SimilarityVector similarity_vector(std::span<const double> caption,
                                          const EmbeddingSet& images, std::size_t threads = 1) {
  if (caption.size() != images.dim()) {
    throw DimError("caption has dim " + std::to_string(caption.size()) + ", images have dim " +
                   std::to_string(images.dim()));
  }
  if (!images.normalized()) throw StateError("image embeddings are not L2-normalized");
  double norm2 = 0.0;
  for (double v : caption) norm2 += v * v;
  if (std::abs(std::sqrt(norm2) - 1.0) > kNormalizedTolerance) {
    throw StateError("caption vector is not unit norm (norm " + std::to_string(std::sqrt(norm2)) +
                     ")");
  }

  const std::size_t n = images.count();
  SimilarityVector out{std::vector<double>(n)};
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      const auto row = images.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) dot += caption[j] * row[j];
      out.values[i] = dot;
    }
  });
  return out;
}

/// Mean and population standard deviation of a similarity vector.
struct SimilarityStats {
  double mean = 0.0;
  double sd = 0.0;
  double deviation_sum = 0.0;  // sum of (v - mean); zero up to rounding
};

/// Throws DegenerateDistributionError when the standard deviation is below
/// 1e-12 (e.g. a caption orthogonal to every image).
inline SimilarityStats similarity_stats(const SimilarityVector& sims) {
  const std::size_t n = sims.size();
  if (n == 0) throw DomainError("similarity vector is empty");
  double total = 0.0;
  for (double v : sims.values) total += v;
  const double mean = total / static_cast<double>(n);
  double sq = 0.0;
  double dev = 0.0;
  for (double v : sims.values) {
    sq += (v - mean) * (v - mean);
    dev += v - mean;
  }
  const double sd = std::sqrt(sq / static_cast<double>(n));
  if (sd < 1e-12) {
    throw DegenerateDistributionError("similarity standard deviation " + std::to_string(sd) +
                                      " is below 1e-12");
  }
  return {mean, sd, dev};
}

/// Caption association score with precomputed statistics. `group` must
/// already be validated against sims.size().
inline double casc(const SimilarityVector& sims, const GroupMask& group,
                   const SimilarityStats& stats) {
  const std::size_t n = sims.size();
  // Deviations from the global mean: the complement's deviation sum is then
  // minus the group's, up to rounding.
  double in_group = 0.0;
  for (std::size_t i : group.members) in_group += sims.values[i] - stats.mean;
  const double g = static_cast<double>(group.members.size());
  const double rest = static_cast<double>(n) - g;
  return (in_group / g - (stats.deviation_sum - in_group) / rest) / stats.sd;
}

/// Caption association score: (mean over G - mean over the rest) divided by
/// the population standard deviation over all rows.
inline double casc(const SimilarityVector& sims, const GroupMask& group) {
  group.validate(sims.size());
  return casc(sims, group, similarity_stats(sims));
}

/// Highest min(k, n) similarities, descending; ties go to the lower index.
inline std::vector<Neighbor> topk(const SimilarityVector& sims, std::size_t k) {
  if (k == 0) throw DomainError("k must be at least 1");
  const std::size_t n = sims.size();
  const std::size_t m = std::min(k, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto better = [&](std::size_t a, std::size_t b) {
    if (sims.values[a] != sims.values[b]) return sims.values[a] > sims.values[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(), better);
  std::vector<Neighbor> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back({idx[i], sims.values[idx[i]]});
  return out;
}

inline double mean_similarity(std::span<const Neighbor> neighbors) {
  if (neighbors.empty()) throw EmptyRetrievalError("no neighbors to average");
  double sum = 0.0;
  for (const auto& nb : neighbors) sum += nb.similarity;
  return sum / static_cast<double>(neighbors.size());
}

inline GroupDistribution group_distribution(std::span<const std::size_t> retrieved,
                                            std::span<const DemographicRecord> metadata,
                                            Axis axis) {
  if (retrieved.empty()) throw EmptyRetrievalError("retrieval is empty");
  GroupDistribution dist;
  dist.group_labels = group_labels(axis);
  dist.counts.assign(dist.group_labels.size(), 0);
  for (std::size_t idx : retrieved) {
    if (idx >= metadata.size()) {
      throw DomainError("retrieved index " + std::to_string(idx) + " out of range");
    }
    ++dist.counts[group_index(axis, metadata[idx])];
  }
  dist.probabilities.reserve(dist.counts.size());
  for (std::size_t c : dist.counts) {
    dist.probabilities.push_back(static_cast<double>(c) / static_cast<double>(retrieved.size()));
  }
  return dist;
}

inline GroupDistribution group_distribution(std::span<const Neighbor> retrieved,
                                            std::span<const DemographicRecord> metadata,
                                            Axis axis) {
  std::vector<std::size_t> idx;
  idx.reserve(retrieved.size());
  for (const auto& nb : retrieved) idx.push_back(nb.index);
  return group_distribution(std::span<const std::size_t>(idx), metadata, axis);
}

/// Shannon entropy divided by log(number of labels); 1 is uniform.
inline double normalized_entropy(const GroupDistribution& dist) {
  const std::size_t m = dist.probabilities.size();
  if (m < 2) throw DomainError("normalized entropy needs at least 2 groups");
  if (dist.group_labels.size() != m) throw DomainError("label/probability length mismatch");
  double sum = 0.0;
  double h = 0.0;
  for (double p : dist.probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability outside [0, 1]");
    sum += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("probabilities do not sum to 1");
  return std::clamp(h / std::log(static_cast<double>(m)), 0.0, 1.0);
}

/// Empirical CDF of the baseline at `caption_mean`: the fraction of baseline
/// entries strictly below it.
inline double relevance_score(double caption_mean, std::span<const double> baseline_means) {
  if (baseline_means.empty()) throw DomainError("relevance baseline is empty");
  const auto below = std::count_if(baseline_means.begin(), baseline_means.end(),
                                   [&](double b) { return b < caption_mean; });
  return static_cast<double>(below) / static_cast<double>(baseline_means.size());
}

}  // namespace vlaudit
