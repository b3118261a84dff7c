#pragma once

// Word, category and model audits built on the metric kernels.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vlaudit/demographics.hpp"
#include "vlaudit/embedding_store.hpp"
#include "vlaudit/error.hpp"
#include "vlaudit/metrics.hpp"
#include "vlaudit/parallel.hpp"
#include "vlaudit/taxonomy.hpp"

namespace vlaudit {

struct WordAudit {
  Caption caption;
  std::size_t k = kDefaultTopK;
  std::map<std::string, double> casc_by_group;
  std::map<Axis, GroupDistribution> retrieval_distributions;
  std::map<Axis, double> normalized_entropies;
  double mean_topk_similarity = 0.0;
  std::optional<double> relevance;

  friend bool operator==(const WordAudit&, const WordAudit&) = default;
};

struct CategoryAudit {
  Category category = Category::Appearance;
  std::vector<WordAudit> word_audits;
  std::map<Axis, double> mean_entropy_by_axis;

  friend bool operator==(const CategoryAudit&, const CategoryAudit&) = default;
};

struct ModelAuditReport {
  std::string model_name;
  std::string dataset_name;
  std::size_t k = kDefaultTopK;
  std::vector<CategoryAudit> categories;
  std::string created_at;
  std::string engine_version;
  std::map<std::string, std::string> config;

  friend bool operator==(const ModelAuditReport&, const ModelAuditReport&) = default;
};

/// One-vs-rest masks for every race, gender and intersection, built once per
/// image set.
class GroupMasks {
 public:
  explicit GroupMasks(std::span<const DemographicRecord> metadata) : rows_(metadata.size()) {
    for (Axis axis : kAllAxes) {
      for (std::size_t g = 0; g < group_count(axis); ++g) {
        masks_.push_back(make_group_mask(metadata, axis, g));
      }
    }
  }

  const std::vector<GroupMask>& masks() const { return masks_; }
  std::size_t rows() const { return rows_; }

 private:
  std::size_t rows_;
  std::vector<GroupMask> masks_;
};

/// Holds the audited image set together with its group masks.
class AuditContext {
 public:
  explicit AuditContext(const LabeledEmbeddings& data) : data_(data), masks_(data.metadata) {
    if (!data.embeddings.normalized()) throw StateError("image embeddings are not L2-normalized");
    for (const auto& mask : masks_.masks()) mask.validate(data.size());
  }

  const LabeledEmbeddings& data() const { return data_; }
  const GroupMasks& masks() const { return masks_; }

 private:
  const LabeledEmbeddings& data_;
  GroupMasks masks_;
};

/// Full audit of a single caption: C-ASC for all 23 groups, top-k group
/// distributions and their normalized entropies on each axis. Relevance is
/// filled only when `baseline_means` is non-empty.
inline WordAudit run_word_audit(std::span<const double> caption_vec, const Caption& caption,
                                const AuditContext& ctx, std::size_t k,
                                std::span<const double> baseline_means = {},
                                std::size_t threads = 1) {
  if (k == 0) throw DomainError("k must be at least 1");
  try {
    const auto& data = ctx.data();
    WordAudit audit;
    audit.caption = caption;
    audit.k = k;

    const auto sims = similarity_vector(caption_vec, data.embeddings, threads);
    const auto stats = similarity_stats(sims);
    for (const auto& mask : ctx.masks().masks()) {
      audit.casc_by_group[mask.selector] = casc(sims, mask, stats);
    }

    const auto neighbors = topk(sims, k);
    for (Axis axis : kAllAxes) {
      auto dist = group_distribution(std::span<const Neighbor>(neighbors), data.metadata, axis);
      audit.normalized_entropies[axis] = normalized_entropy(dist);
      audit.retrieval_distributions[axis] = std::move(dist);
    }
    audit.mean_topk_similarity = mean_similarity(neighbors);
    if (!baseline_means.empty()) {
      audit.relevance = relevance_score(audit.mean_topk_similarity, baseline_means);
    }
    return audit;
  } catch (Error& e) {
    e.add_context("caption '" + caption.text + "'");
    throw;
  }
}

inline WordAudit run_word_audit(std::span<const double> caption_vec, const Caption& caption,
                                const LabeledEmbeddings& data, std::size_t k) {
  return run_word_audit(caption_vec, caption, AuditContext(data), k);
}

/// Arithmetic mean of the member words' entropies on each axis.
inline std::map<Axis, double> mean_entropies(std::span<const WordAudit> words) {
  std::map<Axis, double> out;
  if (words.empty()) return out;
  for (Axis axis : kAllAxes) {
    double sum = 0.0;
    for (const auto& w : words) sum += w.normalized_entropies.at(axis);
    out[axis] = sum / static_cast<double>(words.size());
  }
  return out;
}

/// Audits every word of `category`; caption_vecs[i] belongs to word i. Words
/// run on up to `threads` workers and are assembled in taxonomy order.
inline CategoryAudit run_category_audit(const TaxonomyCategory& category,
                                        std::span<const std::span<const double>> caption_vecs,
                                        const AuditContext& ctx, std::size_t k,
                                        std::span<const double> baseline_means = {},
                                        std::size_t threads = 1) {
  if (caption_vecs.size() != category.words.size()) {
    throw AlignmentError("category " + std::string(to_string(category.name)) + " has " +
                         std::to_string(category.words.size()) + " words but " +
                         std::to_string(caption_vecs.size()) + " caption vectors");
  }
  CategoryAudit out;
  out.category = category.name;
  out.word_audits.resize(category.words.size());
  try {
    parallel_for(category.words.size(), threads, [&](std::size_t i) {
      out.word_audits[i] = run_word_audit(caption_vecs[i],
                                          render_caption(category.words[i], category.name), ctx, k,
                                          baseline_means, 1);
    });
  } catch (Error& e) {
    e.add_context("category " + std::string(to_string(category.name)));
    throw;
  }
  out.mean_entropy_by_axis = mean_entropies(out.word_audits);
  return out;
}

enum class GridMetric { Casc, TopkShare };

inline constexpr std::string_view to_string(GridMetric m) {
  return m == GridMetric::Casc ? "casc" : "topk_share";
}

/// Words x 14 intersections matrix, ready for heatmap emission.
struct IntersectionalGrid {
  GridMetric metric = GridMetric::Casc;
  std::vector<std::string> row_labels;     // caption text
  std::vector<std::string> column_labels;  // race-major intersection labels
  std::vector<std::vector<double>> values;
};

struct CaptionVector {
  Caption caption;
  std::span<const double> vec;
};

/// Grid rows taken from finished word audits.
inline IntersectionalGrid grid_from_audits(std::span<const WordAudit> audits, GridMetric metric) {
  if (audits.empty()) throw DomainError("intersectional grid needs at least one caption");
  IntersectionalGrid grid;
  grid.metric = metric;
  grid.column_labels = group_labels(Axis::RaceGender);
  for (const auto& audit : audits) {
    grid.row_labels.push_back(audit.caption.text);
    std::vector<double> row;
    if (metric == GridMetric::Casc) {
      for (const auto& label : grid.column_labels) row.push_back(audit.casc_by_group.at(label));
    } else {
      row = audit.retrieval_distributions.at(Axis::RaceGender).probabilities;
    }
    grid.values.push_back(std::move(row));
  }
  return grid;
}

inline IntersectionalGrid intersectional_grid(std::span<const CaptionVector> captions,
                                              const AuditContext& ctx, GridMetric metric,
                                              std::size_t k = kDefaultTopK,
                                              std::size_t threads = 1) {
  if (captions.empty()) throw DomainError("intersectional grid needs at least one caption");
  std::vector<WordAudit> audits(captions.size());
  parallel_for(captions.size(), threads, [&](std::size_t i) {
    audits[i] = run_word_audit(captions[i].vec, captions[i].caption, ctx, k, {}, 1);
  });
  return grid_from_audits(audits, metric);
}

/// Word with the highest C-ASC for `group_label`; ties go to the earlier word.
inline std::pair<std::string, double> top_word_per_group(const CategoryAudit& category,
                                                         const std::string& group_label) {
  const WordAudit* best = nullptr;
  double best_value = 0.0;
  for (const auto& w : category.word_audits) {
    const auto it = w.casc_by_group.find(group_label);
    if (it == w.casc_by_group.end()) throw DomainError("unknown group label '" + group_label + "'");
    if (best == nullptr || it->second > best_value) {
      best = &w;
      best_value = it->second;
    }
  }
  if (best == nullptr) throw DomainError("category has no word audits");
  return {best->caption.source_word.text, best_value};
}

/// Per category and axis, one mean-entropy column per model.
struct ComparisonTable {
  std::vector<std::string> models;
  struct Row {
    Category category;
    Axis axis;
    std::vector<double> values;  // aligned with models
  };
  std::vector<Row> rows;
};

inline ComparisonTable compare_models(std::span<const ModelAuditReport> reports) {
  if (reports.empty()) throw ComparabilityError("no reports to compare");
  const auto& first = reports.front();
  const auto categories_of = [](const ModelAuditReport& r) {
    std::vector<Category> out;
    for (const auto& c : r.categories) out.push_back(c.category);
    return out;
  };
  const auto first_categories = categories_of(first);
  for (const auto& r : reports) {
    if (r.dataset_name != first.dataset_name) {
      throw ComparabilityError("dataset '" + r.dataset_name + "' differs from '" +
                               first.dataset_name + "'");
    }
    if (r.k != first.k) {
      throw ComparabilityError("k=" + std::to_string(r.k) + " differs from k=" +
                               std::to_string(first.k));
    }
    if (categories_of(r) != first_categories) {
      throw ComparabilityError("report '" + r.model_name + "' covers different categories");
    }
  }

  std::vector<std::size_t> order(reports.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return reports[a].model_name < reports[b].model_name;
  });

  ComparisonTable table;
  for (std::size_t i : order) table.models.push_back(reports[i].model_name);
  for (std::size_t c = 0; c < first_categories.size(); ++c) {
    for (const auto& [axis, unused] : first.categories[c].mean_entropy_by_axis) {
      ComparisonTable::Row row{first_categories[c], axis, {}};
      for (std::size_t i : order) {
        const auto& means = reports[i].categories[c].mean_entropy_by_axis;
        const auto it = means.find(axis);
        if (it == means.end()) {
          throw ComparabilityError("report '" + reports[i].model_name + "' lacks axis " +
                                   std::string(to_string(axis)));
        }
        row.values.push_back(it->second);
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace vlaudit
