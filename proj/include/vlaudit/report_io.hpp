#pragma once

// JSON and CSV forms of audit results. Field names are a stable interface.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlaudit/audit.hpp"
#include "vlaudit/csv.hpp"
#include "vlaudit/error.hpp"

namespace vlaudit {

using ordered_json = nlohmann::ordered_json;

namespace detail {

/// Shortest decimal that round-trips a binary64.
inline std::string format_double(double v) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

template <typename T>
T require(const ordered_json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string("report is missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report field '") + key + "': " + e.what());
  }
}

inline Axis require_axis(const std::string& s) {
  const auto axis = parse_axis(s);
  if (!axis) throw FormatError("unknown axis '" + s + "'");
  return *axis;
}

}  // namespace detail

inline ordered_json to_json(const Caption& c) {
  return {{"text", c.text},
          {"word", c.source_word.text},
          {"kind", std::string(to_string(c.source_word.kind))},
          {"category", std::string(to_string(c.category))}};
}

inline ordered_json to_json(const GroupDistribution& d) {
  return {{"group_labels", d.group_labels},
          {"probabilities", d.probabilities},
          {"counts", d.counts}};
}

inline ordered_json to_json(const WordAudit& w) {
  ordered_json casc = ordered_json::object();
  for (const auto& label : all_group_labels()) {
    if (const auto it = w.casc_by_group.find(label); it != w.casc_by_group.end()) {
      casc[label] = it->second;
    }
  }
  ordered_json dists = ordered_json::object();
  ordered_json entropies = ordered_json::object();
  for (Axis axis : kAllAxes) {
    const std::string key(to_string(axis));
    if (const auto it = w.retrieval_distributions.find(axis); it != w.retrieval_distributions.end()) {
      dists[key] = to_json(it->second);
    }
    if (const auto it = w.normalized_entropies.find(axis); it != w.normalized_entropies.end()) {
      entropies[key] = it->second;
    }
  }
  ordered_json j = {{"caption", to_json(w.caption)},
                    {"k", w.k},
                    {"casc_by_group", std::move(casc)},
                    {"retrieval_distributions", std::move(dists)},
                    {"normalized_entropies", std::move(entropies)},
                    {"mean_topk_similarity", w.mean_topk_similarity}};
  if (w.relevance) j["relevance"] = *w.relevance;
  return j;
}

inline ordered_json to_json(const CategoryAudit& c) {
  ordered_json means = ordered_json::object();
  for (Axis axis : kAllAxes) {
    if (const auto it = c.mean_entropy_by_axis.find(axis); it != c.mean_entropy_by_axis.end()) {
      means[std::string(to_string(axis))] = it->second;
    }
  }
  ordered_json words = ordered_json::array();
  for (const auto& w : c.word_audits) words.push_back(to_json(w));
  return {{"category", std::string(to_string(c.category))},
          {"mean_entropy_by_axis", std::move(means)},
          {"word_audits", std::move(words)}};
}

inline ordered_json to_json(const ModelAuditReport& r) {
  ordered_json categories = ordered_json::array();
  for (const auto& c : r.categories) categories.push_back(to_json(c));
  ordered_json config = ordered_json::object();
  for (const auto& [key, value] : r.config) config[key] = value;
  return {{"model_name", r.model_name},
          {"dataset_name", r.dataset_name},
          {"k", r.k},
          {"created_at", r.created_at},
          {"engine_version", r.engine_version},
          {"config", std::move(config)},
          {"categories", std::move(categories)}};
}

inline Caption caption_from_json(const ordered_json& j) {
  Caption c;
  c.text = detail::require<std::string>(j, "text");
  c.source_word.text = detail::require<std::string>(j, "word");
  const auto kind = parse_word_kind(detail::require<std::string>(j, "kind"));
  const auto cat = parse_category(detail::require<std::string>(j, "category"));
  if (!kind || !cat) throw FormatError("caption '" + c.text + "' has unknown kind or category");
  c.source_word.kind = *kind;
  c.category = *cat;
  return c;
}

inline WordAudit word_audit_from_json(const ordered_json& j) {
  WordAudit w;
  w.caption = caption_from_json(detail::require<ordered_json>(j, "caption"));
  w.k = detail::require<std::size_t>(j, "k");
  const auto casc = detail::require<ordered_json>(j, "casc_by_group");
  const auto dists = detail::require<ordered_json>(j, "retrieval_distributions");
  const auto entropies = detail::require<ordered_json>(j, "normalized_entropies");
  for (const auto& [label, value] : casc.items()) {
    w.casc_by_group[label] = value.get<double>();
  }
  for (const auto& [key, value] : dists.items()) {
    GroupDistribution d;
    d.group_labels = detail::require<std::vector<std::string>>(value, "group_labels");
    d.probabilities = detail::require<std::vector<double>>(value, "probabilities");
    d.counts = detail::require<std::vector<std::size_t>>(value, "counts");
    w.retrieval_distributions[detail::require_axis(key)] = std::move(d);
  }
  for (const auto& [key, value] : entropies.items()) {
    w.normalized_entropies[detail::require_axis(key)] = value.get<double>();
  }
  w.mean_topk_similarity = detail::require<double>(j, "mean_topk_similarity");
  if (j.contains("relevance") && !j["relevance"].is_null()) w.relevance = j["relevance"].get<double>();
  return w;
}

inline ModelAuditReport report_from_json(const ordered_json& j) {
  ModelAuditReport r;
  r.model_name = detail::require<std::string>(j, "model_name");
  r.dataset_name = detail::require<std::string>(j, "dataset_name");
  r.k = detail::require<std::size_t>(j, "k");
  if (r.k == 0) throw FormatError("report k must be at least 1");
  r.created_at = detail::require<std::string>(j, "created_at");
  r.engine_version = detail::require<std::string>(j, "engine_version");
  if (j.contains("config")) {
    for (const auto& [key, value] : j["config"].items()) r.config[key] = value.get<std::string>();
  }
  for (const auto& cj : detail::require<ordered_json>(j, "categories")) {
    CategoryAudit c;
    const auto name = detail::require<std::string>(cj, "category");
    const auto cat = parse_category(name);
    if (!cat) throw FormatError("unknown category '" + name + "'");
    for (const auto& existing : r.categories) {
      if (existing.category == *cat) throw FormatError("category '" + name + "' repeated");
    }
    c.category = *cat;
    const auto means = detail::require<ordered_json>(cj, "mean_entropy_by_axis");
    for (const auto& [key, value] : means.items()) {
      c.mean_entropy_by_axis[detail::require_axis(key)] = value.get<double>();
    }
    for (const auto& wj : detail::require<ordered_json>(cj, "word_audits")) {
      c.word_audits.push_back(word_audit_from_json(wj));
    }
    r.categories.push_back(std::move(c));
  }
  return r;
}

inline ModelAuditReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open report '" + path.string() + "'");
  try {
    return report_from_json(ordered_json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("report '" + path.string() + "' is not valid JSON: " + e.what());
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, text);
}

// ---------------------------------------------------------------------------
// Flat CSV: model,dataset,category,word,axis,group,metric,value

inline std::string report_to_csv(const ModelAuditReport& r) {
  std::ostringstream out;
  out << "model,dataset,category,word,axis,group,metric,value\n";
  const auto emit = [&](const std::string& category, const std::string& word,
                        const std::string& axis, const std::string& group,
                        const std::string& metric, double value) {
    out << csv::join({r.model_name, r.dataset_name, category, word, axis, group, metric,
                      detail::format_double(value)})
        << '\n';
  };
  for (const auto& c : r.categories) {
    const std::string cat(to_string(c.category));
    for (const auto& w : c.word_audits) {
      const std::string& word = w.caption.source_word.text;
      for (Axis axis : kAllAxes) {
        const std::string ax(to_string(axis));
        for (const auto& label : group_labels(axis)) {
          if (const auto it = w.casc_by_group.find(label); it != w.casc_by_group.end()) {
            emit(cat, word, ax, label, "casc", it->second);
          }
        }
      }
      for (const auto& [axis, dist] : w.retrieval_distributions) {
        const std::string ax(to_string(axis));
        for (std::size_t g = 0; g < dist.group_labels.size(); ++g) {
          emit(cat, word, ax, dist.group_labels[g], "topk_share", dist.probabilities[g]);
        }
      }
      for (const auto& [axis, h] : w.normalized_entropies) {
        emit(cat, word, std::string(to_string(axis)), "", "normalized_entropy", h);
      }
      emit(cat, word, "", "", "mean_topk_similarity", w.mean_topk_similarity);
      if (w.relevance) emit(cat, word, "", "", "relevance", *w.relevance);
    }
    for (const auto& [axis, h] : c.mean_entropy_by_axis) {
      emit(cat, "", std::string(to_string(axis)), "", "mean_normalized_entropy", h);
    }
  }
  return out.str();
}

inline std::string grid_to_csv(const IntersectionalGrid& grid) {
  std::ostringstream out;
  std::vector<std::string> header = {"metric", "caption"};
  header.insert(header.end(), grid.column_labels.begin(), grid.column_labels.end());
  out << csv::join(header) << '\n';
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    std::vector<std::string> row = {std::string(to_string(grid.metric)), grid.row_labels[i]};
    for (double v : grid.values[i]) row.push_back(detail::format_double(v));
    out << csv::join(row) << '\n';
  }
  return out.str();
}

inline std::string comparison_to_csv(const ComparisonTable& table) {
  std::ostringstream out;
  std::vector<std::string> header = {"category", "axis"};
  header.insert(header.end(), table.models.begin(), table.models.end());
  out << csv::join(header) << '\n';
  for (const auto& row : table.rows) {
    std::vector<std::string> fields = {std::string(to_string(row.category)),
                                       std::string(to_string(row.axis))};
    for (double v : row.values) fields.push_back(detail::format_double(v));
    out << csv::join(fields) << '\n';
  }
  return out.str();
}

}  // namespace vlaudit
