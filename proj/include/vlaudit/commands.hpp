#pragma once

// Implementations of the command-line subcommands. Each returns a process
// exit code: 0 success, 2 input/config error, 3 computation error, 64 usage.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include <json.hpp>

#include "vlaudit/audit.hpp"
#include "vlaudit/corpus_scan.hpp"
#include "vlaudit/embedding_store.hpp"
#include "vlaudit/error.hpp"
#include "vlaudit/metrics.hpp"
#include "vlaudit/report_io.hpp"
#include "vlaudit/taxonomy.hpp"
#include "vlaudit/version.hpp"

namespace vlaudit::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitCompute = 3;
inline constexpr int kExitUsage = 64;

inline int exit_code_for(const Error& e) {
  return e.error_class() == ErrorClass::Input ? kExitInput : kExitCompute;
}

/// Runs `body`, converting engine errors into exit codes.
template <typename Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("JSON error: {}", e.what());
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("filesystem error: {}", e.what());
    return kExitInput;
  }
}

inline void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw IoError(std::string(what) + " file '" + path.string() + "' does not exist");
  }
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Caption manifest: the handoff contract with the text encoder.

inline nlohmann::ordered_json caption_manifest(std::span<const Caption> captions) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& c : captions) {
    entries.push_back({{"caption", c.text},
                       {"word", c.source_word.text},
                       {"kind", std::string(to_string(c.source_word.kind))},
                       {"category", std::string(to_string(c.category))}});
  }
  return {{"engine_version", std::string(kEngineVersion)},
          {"count", captions.size()},
          {"captions", std::move(entries)}};
}

/// Caption strings listed by a manifest, in order.
inline std::vector<std::string> read_manifest_captions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open caption manifest '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestError("caption manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  const nlohmann::json* entries = &doc;
  if (doc.is_object() && doc.contains("captions")) entries = &doc["captions"];
  if (!entries->is_array()) throw ManifestError("caption manifest has no 'captions' array");
  std::vector<std::string> out;
  for (const auto& e : *entries) {
    if (e.is_string()) {
      out.push_back(e.get<std::string>());
    } else if (e.is_object() && e.contains("caption") && e["caption"].is_string()) {
      out.push_back(e["caption"].get<std::string>());
    } else {
      throw ManifestError("caption manifest entry " + std::to_string(out.size()) +
                          " has no caption string");
    }
  }
  return out;
}

/// Throws ManifestError naming the first caption that differs.
inline void check_manifest(std::span<const Caption> expected, std::span<const std::string> found) {
  const std::size_t n = std::min(expected.size(), found.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (expected[i].text != found[i]) {
      throw ManifestError("caption " + std::to_string(i) + " mismatch: taxonomy renders '" +
                          expected[i].text + "' but manifest has '" + found[i] + "'");
    }
  }
  if (expected.size() != found.size()) {
    const std::string first = expected.size() > n ? expected[n].text : found[n];
    throw ManifestError("manifest lists " + std::to_string(found.size()) +
                        " captions but taxonomy renders " + std::to_string(expected.size()) +
                        "; first unmatched caption '" + first + "'");
  }
}

// ---------------------------------------------------------------------------
// Baseline for the relevance percentile.

/// Either a text file with one mean similarity per line, or an EMB1 file of
/// baseline caption embeddings whose mean top-k similarity is computed here.
inline std::vector<double> load_baseline_means(const fs::path& path, const AuditContext& ctx,
                                               std::size_t k, std::size_t threads) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() >= 4 && std::equal(kEmbMagic.begin(), kEmbMagic.end(), bytes.begin())) {
    auto set = decode_embeddings(bytes);
    if (!set.normalized()) set = l2_normalize(set);
    std::vector<double> means(set.count());
    parallel_for(set.count(), threads, [&](std::size_t i) {
      const auto sims = similarity_vector(set.row(i), ctx.data().embeddings, 1);
      means[i] = mean_similarity(topk(sims, k));
    });
    return means;
  }
  std::vector<double> means;
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line.substr(b), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    const auto rest = line.find_first_not_of(" \t\r", b + used);
    if (used == 0 || rest != std::string::npos || !std::isfinite(v)) {
      throw FormatError("baseline '" + path.string() + "' line " + std::to_string(lineno) +
                        " is not a number");
    }
    means.push_back(v);
  }
  if (means.empty()) throw FormatError("baseline '" + path.string() + "' is empty");
  return means;
}

// ---------------------------------------------------------------------------
// audit

struct AuditConfig {
  fs::path embeddings;
  fs::path metadata;
  fs::path caption_vectors;
  std::optional<fs::path> caption_manifest;  // default: <caption_vectors>.manifest.json
  std::optional<fs::path> taxonomy;          // default: bundled
  long long k = static_cast<long long>(kDefaultTopK);
  std::vector<std::string> axes = {"race", "gender", "race_gender"};
  std::vector<std::string> categories;  // empty: all
  std::optional<fs::path> baseline;
  fs::path output_dir = "audit_out";
  std::string model_name = "model";
  std::string dataset_name = "dataset";
  std::optional<std::string> timestamp;
  std::size_t threads = 0;
};

inline fs::path manifest_path_for(const AuditConfig& cfg) {
  return cfg.caption_manifest.value_or(fs::path(cfg.caption_vectors.string() + ".manifest.json"));
}

/// Audit result without writing anything; throws on any failure.
inline ModelAuditReport run_audit(const AuditConfig& cfg) {
  if (cfg.k < 1) throw DomainError("k must be at least 1");
  const auto k = static_cast<std::size_t>(cfg.k);
  const auto manifest_path = manifest_path_for(cfg);

  require_file(cfg.embeddings, "embeddings");
  require_file(cfg.metadata, "metadata");
  require_file(cfg.caption_vectors, "caption vectors");
  require_file(manifest_path, "caption manifest");
  if (cfg.taxonomy) require_file(*cfg.taxonomy, "taxonomy");
  if (cfg.baseline) require_file(*cfg.baseline, "baseline");

  std::set<Axis> axes;
  for (const auto& a : cfg.axes) {
    const auto axis = parse_axis(a);
    if (!axis) throw SchemaError("unknown axis '" + a + "'");
    axes.insert(*axis);
  }
  std::set<Category> wanted;
  for (const auto& c : cfg.categories) {
    const auto cat = parse_category(c);
    if (!cat) throw SchemaError("unknown category '" + c + "'");
    wanted.insert(*cat);
  }

  const Taxonomy taxonomy = cfg.taxonomy ? load_taxonomy(*cfg.taxonomy) : default_taxonomy();
  const auto captions = render_all(taxonomy);
  check_manifest(captions, read_manifest_captions(manifest_path));

  auto caption_set = read_embeddings(cfg.caption_vectors);
  if (caption_set.count() != captions.size()) {
    throw AlignmentError("caption vector file has " + std::to_string(caption_set.count()) +
                         " rows but the manifest lists " + std::to_string(captions.size()));
  }
  if (!caption_set.normalized()) {
    spdlog::warn("caption vectors are not flagged normalized; normalizing");
    caption_set = l2_normalize(caption_set);
  }

  auto data = load_labeled(cfg.embeddings, cfg.metadata);
  if (!data.embeddings.normalized()) {
    spdlog::warn("image embeddings are not flagged normalized; normalizing");
    data.embeddings = l2_normalize(data.embeddings);
  }
  if (caption_set.dim() != data.embeddings.dim()) {
    throw DimError("caption vectors have dim " + std::to_string(caption_set.dim()) +
                   " but images have dim " + std::to_string(data.embeddings.dim()));
  }
  spdlog::info("auditing {} captions against {} images (dim {}, k {})", captions.size(),
               data.size(), data.embeddings.dim(), k);

  const AuditContext ctx(data);
  std::vector<double> baseline;
  if (cfg.baseline) {
    baseline = load_baseline_means(*cfg.baseline, ctx, k, cfg.threads);
    spdlog::info("relevance baseline: {} entries", baseline.size());
  }

  ModelAuditReport report;
  report.model_name = cfg.model_name;
  report.dataset_name = cfg.dataset_name;
  report.k = k;
  report.created_at = cfg.timestamp.value_or(utc_timestamp());
  report.engine_version = std::string(kEngineVersion);

  std::size_t offset = 0;
  for (const auto& category : taxonomy) {
    const std::size_t n = category.words.size();
    if (!wanted.empty() && !wanted.contains(category.name)) {
      offset += n;
      continue;
    }
    std::vector<std::span<const double>> vecs;
    for (std::size_t i = 0; i < n; ++i) vecs.push_back(caption_set.row(offset + i));
    offset += n;
    auto audit = run_category_audit(category, vecs, ctx, k, baseline, cfg.threads);
    for (auto& w : audit.word_audits) {
      std::erase_if(w.retrieval_distributions, [&](const auto& kv) { return !axes.contains(kv.first); });
      std::erase_if(w.normalized_entropies, [&](const auto& kv) { return !axes.contains(kv.first); });
    }
    std::erase_if(audit.mean_entropy_by_axis, [&](const auto& kv) { return !axes.contains(kv.first); });
    spdlog::debug("category {} done", to_string(category.name));
    report.categories.push_back(std::move(audit));
  }

  auto& config = report.config;
  config["embeddings"] = cfg.embeddings.string();
  config["metadata"] = cfg.metadata.string();
  config["caption_vectors"] = cfg.caption_vectors.string();
  config["caption_manifest"] = manifest_path.string();
  config["taxonomy"] = cfg.taxonomy ? cfg.taxonomy->string() : "<bundled>";
  config["k"] = std::to_string(k);
  std::string axes_echo;
  for (Axis a : axes) axes_echo += (axes_echo.empty() ? "" : ",") + std::string(to_string(a));
  config["axes"] = axes_echo;
  std::string cats_echo;
  for (const auto& c : report.categories) {
    cats_echo += (cats_echo.empty() ? "" : ",") + std::string(to_string(c.category));
  }
  config["categories"] = cats_echo;
  config["baseline"] = cfg.baseline ? cfg.baseline->string() : "";
  if (cfg.baseline) config["baseline_k"] = std::to_string(k);
  return report;
}

inline void write_audit_outputs(const ModelAuditReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "report.json", to_json(report).dump(2) + "\n");
  write_text(dir / "report.csv", report_to_csv(report));
  std::vector<WordAudit> all;
  for (const auto& c : report.categories)
    all.insert(all.end(), c.word_audits.begin(), c.word_audits.end());
  if (all.empty()) return;
  write_text(dir / "grid_casc.csv", grid_to_csv(grid_from_audits(all, GridMetric::Casc)));
  if (all.front().retrieval_distributions.contains(Axis::RaceGender)) {
    write_text(dir / "grid_topk_share.csv",
               grid_to_csv(grid_from_audits(all, GridMetric::TopkShare)));
  }
}

inline int cmd_audit(const AuditConfig& cfg) {
  if (cfg.k < 1) {
    spdlog::error("k must be at least 1 (got {})", cfg.k);
    return kExitUsage;
  }
  return guarded([&] {
    const auto report = run_audit(cfg);
    write_audit_outputs(report, cfg.output_dir);
    spdlog::info("report written to {}", cfg.output_dir.string());
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// render-captions

struct RenderConfig {
  std::optional<fs::path> taxonomy;
  fs::path out = "captions.txt";
  std::optional<fs::path> manifest;  // default: <out>.manifest.json
};

inline int cmd_render_captions(const RenderConfig& cfg) {
  return guarded([&] {
    if (cfg.taxonomy) require_file(*cfg.taxonomy, "taxonomy");
    const Taxonomy taxonomy = cfg.taxonomy ? load_taxonomy(*cfg.taxonomy) : default_taxonomy();
    const auto captions = render_all(taxonomy);
    std::string lines;
    for (const auto& c : captions) lines += c.text + "\n";
    write_text(cfg.out, lines);
    const auto manifest = cfg.manifest.value_or(fs::path(cfg.out.string() + ".manifest.json"));
    write_text(manifest, caption_manifest(captions).dump(2) + "\n");
    spdlog::info("wrote {} captions to {} (manifest {})", captions.size(), cfg.out.string(),
                 manifest.string());
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// scan

struct ScanConfig {
  std::vector<fs::path> inputs;
  std::string format = "lines";
  std::string caption_column = "caption";
  fs::path words_file;
  std::optional<std::string> category;
  std::optional<fs::path> lexicon_file;
  fs::path output_dir = "scan_out";
  bool split_clitics = true;
  std::size_t threads = 0;
};

inline CorpusStats run_scan(const ScanConfig& cfg) {
  CorpusFormat format;
  if (cfg.format == "lines") {
    format = CorpusFormat::Lines;
  } else if (cfg.format == "csv") {
    format = CorpusFormat::Csv;
  } else {
    throw SchemaError("unknown corpus format '" + cfg.format + "'");
  }
  for (const auto& p : cfg.inputs) require_file(p, "corpus");
  require_file(cfg.words_file, "words");
  if (cfg.lexicon_file) require_file(*cfg.lexicon_file, "lexicon");

  const auto lexicon = cfg.lexicon_file ? load_lexicon(*cfg.lexicon_file) : PronounLexicon::defaults();
  auto words = load_words(cfg.words_file, cfg.category);
  const CorpusScanner scanner(std::move(words), lexicon,
                              ScanOptions{cfg.split_clitics, cfg.threads, 4096});
  std::vector<CorpusSource> sources;
  for (const auto& p : cfg.inputs) sources.push_back({p, format, cfg.caption_column});
  return scan_files(sources, scanner);
}

inline int cmd_scan(const ScanConfig& cfg) {
  return guarded([&] {
    const auto stats = run_scan(cfg);
    fs::create_directories(cfg.output_dir);
    write_text(cfg.output_dir / "corpus_stats.json", to_json(stats).dump(2) + "\n");
    write_text(cfg.output_dir / "proportions.csv", proportions_to_csv(proportions(stats)));
    spdlog::info("scanned {} captions ({} skipped lines) for {} words", stats.captions_scanned,
                 stats.skipped_lines, stats.words.size());
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// compare

struct CompareConfig {
  std::vector<fs::path> reports;
  std::optional<fs::path> out;  // default: stdout
};

inline int cmd_compare(const CompareConfig& cfg, std::ostream& stdout_stream = std::cout) {
  return guarded([&] {
    std::vector<ModelAuditReport> reports;
    for (const auto& p : cfg.reports) {
      require_file(p, "report");
      reports.push_back(read_report(p));
    }
    const auto csv_text = comparison_to_csv(compare_models(reports));
    if (cfg.out) {
      write_text(*cfg.out, csv_text);
    } else {
      stdout_stream << csv_text;
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// inspect

struct InspectConfig {
  fs::path embeddings;
  std::optional<fs::path> metadata;
};

inline int cmd_inspect(const InspectConfig& cfg, std::ostream& out = std::cout) {
  return guarded([&] {
    require_file(cfg.embeddings, "embeddings");
    const auto header = read_emb_header(cfg.embeddings);
    out << "file: " << cfg.embeddings.string() << "\n"
        << "magic: EMB1\n"
        << "version: " << header.version << "\n"
        << "flags: 0x" << std::hex << header.flags << std::dec << "\n"
        << "normalized: " << (header.normalized() ? "true" : "false") << "\n"
        << "dim: " << header.dim << "\n"
        << "count: " << header.count << "\n";
    const auto set = read_embeddings(cfg.embeddings);
    if (cfg.metadata) {
      require_file(*cfg.metadata, "metadata");
      const LabeledEmbeddings labeled(set, read_metadata(*cfg.metadata));
      out << "metadata_rows: " << labeled.size() << "\n";
    }
    out << "status: valid\n";
    return kExitOk;
  });
}

}  // namespace vlaudit::cli
