// vlaudit: bias audits of vision-language embedding spaces.
//
//   vlaudit render-captions --out captions.txt
//   vlaudit audit --embeddings images.emb --metadata images.csv
//                 --caption-vectors captions.emb --out-dir out/
//   vlaudit scan --words words.txt corpus.txt.gz
//   vlaudit compare out_a/report.json out_b/report.json
//   vlaudit inspect images.emb

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vlaudit/commands.hpp"
#include "vlaudit/version.hpp"

namespace cli = vlaudit::cli;

int main(int argc, char** argv) {
  CLI::App app{"Demographic bias audits for vision-language embedding spaces"};
  app.set_version_flag("--version", std::string(vlaudit::kEngineVersion));
  app.require_subcommand(1);

  std::size_t threads = 0;
  std::string log_level = "info";
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)")
      ->capture_default_str();
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->capture_default_str()
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  // audit
  cli::AuditConfig audit;
  std::string caption_manifest, taxonomy, baseline, timestamp;
  auto* audit_cmd = app.add_subcommand("audit", "Run a full taxonomy audit");
  audit_cmd->add_option("--embeddings", audit.embeddings, "Image embeddings (EMB1)")->required();
  audit_cmd->add_option("--metadata", audit.metadata, "Image metadata CSV")->required();
  audit_cmd->add_option("--caption-vectors", audit.caption_vectors, "Caption embeddings (EMB1)")
      ->required();
  audit_cmd->add_option("--caption-manifest", caption_manifest,
                        "Caption manifest JSON (default: <caption-vectors>.manifest.json)");
  audit_cmd->add_option("--taxonomy", taxonomy, "Taxonomy JSON (default: bundled)");
  audit_cmd->add_option("-k,--k", audit.k, "Top-k retrieval size")->capture_default_str();
  audit_cmd->add_option("--axes", audit.axes, "Axes to report: race gender race_gender")
      ->capture_default_str();
  audit_cmd->add_option("--categories", audit.categories, "Restrict to these categories");
  audit_cmd->add_option("--baseline", baseline,
                        "Baseline means (text, one per line) or baseline embeddings (EMB1)");
  audit_cmd->add_option("--out-dir", audit.output_dir, "Output directory")->capture_default_str();
  audit_cmd->add_option("--model", audit.model_name, "Model name")->capture_default_str();
  audit_cmd->add_option("--dataset", audit.dataset_name, "Dataset name")->capture_default_str();
  audit_cmd->add_option("--timestamp", timestamp, "Pin created_at (default: now, UTC)");

  // render-captions
  cli::RenderConfig render;
  std::string render_taxonomy, render_manifest;
  auto* render_cmd = app.add_subcommand("render-captions", "Write the caption list and manifest");
  render_cmd->add_option("--taxonomy", render_taxonomy, "Taxonomy JSON (default: bundled)");
  render_cmd->add_option("--out", render.out, "Caption list, one per line")->capture_default_str();
  render_cmd->add_option("--manifest", render_manifest, "Manifest path (default: <out>.manifest.json)");

  // scan
  cli::ScanConfig scan;
  std::string category, lexicon;
  bool no_split_clitics = false;
  auto* scan_cmd = app.add_subcommand("scan", "Count gendered-pronoun co-occurrence in captions");
  scan_cmd->add_option("inputs", scan.inputs, "Corpus files (plain or gzip)")->required();
  scan_cmd->add_option("--format", scan.format, "lines|csv")
      ->capture_default_str()
      ->check(CLI::IsMember({"lines", "csv"}));
  scan_cmd->add_option("--caption-column", scan.caption_column, "CSV caption column")
      ->capture_default_str();
  scan_cmd->add_option("--words-file", scan.words_file, "Words (one per line) or taxonomy JSON")
      ->required();
  scan_cmd->add_option("--category", category, "Category filter for taxonomy words files");
  scan_cmd->add_option("--lexicon-file", lexicon, "Pronoun lexicon JSON {\"male\":[],\"female\":[]}");
  scan_cmd->add_option("--out-dir", scan.output_dir, "Output directory")->capture_default_str();
  scan_cmd->add_flag("--no-split-clitics", no_split_clitics, "Keep \"she's\" as one token");

  // compare
  cli::CompareConfig compare;
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "Tabulate mean entropies across reports");
  compare_cmd->add_option("reports", compare.reports, "report.json files")->required();
  compare_cmd->add_option("--out", compare_out, "CSV output (default: stdout)");

  // inspect
  cli::InspectConfig inspect;
  std::string inspect_metadata;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print and validate an EMB1 header");
  inspect_cmd->add_option("embeddings", inspect.embeddings, "EMB1 file")->required();
  inspect_cmd->add_option("--metadata", inspect_metadata, "Check alignment with a metadata CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitUsage;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("vlaudit"));
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::from_str(log_level));

  if (*audit_cmd) {
    if (!caption_manifest.empty()) audit.caption_manifest = caption_manifest;
    if (!taxonomy.empty()) audit.taxonomy = taxonomy;
    if (!baseline.empty()) audit.baseline = baseline;
    if (!timestamp.empty()) audit.timestamp = timestamp;
    audit.threads = threads;
    return cli::cmd_audit(audit);
  }
  if (*render_cmd) {
    if (!render_taxonomy.empty()) render.taxonomy = render_taxonomy;
    if (!render_manifest.empty()) render.manifest = render_manifest;
    return cli::cmd_render_captions(render);
  }
  if (*scan_cmd) {
    if (!category.empty()) scan.category = category;
    if (!lexicon.empty()) scan.lexicon_file = lexicon;
    scan.split_clitics = !no_split_clitics;
    scan.threads = threads;
    return cli::cmd_scan(scan);
  }
  if (*compare_cmd) {
    if (!compare_out.empty()) compare.out = compare_out;
    return cli::cmd_compare(compare);
  }
  if (*inspect_cmd) {
    if (!inspect_metadata.empty()) inspect.metadata = inspect_metadata;
    return cli::cmd_inspect(inspect);
  }
  return cli::kExitUsage;
}
