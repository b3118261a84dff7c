// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hand_corpus.hpp"
#include "oracles.hpp"
#include "vlaudit/commands.hpp"
#include "vlaudit/corpus_scan.hpp"
#include "vlaudit/embedding_store.hpp"
#include "vlaudit/metrics.hpp"
#include "vlaudit/planted_fixture.hpp"
#include "vlaudit/report_io.hpp"

using namespace vlaudit;
namespace fs = std::filesystem;

namespace {

const fs::path kData = VLAUDIT_TEST_DATA;

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Records the first failure; later checks only add to the count.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (first_.empty()) first_ = what;
  }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    return failures_ == 0 ? "" : std::to_string(failures_) + " failed check(s), first: " + first_;
  }

 private:
  std::size_t failures_ = 0;
  std::string first_;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

GroupMask random_mask(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::uniform_int_distribution<std::size_t>(1, n - 1)(rng));
  std::sort(idx.begin(), idx.end());
  return {"random", idx};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome a1_casc_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  Checker c;
  double max_err = 0, max_anti = 0;
  for (int i = 0; i < 500; ++i) {
    const SimilarityVector s{uniform(rng, 200, -1, 1)};
    const auto g = random_mask(rng, 200);
    const double engine = casc(s, g);
    const double expected = oracle::casc(s.values, {g.members.begin(), g.members.end()});
    const double anti = std::abs(engine + casc(s, complement(g, 200)));
    max_err = std::max(max_err, std::abs(engine - expected));
    max_anti = std::max(max_anti, anti);
    c.expect(std::abs(engine - expected) <= 1e-9, "instance " + std::to_string(i) + " oracle");
    c.expect(anti <= 1e-9, "instance " + std::to_string(i) + " antisymmetry");
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 5.0, "runtime " + fmt("%.2fs", secs));
  return {c.ok(), "500 instances, max |engine-oracle| " + fmt("%.1e", max_err) +
                      ", max |casc(G)+casc(rest)| " + fmt("%.1e", max_anti) + ", " +
                      fmt("%.3fs", secs) + " " + c.summary()};
}

Outcome a2_affine() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> a_dist(1e-3, 1e3), b_dist(-100, 100);
  Checker c;
  double max_err = 0;
  for (int i = 0; i < 100; ++i) {
    const SimilarityVector s{uniform(rng, 200, -1, 1)};
    const auto g = random_mask(rng, 200);
    const double base = casc(s, g);
    for (int j = 0; j < 10; ++j) {
      const double a = a_dist(rng), b = b_dist(rng);
      SimilarityVector t = s;
      for (auto& v : t.values) v = a * v + b;
      const double err = std::abs(casc(t, g) - base);
      max_err = std::max(max_err, err);
      c.expect(err < 1e-9, "instance " + std::to_string(i) + " transform " + std::to_string(j));
    }
  }
  return {c.ok(), "1000 transforms, max |diff| " + fmt("%.1e", max_err) + " " + c.summary()};
}

Outcome a3_entropy() {
  const auto dist = [](std::vector<double> p) {
    GroupDistribution d;
    d.group_labels = group_labels(Axis::RaceGender);
    d.probabilities = std::move(p);
    return d;
  };
  Checker c;
  const double uniform14 = normalized_entropy(dist(std::vector<double>(14, 1.0 / 14.0)));
  std::vector<double> point(14, 0.0);
  point[5] = 1.0;
  const double point_mass = normalized_entropy(dist(point));
  std::vector<double> split(14, 0.0);
  split[5] = split[10] = 0.5;
  const double two = normalized_entropy(dist(split));
  const double two_oracle = oracle::normalized_entropy(split);
  c.expect(std::abs(uniform14 - 1.0) <= 1e-12, "uniform");
  c.expect(point_mass == 0.0, "point mass");
  c.expect(std::abs(two - two_oracle) <= 1e-12, "two of fourteen");
  c.expect(std::abs(two_oracle - 0.2626) < 5e-5, "two of fourteen near 0.2626");
  return {c.ok(), "uniform " + fmt("%.15f", uniform14) + ", point " + fmt("%.1f", point_mass) +
                      ", 50/50 " + fmt("%.12f", two) + " (oracle " + fmt("%.12f", two_oracle) +
                      ") " + c.summary()};
}

Outcome a4_topk() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> level(0, 40);
  std::uniform_int_distribution<std::size_t> pos(0, 999);
  Checker c;
  std::size_t tied_pairs = 0;
  for (int i = 0; i < 1000; ++i) {
    SimilarityVector s{uniform(rng, 1000, -1, 1)};
    // Inject ties: a coarse grid over a third of the entries plus copied values.
    for (std::size_t j = 0; j < 1000; j += 3) s.values[j] = 0.5 + level(rng) / 100.0;
    for (int j = 0; j < 50; ++j) s.values[pos(rng)] = s.values[pos(rng)];
    const auto r = topk(s, 100);
    const auto expected = oracle::topk_indices(s.values, 100);
    bool same = r.size() == expected.size();
    for (std::size_t j = 0; same && j < r.size(); ++j) {
      same = r[j].index == expected[j] && r[j].similarity == s.values[expected[j]];
      if (j > 0 && r[j].similarity == r[j - 1].similarity) ++tied_pairs;
    }
    c.expect(same, "vector " + std::to_string(i));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "runtime " + fmt("%.2fs", secs));
  return {c.ok(), "1000 vectors, " + std::to_string(tied_pairs) + " tied adjacent pairs in results, " +
                      fmt("%.3fs", secs) + " " + c.summary()};
}

Outcome a5_planted() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = fs::temp_directory_path() / "vlaudit_acceptance_a5";
  fs::remove_all(dir);
  synthetic::PlantedFixtureSpec spec;
  spec.words = synthetic::default_planted_words();
  const auto fx = synthetic::make_planted_fixture(spec);
  const auto files = synthetic::write_planted_fixture(fx, dir / "fixture");

  cli::AuditConfig cfg;
  cfg.embeddings = files.embeddings;
  cfg.metadata = files.metadata;
  cfg.caption_vectors = files.caption_vectors;
  cfg.taxonomy = files.taxonomy;
  cfg.output_dir = dir / "out";
  cfg.timestamp = "2026-01-01T00:00:00Z";
  Checker c;
  const int rc = cli::cmd_audit(cfg);
  c.expect(rc == 0, "cmd_audit exit " + std::to_string(rc));
  if (rc != 0) return {false, c.summary()};
  const auto report = read_report(dir / "out" / "report.json");

  const auto labels = group_labels(Axis::RaceGender);
  std::map<std::string, std::optional<std::size_t>> planted;
  for (std::size_t i = 0; i < fx.captions.size(); ++i) planted[fx.captions[i].text] = fx.planted[i];
  std::vector<const WordAudit*> planted_audits, neutral_audits;
  for (const auto& cat : report.categories) {
    for (const auto& w : cat.word_audits) {
      (planted.at(w.caption.text) ? planted_audits : neutral_audits).push_back(&w);
    }
  }
  c.expect(planted_audits.size() == 4 && neutral_audits.size() == 5, "caption split");

  double min_gap = 1e9;
  std::string shares;
  for (const auto* w : planted_audits) {
    const std::size_t g = *planted.at(w->caption.text);
    const auto& word = w->caption.source_word.text;
    std::size_t casc_arg = 0;
    for (std::size_t j = 1; j < labels.size(); ++j) {
      if (w->casc_by_group.at(labels[j]) > w->casc_by_group.at(labels[casc_arg])) casc_arg = j;
    }
    c.expect(casc_arg == g, word + " C-ASC argmax is " + labels[casc_arg]);
    c.expect(w->casc_by_group.at(labels[g]) > 0, word + " C-ASC not positive");
    const auto& d = w->retrieval_distributions.at(Axis::RaceGender);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (j != g) c.expect(d.counts[g] > d.counts[j], word + " plurality tied or lost to " + labels[j]);
    }
    shares += word + " " + labels[g] + " " + fmt("%.2f", d.probabilities[g]) + "; ";
    for (Axis axis : kAllAxes) {
      for (const auto* n : neutral_audits) {
        const double gap = n->normalized_entropies.at(axis) - w->normalized_entropies.at(axis);
        min_gap = std::min(min_gap, gap);
        c.expect(gap >= 0.1, word + " vs " + n->caption.source_word.text + " on " +
                                 std::string(to_string(axis)) + " gap " + fmt("%.3f", gap));
      }
    }
  }
  fs::remove_all(dir);
  const double secs = seconds_since(t0);
  c.expect(secs < 30.0, "runtime " + fmt("%.2fs", secs));
  return {c.ok(), "2800 images, top-k shares: " + shares + "min entropy gap " +
                      fmt("%.3f", min_gap) + ", " + fmt("%.3fs", secs) + " " + c.summary()};
}

Outcome a6_corpus() {
  Checker c;
  std::vector<std::string> corpus;
  {
    LineFile f(kData / "hand_corpus.txt");
    for (std::string line; f.next(line);) corpus.push_back(line);
  }
  const auto words = load_words(kData / "hand_words.txt");
  const auto lex = PronounLexicon::defaults();
  const auto reference = scan(corpus, words, lex, {true, 1, 4096});
  c.expect(reference.captions_scanned == test::kHandCorpusLines, "captions_scanned");
  for (const auto& [word, counts] : test::hand_corpus_expected()) {
    c.expect(reference.at(word) == counts, "hand tally for '" + word + "'");
  }

  std::mt19937_64 rng(606);
  std::size_t runs = 0;
  for (int perm = 0; perm < 20; ++perm) {
    auto shuffled = corpus;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t threads : {1u, 2u, 8u}) {
      for (std::size_t chunk : {1u, 5u, 4096u}) {
        c.expect(scan(shuffled, words, lex, {true, threads, chunk}) == reference,
                 "permutation " + std::to_string(perm) + " threads " + std::to_string(threads));
        ++runs;
      }
    }
  }

  std::size_t rows_checked = 0;
  for (const auto& row : proportions(reference)) {
    const auto denom = row.counts.male_count + row.counts.female_count;
    if (denom == 0) {
      c.expect(!row.male_pct && !row.female_pct, row.word + " should have null percentages");
      continue;
    }
    const double sum = std::stod(display_percent(row.counts.male_count, denom)) +
                       std::stod(display_percent(row.counts.female_count, denom));
    c.expect(fmt("%.1f", sum) == "100.0", row.word + " percentages sum to " + fmt("%.1f", sum));
    ++rows_checked;
  }
  return {c.ok(), "12 captions, 5 words exact; " + std::to_string(runs) +
                      " permuted/parallel runs identical; " + std::to_string(rows_checked) +
                      " percentage rows sum to 100.0 " + c.summary()};
}

Outcome a7_format() {
  Checker c;
  const auto dir = fs::temp_directory_path() / "vlaudit_acceptance_a7";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::mt19937_64 rng(707);
  for (int i = 0; i < 50; ++i) {
    const std::size_t dim = 1 + rng() % 48, rows = rng() % 40;
    auto values = uniform(rng, dim * rows, -3, 3);
    for (auto& v : values) v = static_cast<float>(v);
    const bool normalize = i % 2 == 0 && rows > 0;
    EmbeddingSet set(dim, values, false);
    if (normalize) {
      set = l2_normalize(set);
      // Store what binary32 can represent exactly.
      std::vector<double> f(set.values().begin(), set.values().end());
      for (auto& v : f) v = static_cast<float>(v);
      set = EmbeddingSet(dim, f, true);
    }
    std::vector<DemographicRecord> meta;
    for (std::size_t r = 0; r < rows; ++r) {
      meta.push_back({"img," + std::to_string(i) + "-" + std::to_string(r), kAllRaces[rng() % 7],
                      kAllGenders[rng() % 2],
                      r % 2 ? std::optional<std::string>("\"40-49\"") : std::nullopt});
    }
    const LabeledEmbeddings data(set, meta);
    write_labeled(data, dir / "a.emb", dir / "a.csv");
    const auto loaded = load_labeled(dir / "a.emb", dir / "a.csv");
    c.expect(loaded.embeddings == data.embeddings, "set " + std::to_string(i) + " matrix");
    c.expect(loaded.metadata == data.metadata, "set " + std::to_string(i) + " metadata");
    write_labeled(loaded, dir / "b.emb", dir / "b.csv");
    c.expect(read_file_bytes(dir / "a.emb") == read_file_bytes(dir / "b.emb"),
             "set " + std::to_string(i) + " bytes");
    c.expect(read_file_bytes(dir / "a.csv") == read_file_bytes(dir / "b.csv"),
             "set " + std::to_string(i) + " csv bytes");
  }

  const auto rejects = [&](const std::string& what, const std::function<void()>& fn,
                           const std::function<bool(const Error&)>& right_kind) {
    try {
      fn();
      c.expect(false, what + " accepted");
    } catch (const Error& e) {
      c.expect(right_kind(e), what + " raised " + e.kind());
    }
  };
  const EmbeddingSet three(2, {1, 0, 0, 1, 1, 1}, false);
  write_embeddings(three, dir / "good.emb");
  auto bytes = read_file_bytes(dir / "good.emb");
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  write_file_bytes(dir / "magic.emb", std::string(bad_magic.begin(), bad_magic.end()));
  rejects("bad magic", [&] { read_embeddings(dir / "magic.emb"); },
          [](const Error& e) { return dynamic_cast<const FormatError*>(&e) != nullptr; });
  write_file_bytes(dir / "trunc.emb", std::string(bytes.begin(), bytes.end() - 4));
  rejects("truncated payload", [&] { read_embeddings(dir / "trunc.emb"); },
          [](const Error& e) { return dynamic_cast<const FormatError*>(&e) != nullptr; });
  std::vector<DemographicRecord> two = {{"a", Race::White, Gender::Male, {}},
                                        {"b", Race::Black, Gender::Female, {}}};
  write_file_bytes(dir / "two.csv", encode_metadata(two));
  rejects("misaligned metadata", [&] { load_labeled(dir / "good.emb", dir / "two.csv"); },
          [](const Error& e) { return dynamic_cast<const AlignmentError*>(&e) != nullptr; });
  fs::remove_all(dir);
  return {c.ok(), "50 random sets bit-exact; bad magic, truncated payload, misaligned metadata "
                  "rejected " + c.summary()};
}

Outcome a8_relevance() {
  Checker c;
  std::mt19937_64 rng(808);
  std::size_t probes_checked = 0;
  for (int i = 0; i < 100; ++i) {
    auto baseline = uniform(rng, 1 + rng() % 500, -0.2, 0.6);
    // Duplicate a few entries so ties with probes are exercised.
    for (int j = 0; j < 5 && baseline.size() > 1; ++j) baseline[rng() % baseline.size()] = baseline[0];
    auto probes = uniform(rng, 100, -0.3, 0.7);
    probes.insert(probes.end(), baseline.begin(), baseline.begin() + std::min<std::size_t>(10, baseline.size()));
    std::sort(probes.begin(), probes.end());
    double prev = -1;
    for (double x : probes) {
      const double r = relevance_score(x, baseline);
      c.expect(r == oracle::relevance(x, baseline), "baseline " + std::to_string(i) + " oracle");
      c.expect(r >= prev, "baseline " + std::to_string(i) + " monotonicity");
      prev = r;
      ++probes_checked;
    }
  }
  return {c.ok(), "100 baselines, " + std::to_string(probes_checked) +
                      " probes equal to counting oracle, non-decreasing " + c.summary()};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"A1", "C-ASC oracle equivalence + antisymmetry", a1_casc_oracle},
      {"A2", "C-ASC affine invariance", a2_affine},
      {"A3", "normalized entropy values", a3_entropy},
      {"A4", "top-k vs full-sort oracle", a4_topk},
      {"A5", "planted-bias end-to-end audit", a5_planted},
      {"A6", "corpus scanner hand fixture + invariance", a6_corpus},
      {"A7", "EMB1/metadata round-trip + rejections", a7_format},
      {"A8", "relevance CDF", a8_relevance},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("uncaught exception: ") + e.what()};
    }
    std::printf("%s %s: %s (%s)\n", o.pass ? "PASS" : "FAIL", cr.id, cr.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed == 0 ? 0 : 1;
}
