#pragma once

// Synthetic image/caption sets with known caption-group affinities.
//
// Images: 14 race x gender groups with `per_group` rows each, in shuffled
// order. Each group owns one direction of an orthonormal frame; an image is
// normalize(image_offset * u_group + isotropic noise). Planted captions are
// normalize(plant_strength * u_group + v), neutral captions are v alone, with
// v drawn from the complement of the group directions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vlaudit/commands.hpp"
#include "vlaudit/demographics.hpp"
#include "vlaudit/embedding_store.hpp"
#include "vlaudit/taxonomy.hpp"

namespace vlaudit::synthetic {

struct PlantedWord {
  Category category;
  TaxonomyWord word;
  std::optional<std::size_t> planted_group;  // index into group_labels(RaceGender)
};

struct PlantedFixtureSpec {
  std::size_t dim = 64;
  std::size_t per_group = 200;
  double image_offset = 0.5;
  double plant_strength = 0.8;
  std::uint64_t seed = 20240611;
  std::vector<PlantedWord> words;
};

inline std::size_t intersection_index(Race r, Gender g) {
  return static_cast<std::size_t>(r) * kGenderCount + static_cast<std::size_t>(g);
}

/// Four planted occupation/political captions and five neutral ones.
inline std::vector<PlantedWord> default_planted_words() {
  using enum Category;
  const auto noun = [](const char* w) { return TaxonomyWord{w, WordKind::Noun}; };
  const auto adj = [](const char* w) { return TaxonomyWord{w, WordKind::Adjective}; };
  return {
      {Occupation, noun("homemaker"), intersection_index(Race::Indian, Gender::Female)},
      {Occupation, noun("CEO"), intersection_index(Race::White, Gender::Male)},
      {Occupation, noun("farmer"), intersection_index(Race::Indian, Gender::Male)},
      {Occupation, noun("teacher"), std::nullopt},
      {Occupation, noun("pianist"), std::nullopt},
      {Political, noun("terrorist"), intersection_index(Race::MiddleEastern, Gender::Male)},
      {Political, noun("democrat"), std::nullopt},
      {Appearance, adj("tall"), std::nullopt},
      {Appearance, adj("young"), std::nullopt},
  };
}

struct PlantedFixture {
  LabeledEmbeddings images;
  Taxonomy taxonomy;
  std::vector<Caption> captions;    // taxonomy order
  EmbeddingSet caption_vectors;     // row i belongs to captions[i]
  std::vector<std::optional<std::size_t>> planted;  // aligned with captions
};

namespace detail {

inline std::vector<double> gaussian(std::mt19937_64& rng, std::size_t n, double sd) {
  std::normal_distribution<double> dist(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline void normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s);
  for (double& x : v) x /= s;
}

/// Gram-Schmidt on gaussian draws: `count` orthonormal rows of length dim.
inline std::vector<std::vector<double>> orthonormal_frame(std::mt19937_64& rng, std::size_t count,
                                                          std::size_t dim) {
  std::vector<std::vector<double>> frame;
  while (frame.size() < count) {
    auto v = gaussian(rng, dim, 1.0);
    for (const auto& u : frame) {
      double d = 0.0;
      for (std::size_t j = 0; j < dim; ++j) d += v[j] * u[j];
      for (std::size_t j = 0; j < dim; ++j) v[j] -= d * u[j];
    }
    normalize(v);
    frame.push_back(std::move(v));
  }
  return frame;
}

}  // namespace detail

inline PlantedFixture make_planted_fixture(const PlantedFixtureSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const std::size_t dim = spec.dim;
  // 14 group directions; the remaining frame vectors span the neutral space.
  const auto frame = detail::orthonormal_frame(rng, dim, dim);

  std::vector<std::size_t> groups;
  for (std::size_t g = 0; g < kIntersectionCount; ++g)
    for (std::size_t i = 0; i < spec.per_group; ++i) groups.push_back(g);
  std::shuffle(groups.begin(), groups.end(), rng);

  std::vector<double> values;
  std::vector<DemographicRecord> metadata;
  const double noise_sd = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::size_t g = groups[i];
    auto x = detail::gaussian(rng, dim, noise_sd);
    for (std::size_t j = 0; j < dim; ++j) x[j] += spec.image_offset * frame[g][j];
    detail::normalize(x);
    values.insert(values.end(), x.begin(), x.end());
    char id[32];
    std::snprintf(id, sizeof id, "img_%05zu", i);
    metadata.push_back({id, kAllRaces[g / kGenderCount], kAllGenders[g % kGenderCount], "20-29"});
  }

  PlantedFixture fx;
  fx.images = LabeledEmbeddings(EmbeddingSet(dim, std::move(values), true), std::move(metadata));

  for (const auto& pw : spec.words) {
    auto it = std::find_if(fx.taxonomy.begin(), fx.taxonomy.end(),
                           [&](const TaxonomyCategory& c) { return c.name == pw.category; });
    if (it == fx.taxonomy.end()) {
      fx.taxonomy.push_back({pw.category, {}});
      it = std::prev(fx.taxonomy.end());
    }
    it->words.push_back(pw.word);
  }

  std::vector<double> caption_values;
  for (const auto& cat : fx.taxonomy) {
    for (const auto& word : cat.words) {
      const auto pw = std::find_if(spec.words.begin(), spec.words.end(), [&](const PlantedWord& p) {
        return p.category == cat.name && p.word == word;
      });
      std::vector<double> c(dim, 0.0);
      const auto coeffs = detail::gaussian(rng, dim - kIntersectionCount, 1.0);
      for (std::size_t f = kIntersectionCount; f < dim; ++f)
        for (std::size_t j = 0; j < dim; ++j) c[j] += coeffs[f - kIntersectionCount] * frame[f][j];
      detail::normalize(c);
      if (pw->planted_group) {
        for (std::size_t j = 0; j < dim; ++j) c[j] += spec.plant_strength * frame[*pw->planted_group][j];
        detail::normalize(c);
      }
      caption_values.insert(caption_values.end(), c.begin(), c.end());
      fx.captions.push_back(render_caption(word, cat.name));
      fx.planted.push_back(pw->planted_group);
    }
  }
  fx.caption_vectors = EmbeddingSet(dim, std::move(caption_values), true);
  return fx;
}

struct FixtureFiles {
  std::filesystem::path embeddings;
  std::filesystem::path metadata;
  std::filesystem::path taxonomy;
  std::filesystem::path caption_vectors;
  std::filesystem::path caption_manifest;
};

/// Writes the fixture in the engine's on-disk formats under `dir`.
inline FixtureFiles write_planted_fixture(const PlantedFixture& fx,
                                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  FixtureFiles files{dir / "images.emb", dir / "images.csv", dir / "taxonomy.json",
                     dir / "captions.emb", dir / "captions.emb.manifest.json"};
  write_labeled(fx.images, files.embeddings, files.metadata);
  write_file_bytes(files.taxonomy, taxonomy_to_json(fx.taxonomy).dump(2) + "\n");
  write_embeddings(fx.caption_vectors, files.caption_vectors);
  write_file_bytes(files.caption_manifest, cli::caption_manifest(fx.captions).dump(2) + "\n");
  return files;
}

}  // namespace vlaudit::synthetic
