// Writes the planted-bias fixture (2,800 images, 9 captions) used by the
// acceptance suite, so the CLI can be exercised by hand:
//
//   make_fixture out/fixture
//   vlaudit audit --embeddings out/fixture/images.emb --metadata out/fixture/images.csv
//       --caption-vectors out/fixture/captions.emb --taxonomy out/fixture/taxonomy.json

#include <cstdlib>
#include <iostream>

#include "vlaudit/planted_fixture.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture <output-dir>\n";
    return 64;
  }
  vlaudit::synthetic::PlantedFixtureSpec spec;
  spec.words = vlaudit::synthetic::default_planted_words();
  const auto fx = vlaudit::synthetic::make_planted_fixture(spec);
  const auto files = vlaudit::synthetic::write_planted_fixture(fx, argv[1]);
  std::cout << "images:   " << files.embeddings.string() << " (" << fx.images.size() << " rows)\n"
            << "metadata: " << files.metadata.string() << "\n"
            << "taxonomy: " << files.taxonomy.string() << "\n"
            << "captions: " << files.caption_vectors.string() << " (" << fx.captions.size()
            << " rows)\n";
  for (std::size_t i = 0; i < fx.captions.size(); ++i) {
    std::cout << "  " << fx.captions[i].text << " -> "
              << (fx.planted[i] ? vlaudit::group_labels(vlaudit::Axis::RaceGender)[*fx.planted[i]]
                                : std::string("(neutral)"))
              << "\n";
  }
  return 0;
}
