#pragma once

// Hand tally of tests/data/hand_corpus.txt against tests/data/hand_words.txt
// with the default pronoun lexicon and clitic splitting on.
//
//  1 She is a nurse and her shift ended     nurse F
//  2 A nurse smiles while she works         nurse F
//  3 The nurse said she’s tired             nurse F  (U+2019 clitic)
//  4 HE is a Nurse in the ER                nurse M
//  5 He gave her his coat at the farm       -        (farm is not farmer)
//  6 A farmer and his wife; she waves       farmer Mixed
//  7 The maid cleaned her room herself      maid F
//  8 Portrait of a maid                     -        (no pronoun)
//  9 The CEO announced his plan             ceo M
// 10 A delivery man drops off her package   delivery man F
// 11 The delivery van and the man, he waits -        (not consecutive)
// 12 The CEO thanked a nurse, she smiled    ceo F, nurse F

#include <map>
#include <string>

#include "vlaudit/corpus_scan.hpp"

namespace vlaudit::test {

inline const std::map<std::string, WordCounts>& hand_corpus_expected() {
  static const std::map<std::string, WordCounts> expected = {
      // word            male female mixed total
      {"nurse",        {1, 4, 0, 5}},
      {"maid",         {0, 1, 0, 1}},
      {"ceo",          {1, 1, 0, 2}},
      {"delivery man", {0, 1, 0, 1}},
      {"farmer",       {0, 0, 1, 1}},
  };
  return expected;
}

inline constexpr std::uint64_t kHandCorpusLines = 12;

}  // namespace vlaudit::test
