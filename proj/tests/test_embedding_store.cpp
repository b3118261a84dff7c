#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "test_util.hpp"
#include "vlaudit/embedding_store.hpp"

using namespace vlaudit;
using vlaudit::test::ScratchDir;

namespace {

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

// Independent little-endian encoder, written against the format table.
std::string oracle_encode(std::uint32_t dim, std::uint64_t count, std::uint16_t flags,
                          const std::vector<float>& payload) {
  std::string out = "EMB1";
  const auto put = [&](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  put(1, 2);
  put(flags, 2);
  put(dim, 4);
  put(count, 8);
  for (float f : payload) put(std::bit_cast<std::uint32_t>(f), 4);
  return out;
}

std::vector<DemographicRecord> records(std::size_t n) {
  std::vector<DemographicRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"id" + std::to_string(i), kAllRaces[i % kRaceCount], kAllGenders[i % 2],
                   i % 3 == 0 ? std::optional<std::string>("20-29") : std::nullopt});
  }
  return out;
}

}  // namespace

TEST(EmbeddingFormat, HeaderMatchesHandEncoding) {
  EmbeddingSet set(2, {0.5, -0.5}, false);
  EXPECT_EQ(encode_embeddings(set), oracle_encode(2, 1, 0, {0.5f, -0.5f}));
}

TEST(EmbeddingFormat, OneByTwoMatrixHasEightPayloadBytes) {
  EmbeddingSet set(2, {0.5, -0.5}, false);
  const auto bytes = encode_embeddings(set);
  EXPECT_EQ(bytes.size() - kEmbHeaderSize, 8u);
}

TEST(EmbeddingFormat, NormalizedFlagByte) {
  EmbeddingSet set(2, {0.6, 0.8}, true);
  const auto bytes = encode_embeddings(set);
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 0x01);
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 0x00);
  EmbeddingSet plain(2, {0.6, 0.8}, false);
  EXPECT_EQ(static_cast<unsigned char>(encode_embeddings(plain)[6]), 0x00);
}

TEST(EmbeddingFormat, DecodesOracleBytes) {
  const auto bytes = oracle_encode(3, 2, 0, {1.f, 2.f, 3.f, 4.f, 5.f, 6.f});
  const auto set = decode_embeddings(bytes_of(bytes));
  EXPECT_EQ(set.dim(), 3u);
  EXPECT_EQ(set.count(), 2u);
  EXPECT_FALSE(set.normalized());
  EXPECT_EQ(set.row(1)[2], 6.0);
}

TEST(EmbeddingFormat, RejectsBadMagic) {
  auto bytes = oracle_encode(2, 1, 0, {0.5f, 0.5f});
  bytes[3] = '2';
  EXPECT_THROW(decode_embeddings(bytes_of(bytes)), FormatError);
}

TEST(EmbeddingFormat, RejectsShortHeader) {
  const auto bytes = oracle_encode(2, 1, 0, {0.5f, 0.5f}).substr(0, 12);
  EXPECT_THROW(decode_embeddings(bytes_of(bytes)), FormatError);
}

TEST(EmbeddingFormat, RejectsTruncatedPayload) {
  auto bytes = oracle_encode(2, 2, 0, {0.5f, 0.5f, 0.1f, 0.2f});
  bytes.pop_back();
  EXPECT_THROW(decode_embeddings(bytes_of(bytes)), FormatError);
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(decode_embeddings(bytes_of(bytes)), FormatError);
}

TEST(EmbeddingFormat, RejectsTrailingBytes) {
  auto bytes = oracle_encode(2, 1, 0, {0.5f, 0.5f, 0.1f, 0.2f});
  EXPECT_THROW(decode_embeddings(bytes_of(bytes)), FormatError);
}

TEST(EmbeddingFormat, RejectsUnknownVersionAndFlags) {
  auto bytes = oracle_encode(2, 1, 0, {0.5f, 0.5f});
  bytes[4] = 2;
  EXPECT_THROW(decode_embeddings(bytes_of(bytes)), FormatError);
  bytes = oracle_encode(2, 1, 0x0002, {0.5f, 0.5f});
  EXPECT_THROW(decode_embeddings(bytes_of(bytes)), FormatError);
}

TEST(EmbeddingFormat, RejectsZeroDim) {
  EXPECT_THROW(decode_embeddings(bytes_of(oracle_encode(0, 0, 0, {}))), FormatError);
}

TEST(EmbeddingFormat, RejectsNonFinite) {
  const auto nan = std::numeric_limits<float>::quiet_NaN();
  const auto inf = std::numeric_limits<float>::infinity();
  EXPECT_THROW(decode_embeddings(bytes_of(oracle_encode(2, 1, 0, {nan, 0.f}))), DataError);
  EXPECT_THROW(decode_embeddings(bytes_of(oracle_encode(2, 1, 0, {0.f, -inf}))), DataError);
}

TEST(EmbeddingFormat, RejectsFlaggedButUnnormalizedRows) {
  EXPECT_THROW(decode_embeddings(bytes_of(oracle_encode(2, 1, 1, {3.f, 4.f}))), DataError);
}

TEST(EmbeddingSetTest, EmptySetLoads) {
  ScratchDir dir;
  write_labeled(LabeledEmbeddings(EmbeddingSet(4, {}, false), {}), dir / "e.emb", dir / "m.csv");
  const auto data = load_labeled(dir / "e.emb", dir / "m.csv");
  EXPECT_EQ(data.embeddings.dim(), 4u);
  EXPECT_EQ(data.embeddings.count(), 0u);
  EXPECT_EQ(data.size(), 0u);
}

TEST(EmbeddingSetTest, RowCountMismatchIsAlignmentError) {
  ScratchDir dir;
  write_embeddings(EmbeddingSet(2, {1, 0, 0, 1, 1, 1}, false), dir / "e.emb");
  write_file_bytes(dir / "m.csv", encode_metadata(records(2)));
  EXPECT_THROW(load_labeled(dir / "e.emb", dir / "m.csv"), AlignmentError);
}

TEST(EmbeddingSetTest, DuplicateRecordIdIsAlignmentError) {
  auto recs = records(2);
  recs[1].record_id = recs[0].record_id;
  EXPECT_THROW(LabeledEmbeddings(EmbeddingSet(1, {1, 2}, false), recs), AlignmentError);
}

TEST(EmbeddingSetTest, MissingFileIsIoError) {
  ScratchDir dir;
  EXPECT_THROW(read_embeddings(dir / "absent.emb"), IoError);
  EXPECT_THROW(read_metadata(dir / "absent.csv"), IoError);
}

TEST(EmbeddingSetTest, RoundTripIsByteIdentical) {
  ScratchDir dir;
  std::mt19937_64 rng(7);
  EmbeddingSet set(5, vlaudit::test::random_values(rng, 5 * 9), false);
  write_labeled(LabeledEmbeddings(set, records(9)), dir / "a.emb", dir / "a.csv");
  const auto loaded = load_labeled(dir / "a.emb", dir / "a.csv");
  write_labeled(loaded, dir / "b.emb", dir / "b.csv");
  EXPECT_EQ(read_file_bytes(dir / "a.emb"), read_file_bytes(dir / "b.emb"));
  EXPECT_EQ(read_file_bytes(dir / "a.csv"), read_file_bytes(dir / "b.csv"));
  EXPECT_EQ(loaded.metadata, records(9));
}

TEST(EmbeddingSetTest, RoundTripPreservesFloatValuesExactly) {
  ScratchDir dir;
  std::mt19937_64 rng(11);
  auto values = vlaudit::test::random_values(rng, 3 * 4);
  for (auto& v : values) v = static_cast<float>(v);  // representable in binary32
  const EmbeddingSet set(3, values, false);
  write_embeddings(set, dir / "x.emb");
  EXPECT_EQ(read_embeddings(dir / "x.emb"), set);
}

TEST(Metadata, ParsesHeaderAndEnums) {
  std::istringstream in(
      "record_id,race,gender,age_band\n"
      "a,MiddleEastern,Male,30-39\n"
      "b,LatinoHispanic,Female,\n");
  const auto recs = parse_metadata(in);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].race, Race::MiddleEastern);
  EXPECT_EQ(recs[0].age_band, "30-39");
  EXPECT_EQ(recs[1].gender, Gender::Female);
  EXPECT_FALSE(recs[1].age_band.has_value());
}

TEST(Metadata, RejectsUnknownRace) {
  std::istringstream in("record_id,race,gender,age_band\na,Martian,Male,\n");
  EXPECT_THROW(parse_metadata(in), FormatError);
}

TEST(Metadata, RejectsMissingColumn) {
  std::istringstream in("record_id,race,age_band\na,White,\n");
  EXPECT_THROW(parse_metadata(in), FormatError);
}

TEST(Metadata, IndexColumnIsCrossChecked) {
  std::istringstream ok("index,record_id,race,gender,age_band\n0,a,White,Male,\n1,b,Black,Female,\n");
  EXPECT_EQ(parse_metadata(ok).size(), 2u);
  std::istringstream shuffled(
      "index,record_id,race,gender,age_band\n1,a,White,Male,\n0,b,Black,Female,\n");
  EXPECT_THROW(parse_metadata(shuffled), AlignmentError);
}

TEST(Normalize, ThreeFourFive) {
  const auto n = l2_normalize(EmbeddingSet(2, {3, 4}, false));
  EXPECT_TRUE(n.normalized());
  EXPECT_NEAR(n.row(0)[0], 0.6, 1e-15);
  EXPECT_NEAR(n.row(0)[1], 0.8, 1e-15);
}

TEST(Normalize, ZeroRowNamesIndex) {
  try {
    l2_normalize(EmbeddingSet(2, {1, 0, 0, 0}, false));
    FAIL() << "expected DegenerateVectorError";
  } catch (const DegenerateVectorError& e) {
    EXPECT_EQ(e.row(), 1u);
  }
  try {
    l2_normalize(EmbeddingSet(2, {0, 0}, false));
    FAIL() << "expected DegenerateVectorError";
  } catch (const DegenerateVectorError& e) {
    EXPECT_EQ(e.row(), 0u);
  }
}

TEST(Normalize, PropertiesOnRandomSets) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 1 + trial % 17;
    const std::size_t rows = 1 + trial % 7;
    const EmbeddingSet raw(dim, vlaudit::test::random_values(rng, dim * rows, -5, 5), false);
    const auto once = l2_normalize(raw);
    const auto twice = l2_normalize(once);
    for (std::size_t r = 0; r < rows; ++r) {
      EXPECT_NEAR(once.row_norm(r), 1.0, 1e-9);
      for (std::size_t c = 0; c < dim; ++c) {
        EXPECT_NEAR(once.row(r)[c], twice.row(r)[c], 1e-12);
        EXPECT_NEAR(once.row(r)[c], raw.row(r)[c] / raw.row_norm(r), 1e-15);
      }
    }
  }
}
