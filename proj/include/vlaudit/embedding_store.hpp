#pragma once

// EMB1 binary embedding files and the demographic metadata CSV sidecar.
//
// EMB1 layout (all little-endian):
//   magic "EMB1" | version u16 (=1) | flags u16 (bit 0: rows are unit norm)
//   | dim u32 | count u64 | count*dim binary32 values, row-major.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vlaudit/csv.hpp"
#include "vlaudit/demographics.hpp"
#include "vlaudit/error.hpp"

namespace vlaudit {

inline constexpr std::array<char, 4> kEmbMagic = {'E', 'M', 'B', '1'};
inline constexpr std::uint16_t kEmbVersion = 1;
inline constexpr std::uint16_t kEmbFlagNormalized = 0x0001;
inline constexpr std::size_t kEmbHeaderSize = 20;
inline constexpr double kNormalizedTolerance = 1e-5;

/// Dense count x dim matrix held in binary64. Immutable once built.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;

  /// Validates finiteness and, if `normalized`, unit row norms (within 1e-5).
  EmbeddingSet(std::size_t dim, std::vector<double> values, bool normalized)
      : dim_(dim), values_(std::move(values)), normalized_(normalized) {
    if (dim_ == 0) throw DataError("embedding dimension must be positive");
    if (values_.size() % dim_ != 0) {
      throw DataError("value count " + std::to_string(values_.size()) +
                      " is not a multiple of dim " + std::to_string(dim_));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw DataError("non-finite value at row " + std::to_string(i / dim_) + ", column " +
                        std::to_string(i % dim_));
      }
    }
    if (normalized_) {
      for (std::size_t r = 0; r < count(); ++r) {
        const double norm = row_norm(r);
        if (std::abs(norm - 1.0) > kNormalizedTolerance) {
          throw DataError("row " + std::to_string(r) + " flagged normalized but has norm " +
                          std::to_string(norm));
        }
      }
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  bool normalized() const { return normalized_; }
  std::span<const double> values() const { return values_; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * dim_, dim_);
  }

  double row_norm(std::size_t i) const {
    double sum = 0.0;
    for (double v : row(i)) sum += v * v;
    return std::sqrt(sum);
  }

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
  bool normalized_ = false;
};

/// Embeddings aligned row-for-row with their demographic labels.
struct LabeledEmbeddings {
  EmbeddingSet embeddings;
  std::vector<DemographicRecord> metadata;

  LabeledEmbeddings() = default;
  LabeledEmbeddings(EmbeddingSet e, std::vector<DemographicRecord> m)
      : embeddings(std::move(e)), metadata(std::move(m)) {
    if (metadata.size() != embeddings.count()) {
      throw AlignmentError("embedding file has " + std::to_string(embeddings.count()) +
                           " rows but metadata has " + std::to_string(metadata.size()));
    }
    std::unordered_set<std::string> seen;
    for (const auto& rec : metadata) {
      if (!seen.insert(rec.record_id).second) {
        throw AlignmentError("duplicate record_id '" + rec.record_id + "'");
      }
    }
  }

  std::size_t size() const { return metadata.size(); }
};

/// Rows divided by their L2 norm. Throws DegenerateVectorError for rows with
/// norm < 1e-12.
inline EmbeddingSet l2_normalize(const EmbeddingSet& set) {
  std::vector<double> out(set.values().begin(), set.values().end());
  const std::size_t dim = set.dim();
  for (std::size_t r = 0; r < set.count(); ++r) {
    const double norm = set.row_norm(r);
    if (norm < 1e-12) throw DegenerateVectorError(r);
    for (std::size_t j = 0; j < dim; ++j) out[r * dim + j] /= norm;
  }
  return EmbeddingSet(dim, std::move(out), true);
}

struct EmbHeader {
  std::uint16_t version = kEmbVersion;
  std::uint16_t flags = 0;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;

  bool normalized() const { return (flags & kEmbFlagNormalized) != 0; }
};

namespace detail {

template <typename T>
void put_le(std::string& buf, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

inline std::string path_str(const std::filesystem::path& p) { return p.string(); }

}  // namespace detail

inline std::string encode_emb_header(const EmbHeader& h) {
  std::string buf(kEmbMagic.begin(), kEmbMagic.end());
  detail::put_le(buf, h.version);
  detail::put_le(buf, h.flags);
  detail::put_le(buf, h.dim);
  detail::put_le(buf, h.count);
  return buf;
}

/// Serialized EMB1 bytes for `set`. Values are rounded to binary32.
inline std::string encode_embeddings(const EmbeddingSet& set) {
  EmbHeader h;
  h.flags = set.normalized() ? kEmbFlagNormalized : 0;
  h.dim = static_cast<std::uint32_t>(set.dim());
  h.count = set.count();
  std::string buf = encode_emb_header(h);
  buf.reserve(kEmbHeaderSize + set.values().size() * 4);
  for (double v : set.values()) {
    detail::put_le(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return buf;
}

inline EmbHeader decode_emb_header(std::span<const unsigned char> bytes) {
  if (bytes.size() < kEmbHeaderSize) {
    throw FormatError("file shorter than the " + std::to_string(kEmbHeaderSize) +
                      "-byte EMB1 header");
  }
  if (std::memcmp(bytes.data(), kEmbMagic.data(), kEmbMagic.size()) != 0) {
    throw FormatError("bad magic, expected EMB1");
  }
  EmbHeader h;
  h.version = detail::get_le<std::uint16_t>(bytes.data() + 4);
  h.flags = detail::get_le<std::uint16_t>(bytes.data() + 6);
  h.dim = detail::get_le<std::uint32_t>(bytes.data() + 8);
  h.count = detail::get_le<std::uint64_t>(bytes.data() + 12);
  if (h.version != kEmbVersion) {
    throw FormatError("unsupported EMB1 version " + std::to_string(h.version));
  }
  if ((h.flags & ~kEmbFlagNormalized) != 0) {
    throw FormatError("unknown flag bits set: " + std::to_string(h.flags));
  }
  if (h.dim == 0) throw FormatError("dim must be positive");
  return h;
}

inline EmbeddingSet decode_embeddings(std::span<const unsigned char> bytes) {
  const EmbHeader h = decode_emb_header(bytes);
  const std::uint64_t payload = bytes.size() - kEmbHeaderSize;
  // Divide rather than multiply so a hostile count cannot overflow.
  const std::uint64_t floats = payload / 4;
  if (payload % 4 != 0 || floats % h.dim != 0 || floats / h.dim != h.count) {
    throw FormatError("payload of " + std::to_string(payload) + " bytes does not hold " +
                      std::to_string(h.count) + " rows of dim " + std::to_string(h.dim));
  }
  const std::size_t n = static_cast<std::size_t>(h.count) * h.dim;
  std::vector<double> values(n);
  const unsigned char* p = bytes.data() + kEmbHeaderSize;
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(p + 4 * i));
  }
  return EmbeddingSet(h.dim, std::move(values), h.normalized());
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + detail::path_str(path) + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + detail::path_str(path) + "'");
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + detail::path_str(path) + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("write failure on '" + detail::path_str(path) + "'");
}

inline EmbHeader read_emb_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + detail::path_str(path) + "'");
  std::array<unsigned char, kEmbHeaderSize> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  return decode_emb_header(std::span<const unsigned char>(buf.data(), in.gcount()));
}

inline EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_embeddings(bytes);
  } catch (Error& e) {
    e.add_context(detail::path_str(path));
    throw;
  }
}

inline void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  write_file_bytes(path, encode_embeddings(set));
}

// ---------------------------------------------------------------------------
// Metadata CSV: record_id,race,gender,age_band (+ optional `index` column).

inline std::vector<DemographicRecord> parse_metadata(std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw FormatError("metadata is empty; expected a header row");
  if (!header->empty() && header->front().starts_with("\xEF\xBB\xBF")) {
    header->front().erase(0, 3);
  }
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header->size(); ++i) {
    const std::string& name = (*header)[i];
    if (name != "record_id" && name != "race" && name != "gender" && name != "age_band" &&
        name != "index") {
      throw FormatError("unknown metadata column '" + name + "'");
    }
    if (!col.emplace(name, i).second) throw FormatError("duplicate metadata column '" + name + "'");
  }
  for (const char* required : {"record_id", "race", "gender", "age_band"}) {
    if (!col.contains(required)) {
      throw FormatError(std::string("metadata header lacks column '") + required + "'");
    }
  }
  const bool has_index = col.contains("index");

  std::vector<DemographicRecord> records;
  while (auto row = reader.next()) {
    if (row->size() == 1 && row->front().empty()) continue;  // blank line
    const std::string where = "metadata line " + std::to_string(reader.line_number());
    if (row->size() != header->size()) {
      throw FormatError(where + ": expected " + std::to_string(header->size()) + " fields, got " +
                        std::to_string(row->size()));
    }
    DemographicRecord rec;
    rec.record_id = (*row)[col["record_id"]];
    if (rec.record_id.empty()) throw FormatError(where + ": empty record_id");
    const auto race = parse_race((*row)[col["race"]]);
    if (!race) throw FormatError(where + ": unknown race '" + (*row)[col["race"]] + "'");
    const auto gender = parse_gender((*row)[col["gender"]]);
    if (!gender) throw FormatError(where + ": unknown gender '" + (*row)[col["gender"]] + "'");
    rec.race = *race;
    rec.gender = *gender;
    if (const auto& age = (*row)[col["age_band"]]; !age.empty()) rec.age_band = age;
    if (has_index) {
      const std::string& idx = (*row)[col["index"]];
      if (idx != std::to_string(records.size())) {
        throw AlignmentError(where + ": index column reads '" + idx + "' at row position " +
                             std::to_string(records.size()));
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::string encode_metadata(std::span<const DemographicRecord> records) {
  std::string out = "record_id,race,gender,age_band\n";
  for (const auto& r : records) {
    out += csv::join({r.record_id, std::string(to_string(r.race)),
                      std::string(to_string(r.gender)), r.age_band.value_or("")});
    out.push_back('\n');
  }
  return out;
}

inline std::vector<DemographicRecord> read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + detail::path_str(path) + "'");
  try {
    return parse_metadata(in);
  } catch (Error& e) {
    e.add_context(detail::path_str(path));
    throw;
  }
}

inline LabeledEmbeddings load_labeled(const std::filesystem::path& embedding_path,
                                      const std::filesystem::path& metadata_path) {
  auto embeddings = read_embeddings(embedding_path);
  auto metadata = read_metadata(metadata_path);
  return LabeledEmbeddings(std::move(embeddings), std::move(metadata));
}

inline void write_labeled(const LabeledEmbeddings& data,
                          const std::filesystem::path& embedding_path,
                          const std::filesystem::path& metadata_path) {
  write_embeddings(data.embeddings, embedding_path);
  write_file_bytes(metadata_path, encode_metadata(data.metadata));
}

}  // namespace vlaudit
