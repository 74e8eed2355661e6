// Deterministic feature-hash text embedding.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace crsim {

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

struct EmbeddingVector {
  std::vector<double> components;
  bool from_empty_text = false;  // zero vector produced for text without tokens

  std::size_t dim() const noexcept { return components.size(); }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Lower-cased alphanumeric runs; bytes >= 0x80 count as token characters so
/// UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

/// Each token is hashed into one of `dim` buckets with a +1/-1 sign; the sum
/// is scaled to unit length. Identical texts map to identical vectors.
class FeatureHashEmbedder {
 public:
  explicit FeatureHashEmbedder(std::size_t dim = kDefaultEmbeddingDim, std::uint64_t seed = 0);

  EmbeddingVector embed(std::string_view text) const;

  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

double dot(const EmbeddingVector& a, const EmbeddingVector& b);
double norm(const EmbeddingVector& v);
/// Cosine similarity; 0 when either vector is zero.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);
double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace crsim
