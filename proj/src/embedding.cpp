#include "crsim/embedding.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include "crsim/core.hpp"
#include "crsim/rng.hpp"

namespace crsim {

namespace {

bool is_token_char(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ull ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return splitmix64(h);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_char(c)) {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

FeatureHashEmbedder::FeatureHashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error(Errc::invalid_field, "embedding_dim", "must be positive");
}

EmbeddingVector FeatureHashEmbedder::embed(std::string_view text) const {
  EmbeddingVector v;
  v.components.assign(dim_, 0.0);
  const auto tokens = tokenize(text);
  for (const auto& tok : tokens) {
    const std::uint64_t h = fnv1a(tok, seed_);
    const auto bucket = static_cast<std::size_t>(h % dim_);
    v.components[bucket] += ((h >> 63) != 0) ? -1.0 : 1.0;
  }
  const double n = norm(v);
  if (n == 0.0) {
    v.from_empty_text = tokens.empty();
    return v;
  }
  for (double& x : v.components) x /= n;
  return v;
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw Error(Errc::invalid_field, "embedding", "dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a.components[i] * b.components[i];
  return s;
}

double norm(const EmbeddingVector& v) {
  double s = 0.0;
  for (double x : v.components) s += x * x;
  return std::sqrt(s);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) { return 1.0 - cosine_similarity(a, b); }

}  // namespace crsim
