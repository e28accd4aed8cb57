#include "valuecat/features.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

namespace valuecat {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::uint64_t state, const std::string& bytes) {
  for (const char ch : bytes) {
    state ^= static_cast<unsigned char>(ch);
    state *= kFnvPrime;
  }
  return state;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isalnum(uc)) {
      current += static_cast<char>(std::tolower(uc));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

FeatureVector featurize(const std::string& text, const FeatureConfig& config) {
  config.validate();
  const auto tokens = tokenize(text);
  FeatureVector vec(config.dimension, 0.0f);

  const std::uint64_t seed_state = splitmix64(config.hash_seed) ^ kFnvOffset;
  const std::size_t mask = config.dimension - 1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::uint64_t state = seed_state;
    for (int n = 0; n < config.ngram_max && i + n < tokens.size(); ++n) {
      if (n > 0) state = fnv1a(state, " ");
      state = fnv1a(state, tokens[i + n]);
      const std::size_t index = static_cast<std::size_t>(state) & mask;
      const float sign = (splitmix64(state) >> 63) ? 1.0f : -1.0f;
      vec[index] += sign;
    }
  }

  double norm_sq = 0.0;
  for (const float v : vec) norm_sq += static_cast<double>(v) * v;
  if (norm_sq > 0.0) {
    const float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
    for (float& v : vec) v *= inv;
  }
  return vec;
}

void save_feature_matrix(const std::string& path,
                         const std::vector<FeatureVector>& rows,
                         std::size_t dimension) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write file: " + path);
  auto write_u64 = [&out](std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  };
  write_u64(dimension);
  write_u64(rows.size());
  for (const auto& row : rows) {
    if (row.size() != dimension) {
      throw DimensionError("save_feature_matrix: row width mismatch");
    }
    for (const float v : row) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      unsigned char bytes[4];
      for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
      out.write(reinterpret_cast<const char*>(bytes), 4);
    }
  }
}

std::vector<FeatureVector> load_feature_matrix(const std::string& path,
                                               std::size_t* dimension) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  auto read_u64 = [&in, &path]() {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
      throw FormatError("truncated feature cache: " + path);
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
  };
  const std::uint64_t dim = read_u64();
  const std::uint64_t count = read_u64();
  std::vector<FeatureVector> rows(count, FeatureVector(dim));
  for (auto& row : rows) {
    for (float& v : row) {
      unsigned char bytes[4];
      if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
        throw FormatError("truncated feature cache: " + path);
      }
      std::uint32_t bits = 0;
      for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
      std::memcpy(&v, &bits, 4);
    }
  }
  if (dimension) *dimension = dim;
  return rows;
}

}  // namespace valuecat
