#ifndef VALUECAT_FEATURES_HPP
#define VALUECAT_FEATURES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "valuecat/errors.hpp"

namespace valuecat {

// Hashed bag-of-ngrams configuration. The hash is seeded 64-bit FNV-1a over
// the gram bytes; a splitmix64 remix of the same hash decides the sign.
// Both are fixed, platform-independent functions, so vectors are identical
// everywhere for a given (text, config).
struct FeatureConfig {
  std::size_t dimension = 4096;  // must be a power of two
  int ngram_max = 2;             // >= 1
  std::uint64_t hash_seed = 0;

  void validate() const {
    if (dimension == 0 || (dimension & (dimension - 1)) != 0) {
      throw ConfigError("feature dimension must be a power of two");
    }
    if (ngram_max < 1) throw ConfigError("ngram_max must be >= 1");
  }
};

using FeatureVector = std::vector<float>;

// Lowercases and splits on runs of non-alphanumeric characters.
std::vector<std::string> tokenize(const std::string& text);

// Signed hashed bag of 1..ngram_max grams, L2-normalized.
FeatureVector featurize(const std::string& text, const FeatureConfig& config);

// Feature-matrix cache: little-endian u64 dimension, u64 row count, then
// row-major 32-bit floats.
void save_feature_matrix(const std::string& path,
                         const std::vector<FeatureVector>& rows,
                         std::size_t dimension);
std::vector<FeatureVector> load_feature_matrix(const std::string& path,
                                               std::size_t* dimension);

}  // namespace valuecat

#endif
