#ifndef VALUECAT_TESTS_SYNTHETIC_HPP
#define VALUECAT_TESTS_SYNTHETIC_HPP

// Keyword-rule corpus generator: label j is on exactly when the premise
// contains that label's keyword pair, so a linear model over hashed ngrams
// can separate the data.

#include <random>
#include <string>
#include <vector>

#include "valuecat/corpus.hpp"
#include "valuecat/rng.hpp"

namespace valuecat::testing {

inline valuecat::Dataset make_synthetic_corpus(std::size_t n_samples,
                                               std::uint64_t seed,
                                               const std::string& id_prefix = "S",
                                               bool labeled = true) {
  const std::size_t n_labels = valuecat::CategorySet::task_default().size();
  std::mt19937_64 rng(seed);

  valuecat::Dataset dataset;
  valuecat::LabelMatrix labels(n_samples, n_labels);
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < n_labels; ++j) {
      if (valuecat::bounded_uint64(rng, 100) < 12) active.push_back(j);
    }
    if (active.empty()) {
      active.push_back(valuecat::bounded_uint64(rng, n_labels));
    }

    std::string premise;
    for (int f = 0; f < 4; ++f) {
      premise += "filler" + std::to_string(valuecat::bounded_uint64(rng, 50)) + " ";
    }
    for (const std::size_t j : active) {
      premise += "marka" + std::to_string(j) + " markb" + std::to_string(j) + " ";
      labels.set(i, j, 1);
    }
    premise.pop_back();

    valuecat::Argument arg;
    arg.id = id_prefix + std::to_string(i);
    arg.premise = premise;
    arg.stance = valuecat::bounded_uint64(rng, 2) ? "in favor of" : "against";
    arg.conclusion = "topic" + std::to_string(valuecat::bounded_uint64(rng, 30)) +
                     " should change";
    dataset.arguments.push_back(std::move(arg));
  }
  if (labeled) dataset.labels = std::move(labels);
  return dataset;
}

}  // namespace valuecat::testing

#endif
