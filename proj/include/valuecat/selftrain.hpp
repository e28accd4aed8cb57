#ifndef VALUECAT_SELFTRAIN_HPP
#define VALUECAT_SELFTRAIN_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "valuecat/corpus.hpp"
#include "valuecat/ensemble.hpp"
#include "valuecat/learner.hpp"

namespace valuecat {

struct SilverConfig {
  double target_fraction = 1.4;  // >= 1.0; 1.0 means no extension
  std::unordered_set<std::string> exclusion_ids;
  std::uint64_t selection_seed = 0;
};

// Extension rows only: arguments from the pool with ensemble-assigned labels
// and per-row provenance.
struct SilverDataset {
  Dataset data;
  std::vector<std::string> provenance;
  std::string ensemble_name;
  std::optional<double> threshold;
};

// Labels a seeded random prefix of the (exclusion-filtered) pool with the
// fitted ensemble. The prefix size is (target_fraction - 1) * train_size.
SilverDataset generate_silver(const FittedEnsemble& ensemble,
                              const std::vector<TrainedModel>& members,
                              const Dataset& pool, std::size_t train_size,
                              const SilverConfig& config);

// Trains on gold train + silver rows; validation stays gold-only. Silver ids
// overlapping the validation set are an integrity error.
TrainedModel retrain_with_silver(const Dataset& gold_train,
                                 const Dataset& gold_validation,
                                 const SilverDataset& silver,
                                 const ModelConfig& config);

// Seeded prefix subsample of a labeled train set, for sub-1.0 sweep points.
Dataset gold_subsample(const Dataset& train, double fraction,
                       std::uint64_t seed);

struct SweepPoint {
  double fraction = 0.0;
  double f1_validation = 0.0;
  double f1_test = 0.0;
};

std::string sweep_to_csv(const std::vector<SweepPoint>& points);

}  // namespace valuecat

#endif
