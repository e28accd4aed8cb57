#include "valuecat/selftrain.hpp"

#include <cmath>
#include <cstdio>

#include "valuecat/rng.hpp"

namespace valuecat {

namespace {

std::vector<FeatureVector> featurize_dataset(const Dataset& dataset,
                                             const FeatureConfig& config) {
  std::vector<FeatureVector> features;
  features.reserve(dataset.size());
  for (const auto& arg : dataset.arguments) {
    features.push_back(featurize(concatenate(arg), config));
  }
  return features;
}

}  // namespace

SilverDataset generate_silver(const FittedEnsemble& ensemble,
                              const std::vector<TrainedModel>& members,
                              const Dataset& pool, std::size_t train_size,
                              const SilverConfig& config) {
  if (config.target_fraction < 1.0) {
    throw ConfigError("generate_silver: target_fraction must be >= 1.0");
  }
  const std::size_t required = static_cast<std::size_t>(
      std::llround((config.target_fraction - 1.0) *
                   static_cast<double>(train_size)));

  std::vector<std::string> candidate_ids;
  candidate_ids.reserve(pool.size());
  for (const auto& arg : pool.arguments) {
    if (!config.exclusion_ids.contains(arg.id)) candidate_ids.push_back(arg.id);
  }
  if (candidate_ids.size() < required) {
    throw SizeError("generate_silver: need " + std::to_string(required) +
                    " pool samples after exclusions, have " +
                    std::to_string(candidate_ids.size()));
  }

  deterministic_shuffle(candidate_ids, config.selection_seed);
  candidate_ids.resize(required);

  SilverDataset silver;
  silver.ensemble_name = ensemble.spec.name;
  silver.threshold = ensemble.threshold;
  silver.data = subset_by_ids(pool, candidate_ids);
  if (required > 0) {
    silver.data.labels =
        predict(ensemble, all_member_scores(members, silver.data));
  } else {
    silver.data.labels = LabelMatrix(0, CategorySet::task_default().size());
  }

  std::string tag = "silver:" + ensemble.spec.name;
  if (ensemble.threshold) {
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "@%.2f", *ensemble.threshold);
    tag += suffix;
  }
  silver.provenance.assign(required, tag);
  return silver;
}

TrainedModel retrain_with_silver(const Dataset& gold_train,
                                 const Dataset& gold_validation,
                                 const SilverDataset& silver,
                                 const ModelConfig& config) {
  if (!gold_train.labeled() || !gold_validation.labeled()) {
    throw IntegrityError("retrain_with_silver: gold fold must be labeled");
  }
  std::unordered_set<std::string> validation_ids;
  for (const auto& arg : gold_validation.arguments) {
    validation_ids.insert(arg.id);
  }
  for (const auto& arg : silver.data.arguments) {
    if (validation_ids.contains(arg.id)) {
      throw IntegrityError("retrain_with_silver: silver id '" + arg.id +
                           "' overlaps the validation set");
    }
  }

  Dataset combined = gold_train;
  LabelMatrix labels(gold_train.size() + silver.data.size(),
                     gold_train.labels->cols());
  for (std::size_t i = 0; i < gold_train.size(); ++i) {
    for (std::size_t c = 0; c < labels.cols(); ++c) {
      labels.set(i, c, (*gold_train.labels)(i, c));
    }
  }
  for (std::size_t i = 0; i < silver.data.size(); ++i) {
    combined.arguments.push_back(silver.data.arguments[i]);
    for (std::size_t c = 0; c < labels.cols(); ++c) {
      labels.set(gold_train.size() + i, c, (*silver.data.labels)(i, c));
    }
  }
  combined.labels = std::move(labels);

  const auto train_features =
      featurize_dataset(combined, config.feature_config);
  const auto val_features =
      featurize_dataset(gold_validation, config.feature_config);
  DataFold fold{&train_features, &*combined.labels, &val_features,
                &*gold_validation.labels};
  return train(fold, config);
}

Dataset gold_subsample(const Dataset& train, double fraction,
                       std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw ConfigError("gold_subsample: fraction must be in (0, 1]");
  }
  std::vector<std::string> ids;
  ids.reserve(train.size());
  for (const auto& arg : train.arguments) ids.push_back(arg.id);
  deterministic_shuffle(ids, seed);
  ids.resize(static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(train.size()))));
  return subset_by_ids(train, ids);
}

std::string sweep_to_csv(const std::vector<SweepPoint>& points) {
  std::string csv = "fraction,F1Val,F1Test\n";
  char line[96];
  for (const auto& point : points) {
    std::snprintf(line, sizeof(line), "%.2f,%.12g,%.12g\n", point.fraction,
                  point.f1_validation, point.f1_test);
    csv += line;
  }
  return csv;
}

}  // namespace valuecat
