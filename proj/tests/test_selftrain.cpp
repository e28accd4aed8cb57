#include "valuecat/selftrain.hpp"

#include <set>

#include "doctest.h"
#include "support/synthetic.hpp"
#include "valuecat/features.hpp"

using namespace valuecat;

namespace {

ModelConfig tiny_config() {
  ModelConfig config;
  config.feature_config.dimension = 256;
  config.hyper.batch_size = 8;
  config.hyper.epochs_for_schedule = 2;
  config.hyper.warmup_steps = 5;
  config.hyper.validation_interval = 10;
  return config;
}

// A zero model scores 0.5 everywhere, which makes ensemble decisions
// predictable without training anything.
TrainedModel constant_member(const ModelConfig& config) {
  TrainedModel member;
  member.config = config;
  member.model = LinearModel(20, config.feature_config.dimension);
  return member;
}

FittedEnsemble ensemble_at(double threshold) {
  FittedEnsemble ensemble;
  ensemble.spec.name = "EN-Thres-LoD";
  ensemble.spec.member_model_ids = {"m0"};
  ensemble.threshold = threshold;
  return ensemble;
}

}  // namespace

TEST_CASE("target fraction 1.0 produces an empty extension") {
  const Dataset pool = testing::make_synthetic_corpus(50, 1, "P", false);
  const auto member = constant_member(tiny_config());
  SilverConfig config;
  config.target_fraction = 1.0;
  const SilverDataset silver =
      generate_silver(ensemble_at(0.4), {member}, pool, 1000, config);
  CHECK(silver.data.size() == 0);
  CHECK(silver.provenance.empty());
  CHECK(silver.ensemble_name == "EN-Thres-LoD");
  CHECK(silver.threshold == 0.4);
}

TEST_CASE("silver size follows (fraction - 1) * train size") {
  const Dataset pool = testing::make_synthetic_corpus(600, 2, "P", false);
  const auto member = constant_member(tiny_config());
  SilverConfig config;
  config.target_fraction = 1.4;
  const SilverDataset silver =
      generate_silver(ensemble_at(0.4), {member}, pool, 1000, config);
  REQUIRE(silver.data.size() == 400);
  CHECK(silver.provenance.size() == 400);
  CHECK(silver.provenance.front() == "silver:EN-Thres-LoD@0.40");
  REQUIRE(silver.data.labeled());
  CHECK(silver.data.labels->rows() == 400);
  CHECK(silver.data.labels->cols() == 20);
  // Threshold 0.4 against constant 0.5 scores switches every label on.
  for (std::size_t c = 0; c < 20; ++c) CHECK((*silver.data.labels)(0, c) == 1);

  // Threshold above 0.5 switches every label off instead.
  const SilverDataset off =
      generate_silver(ensemble_at(0.6), {member}, pool, 1000, config);
  for (std::size_t c = 0; c < 20; ++c) CHECK((*off.data.labels)(0, c) == 0);
}

TEST_CASE("excluded ids never enter the silver set") {
  const Dataset pool = testing::make_synthetic_corpus(300, 3, "P", false);
  const auto member = constant_member(tiny_config());
  SilverConfig config;
  config.target_fraction = 1.2;  // needs 200 of the 300
  for (std::size_t i = 0; i < 50; ++i) {
    config.exclusion_ids.insert(pool.arguments[i].id);
  }
  const SilverDataset silver =
      generate_silver(ensemble_at(0.4), {member}, pool, 1000, config);
  REQUIRE(silver.data.size() == 200);
  for (const auto& arg : silver.data.arguments) {
    CHECK(!config.exclusion_ids.contains(arg.id));
  }
}

TEST_CASE("an undersized pool is a size error naming the requirement") {
  const Dataset pool = testing::make_synthetic_corpus(100, 4, "P", false);
  const auto member = constant_member(tiny_config());
  SilverConfig config;
  config.target_fraction = 1.4;
  CHECK_THROWS_WITH_AS(
      generate_silver(ensemble_at(0.4), {member}, pool, 1000, config),
      doctest::Contains("400"), SizeError);

  config.target_fraction = 0.9;
  CHECK_THROWS_AS(
      generate_silver(ensemble_at(0.4), {member}, pool, 1000, config),
      ConfigError);
}

TEST_CASE("silver selection is seeded") {
  const Dataset pool = testing::make_synthetic_corpus(500, 5, "P", false);
  const auto member = constant_member(tiny_config());
  SilverConfig config;
  config.target_fraction = 1.1;
  config.selection_seed = 9;
  const SilverDataset a =
      generate_silver(ensemble_at(0.4), {member}, pool, 1000, config);
  const SilverDataset b =
      generate_silver(ensemble_at(0.4), {member}, pool, 1000, config);
  REQUIRE(a.data.size() == b.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    CHECK(a.data.arguments[i].id == b.data.arguments[i].id);
  }

  config.selection_seed = 10;
  const SilverDataset c =
      generate_silver(ensemble_at(0.4), {member}, pool, 1000, config);
  bool identical = true;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    identical &= a.data.arguments[i].id == c.data.arguments[i].id;
  }
  CHECK(!identical);
}

TEST_CASE("retraining with an empty extension equals plain training") {
  const ModelConfig config = tiny_config();
  const Dataset gold_train = testing::make_synthetic_corpus(120, 6, "T");
  const Dataset gold_val = testing::make_synthetic_corpus(60, 7, "V");

  SilverDataset empty;
  empty.data.labels = LabelMatrix(0, 20);
  const TrainedModel with_silver =
      retrain_with_silver(gold_train, gold_val, empty, config);

  std::vector<FeatureVector> train_features, val_features;
  for (const auto& arg : gold_train.arguments) {
    train_features.push_back(featurize(concatenate(arg), config.feature_config));
  }
  for (const auto& arg : gold_val.arguments) {
    val_features.push_back(featurize(concatenate(arg), config.feature_config));
  }
  const DataFold fold{&train_features, &*gold_train.labels, &val_features,
                      &*gold_val.labels};
  const TrainedModel plain = train(fold, config);

  CHECK(with_silver.model.weights == plain.model.weights);
  CHECK(with_silver.model.bias == plain.model.bias);
  CHECK(with_silver.best_metric == plain.best_metric);
}

TEST_CASE("silver rows overlapping the validation set are rejected") {
  const ModelConfig config = tiny_config();
  const Dataset gold_train = testing::make_synthetic_corpus(120, 6, "T");
  const Dataset gold_val = testing::make_synthetic_corpus(60, 7, "V");

  SilverDataset tainted;
  tainted.data.arguments.push_back(gold_val.arguments[3]);
  LabelMatrix labels(1, 20);
  labels.set(0, 0, 1);
  tainted.data.labels = labels;
  tainted.provenance = {"silver:EN-Thres-LoD@0.40"};
  CHECK_THROWS_WITH_AS(
      retrain_with_silver(gold_train, gold_val, tainted, config),
      doctest::Contains(gold_val.arguments[3].id.c_str()), IntegrityError);
}

TEST_CASE("gold_subsample takes a seeded prefix of the requested size") {
  const Dataset train = testing::make_synthetic_corpus(100, 8, "T");
  const Dataset half = gold_subsample(train, 0.5, 3);
  CHECK(half.size() == 50);
  REQUIRE(half.labeled());
  CHECK(half.labels->rows() == 50);

  std::set<std::string> train_ids;
  for (const auto& arg : train.arguments) train_ids.insert(arg.id);
  std::set<std::string> seen;
  for (const auto& arg : half.arguments) {
    CHECK(train_ids.contains(arg.id));
    CHECK(seen.insert(arg.id).second);
  }

  const Dataset again = gold_subsample(train, 0.5, 3);
  for (std::size_t i = 0; i < half.size(); ++i) {
    CHECK(again.arguments[i].id == half.arguments[i].id);
  }

  const Dataset full = gold_subsample(train, 1.0, 3);
  CHECK(full.size() == 100);
  CHECK_THROWS_AS(gold_subsample(train, 0.0, 3), ConfigError);
  CHECK_THROWS_AS(gold_subsample(train, 1.5, 3), ConfigError);
}

TEST_CASE("sweep CSV uses the documented columns") {
  const std::string csv =
      sweep_to_csv({{0.8, 0.55, 0.52}, {1.4, 0.58, 0.56}});
  CHECK(csv.rfind("fraction,F1Val,F1Test\n", 0) == 0);
  CHECK(csv.find("0.80,") != std::string::npos);
  CHECK(csv.find("1.40,") != std::string::npos);
}
