#include "valuecat/learner.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/tmpdir.hpp"
#include "valuecat/corpus.hpp"
#include "valuecat/rng.hpp"
#include "valuecat/thresholding.hpp"

using namespace valuecat;

namespace {

std::vector<FeatureVector> featurize_all(const Dataset& dataset,
                                         const FeatureConfig& config) {
  std::vector<FeatureVector> features;
  for (const auto& arg : dataset.arguments) {
    features.push_back(featurize(concatenate(arg), config));
  }
  return features;
}

ModelConfig toy_config() {
  ModelConfig config;
  config.feature_config.dimension = 512;
  config.hyper.batch_size = 8;
  config.hyper.epochs_for_schedule = 6;
  config.hyper.learning_rate = 1e-2;
  config.hyper.warmup_steps = 20;
  config.hyper.validation_interval = 25;
  config.hyper.patience = 3;
  return config;
}

struct ToyFold {
  Dataset train_set;
  Dataset val_set;
  std::vector<FeatureVector> train_features;
  std::vector<FeatureVector> val_features;

  explicit ToyFold(const ModelConfig& config)
      : train_set(testing::make_synthetic_corpus(300, 11, "T")),
        val_set(testing::make_synthetic_corpus(100, 12, "V")) {
    train_features = featurize_all(train_set, config.feature_config);
    val_features = featurize_all(val_set, config.feature_config);
  }

  DataFold fold() const {
    return {&train_features, &*train_set.labels, &val_features,
            &*val_set.labels};
  }
};

}  // namespace

TEST_CASE("predict_scores applies the per-label sigmoid") {
  LinearModel zero(3, 4);
  std::vector<FeatureVector> features{{0.1f, 0.2f, 0.3f, 0.4f}};
  const ScoreMatrix scores = predict_scores(zero, features);
  for (std::size_t c = 0; c < 3; ++c) CHECK(scores(0, c) == 0.5);

  LinearModel biased(1, 4);
  biased.bias[0] = 50.0;
  CHECK(predict_scores(biased, features)(0, 0) ==
        doctest::Approx(1.0).epsilon(1e-9));

  LinearModel scalar(1, 1);
  scalar.weights[0] = 1.0;
  const ScoreMatrix s = predict_scores(scalar, {{0.5f}});
  CHECK(s(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-12));

  CHECK_THROWS_AS(predict_scores(scalar, {{0.5f, 0.5f}}), DimensionError);
}

TEST_CASE("bce_loss handles the reference values and clamping") {
  ScoreMatrix half(2, 2);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 2; ++c) half.set(r, c, 0.5);
  }
  LabelMatrix truth(2, 2);
  truth.set(0, 0, 1);
  CHECK(bce_loss(half, truth) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  ScoreMatrix p8(1, 1);
  p8.set(0, 0, 0.8);
  LabelMatrix one(1, 1);
  one.set(0, 0, 1);
  CHECK(bce_loss(p8, one) == doctest::Approx(-std::log(0.8)).epsilon(1e-12));

  ScoreMatrix perfect(1, 1);
  perfect.set(0, 0, 1.0);  // clamped internally
  CHECK(bce_loss(perfect, one) < 1e-6 * std::abs(std::log(1e-7)));
}

TEST_CASE("inverse_num_samples_weights normalizes to mean one") {
  LabelMatrix labels(4, 3);
  labels.set(0, 0, 1);                      // count 1
  labels.set(0, 1, 1); labels.set(1, 1, 1); // count 2
  for (std::size_t r = 0; r < 4; ++r) labels.set(r, 2, 1);  // count 4
  const auto weights = inverse_num_samples_weights(labels);
  const double mean = (weights[0] + weights[1] + weights[2]) / 3.0;
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(weights[0] == doctest::Approx(2.0 * weights[1]).epsilon(1e-12));
  CHECK(weights[1] == doctest::Approx(2.0 * weights[2]).epsilon(1e-12));
}

TEST_CASE("learning rate schedule is piecewise linear") {
  Hyperparameters hyper;
  hyper.learning_rate = 0.01;
  hyper.warmup_steps = 100;
  CHECK(learning_rate_at(0, hyper, 1000) == 0.0);
  CHECK(learning_rate_at(50, hyper, 1000) == doctest::Approx(0.005));
  CHECK(learning_rate_at(100, hyper, 1000) == 0.01);
  CHECK(learning_rate_at(550, hyper, 1000) == doctest::Approx(0.005));
  CHECK(learning_rate_at(1000, hyper, 1000) == 0.0);
  CHECK(learning_rate_at(5000, hyper, 1000) == 0.0);
}

TEST_CASE("training improves over the uninformed constant") {
  ModelConfig config = toy_config();
  ToyFold data(config);

  config.objective = Objective::LossMin;
  const TrainedModel loss_model = train(data.fold(), config);
  CHECK(loss_model.best_metric < std::log(2.0));
  CHECK(!loss_model.curve.empty());

  config.objective = Objective::F1Max;
  const TrainedModel f1_model = train(data.fold(), config);
  LabelMatrix all_positive(data.val_set.size(), 20);
  for (std::size_t r = 0; r < all_positive.rows(); ++r) {
    for (std::size_t c = 0; c < 20; ++c) all_positive.set(r, c, 1);
  }
  const double baseline =
      testing::oracle_custom_f1(*data.val_set.labels, all_positive);
  CHECK(f1_model.best_metric >= baseline);
}

TEST_CASE("patience counts strictly non-improving validations") {
  // With zero learning rate every validation repeats the first one: the
  // initial validation improves on nothing, then patience=3 flat results stop
  // the run after exactly 4 validations.
  ModelConfig config = toy_config();
  config.hyper.learning_rate = 0.0;
  config.hyper.validation_interval = 1;
  config.hyper.warmup_steps = 1;
  ToyFold data(config);
  const TrainedModel model = train(data.fold(), config);
  CHECK(model.curve.size() == 4);
  CHECK(model.best_step == 1);
}

TEST_CASE("training is deterministic and curve steps increase") {
  ModelConfig config = toy_config();
  config.objective = Objective::F1Max;
  ToyFold data(config);
  const TrainedModel a = train(data.fold(), config);
  const TrainedModel b = train(data.fold(), config);
  CHECK(a.model.weights == b.model.weights);
  CHECK(a.model.bias == b.model.bias);
  CHECK(a.best_step == b.best_step);
  CHECK(a.best_metric == b.best_metric);

  for (std::size_t i = 1; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].step > a.curve[i - 1].step);
  }
  // Both extrema are recorded and queryable; they may or may not coincide.
  CHECK_NOTHROW(loss_min_step(a.curve));
  CHECK_NOTHROW(f1_max_step(a.curve));

  const std::size_t total_steps =
      (data.train_set.size() / config.hyper.batch_size) *
      config.hyper.epochs_for_schedule;
  CHECK(a.curve.back().step <= total_steps);
}

TEST_CASE("restored checkpoint reproduces the recorded best metric") {
  ModelConfig config = toy_config();
  ToyFold data(config);

  config.objective = Objective::LossMin;
  const TrainedModel loss_model = train(data.fold(), config);
  const ScoreMatrix val_scores =
      predict_scores(loss_model.model, data.val_features);
  CHECK(bce_loss(val_scores, *data.val_set.labels) == loss_model.best_metric);

  config.objective = Objective::F1Max;
  const TrainedModel f1_model = train(data.fold(), config);
  const ScoreMatrix f1_scores =
      predict_scores(f1_model.model, data.val_features);
  CHECK(testing::oracle_custom_f1(
            *data.val_set.labels,
            binarize(f1_scores, f1_model.best_threshold)) ==
        f1_model.best_metric);
}

TEST_CASE("gradient check: analytic matches central finite differences") {
  std::mt19937_64 rng(5);
  LinearModel model(4, 16);
  for (double& w : model.weights) {
    w = (static_cast<double>(bounded_uint64(rng, 2000)) - 1000.0) / 1000.0;
  }
  for (double& b : model.bias) {
    b = (static_cast<double>(bounded_uint64(rng, 2000)) - 1000.0) / 2000.0;
  }
  std::vector<FeatureVector> batch;
  LabelMatrix truth(6, 4);
  for (std::size_t i = 0; i < 6; ++i) {
    FeatureVector x(16);
    for (float& v : x) {
      v = static_cast<float>(bounded_uint64(rng, 1000)) / 1000.0f;
    }
    batch.push_back(std::move(x));
    for (std::size_t j = 0; j < 4; ++j) {
      truth.set(i, j, static_cast<std::uint8_t>(bounded_uint64(rng, 2)));
    }
  }

  const double dev = gradient_check(model, batch, truth, 60, 1e-5);
  CHECK(dev < 1e-4);

  // Second-order accuracy: halving h shrinks the deviation.
  const double dev_large = gradient_check(model, batch, truth, 60, 2e-4);
  const double dev_small = gradient_check(model, batch, truth, 60, 1e-4);
  CHECK(dev_small <= dev_large + 1e-12);
}

TEST_CASE("zero model on a balanced batch has zero bias gradient") {
  LinearModel model(2, 4);
  std::vector<FeatureVector> batch{{1, 0, 0, 0}, {0, 1, 0, 0}};
  LabelMatrix truth(2, 2);
  truth.set(0, 0, 1);  // label 0 positive rate 0.5
  truth.set(1, 1, 1);  // label 1 positive rate 0.5
  // p = 0.5 everywhere, rates 0.5: the analytic and numeric gradients of the
  // bias coordinates are both 0, so the deviation collapses.
  const double dev = gradient_check(model, batch, truth, 100, 1e-5);
  CHECK(dev < 1e-9);
}

TEST_CASE("checkpoints round-trip byte-identically") {
  testing::TempDir tmp;
  ModelConfig config = toy_config();
  config.loss_weighting = LossWeighting::InverseNumSamples;
  ToyFold data(config);
  const TrainedModel model = train(data.fold(), config);

  const auto path_a = tmp.file("model_a.ckpt");
  const auto path_b = tmp.file("model_b.ckpt");
  save_checkpoint(path_a, model);
  const TrainedModel reloaded = load_checkpoint(path_a);
  save_checkpoint(path_b, reloaded);

  std::ifstream fa(path_a, std::ios::binary), fb(path_b, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(fa)),
                            std::istreambuf_iterator<char>());
  const std::string bytes_b((std::istreambuf_iterator<char>(fb)),
                            std::istreambuf_iterator<char>());
  CHECK(bytes_a == bytes_b);
  CHECK(reloaded.config.loss_weighting == LossWeighting::InverseNumSamples);
  CHECK(reloaded.best_step == model.best_step);
  CHECK(reloaded.curve.size() == model.curve.size());
}

TEST_CASE("curve CSV carries the documented columns") {
  const std::vector<CurvePoint> curve{{300, 0.31, 0.52, 0.58, 0.49}};
  const std::string csv = curve_to_csv(curve);
  CHECK(csv.rfind("step,val_loss,custom_f1,micro_f1,macro_f1\n", 0) == 0);
  CHECK(csv.find("300,") != std::string::npos);
}
