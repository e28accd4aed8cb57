#ifndef VALUECAT_LEARNER_HPP
#define VALUECAT_LEARNER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "valuecat/features.hpp"
#include "valuecat/matrix.hpp"

namespace valuecat {

enum class Objective { LossMin, F1Max };
enum class LossWeighting { None, InverseNumSamples };

std::string objective_name(Objective objective);
Objective objective_from_name(const std::string& name);

struct Hyperparameters {
  std::size_t batch_size = 8;
  int epochs_for_schedule = 3;  // bounds the LR schedule, not a hard epoch count
  double learning_rate = 1e-2;  // peak LR for the linear schedule
  std::size_t warmup_steps = 500;
  std::size_t validation_interval = 300;
  int patience = 3;
  double weight_decay = 0.01;
};

struct ModelConfig {
  std::string base_id = "hash-bow-A";
  Objective objective = Objective::LossMin;
  std::uint64_t fold_seed = 42;
  FeatureConfig feature_config;
  Hyperparameters hyper;
  LossWeighting loss_weighting = LossWeighting::None;
};

// "hash-bow-A/F1Max/seed42" style identifier used by the ensemble registry.
std::string model_id(const ModelConfig& config);

// Per-label sigmoid linear classifier.
struct LinearModel {
  std::size_t n_labels = 0;
  std::size_t dimension = 0;
  std::vector<double> weights;  // n_labels x dimension, row-major
  std::vector<double> bias;     // n_labels

  LinearModel() = default;
  LinearModel(std::size_t n_labels, std::size_t dimension)
      : n_labels(n_labels),
        dimension(dimension),
        weights(n_labels * dimension, 0.0),
        bias(n_labels, 0.0) {}
};

struct CurvePoint {
  std::size_t step = 0;
  double avg_val_loss = 0.0;
  double custom_f1_at_opt_threshold = 0.0;
  double micro_f1_at_half = 0.0;
  double macro_f1_at_half = 0.0;
};

struct TrainedModel {
  LinearModel model;
  ModelConfig config;
  std::vector<CurvePoint> curve;
  std::size_t best_step = 0;
  double best_metric = 0.0;
  // Validation-optimal decision threshold at the best step.
  double best_threshold = 0.0;
};

// Steps of the recorded minimum loss / maximum custom F1; both always exist
// (at least one validation runs) and may differ.
std::size_t loss_min_step(const std::vector<CurvePoint>& curve);
std::size_t f1_max_step(const std::vector<CurvePoint>& curve);

// Piecewise-linear schedule: 0 -> peak over warmup_steps, then peak -> 0 at
// total_steps.
double learning_rate_at(std::size_t step, const Hyperparameters& hyper,
                        std::size_t total_steps);

ScoreMatrix predict_scores(const LinearModel& model,
                           const std::vector<FeatureVector>& features);

// Mean binary cross entropy over all cells; scores are clamped to
// [1e-7, 1 - 1e-7]. Optional per-label weights multiply each label column.
double bce_loss(const ScoreMatrix& scores, const LabelMatrix& truth,
                const std::vector<double>* label_weights = nullptr);

// 1/count_j per label, normalized to mean 1 (empty labels count as 1 sample).
std::vector<double> inverse_num_samples_weights(const LabelMatrix& labels);

struct DataFold {
  const std::vector<FeatureVector>* train_features;
  const LabelMatrix* train_labels;
  const std::vector<FeatureVector>* validation_features;
  const LabelMatrix* validation_labels;
};

TrainedModel train(const DataFold& fold, const ModelConfig& config);

// Max abs deviation between the analytic BCE gradient and central finite
// differences over sampled coordinates.
double gradient_check(const LinearModel& model,
                      const std::vector<FeatureVector>& features,
                      const LabelMatrix& truth, std::size_t n_coordinates = 50,
                      double h = 1e-5, std::uint64_t seed = 7);

void save_checkpoint(const std::string& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::string& path);

// Fig.-2-style series: step,val_loss,custom_f1,micro_f1,macro_f1.
std::string curve_to_csv(const std::vector<CurvePoint>& curve);

}  // namespace valuecat

#endif
