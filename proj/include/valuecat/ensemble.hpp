#ifndef VALUECAT_ENSEMBLE_HPP
#define VALUECAT_ENSEMBLE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "valuecat/corpus.hpp"
#include "valuecat/learner.hpp"
#include "valuecat/matrix.hpp"

namespace valuecat {

enum class ThresholdSource { LeaveOut, Train };
enum class EnsembleMethod { AverageThreshold, Stacking };

struct EnsembleSpec {
  std::string name;
  std::vector<std::string> member_model_ids;
  EnsembleMethod method = EnsembleMethod::AverageThreshold;
  ThresholdSource threshold_source = ThresholdSource::LeaveOut;
  std::size_t stacking_sample_count = 3000;
  // When true each per-label classifier sees only that label's member scores
  // instead of all members x all labels.
  bool stacking_per_label_features = false;
};

// One logistic regression per label over member-prediction features.
struct StackingModel {
  std::size_t n_labels = 0;
  std::size_t n_members = 0;
  bool per_label_features = false;
  std::vector<std::vector<double>> weights;  // one vector per label
  std::vector<double> bias;
  // Labels whose fit sample had a single class fall back to a bias-only prior.
  std::vector<std::uint8_t> degenerate;
};

struct FittedEnsemble {
  EnsembleSpec spec;
  std::optional<double> threshold;
  std::optional<StackingModel> stacker;
  std::vector<std::string> warnings;
};

// Element-wise mean of member score matrices.
ScoreMatrix average(const std::vector<ScoreMatrix>& scores);

// Scores of one trained model on a dataset (featurizes with the model's own
// feature config).
ScoreMatrix member_scores(const TrainedModel& member, const Dataset& dataset);
std::vector<ScoreMatrix> all_member_scores(
    const std::vector<TrainedModel>& members, const Dataset& dataset);

// Recipe I: average the member scores on the fit set and take the
// F1-maximizing global threshold.
FittedEnsemble fit_recipe1(const EnsembleSpec& spec,
                           const std::vector<ScoreMatrix>& member_fit_scores,
                           const LabelMatrix& truth);
FittedEnsemble fit_recipe1(const EnsembleSpec& spec,
                           const std::vector<TrainedModel>& members,
                           const Dataset& fit_set);

// Recipe II: one L2-regularized logistic regression per label on member
// prediction features, trained to gradient-norm < 1e-6 (or the iteration
// cap). inverse_reg_strength follows the usual C convention.
FittedEnsemble fit_recipe2(const EnsembleSpec& spec,
                           const std::vector<ScoreMatrix>& member_fit_scores,
                           const LabelMatrix& truth,
                           std::uint64_t init_seed = 0,
                           double inverse_reg_strength = 1.0);
FittedEnsemble fit_recipe2(const EnsembleSpec& spec,
                           const std::vector<TrainedModel>& members,
                           const Dataset& train_sample,
                           std::uint64_t init_seed = 0,
                           double inverse_reg_strength = 1.0);

// Stacking probabilities before the 0.5 cut, for inspection/tests.
ScoreMatrix stacking_scores(const StackingModel& stacker,
                            const std::vector<ScoreMatrix>& members_scores);

LabelMatrix predict(const FittedEnsemble& ensemble,
                    const std::vector<ScoreMatrix>& members_scores);

// The six named ensembles over the 12-model grid
// (2 bases x {LossMin, F1Max} x 3 fold seeds).
std::vector<EnsembleSpec> build_registry(
    const std::vector<TrainedModel>& trained);

void save_ensemble(const std::string& path, const FittedEnsemble& ensemble);
FittedEnsemble load_ensemble(const std::string& path);

// Prediction-matrix interchange TSV: `Argument ID` + one score column per
// category, 6 decimal places.
void save_scores(const std::string& path, const std::vector<std::string>& ids,
                 const ScoreMatrix& scores, const CategorySet& categories);
struct ScoreFile {
  std::vector<std::string> ids;
  ScoreMatrix scores;
};
ScoreFile load_scores(const std::string& path, const CategorySet& categories);

}  // namespace valuecat

#endif
