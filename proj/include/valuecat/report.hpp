#ifndef VALUECAT_REPORT_HPP
#define VALUECAT_REPORT_HPP

#include <optional>
#include <string>
#include <vector>

#include "valuecat/corpus.hpp"
#include "valuecat/ensemble.hpp"
#include "valuecat/metrics.hpp"

namespace valuecat {

struct EvaluationReport {
  std::string dataset_name;
  MetricReport overall;  // per_label_f1 lives here
  std::optional<double> threshold;
  std::size_t model_count = 0;
};

EvaluationReport evaluate(const FittedEnsemble& ensemble,
                          const std::vector<TrainedModel>& members,
                          const Dataset& dataset,
                          const std::string& dataset_name);
EvaluationReport evaluate_scores(const FittedEnsemble& ensemble,
                                 const std::vector<ScoreMatrix>& members_scores,
                                 const LabelMatrix& truth,
                                 const std::string& dataset_name);

std::string evaluation_report_to_json(const EvaluationReport& report,
                                      const CategorySet& categories);
std::string evaluation_report_to_tsv(const EvaluationReport& report,
                                     const CategorySet& categories);

struct FrequencyRow {
  std::string label;
  std::size_t train_count = 0;
  double f1 = 0.0;
};

struct FrequencyAnalysis {
  std::vector<FrequencyRow> rows;
  double spearman = 0.0;
  // Set when either side is constant (correlation undefined, reported as 0).
  bool tie_degenerate = false;
};

FrequencyAnalysis frequency_analysis(const LabelMatrix& train_labels,
                                     const EvaluationReport& report,
                                     const CategorySet& categories);
std::string frequency_analysis_to_csv(const FrequencyAnalysis& analysis);

// Spearman rank correlation with average ranks for ties; exposed for the
// analysis and its tests.
double spearman_rank_correlation(const std::vector<double>& a,
                                 const std::vector<double>& b,
                                 bool* degenerate = nullptr);

struct LeaderboardRow {
  std::string ensemble_name;
  double f1_internal = 0.0;
  double f1_test = 0.0;
  std::size_t model_count = 0;
  std::optional<double> threshold;
};

// TSV table sorted by internal F1 descending, ties broken by name.
std::string leaderboard(std::vector<LeaderboardRow> rows);

}  // namespace valuecat

#endif
