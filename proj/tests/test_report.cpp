#include "valuecat/report.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "valuecat/rng.hpp"

using namespace valuecat;

namespace {

LabelMatrix labels_from(const std::vector<std::vector<int>>& rows) {
  LabelMatrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m.set(r, c, static_cast<std::uint8_t>(rows[r][c]));
    }
  }
  return m;
}

ScoreMatrix scores_of(const LabelMatrix& labels) {
  ScoreMatrix m(labels.rows(), labels.cols());
  for (std::size_t r = 0; r < labels.rows(); ++r) {
    for (std::size_t c = 0; c < labels.cols(); ++c) {
      m.set(r, c, labels(r, c) ? 0.9 : 0.1);
    }
  }
  return m;
}

FittedEnsemble thresholded(double threshold, std::size_t members) {
  FittedEnsemble ensemble;
  ensemble.spec.name = "EN-Thres-LoD";
  for (std::size_t i = 0; i < members; ++i) {
    ensemble.spec.member_model_ids.push_back("m" + std::to_string(i));
  }
  ensemble.threshold = threshold;
  return ensemble;
}

}  // namespace

TEST_CASE("evaluate_scores reports perfect and degenerate outcomes") {
  const auto truth = labels_from({{1, 0}, {0, 1}, {1, 1}});
  const FittedEnsemble ensemble = thresholded(0.5, 2);
  const std::vector<ScoreMatrix> members{scores_of(truth), scores_of(truth)};

  const EvaluationReport report =
      evaluate_scores(ensemble, members, truth, "internal-test");
  CHECK(report.dataset_name == "internal-test");
  CHECK(report.overall.custom_f1 == 1.0);
  CHECK(report.threshold == 0.5);
  CHECK(report.model_count == 2);

  // Threshold 1.0 turns everything off.
  const EvaluationReport zero =
      evaluate_scores(thresholded(1.0, 2), members, truth, "internal-test");
  CHECK(zero.overall.custom_f1 == 0.0);
  CHECK(zero.overall.macro_recall == 0.0);
}

TEST_CASE("spearman handles monotone, reversed, tied, and constant inputs") {
  const std::vector<double> a{1, 2, 3, 4};
  CHECK(spearman_rank_correlation(a, {10, 20, 30, 40}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman_rank_correlation(a, {40, 30, 20, 10}) ==
        doctest::Approx(-1.0).epsilon(1e-12));

  // Average ranks for the tied pair: r = 3/sqrt(10).
  CHECK(spearman_rank_correlation({1, 2, 2, 4}, {1, 2, 3, 4}) ==
        doctest::Approx(3.0 / std::sqrt(10.0)).epsilon(1e-12));

  bool degenerate = false;
  CHECK(spearman_rank_correlation({5, 5, 5, 5}, a, &degenerate) == 0.0);
  CHECK(degenerate);
  degenerate = false;
  CHECK(spearman_rank_correlation(a, {7, 7, 7, 7}, &degenerate) == 0.0);
  CHECK(degenerate);
  degenerate = true;
  spearman_rank_correlation(a, a, &degenerate);
  CHECK(!degenerate);
}

TEST_CASE("frequency analysis pairs train counts with per-label F1") {
  const auto& categories = CategorySet::task_default();
  const std::size_t n_labels = categories.size();

  // Label j appears in j+1 train rows; per-label F1 rises with frequency, so
  // the correlation is strongly positive.
  LabelMatrix train(n_labels + 1, n_labels);
  for (std::size_t c = 0; c < n_labels; ++c) {
    for (std::size_t r = 0; r <= c; ++r) train.set(r, c, 1);
  }
  EvaluationReport report;
  report.dataset_name = "internal-test";
  report.overall.per_label_f1.resize(n_labels);
  for (std::size_t c = 0; c < n_labels; ++c) {
    report.overall.per_label_f1[c] =
        static_cast<double>(c) / static_cast<double>(n_labels);
  }

  const FrequencyAnalysis analysis =
      frequency_analysis(train, report, categories);
  REQUIRE(analysis.rows.size() == n_labels);
  CHECK(analysis.rows[0].label == categories.names()[0]);
  CHECK(analysis.rows[0].train_count == 1);
  CHECK(analysis.rows[n_labels - 1].train_count == n_labels);
  CHECK(analysis.spearman == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(!analysis.tie_degenerate);

  const std::string csv = frequency_analysis_to_csv(analysis);
  CHECK(csv.rfind("label,train_count,f1\n", 0) == 0);
  CHECK(csv.find("# spearman=") != std::string::npos);

  // Constant F1 flags the degenerate case and reports 0.
  for (auto& f1 : report.overall.per_label_f1) f1 = 0.5;
  const FrequencyAnalysis flat = frequency_analysis(train, report, categories);
  CHECK(flat.spearman == 0.0);
  CHECK(flat.tie_degenerate);
}

TEST_CASE("the leaderboard sorts by internal F1 with name tie-breaks") {
  std::vector<LeaderboardRow> rows{
      {"EN-Thres-Train", 0.48, 0.46, 12, 0.26},
      {"EN-Log-Reg", 0.50, 0.47, 12, std::nullopt},
      {"EN-Thres-LoD", 0.50, 0.49, 12, 0.24},
      {"Single-Deberta-F1", 0.44, 0.42, 1, 0.30},
  };
  const std::string table = leaderboard(rows);
  CHECK(table.rfind("Model Selection\t#\tThres.\tF1 Test\tF1 inter.\n", 0) == 0);

  const auto pos = [&](const std::string& name) {
    return table.find(name);
  };
  CHECK(pos("EN-Log-Reg") != std::string::npos);
  // 0.50 ties sort by name, then 0.48, then 0.44.
  CHECK(pos("EN-Log-Reg") < pos("EN-Thres-LoD"));
  CHECK(pos("EN-Thres-LoD") < pos("EN-Thres-Train"));
  CHECK(pos("EN-Thres-Train") < pos("Single-Deberta-F1"));
}

TEST_CASE("evaluation reports serialize with all documented fields") {
  const auto& categories = CategorySet::task_default();
  LabelMatrix truth(3, categories.size());
  for (std::size_t r = 0; r < 3; ++r) truth.set(r, r, 1);
  const FittedEnsemble ensemble = thresholded(0.5, 2);
  const std::vector<ScoreMatrix> members{scores_of(truth), scores_of(truth)};
  const EvaluationReport report =
      evaluate_scores(ensemble, members, truth, "leave-out");

  const std::string json = evaluation_report_to_json(report, categories);
  for (const char* field : {"dataset", "custom_f1", "per_label_f1",
                            "threshold", "model_count"}) {
    CHECK(json.find(field) != std::string::npos);
  }

  const std::string tsv = evaluation_report_to_tsv(report, categories);
  CHECK(tsv.find("All") != std::string::npos);
  CHECK(tsv.find("Threshold") != std::string::npos);
  CHECK(tsv.find("# models") != std::string::npos);
  for (const auto& name : categories.names()) {
    CHECK(tsv.find(name) != std::string::npos);
  }
}
