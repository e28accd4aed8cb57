#include "valuecat/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

namespace valuecat {

EvaluationReport evaluate_scores(const FittedEnsemble& ensemble,
                                 const std::vector<ScoreMatrix>& members_scores,
                                 const LabelMatrix& truth,
                                 const std::string& dataset_name) {
  if (truth.rows() == 0) {
    throw SizeError("evaluate: empty dataset '" + dataset_name + "'");
  }
  const LabelMatrix pred = predict(ensemble, members_scores);
  EvaluationReport report;
  report.dataset_name = dataset_name;
  report.overall = metric_report(truth, pred);
  report.threshold = ensemble.threshold;
  report.model_count = ensemble.spec.member_model_ids.size();
  return report;
}

EvaluationReport evaluate(const FittedEnsemble& ensemble,
                          const std::vector<TrainedModel>& members,
                          const Dataset& dataset,
                          const std::string& dataset_name) {
  if (!dataset.labeled()) {
    throw IntegrityError("evaluate: dataset '" + dataset_name +
                         "' has no labels");
  }
  return evaluate_scores(ensemble, all_member_scores(members, dataset),
                         *dataset.labels, dataset_name);
}

std::string evaluation_report_to_json(const EvaluationReport& report,
                                      const CategorySet& categories) {
  nlohmann::json j;
  j["dataset_name"] = report.dataset_name;
  j["model_count"] = report.model_count;
  if (report.threshold) j["threshold"] = *report.threshold;
  j["overall"] = nlohmann::json::parse(metric_report_to_json(report.overall));
  auto& per_label = j["per_label"] = nlohmann::json::object();
  for (std::size_t c = 0; c < categories.size(); ++c) {
    per_label[categories.names()[c]] = report.overall.per_label_f1[c];
  }
  return j.dump(2);
}

std::string evaluation_report_to_tsv(const EvaluationReport& report,
                                     const CategorySet& categories) {
  std::string tsv = "dataset\tAll";
  for (const auto& name : categories.names()) tsv += '\t' + name;
  tsv += "\tThreshold\t# models\n";
  char cell[32];
  tsv += report.dataset_name;
  std::snprintf(cell, sizeof(cell), "\t%.6f", report.overall.custom_f1);
  tsv += cell;
  for (const double f1 : report.overall.per_label_f1) {
    std::snprintf(cell, sizeof(cell), "\t%.6f", f1);
    tsv += cell;
  }
  if (report.threshold) {
    std::snprintf(cell, sizeof(cell), "\t%.2f", *report.threshold);
    tsv += cell;
  } else {
    tsv += "\t-";
  }
  tsv += '\t' + std::to_string(report.model_count) + '\n';
  return tsv;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rank_correlation(const std::vector<double>& a,
                                 const std::vector<double>& b,
                                 bool* degenerate) {
  if (a.size() != b.size() || a.empty()) {
    throw DimensionError("spearman: input size mismatch or empty");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    var_a += (ra[i] - mean) * (ra[i] - mean);
    var_b += (rb[i] - mean) * (rb[i] - mean);
  }
  if (var_a == 0.0 || var_b == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  if (degenerate) *degenerate = false;
  return cov / std::sqrt(var_a * var_b);
}

FrequencyAnalysis frequency_analysis(const LabelMatrix& train_labels,
                                     const EvaluationReport& report,
                                     const CategorySet& categories) {
  if (train_labels.cols() != categories.size() ||
      report.overall.per_label_f1.size() != categories.size()) {
    throw DimensionError("frequency_analysis: column count mismatch");
  }
  FrequencyAnalysis analysis;
  std::vector<double> counts, f1s;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    std::size_t count = 0;
    for (std::size_t r = 0; r < train_labels.rows(); ++r) {
      count += train_labels(r, c);
    }
    analysis.rows.push_back(
        {categories.names()[c], count, report.overall.per_label_f1[c]});
    counts.push_back(static_cast<double>(count));
    f1s.push_back(report.overall.per_label_f1[c]);
  }
  analysis.spearman =
      spearman_rank_correlation(counts, f1s, &analysis.tie_degenerate);
  return analysis;
}

std::string frequency_analysis_to_csv(const FrequencyAnalysis& analysis) {
  std::string csv = "label,train_count,f1\n";
  char line[160];
  for (const auto& row : analysis.rows) {
    std::snprintf(line, sizeof(line), "\"%s\",%zu,%.12g\n", row.label.c_str(),
                  row.train_count, row.f1);
    csv += line;
  }
  std::snprintf(line, sizeof(line), "# spearman=%.12g tie_degenerate=%d\n",
                analysis.spearman, analysis.tie_degenerate ? 1 : 0);
  csv += line;
  return csv;
}

std::string leaderboard(std::vector<LeaderboardRow> rows) {
  if (rows.empty()) throw SizeError("leaderboard: no rows");
  std::sort(rows.begin(), rows.end(),
            [](const LeaderboardRow& a, const LeaderboardRow& b) {
              if (a.f1_internal != b.f1_internal) {
                return a.f1_internal > b.f1_internal;
              }
              return a.ensemble_name < b.ensemble_name;
            });
  std::string tsv = "Model Selection\t#\tThres.\tF1 Test\tF1 inter.\n";
  char cell[48];
  for (const auto& row : rows) {
    tsv += row.ensemble_name;
    tsv += '\t' + std::to_string(row.model_count);
    if (row.threshold) {
      std::snprintf(cell, sizeof(cell), "\t%.2f", *row.threshold);
      tsv += cell;
    } else {
      tsv += "\t-";
    }
    std::snprintf(cell, sizeof(cell), "\t%.6f\t%.6f\n", row.f1_test,
                  row.f1_internal);
    tsv += cell;
  }
  return tsv;
}

}  // namespace valuecat
