#include "valuecat/metrics.hpp"

#include <nlohmann/json.hpp>

namespace valuecat {

namespace {

double safe_ratio(std::size_t numerator, std::size_t denominator) {
  return denominator == 0 ? 0.0
                          : static_cast<double>(numerator) /
                                static_cast<double>(denominator);
}

double harmonic(double a, double b) {
  return (a + b) == 0.0 ? 0.0 : 2.0 * a * b / (a + b);
}

}  // namespace

std::vector<LabelCounts> per_label_counts(const LabelMatrix& truth,
                                          const LabelMatrix& pred) {
  require_same_shape(truth.rows(), truth.cols(), pred.rows(), pred.cols(),
                     "per_label_counts");
  std::vector<LabelCounts> counts(truth.cols());
  for (std::size_t r = 0; r < truth.rows(); ++r) {
    for (std::size_t c = 0; c < truth.cols(); ++c) {
      const bool t = truth(r, c) != 0;
      const bool p = pred(r, c) != 0;
      if (t && p) ++counts[c].tp;
      else if (!t && p) ++counts[c].fp;
      else if (t && !p) ++counts[c].fn;
    }
  }
  return counts;
}

double macro_recall(const LabelMatrix& truth, const LabelMatrix& pred) {
  const auto counts = per_label_counts(truth, pred);
  double sum = 0.0;
  for (const auto& c : counts) sum += safe_ratio(c.tp, c.tp + c.fn);
  return counts.empty() ? 0.0 : sum / static_cast<double>(counts.size());
}

double macro_precision(const LabelMatrix& truth, const LabelMatrix& pred) {
  const auto counts = per_label_counts(truth, pred);
  double sum = 0.0;
  for (const auto& c : counts) sum += safe_ratio(c.tp, c.tp + c.fp);
  return counts.empty() ? 0.0 : sum / static_cast<double>(counts.size());
}

double custom_f1(const LabelMatrix& truth, const LabelMatrix& pred) {
  return harmonic(macro_recall(truth, pred), macro_precision(truth, pred));
}

MetricReport metric_report(const LabelMatrix& truth, const LabelMatrix& pred) {
  const auto counts = per_label_counts(truth, pred);
  MetricReport report;
  report.per_label_f1.reserve(counts.size());

  std::size_t pooled_tp = 0, pooled_fp = 0, pooled_fn = 0;
  double recall_sum = 0.0, precision_sum = 0.0, f1_sum = 0.0;
  for (const auto& c : counts) {
    recall_sum += safe_ratio(c.tp, c.tp + c.fn);
    precision_sum += safe_ratio(c.tp, c.tp + c.fp);
    const double f1 = safe_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    report.per_label_f1.push_back(f1);
    f1_sum += f1;
    pooled_tp += c.tp;
    pooled_fp += c.fp;
    pooled_fn += c.fn;
  }
  const double n = static_cast<double>(counts.size());
  report.macro_recall = counts.empty() ? 0.0 : recall_sum / n;
  report.macro_precision = counts.empty() ? 0.0 : precision_sum / n;
  report.custom_f1 = harmonic(report.macro_recall, report.macro_precision);
  report.macro_f1_standard = counts.empty() ? 0.0 : f1_sum / n;
  report.micro_f1 = safe_ratio(2 * pooled_tp, 2 * pooled_tp + pooled_fp + pooled_fn);
  return report;
}

std::string metric_report_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["macro_precision"] = report.macro_precision;
  j["macro_recall"] = report.macro_recall;
  j["custom_f1"] = report.custom_f1;
  j["per_label_f1"] = report.per_label_f1;
  j["macro_f1_standard"] = report.macro_f1_standard;
  j["micro_f1"] = report.micro_f1;
  return j.dump(2);
}

}  // namespace valuecat
