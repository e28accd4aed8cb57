#include "valuecat/thresholding.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "valuecat/metrics.hpp"

namespace valuecat {

LabelMatrix binarize(const ScoreMatrix& scores, double threshold) {
  LabelMatrix labels(scores.rows(), scores.cols());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      if (scores(r, c) > threshold) labels.set(r, c, 1);
    }
  }
  return labels;
}

ThresholdSearchResult select_threshold(const LabelMatrix& truth,
                                       const ScoreMatrix& scores) {
  require_same_shape(truth.rows(), truth.cols(), scores.rows(), scores.cols(),
                     "select_threshold");
  if (truth.rows() == 0 || truth.cols() == 0) {
    throw SizeError("select_threshold: empty input");
  }

  ThresholdSearchResult result;
  result.curve.reserve(101);
  for (int k = 0; k <= 100; ++k) {
    const double threshold = static_cast<double>(k) / 100.0;
    const LabelMatrix pred = binarize(scores, threshold);
    const double recall = macro_recall(truth, pred);
    const double precision = macro_precision(truth, pred);
    double f1 = 0.0;
    if (precision + recall != 0.0) {
      f1 = 2.0 * recall * precision / (recall + precision);
      if (f1 >= result.max_f1) {
        result.opt_threshold = threshold;
        result.max_f1 = f1;
      }
    }
    result.curve.emplace_back(threshold, f1);
  }
  return result;
}

std::string threshold_curve_to_csv(const ThresholdSearchResult& result) {
  std::string csv = "threshold,f1\n";
  char line[64];
  for (const auto& [threshold, f1] : result.curve) {
    std::snprintf(line, sizeof(line), "%.2f,%.12g\n", threshold, f1);
    csv += line;
  }
  return csv;
}

std::string threshold_result_to_json(const ThresholdSearchResult& result) {
  nlohmann::json j;
  j["opt_threshold"] = result.opt_threshold;
  j["max_f1"] = result.max_f1;
  auto& curve = j["curve"] = nlohmann::json::array();
  for (const auto& [threshold, f1] : result.curve) {
    curve.push_back({threshold, f1});
  }
  return j.dump(2);
}

}  // namespace valuecat
