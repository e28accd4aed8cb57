#ifndef VALUECAT_TESTS_ORACLES_HPP
#define VALUECAT_TESTS_ORACLES_HPP

// Independent brute-force reference implementations. These deliberately avoid
// the library's metric/threshold code paths: everything is recomputed
// cell-by-cell with plain loops.

#include <cstddef>
#include <utility>
#include <vector>

#include "valuecat/matrix.hpp"

namespace valuecat::testing {

inline double oracle_macro_recall(const LabelMatrix& truth,
                                  const LabelMatrix& pred) {
  double sum = 0.0;
  for (std::size_t c = 0; c < truth.cols(); ++c) {
    double tp = 0.0, fn = 0.0;
    for (std::size_t r = 0; r < truth.rows(); ++r) {
      if (truth(r, c) == 1 && pred(r, c) == 1) tp += 1.0;
      if (truth(r, c) == 1 && pred(r, c) == 0) fn += 1.0;
    }
    if (tp + fn > 0.0) sum += tp / (tp + fn);
  }
  return sum / static_cast<double>(truth.cols());
}

inline double oracle_macro_precision(const LabelMatrix& truth,
                                     const LabelMatrix& pred) {
  double sum = 0.0;
  for (std::size_t c = 0; c < truth.cols(); ++c) {
    double tp = 0.0, fp = 0.0;
    for (std::size_t r = 0; r < truth.rows(); ++r) {
      if (truth(r, c) == 1 && pred(r, c) == 1) tp += 1.0;
      if (truth(r, c) == 0 && pred(r, c) == 1) fp += 1.0;
    }
    if (tp + fp > 0.0) sum += tp / (tp + fp);
  }
  return sum / static_cast<double>(truth.cols());
}

inline double oracle_custom_f1(const LabelMatrix& truth,
                               const LabelMatrix& pred) {
  const double r = oracle_macro_recall(truth, pred);
  const double p = oracle_macro_precision(truth, pred);
  if (r + p == 0.0) return 0.0;
  return 2.0 * r * p / (r + p);
}

// Exhaustive grid scan mirroring the published selection procedure, written
// directly against the oracle metrics.
inline std::pair<double, double> oracle_select_threshold(
    const LabelMatrix& truth, const ScoreMatrix& scores) {
  double opt_threshold = 0.0;
  double max_f1 = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double threshold = static_cast<double>(k) / 100.0;
    LabelMatrix pred(scores.rows(), scores.cols());
    for (std::size_t r = 0; r < scores.rows(); ++r) {
      for (std::size_t c = 0; c < scores.cols(); ++c) {
        pred.set(r, c, scores(r, c) > threshold ? 1 : 0);
      }
    }
    const double recall = oracle_macro_recall(truth, pred);
    const double precision = oracle_macro_precision(truth, pred);
    if (precision + recall != 0.0) {
      const double f1 = 2.0 * recall * precision / (recall + precision);
      if (f1 >= max_f1) {
        opt_threshold = threshold;
        max_f1 = f1;
      }
    }
  }
  return {opt_threshold, max_f1};
}

}  // namespace valuecat::testing

#endif
