#ifndef VALUECAT_METRICS_HPP
#define VALUECAT_METRICS_HPP

#include <string>
#include <vector>

#include "valuecat/matrix.hpp"

namespace valuecat {

struct LabelCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct MetricReport {
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double custom_f1 = 0.0;
  std::vector<double> per_label_f1;
  double macro_f1_standard = 0.0;
  double micro_f1 = 0.0;
};

// Confusion counts per label column.
std::vector<LabelCounts> per_label_counts(const LabelMatrix& truth,
                                          const LabelMatrix& pred);

// Macro averages with the zero-division convention: a label whose denominator
// is zero contributes 0.
double macro_recall(const LabelMatrix& truth, const LabelMatrix& pred);
double macro_precision(const LabelMatrix& truth, const LabelMatrix& pred);

// Harmonic mean of macro precision and macro recall (computed from the macro
// averages first, not per label); 0 when both are 0. This is the score the
// task ranks systems by and it generally differs from the standard macro F1.
double custom_f1(const LabelMatrix& truth, const LabelMatrix& pred);

MetricReport metric_report(const LabelMatrix& truth, const LabelMatrix& pred);

std::string metric_report_to_json(const MetricReport& report);

}  // namespace valuecat

#endif
