#ifndef VALUECAT_THRESHOLDING_HPP
#define VALUECAT_THRESHOLDING_HPP

#include <string>
#include <utility>
#include <vector>

#include "valuecat/matrix.hpp"

namespace valuecat {

struct ThresholdSearchResult {
  double opt_threshold = 0.0;
  double max_f1 = 0.0;
  // (threshold, f1) for every grid point k/100, k = 0..100. Grid points whose
  // precision + recall is zero are recorded with f1 = 0 but never become opt.
  std::vector<std::pair<double, double>> curve;
};

// Strict binarization: entry is 1 iff score > threshold. The same rule is
// used everywhere a score becomes a label (training-time F1, averaged
// ensemble scores, evaluation).
LabelMatrix binarize(const ScoreMatrix& scores, double threshold);

// Exhaustive scan of the 101-point threshold grid, maximizing the harmonic
// mean of macro recall and macro precision. Ties resolve to the largest
// threshold attaining the maximum. Thresholds are computed as k/100 from
// integer k so grid values are identical across platforms.
ThresholdSearchResult select_threshold(const LabelMatrix& truth,
                                       const ScoreMatrix& scores);

std::string threshold_curve_to_csv(const ThresholdSearchResult& result);
std::string threshold_result_to_json(const ThresholdSearchResult& result);

}  // namespace valuecat

#endif
