#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "valuecat/corpus.hpp"
#include "valuecat/ensemble.hpp"
#include "valuecat/learner.hpp"
#include "valuecat/metrics.hpp"
#include "valuecat/report.hpp"
#include "valuecat/thresholding.hpp"

namespace py = pybind11;
using namespace valuecat;

namespace {

LabelMatrix labels_from_lists(const std::vector<std::vector<int>>& rows) {
  if (rows.empty()) return LabelMatrix();
  LabelMatrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) {
      throw DimensionError("label rows have unequal lengths");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m.set(r, c, static_cast<std::uint8_t>(rows[r][c]));
    }
  }
  return m;
}

ScoreMatrix scores_from_lists(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return ScoreMatrix();
  ScoreMatrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) {
      throw DimensionError("score rows have unequal lengths");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.set(r, c, rows[r][c]);
  }
  return m;
}

std::vector<std::vector<int>> labels_to_lists(const LabelMatrix& m) {
  std::vector<std::vector<int>> rows(m.rows(), std::vector<int>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) rows[r][c] = m(r, c);
  }
  return rows;
}

std::vector<std::vector<double>> scores_to_lists(const ScoreMatrix& m) {
  std::vector<std::vector<double>> rows(m.rows(),
                                        std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) rows[r][c] = m(r, c);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_valuecat, module) {
  module.doc() = "decision layer for multi-label value classification";

  module.def("categories", [] {
    return CategorySet::task_default().names();
  });
  module.def(
      "concatenate",
      [](const std::string& id, const std::string& premise,
         const std::string& stance, const std::string& conclusion) {
        return concatenate({id, premise, stance, conclusion});
      },
      py::arg("id"), py::arg("premise"), py::arg("stance"),
      py::arg("conclusion"));
  module.def("tokenize", &tokenize, py::arg("text"));

  module.def(
      "featurize",
      [](const std::string& text, std::size_t dimension, std::size_t ngram_max,
         std::uint64_t hash_seed) {
        FeatureConfig config;
        config.dimension = dimension;
        config.ngram_max = ngram_max;
        config.hash_seed = hash_seed;
        return featurize(text, config);
      },
      py::arg("text"), py::arg("dimension") = 4096, py::arg("ngram_max") = 2,
      py::arg("hash_seed") = 0);

  module.def(
      "metric_report",
      [](const std::vector<std::vector<int>>& truth,
         const std::vector<std::vector<int>>& pred) {
        const MetricReport report =
            metric_report(labels_from_lists(truth), labels_from_lists(pred));
        py::dict out;
        out["macro_precision"] = report.macro_precision;
        out["macro_recall"] = report.macro_recall;
        out["custom_f1"] = report.custom_f1;
        out["per_label_f1"] = report.per_label_f1;
        out["macro_f1_standard"] = report.macro_f1_standard;
        out["micro_f1"] = report.micro_f1;
        return out;
      },
      py::arg("truth"), py::arg("pred"));
  module.def(
      "custom_f1",
      [](const std::vector<std::vector<int>>& truth,
         const std::vector<std::vector<int>>& pred) {
        return custom_f1(labels_from_lists(truth), labels_from_lists(pred));
      },
      py::arg("truth"), py::arg("pred"));

  module.def(
      "binarize",
      [](const std::vector<std::vector<double>>& scores, double threshold) {
        return labels_to_lists(binarize(scores_from_lists(scores), threshold));
      },
      py::arg("scores"), py::arg("threshold"));
  module.def(
      "select_threshold",
      [](const std::vector<std::vector<int>>& truth,
         const std::vector<std::vector<double>>& scores) {
        const ThresholdSearchResult result =
            select_threshold(labels_from_lists(truth),
                             scores_from_lists(scores));
        py::dict out;
        out["opt_threshold"] = result.opt_threshold;
        out["max_f1"] = result.max_f1;
        out["curve"] = result.curve;
        return out;
      },
      py::arg("truth"), py::arg("scores"));

  module.def(
      "average",
      [](const std::vector<std::vector<std::vector<double>>>& members) {
        std::vector<ScoreMatrix> matrices;
        for (const auto& member : members) {
          matrices.push_back(scores_from_lists(member));
        }
        return scores_to_lists(average(matrices));
      },
      py::arg("members"));

  // Fits texts -> 20-label model end to end; returns validation diagnostics.
  module.def(
      "train_model",
      [](const std::vector<std::string>& train_texts,
         const std::vector<std::vector<int>>& train_labels,
         const std::vector<std::string>& val_texts,
         const std::vector<std::vector<int>>& val_labels,
         const std::string& objective, std::size_t dimension,
         double learning_rate, int epochs, std::size_t warmup_steps,
         std::size_t validation_interval, std::uint64_t fold_seed) {
        ModelConfig config;
        config.objective = objective_from_name(objective);
        config.fold_seed = fold_seed;
        config.feature_config.dimension = dimension;
        config.hyper.learning_rate = learning_rate;
        config.hyper.epochs_for_schedule = epochs;
        config.hyper.warmup_steps = warmup_steps;
        config.hyper.validation_interval = validation_interval;

        const auto embed = [&](const std::vector<std::string>& texts) {
          std::vector<FeatureVector> features;
          for (const auto& text : texts) {
            features.push_back(featurize(text, config.feature_config));
          }
          return features;
        };
        const auto train_features = embed(train_texts);
        const auto val_features = embed(val_texts);
        const LabelMatrix train_m = labels_from_lists(train_labels);
        const LabelMatrix val_m = labels_from_lists(val_labels);
        const DataFold fold{&train_features, &train_m, &val_features, &val_m};
        const TrainedModel model = train(fold, config);

        py::dict out;
        out["best_step"] = model.best_step;
        out["best_metric"] = model.best_metric;
        out["best_threshold"] = model.best_threshold;
        out["curve_steps"] = [&] {
          std::vector<std::size_t> steps;
          for (const auto& point : model.curve) steps.push_back(point.step);
          return steps;
        }();
        out["val_scores"] =
            scores_to_lists(predict_scores(model.model, val_features));
        return out;
      },
      py::arg("train_texts"), py::arg("train_labels"), py::arg("val_texts"),
      py::arg("val_labels"), py::arg("objective") = "F1Max",
      py::arg("dimension") = 1024, py::arg("learning_rate") = 1e-2,
      py::arg("epochs") = 3, py::arg("warmup_steps") = 20,
      py::arg("validation_interval") = 25, py::arg("fold_seed") = 42);

  module.def(
      "fit_threshold_ensemble",
      [](const std::vector<std::vector<std::vector<double>>>& member_scores,
         const std::vector<std::vector<int>>& truth) {
        EnsembleSpec spec;
        spec.name = "py";
        for (std::size_t i = 0; i < member_scores.size(); ++i) {
          spec.member_model_ids.push_back("m" + std::to_string(i));
        }
        std::vector<ScoreMatrix> matrices;
        for (const auto& member : member_scores) {
          matrices.push_back(scores_from_lists(member));
        }
        const FittedEnsemble fitted =
            fit_recipe1(spec, matrices, labels_from_lists(truth));
        py::dict out;
        out["threshold"] = *fitted.threshold;
        out["predictions"] = labels_to_lists(predict(fitted, matrices));
        return out;
      },
      py::arg("member_scores"), py::arg("truth"));

  module.def(
      "fit_stacking_ensemble",
      [](const std::vector<std::vector<std::vector<double>>>& member_scores,
         const std::vector<std::vector<int>>& truth, std::uint64_t init_seed,
         double inverse_reg_strength) {
        EnsembleSpec spec;
        spec.name = "py";
        spec.method = EnsembleMethod::Stacking;
        for (std::size_t i = 0; i < member_scores.size(); ++i) {
          spec.member_model_ids.push_back("m" + std::to_string(i));
        }
        std::vector<ScoreMatrix> matrices;
        for (const auto& member : member_scores) {
          matrices.push_back(scores_from_lists(member));
        }
        const FittedEnsemble fitted =
            fit_recipe2(spec, matrices, labels_from_lists(truth), init_seed,
                        inverse_reg_strength);
        py::dict out;
        out["predictions"] = labels_to_lists(predict(fitted, matrices));
        out["warnings"] = fitted.warnings;
        return out;
      },
      py::arg("member_scores"), py::arg("truth"), py::arg("init_seed") = 0,
      py::arg("inverse_reg_strength") = 1.0);

  module.def(
      "spearman",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        bool degenerate = false;
        const double rho = spearman_rank_correlation(a, b, &degenerate);
        return py::make_tuple(rho, degenerate);
      },
      py::arg("a"), py::arg("b"));

  py::register_exception<ConfigError>(module, "ConfigError");
  py::register_exception<FormatError>(module, "FormatError");
  py::register_exception<DimensionError>(module, "DimensionError");
  py::register_exception<SizeError>(module, "SizeError");
}
