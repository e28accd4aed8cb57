#include "valuecat/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "valuecat/metrics.hpp"
#include "valuecat/rng.hpp"
#include "valuecat/thresholding.hpp"

namespace valuecat {

namespace {

constexpr double kProbClamp = 1e-7;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clamp_prob(double p) {
  return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

}  // namespace

std::string objective_name(Objective objective) {
  return objective == Objective::LossMin ? "LossMin" : "F1Max";
}

Objective objective_from_name(const std::string& name) {
  if (name == "LossMin") return Objective::LossMin;
  if (name == "F1Max") return Objective::F1Max;
  throw ConfigError("unknown objective '" + name + "'");
}

std::string model_id(const ModelConfig& config) {
  return config.base_id + "/" + objective_name(config.objective) + "/seed" +
         std::to_string(config.fold_seed);
}

std::size_t loss_min_step(const std::vector<CurvePoint>& curve) {
  if (curve.empty()) throw SizeError("loss_min_step: empty curve");
  const auto it = std::min_element(
      curve.begin(), curve.end(), [](const CurvePoint& a, const CurvePoint& b) {
        return a.avg_val_loss < b.avg_val_loss;
      });
  return it->step;
}

std::size_t f1_max_step(const std::vector<CurvePoint>& curve) {
  if (curve.empty()) throw SizeError("f1_max_step: empty curve");
  const auto it = std::max_element(
      curve.begin(), curve.end(), [](const CurvePoint& a, const CurvePoint& b) {
        return a.custom_f1_at_opt_threshold < b.custom_f1_at_opt_threshold;
      });
  return it->step;
}

double learning_rate_at(std::size_t step, const Hyperparameters& hyper,
                        std::size_t total_steps) {
  const std::size_t warmup = std::min(hyper.warmup_steps, total_steps);
  if (step <= warmup) {
    return warmup == 0 ? hyper.learning_rate
                       : hyper.learning_rate * static_cast<double>(step) /
                             static_cast<double>(warmup);
  }
  if (step >= total_steps) return 0.0;
  return hyper.learning_rate * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup);
}

ScoreMatrix predict_scores(const LinearModel& model,
                           const std::vector<FeatureVector>& features) {
  ScoreMatrix scores(features.size(), model.n_labels);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& x = features[i];
    if (x.size() != model.dimension) {
      throw DimensionError("predict_scores: feature dimension " +
                           std::to_string(x.size()) + " does not match model " +
                           std::to_string(model.dimension));
    }
    for (std::size_t j = 0; j < model.n_labels; ++j) {
      const double* w = model.weights.data() + j * model.dimension;
      double z = model.bias[j];
      for (std::size_t d = 0; d < model.dimension; ++d) {
        z += w[d] * static_cast<double>(x[d]);
      }
      scores.set(i, j, sigmoid(z));
    }
  }
  return scores;
}

double bce_loss(const ScoreMatrix& scores, const LabelMatrix& truth,
                const std::vector<double>* label_weights) {
  require_same_shape(scores.rows(), scores.cols(), truth.rows(), truth.cols(),
                     "bce_loss");
  if (label_weights && label_weights->size() != scores.cols()) {
    throw DimensionError("bce_loss: label weight count does not match columns");
  }
  double sum = 0.0;
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      const double p = clamp_prob(scores(r, c));
      const double y = truth(r, c);
      double cell = -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
      if (label_weights) cell *= (*label_weights)[c];
      sum += cell;
    }
  }
  return sum / static_cast<double>(scores.rows() * scores.cols());
}

std::vector<double> inverse_num_samples_weights(const LabelMatrix& labels) {
  std::vector<double> weights(labels.cols(), 0.0);
  for (std::size_t c = 0; c < labels.cols(); ++c) {
    std::size_t count = 0;
    for (std::size_t r = 0; r < labels.rows(); ++r) count += labels(r, c);
    weights[c] = 1.0 / static_cast<double>(std::max<std::size_t>(count, 1));
  }
  const double mean =
      std::accumulate(weights.begin(), weights.end(), 0.0) /
      static_cast<double>(weights.size());
  for (double& w : weights) w /= mean;
  return weights;
}

TrainedModel train(const DataFold& fold, const ModelConfig& config) {
  const auto& train_x = *fold.train_features;
  const auto& train_y = *fold.train_labels;
  const auto& val_x = *fold.validation_features;
  const auto& val_y = *fold.validation_labels;
  if (train_x.empty() || val_x.empty()) {
    throw SizeError("train: empty train or validation fold");
  }
  if (train_x.size() != train_y.rows() || val_x.size() != val_y.rows()) {
    throw DimensionError("train: feature/label row mismatch");
  }

  const Hyperparameters& hyper = config.hyper;
  const std::size_t n_labels = train_y.cols();
  const std::size_t dimension = train_x[0].size();
  const std::size_t steps_per_epoch = train_x.size() / hyper.batch_size;
  if (steps_per_epoch == 0) {
    throw SizeError("train: fewer training samples than batch_size");
  }
  const std::size_t total_steps =
      steps_per_epoch * static_cast<std::size_t>(hyper.epochs_for_schedule);

  std::vector<double> label_weights;
  const std::vector<double>* weights_ptr = nullptr;
  if (config.loss_weighting == LossWeighting::InverseNumSamples) {
    label_weights = inverse_num_samples_weights(train_y);
    weights_ptr = &label_weights;
  }

  LinearModel model(n_labels, dimension);
  const std::size_t n_params = model.weights.size() + model.bias.size();
  std::vector<double> adam_m(n_params, 0.0), adam_v(n_params, 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  TrainedModel result;
  result.config = config;
  LinearModel best_model = model;
  double best_metric =
      config.objective == Objective::LossMin ? 1e300 : -1e300;
  int bad_validations = 0;
  bool stopped = false;

  std::mt19937_64 shuffle_rng(config.fold_seed);
  std::vector<std::size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), 0);

  // Batch gradient buffers, flat layout matching (weights, bias).
  std::vector<double> grad(n_params);

  auto validate = [&](std::size_t step) {
    const ScoreMatrix val_scores = predict_scores(model, val_x);
    const double val_loss = bce_loss(val_scores, val_y, weights_ptr);
    if (!std::isfinite(val_loss)) {
      throw TrainingError("non-finite validation loss at step " +
                          std::to_string(step));
    }
    const ThresholdSearchResult search = select_threshold(val_y, val_scores);
    const MetricReport at_half = metric_report(val_y, binarize(val_scores, 0.5));
    result.curve.push_back({step, val_loss, search.max_f1, at_half.micro_f1,
                            at_half.macro_f1_standard});

    const double metric =
        config.objective == Objective::LossMin ? val_loss : search.max_f1;
    const bool improved = config.objective == Objective::LossMin
                              ? metric < best_metric
                              : metric > best_metric;
    if (improved) {
      best_metric = metric;
      best_model = model;
      result.best_step = step;
      result.best_threshold = search.opt_threshold;
      bad_validations = 0;
    } else if (++bad_validations >= hyper.patience) {
      stopped = true;
    }
  };

  std::size_t step = 0;
  while (step < total_steps && !stopped) {
    deterministic_shuffle(order, shuffle_rng);
    for (std::size_t b = 0; b < steps_per_epoch && step < total_steps && !stopped;
         ++b) {
      ++step;
      std::fill(grad.begin(), grad.end(), 0.0);
      const double cell_scale =
          1.0 / static_cast<double>(hyper.batch_size * n_labels);
      bool finite = true;
      for (std::size_t k = 0; k < hyper.batch_size; ++k) {
        const std::size_t i = order[b * hyper.batch_size + k];
        const auto& x = train_x[i];
        for (std::size_t j = 0; j < n_labels; ++j) {
          const double* w = model.weights.data() + j * dimension;
          double z = model.bias[j];
          for (std::size_t d = 0; d < dimension; ++d) {
            z += w[d] * static_cast<double>(x[d]);
          }
          if (!std::isfinite(z)) finite = false;
          double delta = (sigmoid(z) - train_y(i, j)) * cell_scale;
          if (weights_ptr) delta *= label_weights[j];
          double* gw = grad.data() + j * dimension;
          for (std::size_t d = 0; d < dimension; ++d) {
            gw[d] += delta * static_cast<double>(x[d]);
          }
          grad[model.weights.size() + j] += delta;
        }
      }
      if (!finite) {
        throw TrainingError("training diverged at step " + std::to_string(step));
      }

      // AdamW update with decoupled weight decay (bias excluded from decay).
      const double lr = learning_rate_at(step, hyper, total_steps);
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < n_params; ++p) {
        adam_m[p] = beta1 * adam_m[p] + (1.0 - beta1) * grad[p];
        adam_v[p] = beta2 * adam_v[p] + (1.0 - beta2) * grad[p] * grad[p];
        const double m_hat = adam_m[p] / bc1;
        const double v_hat = adam_v[p] / bc2;
        double& param = p < model.weights.size()
                            ? model.weights[p]
                            : model.bias[p - model.weights.size()];
        param -= lr * m_hat / (std::sqrt(v_hat) + eps);
        if (p < model.weights.size()) {
          param -= lr * hyper.weight_decay * param;
        }
      }

      // The final step always validates so the curve covers the whole run.
      if (step % hyper.validation_interval == 0 || step == total_steps) {
        validate(step);
      }
    }
  }

  result.model = std::move(best_model);
  result.best_metric = best_metric;
  return result;
}

double gradient_check(const LinearModel& model,
                      const std::vector<FeatureVector>& features,
                      const LabelMatrix& truth, std::size_t n_coordinates,
                      double h, std::uint64_t seed) {
  const std::size_t n_params = model.weights.size() + model.bias.size();
  LinearModel probe = model;
  auto loss_of = [&](const LinearModel& m) {
    return bce_loss(predict_scores(m, features), truth);
  };

  // Analytic gradient of the mean BCE over all cells.
  std::vector<double> grad(n_params, 0.0);
  const ScoreMatrix scores = predict_scores(model, features);
  const double cell_scale =
      1.0 / static_cast<double>(features.size() * model.n_labels);
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t j = 0; j < model.n_labels; ++j) {
      const double delta = (scores(i, j) - truth(i, j)) * cell_scale;
      double* gw = grad.data() + j * model.dimension;
      for (std::size_t d = 0; d < model.dimension; ++d) {
        gw[d] += delta * static_cast<double>(features[i][d]);
      }
      grad[model.weights.size() + j] += delta;
    }
  }

  std::mt19937_64 rng(seed);
  double max_deviation = 0.0;
  for (std::size_t k = 0; k < n_coordinates; ++k) {
    const std::size_t p =
        static_cast<std::size_t>(bounded_uint64(rng, n_params));
    double& param = p < probe.weights.size()
                        ? probe.weights[p]
                        : probe.bias[p - probe.weights.size()];
    const double original = param;
    param = original + h;
    const double plus = loss_of(probe);
    param = original - h;
    const double minus = loss_of(probe);
    param = original;
    const double numeric = (plus - minus) / (2.0 * h);
    max_deviation = std::max(max_deviation, std::abs(numeric - grad[p]));
  }
  return max_deviation;
}

namespace {

nlohmann::json config_to_json(const ModelConfig& config) {
  return {
      {"base_id", config.base_id},
      {"objective", objective_name(config.objective)},
      {"fold_seed", config.fold_seed},
      {"feature_config",
       {{"dimension", config.feature_config.dimension},
        {"ngram_max", config.feature_config.ngram_max},
        {"hash_seed", config.feature_config.hash_seed}}},
      {"hyper",
       {{"batch_size", config.hyper.batch_size},
        {"epochs_for_schedule", config.hyper.epochs_for_schedule},
        {"learning_rate", config.hyper.learning_rate},
        {"warmup_steps", config.hyper.warmup_steps},
        {"validation_interval", config.hyper.validation_interval},
        {"patience", config.hyper.patience},
        {"weight_decay", config.hyper.weight_decay}}},
      {"loss_weighting", config.loss_weighting == LossWeighting::None
                             ? "None"
                             : "InverseNumSamples"}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig config;
  config.base_id = j.at("base_id").get<std::string>();
  config.objective = objective_from_name(j.at("objective").get<std::string>());
  config.fold_seed = j.at("fold_seed").get<std::uint64_t>();
  const auto& fc = j.at("feature_config");
  config.feature_config.dimension = fc.at("dimension").get<std::size_t>();
  config.feature_config.ngram_max = fc.at("ngram_max").get<int>();
  config.feature_config.hash_seed = fc.at("hash_seed").get<std::uint64_t>();
  const auto& hp = j.at("hyper");
  config.hyper.batch_size = hp.at("batch_size").get<std::size_t>();
  config.hyper.epochs_for_schedule = hp.at("epochs_for_schedule").get<int>();
  config.hyper.learning_rate = hp.at("learning_rate").get<double>();
  config.hyper.warmup_steps = hp.at("warmup_steps").get<std::size_t>();
  config.hyper.validation_interval =
      hp.at("validation_interval").get<std::size_t>();
  config.hyper.patience = hp.at("patience").get<int>();
  config.hyper.weight_decay = hp.at("weight_decay").get<double>();
  config.loss_weighting =
      j.at("loss_weighting").get<std::string>() == "InverseNumSamples"
          ? LossWeighting::InverseNumSamples
          : LossWeighting::None;
  return config;
}

void write_f32_blob(std::ofstream& out, const std::vector<double>& values) {
  for (const double v : values) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 4);
  }
}

void read_f32_blob(std::ifstream& in, std::vector<double>& values,
                   const std::string& path) {
  for (double& v : values) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
      throw FormatError("truncated checkpoint blob: " + path);
    }
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    v = static_cast<double>(f);
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainedModel& model) {
  nlohmann::json header;
  header["config"] = config_to_json(model.config);
  header["best_step"] = model.best_step;
  header["best_metric"] = model.best_metric;
  header["best_threshold"] = model.best_threshold;
  header["n_labels"] = model.model.n_labels;
  header["dimension"] = model.model.dimension;
  auto& curve = header["curve"] = nlohmann::json::array();
  for (const auto& point : model.curve) {
    curve.push_back({point.step, point.avg_val_loss,
                     point.custom_f1_at_opt_threshold, point.micro_f1_at_half,
                     point.macro_f1_at_half});
  }
  const std::string json_bytes = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write file: " + path);
  const std::uint32_t length = static_cast<std::uint32_t>(json_bytes.size());
  unsigned char len_bytes[4];
  for (int i = 0; i < 4; ++i) len_bytes[i] = static_cast<unsigned char>(length >> (8 * i));
  out.write(reinterpret_cast<const char*>(len_bytes), 4);
  out.write(json_bytes.data(), static_cast<std::streamsize>(json_bytes.size()));
  write_f32_blob(out, model.model.weights);
  write_f32_blob(out, model.model.bias);
}

TrainedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  unsigned char len_bytes[4];
  if (!in.read(reinterpret_cast<char*>(len_bytes), 4)) {
    throw FormatError("truncated checkpoint header: " + path);
  }
  std::uint32_t length = 0;
  for (int i = 0; i < 4; ++i) length |= static_cast<std::uint32_t>(len_bytes[i]) << (8 * i);
  std::string json_bytes(length, '\0');
  if (!in.read(json_bytes.data(), length)) {
    throw FormatError("truncated checkpoint header: " + path);
  }
  const nlohmann::json header = nlohmann::json::parse(json_bytes);

  TrainedModel model;
  model.config = config_from_json(header.at("config"));
  model.best_step = header.at("best_step").get<std::size_t>();
  model.best_metric = header.at("best_metric").get<double>();
  model.best_threshold = header.at("best_threshold").get<double>();
  model.model = LinearModel(header.at("n_labels").get<std::size_t>(),
                            header.at("dimension").get<std::size_t>());
  for (const auto& point : header.at("curve")) {
    model.curve.push_back({point.at(0).get<std::size_t>(),
                           point.at(1).get<double>(), point.at(2).get<double>(),
                           point.at(3).get<double>(), point.at(4).get<double>()});
  }
  read_f32_blob(in, model.model.weights, path);
  read_f32_blob(in, model.model.bias, path);
  return model;
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  std::string csv = "step,val_loss,custom_f1,micro_f1,macro_f1\n";
  char line[160];
  for (const auto& point : curve) {
    std::snprintf(line, sizeof(line), "%zu,%.12g,%.12g,%.12g,%.12g\n",
                  point.step, point.avg_val_loss,
                  point.custom_f1_at_opt_threshold, point.micro_f1_at_half,
                  point.macro_f1_at_half);
    csv += line;
  }
  return csv;
}

}  // namespace valuecat
