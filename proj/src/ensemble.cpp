#include "valuecat/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "valuecat/thresholding.hpp"

namespace valuecat {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clamp_prob(double p) {
  return std::min(1.0 - 1e-7, std::max(1e-7, p));
}

void require_members(const EnsembleSpec& spec, std::size_t provided,
                     const char* where) {
  if (provided != spec.member_model_ids.size()) {
    throw ConfigError(std::string(where) + ": ensemble '" + spec.name +
                      "' expects " +
                      std::to_string(spec.member_model_ids.size()) +
                      " member score matrices, got " + std::to_string(provided));
  }
}

// Feature row for one sample: either every member's full score vector or the
// per-label slice. Bias handled by the caller.
std::vector<double> stack_features(const std::vector<ScoreMatrix>& members,
                                   std::size_t row, bool per_label,
                                   std::size_t label) {
  std::vector<double> features;
  if (per_label) {
    features.reserve(members.size());
    for (const auto& m : members) features.push_back(m(row, label));
  } else {
    features.reserve(members.size() * members[0].cols());
    for (const auto& m : members) {
      for (std::size_t c = 0; c < m.cols(); ++c) features.push_back(m(row, c));
    }
  }
  return features;
}

// In-place Cholesky solve of a symmetric positive definite system.
std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b,
                                   std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    if (diag <= 0.0) throw TrainingError("stacking Hessian not positive definite");
    diag = std::sqrt(diag);
    a[j * n + j] = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / diag;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
    b[i] = v / a[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double v = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) v -= a[k * n + ii] * b[k];
    b[ii] = v / a[ii * n + ii];
  }
  return b;
}

struct LabelFit {
  std::vector<double> weights;
  double bias = 0.0;
};

// Regularized logistic regression on one label by damped Newton iteration,
// run until the gradient norm drops below 1e-6 (or the iteration cap).
LabelFit fit_label(const std::vector<std::vector<double>>& rows,
                   const std::vector<double>& targets, double lambda,
                   std::mt19937_64& init_rng) {
  const std::size_t n = rows.size();
  const std::size_t d = rows[0].size();
  const std::size_t dim = d + 1;  // + bias

  std::vector<double> theta(dim, 0.0);
  std::normal_distribution<double> init(0.0, 0.01);
  for (std::size_t k = 0; k < d; ++k) theta[k] = init(init_rng);

  auto loss_of = [&](const std::vector<double>& t) {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = t[d];
      for (std::size_t k = 0; k < d; ++k) z += t[k] * rows[i][k];
      const double p = clamp_prob(sigmoid(z));
      loss -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
    }
    loss /= static_cast<double>(n);
    for (std::size_t k = 0; k < d; ++k) loss += 0.5 * lambda * t[k] * t[k];
    return loss;
  };

  constexpr int kMaxIterations = 1000;
  constexpr double kGradTolerance = 1e-6;
  double loss = loss_of(theta);
  std::vector<double> grad(dim), hessian(dim * dim), probs(n);
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hessian.begin(), hessian.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double z = theta[d];
      for (std::size_t k = 0; k < d; ++k) z += theta[k] * rows[i][k];
      probs[i] = sigmoid(z);
      const double delta = probs[i] - targets[i];
      for (std::size_t k = 0; k < d; ++k) grad[k] += delta * rows[i][k];
      grad[d] += delta;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < dim; ++k) grad[k] *= inv_n;
    for (std::size_t k = 0; k < d; ++k) grad[k] += lambda * theta[k];

    double grad_norm = 0.0;
    for (const double g : grad) grad_norm += g * g;
    if (std::sqrt(grad_norm) < kGradTolerance) break;

    for (std::size_t i = 0; i < n; ++i) {
      const double s = probs[i] * (1.0 - probs[i]) * inv_n;
      for (std::size_t a = 0; a < d; ++a) {
        const double sa = s * rows[i][a];
        for (std::size_t b = a; b < d; ++b) {
          hessian[a * dim + b] += sa * rows[i][b];
        }
        hessian[a * dim + d] += sa;
      }
      hessian[d * dim + d] += s;
    }
    for (std::size_t a = 0; a < d; ++a) hessian[a * dim + a] += lambda;
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = 0; b < a; ++b) hessian[a * dim + b] = hessian[b * dim + a];
    }

    const std::vector<double> direction = cholesky_solve(hessian, grad, dim);
    double step = 1.0;
    std::vector<double> candidate(dim);
    for (int halving = 0; halving < 40; ++halving) {
      for (std::size_t k = 0; k < dim; ++k) {
        candidate[k] = theta[k] - step * direction[k];
      }
      const double candidate_loss = loss_of(candidate);
      if (candidate_loss <= loss) {
        theta = candidate;
        loss = candidate_loss;
        break;
      }
      step *= 0.5;
    }
  }

  LabelFit fit;
  fit.weights.assign(theta.begin(), theta.begin() + static_cast<long>(d));
  fit.bias = theta[d];
  return fit;
}

}  // namespace

ScoreMatrix average(const std::vector<ScoreMatrix>& scores) {
  if (scores.empty()) throw SizeError("average: no member matrices");
  const std::size_t rows = scores[0].rows(), cols = scores[0].cols();
  for (const auto& m : scores) {
    require_same_shape(rows, cols, m.rows(), m.cols(), "average");
  }
  ScoreMatrix mean(rows, cols);
  const double inv = 1.0 / static_cast<double>(scores.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double sum = 0.0;
      for (const auto& m : scores) sum += m(r, c);
      mean.set(r, c, sum * inv);
    }
  }
  return mean;
}

ScoreMatrix member_scores(const TrainedModel& member, const Dataset& dataset) {
  std::vector<FeatureVector> features;
  features.reserve(dataset.size());
  for (const auto& arg : dataset.arguments) {
    features.push_back(featurize(concatenate(arg), member.config.feature_config));
  }
  return predict_scores(member.model, features);
}

std::vector<ScoreMatrix> all_member_scores(
    const std::vector<TrainedModel>& members, const Dataset& dataset) {
  std::vector<ScoreMatrix> scores;
  scores.reserve(members.size());
  for (const auto& member : members) {
    scores.push_back(member_scores(member, dataset));
  }
  return scores;
}

FittedEnsemble fit_recipe1(const EnsembleSpec& spec,
                           const std::vector<ScoreMatrix>& member_fit_scores,
                           const LabelMatrix& truth) {
  require_members(spec, member_fit_scores.size(), "fit_recipe1");
  if (truth.rows() == 0) throw SizeError("fit_recipe1: empty fit set");
  FittedEnsemble fitted;
  fitted.spec = spec;
  fitted.threshold =
      select_threshold(truth, average(member_fit_scores)).opt_threshold;
  return fitted;
}

FittedEnsemble fit_recipe1(const EnsembleSpec& spec,
                           const std::vector<TrainedModel>& members,
                           const Dataset& fit_set) {
  if (!fit_set.labeled()) throw IntegrityError("fit_recipe1: fit set unlabeled");
  if (fit_set.size() == 0) throw SizeError("fit_recipe1: empty fit set");
  return fit_recipe1(spec, all_member_scores(members, fit_set), *fit_set.labels);
}

FittedEnsemble fit_recipe2(const EnsembleSpec& spec,
                           const std::vector<ScoreMatrix>& member_fit_scores,
                           const LabelMatrix& truth, std::uint64_t init_seed,
                           double inverse_reg_strength) {
  require_members(spec, member_fit_scores.size(), "fit_recipe2");
  const std::size_t n = truth.rows();
  const std::size_t n_labels = truth.cols();
  if (n < n_labels) {
    throw SizeError("fit_recipe2: need at least " + std::to_string(n_labels) +
                    " samples, got " + std::to_string(n));
  }

  FittedEnsemble fitted;
  fitted.spec = spec;
  StackingModel stacker;
  stacker.n_labels = n_labels;
  stacker.n_members = member_fit_scores.size();
  stacker.per_label_features = spec.stacking_per_label_features;
  stacker.weights.resize(n_labels);
  stacker.bias.resize(n_labels, 0.0);
  stacker.degenerate.resize(n_labels, 0);

  const double lambda =
      1.0 / (inverse_reg_strength * static_cast<double>(n));
  std::mt19937_64 init_rng(init_seed);

  for (std::size_t j = 0; j < n_labels; ++j) {
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    rows.reserve(n);
    targets.reserve(n);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back(stack_features(member_fit_scores, i,
                                    spec.stacking_per_label_features, j));
      targets.push_back(truth(i, j));
      positives += truth(i, j);
    }
    const std::size_t feature_dim = rows[0].size();
    if (positives == 0 || positives == n) {
      // Single-class sample: bias-only prior.
      stacker.weights[j].assign(feature_dim, 0.0);
      const double rate =
          clamp_prob(static_cast<double>(positives) / static_cast<double>(n));
      stacker.bias[j] = std::log(rate / (1.0 - rate));
      stacker.degenerate[j] = 1;
      fitted.warnings.push_back("label " + std::to_string(j) +
                                " has a single-class fit sample; using a "
                                "bias-only prior");
      continue;
    }
    LabelFit fit = fit_label(rows, targets, lambda, init_rng);
    stacker.weights[j] = std::move(fit.weights);
    stacker.bias[j] = fit.bias;
  }

  fitted.stacker = std::move(stacker);
  return fitted;
}

FittedEnsemble fit_recipe2(const EnsembleSpec& spec,
                           const std::vector<TrainedModel>& members,
                           const Dataset& train_sample, std::uint64_t init_seed,
                           double inverse_reg_strength) {
  if (!train_sample.labeled()) {
    throw IntegrityError("fit_recipe2: fit sample unlabeled");
  }
  return fit_recipe2(spec, all_member_scores(members, train_sample),
                     *train_sample.labels, init_seed, inverse_reg_strength);
}

ScoreMatrix stacking_scores(const StackingModel& stacker,
                            const std::vector<ScoreMatrix>& members_scores) {
  if (members_scores.size() != stacker.n_members) {
    throw ConfigError("stacking_scores: member count mismatch");
  }
  const std::size_t rows = members_scores[0].rows();
  ScoreMatrix probs(rows, stacker.n_labels);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < stacker.n_labels; ++j) {
      const auto features =
          stack_features(members_scores, i, stacker.per_label_features, j);
      double z = stacker.bias[j];
      for (std::size_t k = 0; k < features.size(); ++k) {
        z += stacker.weights[j][k] * features[k];
      }
      probs.set(i, j, sigmoid(z));
    }
  }
  return probs;
}

LabelMatrix predict(const FittedEnsemble& ensemble,
                    const std::vector<ScoreMatrix>& members_scores) {
  require_members(ensemble.spec, members_scores.size(), "predict");
  if (ensemble.spec.method == EnsembleMethod::AverageThreshold) {
    if (!ensemble.threshold) {
      throw ConfigError("predict: ensemble '" + ensemble.spec.name +
                        "' has no fitted threshold");
    }
    return binarize(average(members_scores), *ensemble.threshold);
  }
  if (!ensemble.stacker) {
    throw ConfigError("predict: ensemble '" + ensemble.spec.name +
                      "' has no fitted stacker");
  }
  return binarize(stacking_scores(*ensemble.stacker, members_scores), 0.5);
}

std::vector<EnsembleSpec> build_registry(
    const std::vector<TrainedModel>& trained) {
  std::set<std::string> bases;
  std::set<std::uint64_t> seeds;
  std::map<std::string, std::string> by_key;  // key -> model_id
  for (const auto& model : trained) {
    bases.insert(model.config.base_id);
    seeds.insert(model.config.fold_seed);
    by_key[model_id(model.config)] = model_id(model.config);
  }
  if (bases.size() != 2 || seeds.size() != 3 || trained.size() != 12) {
    throw RegistryError(
        "build_registry: expected 12 models over 2 bases x 2 objectives x 3 "
        "fold seeds, got " +
        std::to_string(trained.size()) + " models, " +
        std::to_string(bases.size()) + " bases, " + std::to_string(seeds.size()) +
        " seeds");
  }

  auto id_of = [&](const std::string& base, Objective objective,
                   std::uint64_t seed) {
    ModelConfig probe;
    probe.base_id = base;
    probe.objective = objective;
    probe.fold_seed = seed;
    const std::string id = model_id(probe);
    if (!by_key.contains(id)) {
      throw RegistryError("build_registry: missing member '" + id + "'");
    }
    return id;
  };

  std::vector<std::string> all_ids, f1_ids, base_a_f1_ids;
  const std::string base_a = *bases.begin();  // lexicographically first base
  for (const auto& base : bases) {
    for (const auto objective : {Objective::F1Max, Objective::LossMin}) {
      for (const auto seed : seeds) {
        const std::string id = id_of(base, objective, seed);
        all_ids.push_back(id);
        if (objective == Objective::F1Max) {
          f1_ids.push_back(id);
          if (base == base_a) base_a_f1_ids.push_back(id);
        }
      }
    }
  }
  const std::uint64_t single_seed = seeds.contains(123) ? 123 : *seeds.rbegin();
  const std::string single_id = id_of(base_a, Objective::F1Max, single_seed);

  std::vector<EnsembleSpec> registry;
  auto add = [&registry](std::string name, std::vector<std::string> ids,
                         EnsembleMethod method, ThresholdSource source) {
    EnsembleSpec spec;
    spec.name = std::move(name);
    spec.member_model_ids = std::move(ids);
    spec.method = method;
    spec.threshold_source = source;
    registry.push_back(std::move(spec));
  };
  add("EN-Thres-LoD", all_ids, EnsembleMethod::AverageThreshold,
      ThresholdSource::LeaveOut);
  add("EN-Thres-Train", all_ids, EnsembleMethod::AverageThreshold,
      ThresholdSource::Train);
  add("EN-Log-Reg", all_ids, EnsembleMethod::Stacking,
      ThresholdSource::LeaveOut);
  add("EN-Max-F1", f1_ids, EnsembleMethod::AverageThreshold,
      ThresholdSource::LeaveOut);
  add("EN-Deberta-F1", base_a_f1_ids, EnsembleMethod::AverageThreshold,
      ThresholdSource::LeaveOut);
  add("Single-Deberta-F1", {single_id}, EnsembleMethod::AverageThreshold,
      ThresholdSource::LeaveOut);
  return registry;
}

namespace {

nlohmann::json spec_to_json(const EnsembleSpec& spec) {
  return {{"name", spec.name},
          {"member_model_ids", spec.member_model_ids},
          {"method", spec.method == EnsembleMethod::AverageThreshold
                         ? "AverageThreshold"
                         : "Stacking"},
          {"threshold_source", spec.threshold_source == ThresholdSource::LeaveOut
                                   ? "LeaveOut"
                                   : "Train"},
          {"stacking_sample_count", spec.stacking_sample_count},
          {"stacking_per_label_features", spec.stacking_per_label_features}};
}

EnsembleSpec spec_from_json(const nlohmann::json& j) {
  EnsembleSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.member_model_ids =
      j.at("member_model_ids").get<std::vector<std::string>>();
  spec.method = j.at("method").get<std::string>() == "Stacking"
                    ? EnsembleMethod::Stacking
                    : EnsembleMethod::AverageThreshold;
  spec.threshold_source = j.at("threshold_source").get<std::string>() == "Train"
                              ? ThresholdSource::Train
                              : ThresholdSource::LeaveOut;
  spec.stacking_sample_count = j.at("stacking_sample_count").get<std::size_t>();
  spec.stacking_per_label_features =
      j.at("stacking_per_label_features").get<bool>();
  return spec;
}

void write_f64_blob(std::ofstream& out, const std::vector<double>& values) {
  for (const double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

void read_f64_blob(std::ifstream& in, std::vector<double>& values,
                   const std::string& path) {
  for (double& v : values) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
      throw FormatError("truncated ensemble blob: " + path);
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    std::memcpy(&v, &bits, 8);
  }
}

}  // namespace

void save_ensemble(const std::string& path, const FittedEnsemble& ensemble) {
  nlohmann::json header;
  header["spec"] = spec_to_json(ensemble.spec);
  header["warnings"] = ensemble.warnings;
  if (ensemble.threshold) header["threshold"] = *ensemble.threshold;
  if (ensemble.stacker) {
    const auto& s = *ensemble.stacker;
    header["stacker"] = {{"n_labels", s.n_labels},
                         {"n_members", s.n_members},
                         {"per_label_features", s.per_label_features},
                         {"feature_dim", s.weights.empty() ? 0 : s.weights[0].size()},
                         {"degenerate", s.degenerate}};
  }
  const std::string json_bytes = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write file: " + path);
  const std::uint32_t length = static_cast<std::uint32_t>(json_bytes.size());
  unsigned char len_bytes[4];
  for (int i = 0; i < 4; ++i) len_bytes[i] = static_cast<unsigned char>(length >> (8 * i));
  out.write(reinterpret_cast<const char*>(len_bytes), 4);
  out.write(json_bytes.data(), static_cast<std::streamsize>(json_bytes.size()));
  if (ensemble.stacker) {
    for (const auto& w : ensemble.stacker->weights) write_f64_blob(out, w);
    write_f64_blob(out, ensemble.stacker->bias);
  }
}

FittedEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  unsigned char len_bytes[4];
  if (!in.read(reinterpret_cast<char*>(len_bytes), 4)) {
    throw FormatError("truncated ensemble header: " + path);
  }
  std::uint32_t length = 0;
  for (int i = 0; i < 4; ++i) length |= static_cast<std::uint32_t>(len_bytes[i]) << (8 * i);
  std::string json_bytes(length, '\0');
  if (!in.read(json_bytes.data(), length)) {
    throw FormatError("truncated ensemble header: " + path);
  }
  const nlohmann::json header = nlohmann::json::parse(json_bytes);

  FittedEnsemble ensemble;
  ensemble.spec = spec_from_json(header.at("spec"));
  ensemble.warnings = header.at("warnings").get<std::vector<std::string>>();
  if (header.contains("threshold")) {
    ensemble.threshold = header.at("threshold").get<double>();
  }
  if (header.contains("stacker")) {
    const auto& sj = header.at("stacker");
    StackingModel s;
    s.n_labels = sj.at("n_labels").get<std::size_t>();
    s.n_members = sj.at("n_members").get<std::size_t>();
    s.per_label_features = sj.at("per_label_features").get<bool>();
    s.degenerate = sj.at("degenerate").get<std::vector<std::uint8_t>>();
    const std::size_t feature_dim = sj.at("feature_dim").get<std::size_t>();
    s.weights.assign(s.n_labels, std::vector<double>(feature_dim, 0.0));
    s.bias.assign(s.n_labels, 0.0);
    for (auto& w : s.weights) read_f64_blob(in, w, path);
    read_f64_blob(in, s.bias, path);
    ensemble.stacker = std::move(s);
  }
  return ensemble;
}

void save_scores(const std::string& path, const std::vector<std::string>& ids,
                 const ScoreMatrix& scores, const CategorySet& categories) {
  if (ids.size() != scores.rows() || scores.cols() != categories.size()) {
    throw DimensionError("save_scores: shape does not match ids/categories");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write file: " + path);
  out << "Argument ID";
  for (const auto& name : categories.names()) out << '\t' << name;
  out << '\n';
  char cell[32];
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      std::snprintf(cell, sizeof(cell), "\t%.6f", scores(i, c));
      out << cell;
    }
    out << '\n';
  }
}

ScoreFile load_scores(const std::string& path, const CategorySet& categories) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file: " + path);
  // Reuse the labels header contract: id column then the categories in order.
  if (line.rfind("Argument ID", 0) != 0) {
    throw FormatError(path + ": first column must be 'Argument ID'");
  }

  ScoreFile file;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<double> row;
    std::size_t start = line.find('\t');
    if (start == std::string::npos) {
      throw FormatError(path + ": score row without score columns");
    }
    file.ids.push_back(line.substr(0, start));
    std::size_t pos = start + 1;
    while (pos <= line.size()) {
      const std::size_t tab = line.find('\t', pos);
      const std::string cell = line.substr(
          pos, tab == std::string::npos ? std::string::npos : tab - pos);
      row.push_back(std::stod(cell));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (row.size() != categories.size()) {
      throw FormatError(path + ": expected " +
                        std::to_string(categories.size()) +
                        " score columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  file.scores = ScoreMatrix(rows.size(), categories.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < categories.size(); ++c) {
      file.scores.set(i, c, rows[i][c]);
    }
  }
  return file;
}

}  // namespace valuecat
