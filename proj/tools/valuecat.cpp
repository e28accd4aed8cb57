// Pipeline driver: split / train / ensemble / silver / evaluate, all seeded
// from one JSON config. Exit codes: 0 ok, 2 config, 3 data, 4 training,
// 5 registry.
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "valuecat/corpus.hpp"
#include "valuecat/ensemble.hpp"
#include "valuecat/errors.hpp"
#include "valuecat/features.hpp"
#include "valuecat/learner.hpp"
#include "valuecat/metrics.hpp"
#include "valuecat/report.hpp"
#include "valuecat/rng.hpp"
#include "valuecat/selftrain.hpp"
#include "valuecat/thresholding.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace valuecat;

namespace {

// ---------------------------------------------------------------- config ---

struct RunConfig {
  std::string arguments_path;
  std::string labels_path;
  std::string pool_path;
  std::string out_dir = "out";
  std::string foreign_arguments_path;
  std::string foreign_labels_path;

  std::uint64_t split_seed = 17;
  SplitSizes split_sizes;

  std::vector<std::uint64_t> fold_seeds{42, 96, 123};
  std::size_t fold_validation_size = 500;

  FeatureConfig features;
  Hyperparameters hyper;
  LossWeighting loss_weighting = LossWeighting::None;
  std::vector<std::string> bases{"hash-bow-A", "hash-bow-B"};

  std::vector<std::string> enabled_ensembles{
      "EN-Thres-LoD",  "EN-Thres-Train", "EN-Log-Reg",
      "EN-Max-F1",     "EN-Deberta-F1",  "Single-Deberta-F1"};

  std::size_t stacking_sample_count = 3000;
  bool stacking_per_label_features = false;
  double stacking_inverse_reg_strength = 1.0;
  std::uint64_t stacking_init_seed = 0;

  std::string silver_ensemble = "EN-Thres-LoD";
  std::vector<double> silver_fractions{1.2, 1.4, 1.6};
  std::uint64_t silver_selection_seed = 0;

  double evaluate_threshold = 0.5;

  json resolved;  // canonical form, used for the config hash
};

void reject_unknown(const json& object, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_into(const json& object, const char* key, T& out) {
  if (object.contains(key)) object.at(key).get_to(out);
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: invalid JSON in '" + path + "': " + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");

  reject_unknown(root,
                 {"paths", "split", "folds", "features", "hyper",
                  "loss_weighting", "bases", "ensembles", "stacking", "silver",
                  "evaluate"},
                 "top level");
  RunConfig config;

  if (root.contains("paths")) {
    const json& paths = root["paths"];
    reject_unknown(paths,
                   {"arguments", "labels", "pool", "out_dir",
                    "foreign_arguments", "foreign_labels"},
                   "paths");
    read_into(paths, "arguments", config.arguments_path);
    read_into(paths, "labels", config.labels_path);
    read_into(paths, "pool", config.pool_path);
    read_into(paths, "out_dir", config.out_dir);
    read_into(paths, "foreign_arguments", config.foreign_arguments_path);
    read_into(paths, "foreign_labels", config.foreign_labels_path);
  }
  if (root.contains("split")) {
    const json& split = root["split"];
    reject_unknown(split, {"seed", "leave_out", "validation", "internal_test"},
                   "split");
    read_into(split, "seed", config.split_seed);
    read_into(split, "leave_out", config.split_sizes.leave_out);
    read_into(split, "validation", config.split_sizes.validation);
    read_into(split, "internal_test", config.split_sizes.internal_test);
  }
  if (root.contains("folds")) {
    const json& folds = root["folds"];
    reject_unknown(folds, {"seeds", "validation_size"}, "folds");
    read_into(folds, "seeds", config.fold_seeds);
    read_into(folds, "validation_size", config.fold_validation_size);
  }
  if (root.contains("features")) {
    const json& features = root["features"];
    reject_unknown(features, {"dimension", "ngram_max", "hash_seed"},
                   "features");
    read_into(features, "dimension", config.features.dimension);
    read_into(features, "ngram_max", config.features.ngram_max);
    read_into(features, "hash_seed", config.features.hash_seed);
  }
  if (root.contains("hyper")) {
    const json& hyper = root["hyper"];
    reject_unknown(hyper,
                   {"batch_size", "epochs_for_schedule", "learning_rate",
                    "warmup_steps", "validation_interval", "patience",
                    "weight_decay"},
                   "hyper");
    read_into(hyper, "batch_size", config.hyper.batch_size);
    read_into(hyper, "epochs_for_schedule", config.hyper.epochs_for_schedule);
    read_into(hyper, "learning_rate", config.hyper.learning_rate);
    read_into(hyper, "warmup_steps", config.hyper.warmup_steps);
    read_into(hyper, "validation_interval", config.hyper.validation_interval);
    read_into(hyper, "patience", config.hyper.patience);
    read_into(hyper, "weight_decay", config.hyper.weight_decay);
  }
  if (root.contains("loss_weighting")) {
    const std::string mode = root["loss_weighting"].get<std::string>();
    if (mode == "none") {
      config.loss_weighting = LossWeighting::None;
    } else if (mode == "inverse_num_samples") {
      config.loss_weighting = LossWeighting::InverseNumSamples;
    } else {
      throw ConfigError("config: loss_weighting must be 'none' or "
                        "'inverse_num_samples', got '" + mode + "'");
    }
  }
  read_into(root, "bases", config.bases);
  if (config.bases.size() != 2 || config.bases[0] == config.bases[1]) {
    throw ConfigError("config: 'bases' must name two distinct base models");
  }
  read_into(root, "ensembles", config.enabled_ensembles);
  if (root.contains("stacking")) {
    const json& stacking = root["stacking"];
    reject_unknown(stacking,
                   {"sample_count", "per_label_features",
                    "inverse_reg_strength", "init_seed"},
                   "stacking");
    read_into(stacking, "sample_count", config.stacking_sample_count);
    read_into(stacking, "per_label_features",
              config.stacking_per_label_features);
    read_into(stacking, "inverse_reg_strength",
              config.stacking_inverse_reg_strength);
    read_into(stacking, "init_seed", config.stacking_init_seed);
  }
  if (root.contains("silver")) {
    const json& silver = root["silver"];
    reject_unknown(silver, {"ensemble", "fractions", "selection_seed"},
                   "silver");
    read_into(silver, "ensemble", config.silver_ensemble);
    read_into(silver, "fractions", config.silver_fractions);
    read_into(silver, "selection_seed", config.silver_selection_seed);
  }
  if (root.contains("evaluate")) {
    const json& evaluate = root["evaluate"];
    reject_unknown(evaluate, {"threshold"}, "evaluate");
    read_into(evaluate, "threshold", config.evaluate_threshold);
    if (config.evaluate_threshold < 0.0 || config.evaluate_threshold > 1.0) {
      throw ConfigError("config: evaluate.threshold must be in [0, 1]");
    }
  }
  if (config.arguments_path.empty() || config.labels_path.empty()) {
    throw ConfigError("config: paths.arguments and paths.labels are required");
  }
  return config;
}

json resolve_config_json(const RunConfig& c) {
  json j;
  j["paths"] = {{"arguments", c.arguments_path},
                {"labels", c.labels_path},
                {"pool", c.pool_path},
                {"out_dir", c.out_dir},
                {"foreign_arguments", c.foreign_arguments_path},
                {"foreign_labels", c.foreign_labels_path}};
  j["split"] = {{"seed", c.split_seed},
                {"leave_out", c.split_sizes.leave_out},
                {"validation", c.split_sizes.validation},
                {"internal_test", c.split_sizes.internal_test}};
  j["folds"] = {{"seeds", c.fold_seeds},
                {"validation_size", c.fold_validation_size}};
  j["features"] = {{"dimension", c.features.dimension},
                   {"ngram_max", c.features.ngram_max},
                   {"hash_seed", c.features.hash_seed}};
  j["hyper"] = {{"batch_size", c.hyper.batch_size},
                {"epochs_for_schedule", c.hyper.epochs_for_schedule},
                {"learning_rate", c.hyper.learning_rate},
                {"warmup_steps", c.hyper.warmup_steps},
                {"validation_interval", c.hyper.validation_interval},
                {"patience", c.hyper.patience},
                {"weight_decay", c.hyper.weight_decay}};
  j["loss_weighting"] =
      c.loss_weighting == LossWeighting::None ? "none" : "inverse_num_samples";
  j["bases"] = c.bases;
  j["ensembles"] = c.enabled_ensembles;
  j["stacking"] = {{"sample_count", c.stacking_sample_count},
                   {"per_label_features", c.stacking_per_label_features},
                   {"inverse_reg_strength", c.stacking_inverse_reg_strength},
                   {"init_seed", c.stacking_init_seed}};
  j["silver"] = {{"ensemble", c.silver_ensemble},
                 {"fractions", c.silver_fractions},
                 {"selection_seed", c.silver_selection_seed}};
  j["evaluate"] = {{"threshold", c.evaluate_threshold}};
  return j;
}

std::string config_hash(const json& resolved) {
  const std::string dump = resolved.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

// ------------------------------------------------------------------- io ---

void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    if (!out) throw IntegrityError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Routes library writers that take a path through a temp file + rename.
template <typename Writer>
void write_atomic_with(const fs::path& path, Writer&& writer) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  writer(tmp.string());
  fs::rename(tmp, path);
}

std::vector<std::string> read_id_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("missing split file: " + path.string() +
                                " (run 'valuecat split' first)");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::string id_lines(const std::vector<std::string>& ids) {
  std::string text;
  for (const auto& id : ids) text += id + '\n';
  return text;
}

Dataset load_labeled(const RunConfig& config) {
  Dataset dataset = load_arguments(config.arguments_path);
  attach_labels(dataset, load_label_file(config.labels_path,
                                         CategorySet::task_default()));
  return dataset;
}

SplitPlan load_split_plan(const RunConfig& config) {
  const fs::path dir = fs::path(config.out_dir) / "splits";
  SplitPlan plan;
  plan.seed = config.split_seed;
  plan.train_ids = read_id_file(dir / "train_ids.txt");
  plan.validation_ids = read_id_file(dir / "validation_ids.txt");
  plan.leave_out_ids = read_id_file(dir / "leave_out_ids.txt");
  plan.internal_test_ids = read_id_file(dir / "internal_test_ids.txt");
  return plan;
}

std::string checkpoint_name(const ModelConfig& config) {
  std::string name = model_id(config);
  for (char& ch : name) {
    if (ch == '/') ch = '-';
  }
  return name + ".ckpt";
}

// The two bases differ by their hashing seed, so their feature spaces (and
// thus their errors) decorrelate.
ModelConfig model_config_for(const RunConfig& run, const std::string& base,
                             Objective objective, std::uint64_t fold_seed) {
  ModelConfig config;
  config.base_id = base;
  config.objective = objective;
  config.fold_seed = fold_seed;
  config.feature_config = run.features;
  if (base == run.bases[1]) config.feature_config.hash_seed += 1;
  config.hyper = run.hyper;
  config.loss_weighting = run.loss_weighting;
  return config;
}

std::vector<ModelConfig> grid_configs(const RunConfig& run) {
  std::vector<ModelConfig> grid;
  for (const auto& base : run.bases) {
    for (const Objective objective : {Objective::LossMin, Objective::F1Max}) {
      for (const std::uint64_t seed : run.fold_seeds) {
        grid.push_back(model_config_for(run, base, objective, seed));
      }
    }
  }
  return grid;
}

std::vector<TrainedModel> load_grid(const RunConfig& run) {
  const fs::path dir = fs::path(run.out_dir) / "models";
  std::vector<TrainedModel> trained;
  for (const auto& config : grid_configs(run)) {
    const fs::path path = dir / checkpoint_name(config);
    if (!fs::exists(path)) {
      throw RegistryError("missing member checkpoint '" + model_id(config) +
                          "' (" + path.string() + ")");
    }
    trained.push_back(load_checkpoint(path.string()));
  }
  return trained;
}

std::vector<FeatureVector> featurize_subset(const Dataset& dataset,
                                            const FeatureConfig& config) {
  std::vector<FeatureVector> features;
  features.reserve(dataset.size());
  for (const auto& arg : dataset.arguments) {
    features.push_back(featurize(concatenate(arg), config));
  }
  return features;
}

// ------------------------------------------------------------- commands ---

struct OnlyFilter {
  std::optional<std::string> base;
  std::optional<std::string> objective;
  std::optional<std::uint64_t> seed;

  bool matches(const ModelConfig& config) const {
    if (base && config.base_id != *base &&
        !(config.base_id.size() > base->size() &&
          config.base_id.ends_with("-" + *base))) {
      return false;
    }
    if (objective && objective_name(config.objective) != *objective) {
      return false;
    }
    if (seed && config.fold_seed != *seed) return false;
    return true;
  }
};

OnlyFilter parse_only(const std::string& text) {
  OnlyFilter filter;
  if (text.empty()) return filter;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--only: expected key=value, got '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "base") {
      filter.base = value;
    } else if (key == "objective") {
      objective_from_name(value);  // validates
      filter.objective = value;
    } else if (key == "seed") {
      filter.seed = std::stoull(value);
    } else {
      throw ConfigError("--only: unknown key '" + key + "'");
    }
  }
  return filter;
}

int cmd_split(const RunConfig& run) {
  const Dataset dataset = load_labeled(run);
  const SplitPlan plan = make_split_plan(dataset, run.split_seed,
                                         run.split_sizes);
  const fs::path dir = fs::path(run.out_dir) / "splits";
  write_atomic(dir / "train_ids.txt", id_lines(plan.train_ids));
  write_atomic(dir / "validation_ids.txt", id_lines(plan.validation_ids));
  write_atomic(dir / "leave_out_ids.txt", id_lines(plan.leave_out_ids));
  write_atomic(dir / "internal_test_ids.txt", id_lines(plan.internal_test_ids));
  std::cout << "split: train=" << plan.train_ids.size()
            << " validation=" << plan.validation_ids.size()
            << " leave_out=" << plan.leave_out_ids.size()
            << " internal_test=" << plan.internal_test_ids.size() << "\n";
  return 0;
}

int cmd_train(const RunConfig& run, const std::string& only,
              unsigned int jobs) {
  const OnlyFilter filter = parse_only(only);
  const Dataset dataset = load_labeled(run);
  const SplitPlan plan = load_split_plan(run);
  const std::vector<Fold> folds =
      make_folds(plan, run.fold_seeds, run.fold_validation_size);
  std::map<std::uint64_t, const Fold*> fold_by_seed;
  for (const auto& fold : folds) fold_by_seed[fold.seed] = &fold;

  std::vector<ModelConfig> selected;
  for (const auto& config : grid_configs(run)) {
    if (filter.matches(config)) selected.push_back(config);
  }
  if (selected.empty()) throw ConfigError("--only matched no models");

  const fs::path model_dir = fs::path(run.out_dir) / "models";
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::vector<std::exception_ptr> failures(selected.size());

  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < selected.size();
         i = next.fetch_add(1)) {
      try {
        const ModelConfig& config = selected[i];
        const Fold& fold = *fold_by_seed.at(config.fold_seed);
        const Dataset train_set = subset_by_ids(dataset, fold.train_ids);
        const Dataset val_set = subset_by_ids(dataset, fold.validation_ids);
        const auto train_features =
            featurize_subset(train_set, config.feature_config);
        const auto val_features =
            featurize_subset(val_set, config.feature_config);
        const DataFold data{&train_features, &*train_set.labels, &val_features,
                            &*val_set.labels};
        const TrainedModel model = train(data, config);

        const std::string stem = checkpoint_name(config);
        write_atomic_with(model_dir / stem, [&](const std::string& path) {
          save_checkpoint(path, model);
        });
        write_atomic(model_dir / (stem.substr(0, stem.size() - 5) +
                                  ".curve.csv"),
                     curve_to_csv(model.curve));
        {
          std::lock_guard<std::mutex> lock(log_mutex);
          std::cout << "trained " << model_id(config)
                    << " best_step=" << model.best_step
                    << " best_metric=" << model.best_metric << "\n";
        }
      } catch (...) {
        failures[i] = std::current_exception();
        return;
      }
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned int t = 0; t < std::min<std::size_t>(jobs, selected.size());
         ++t) {
      pool.emplace_back(worker);
    }
    for (auto& thread : pool) thread.join();
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return 0;
}

std::vector<TrainedModel> members_of(const EnsembleSpec& spec,
                                     const std::vector<TrainedModel>& trained) {
  std::unordered_map<std::string, const TrainedModel*> by_id;
  for (const auto& model : trained) by_id[model_id(model.config)] = &model;
  std::vector<TrainedModel> members;
  for (const auto& id : spec.member_model_ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw RegistryError("missing member '" + id + "'");
    members.push_back(*it->second);
  }
  return members;
}

FittedEnsemble fit_named(const RunConfig& run, const EnsembleSpec& base_spec,
                         const std::vector<TrainedModel>& trained,
                         const Dataset& dataset, const SplitPlan& plan) {
  EnsembleSpec spec = base_spec;
  spec.stacking_sample_count = run.stacking_sample_count;
  spec.stacking_per_label_features = run.stacking_per_label_features;
  const std::vector<TrainedModel> members = members_of(spec, trained);

  if (spec.method == EnsembleMethod::Stacking) {
    std::vector<std::string> sample_ids = plan.train_ids;
    deterministic_shuffle(sample_ids, run.split_seed);
    if (sample_ids.size() > spec.stacking_sample_count) {
      sample_ids.resize(spec.stacking_sample_count);
    }
    return fit_recipe2(spec, members, subset_by_ids(dataset, sample_ids),
                       run.stacking_init_seed,
                       run.stacking_inverse_reg_strength);
  }
  const auto& fit_ids = spec.threshold_source == ThresholdSource::Train
                            ? plan.train_ids
                            : plan.leave_out_ids;
  return fit_recipe1(spec, members, subset_by_ids(dataset, fit_ids));
}

int cmd_ensemble(const RunConfig& run, const std::string& name) {
  const Dataset dataset = load_labeled(run);
  const SplitPlan plan = load_split_plan(run);
  const std::vector<TrainedModel> trained = load_grid(run);
  const std::vector<EnsembleSpec> registry = build_registry(trained);

  const EnsembleSpec* spec = nullptr;
  std::string known;
  for (const auto& candidate : registry) {
    if (!known.empty()) known += ", ";
    known += candidate.name;
    if (candidate.name == name) spec = &candidate;
  }
  if (!spec) {
    throw ConfigError("unknown ensemble '" + name + "'; registry: " + known);
  }
  bool enabled = false;
  for (const auto& allowed : run.enabled_ensembles) enabled |= allowed == name;
  if (!enabled) {
    throw ConfigError("ensemble '" + name +
                      "' is disabled by the 'ensembles' config list");
  }

  const FittedEnsemble fitted = fit_named(run, *spec, trained, dataset, plan);
  const std::vector<TrainedModel> members = members_of(*spec, trained);
  for (const auto& warning : fitted.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }

  const fs::path dir = fs::path(run.out_dir) / "ensembles";
  write_atomic_with(dir / (name + ".ens"), [&](const std::string& path) {
    save_ensemble(path, fitted);
  });

  const Dataset test_set = subset_by_ids(dataset, plan.internal_test_ids);
  const EvaluationReport report =
      evaluate(fitted, members, test_set, "internal-test");
  const auto& categories = CategorySet::task_default();
  write_atomic(dir / (name + ".report.json"),
               evaluation_report_to_json(report, categories));
  write_atomic(dir / (name + ".report.tsv"),
               evaluation_report_to_tsv(report, categories));
  std::cout << "ensemble " << name << ": internal-test custom_f1="
            << report.overall.custom_f1
            << " models=" << report.model_count;
  if (report.threshold) std::cout << " threshold=" << *report.threshold;
  std::cout << "\n";

  if (!run.foreign_arguments_path.empty()) {
    if (run.foreign_labels_path.empty()) {
      throw ConfigError("config: foreign_arguments requires foreign_labels");
    }
    Dataset foreign = load_arguments(run.foreign_arguments_path);
    attach_labels(foreign,
                  load_label_file(run.foreign_labels_path, categories));
    const EvaluationReport foreign_report =
        evaluate(fitted, members, foreign, "foreign");
    write_atomic(dir / (name + ".foreign.report.json"),
                 evaluation_report_to_json(foreign_report, categories));
    std::cout << "ensemble " << name << ": foreign custom_f1="
              << foreign_report.overall.custom_f1 << "\n";
  }
  return 0;
}

int cmd_silver(const RunConfig& run) {
  if (run.pool_path.empty()) {
    throw ConfigError("config: paths.pool is required for 'silver'");
  }
  const Dataset dataset = load_labeled(run);
  const SplitPlan plan = load_split_plan(run);
  const Dataset pool = load_arguments(run.pool_path);

  const fs::path ensemble_path =
      fs::path(run.out_dir) / "ensembles" / (run.silver_ensemble + ".ens");
  if (!fs::exists(ensemble_path)) {
    throw IntegrityError("missing fitted ensemble: " + ensemble_path.string() +
                         " (run 'valuecat ensemble " + run.silver_ensemble +
                         "' first)");
  }
  const FittedEnsemble ensemble = load_ensemble(ensemble_path.string());
  const std::vector<TrainedModel> trained = load_grid(run);
  const std::vector<TrainedModel> members = members_of(ensemble.spec, trained);

  // Gold ids never become silver rows, whichever split they sit in.
  SilverConfig silver_config;
  silver_config.selection_seed = run.silver_selection_seed;
  for (const auto* ids : {&plan.train_ids, &plan.validation_ids,
                          &plan.leave_out_ids, &plan.internal_test_ids}) {
    for (const auto& id : *ids) silver_config.exclusion_ids.insert(id);
  }

  // Sweep model: the first fold's gold split, retrained per fraction.
  const std::vector<Fold> folds =
      make_folds(plan, run.fold_seeds, run.fold_validation_size);
  const Fold& fold = folds.front();
  const Dataset gold_train = subset_by_ids(dataset, fold.train_ids);
  const Dataset gold_val = subset_by_ids(dataset, fold.validation_ids);
  const Dataset test_set = subset_by_ids(dataset, plan.internal_test_ids);
  const ModelConfig sweep_config =
      model_config_for(run, run.bases[0], Objective::F1Max, fold.seed);
  const auto test_features =
      featurize_subset(test_set, sweep_config.feature_config);

  const fs::path dir = fs::path(run.out_dir) / "silver";
  const auto& categories = CategorySet::task_default();
  std::vector<SweepPoint> sweep;

  for (const double fraction : run.silver_fractions) {
    TrainedModel retrained;
    if (fraction < 1.0) {
      const Dataset subsample =
          gold_subsample(gold_train, fraction, run.silver_selection_seed);
      SilverDataset empty;
      empty.ensemble_name = ensemble.spec.name;
      empty.data.labels = LabelMatrix(0, categories.size());
      retrained = retrain_with_silver(subsample, gold_val, empty, sweep_config);
    } else {
      silver_config.target_fraction = fraction;
      const SilverDataset silver = generate_silver(
          ensemble, members, pool, gold_train.size(), silver_config);

      if (silver.data.size() > 0) {
        char tag[16];
        std::snprintf(tag, sizeof(tag), "%.2f", fraction);
        std::vector<std::string> silver_ids;
        for (const auto& arg : silver.data.arguments) {
          silver_ids.push_back(arg.id);
        }
        write_atomic_with(dir / ("silver_" + std::string(tag) +
                                 ".arguments.tsv"),
                          [&](const std::string& path) {
                            save_arguments(path, silver.data);
                          });
        write_atomic_with(
            dir / ("silver_" + std::string(tag) + ".labels.tsv"),
            [&](const std::string& path) {
              save_labels(path, silver_ids, *silver.data.labels, categories,
                          &silver.provenance);
            });
      }
      retrained = retrain_with_silver(gold_train, gold_val, silver,
                                      sweep_config);
    }

    const ScoreMatrix test_scores =
        predict_scores(retrained.model, test_features);
    const double f1_test = custom_f1(
        *test_set.labels, binarize(test_scores, retrained.best_threshold));
    sweep.push_back({fraction, retrained.best_metric, f1_test});
    std::cout << "silver fraction=" << fraction
              << " F1Val=" << retrained.best_metric << " F1Test=" << f1_test
              << "\n";
  }
  write_atomic(dir / "sweep.csv", sweep_to_csv(sweep));
  return 0;
}

int cmd_evaluate(const RunConfig& run,
                 const std::vector<std::string>& prediction_paths) {
  const Dataset dataset = load_labeled(run);
  const auto& categories = CategorySet::task_default();

  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    row_of[dataset.arguments[i].id] = i;
  }

  // Average the (id-aligned) score files, then cut at the configured
  // threshold.
  std::vector<ScoreMatrix> aligned;
  for (const auto& path : prediction_paths) {
    const ScoreFile file = load_scores(path, categories);
    if (file.ids.size() != dataset.size()) {
      throw IntegrityError("predictions '" + path + "' have " +
                           std::to_string(file.ids.size()) + " rows, labels " +
                           std::to_string(dataset.size()));
    }
    ScoreMatrix scores(dataset.size(), categories.size());
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < file.ids.size(); ++r) {
      const auto it = row_of.find(file.ids[r]);
      if (it == row_of.end()) {
        throw IntegrityError("predictions '" + path + "': unknown id '" +
                             file.ids[r] + "'");
      }
      if (!seen.insert(file.ids[r]).second) {
        throw IntegrityError("predictions '" + path + "': duplicate id '" +
                             file.ids[r] + "'");
      }
      for (std::size_t c = 0; c < categories.size(); ++c) {
        scores.set(it->second, c, file.scores(r, c));
      }
    }
    aligned.push_back(std::move(scores));
  }

  const ScoreMatrix mean = average(aligned);
  EvaluationReport report;
  report.dataset_name = "predictions";
  report.overall =
      metric_report(*dataset.labels, binarize(mean, run.evaluate_threshold));
  report.threshold = run.evaluate_threshold;
  report.model_count = prediction_paths.size();

  const std::string json_text = evaluation_report_to_json(report, categories);
  write_atomic(fs::path(run.out_dir) / "reports" / "evaluate.report.json",
               json_text);
  write_atomic(fs::path(run.out_dir) / "reports" / "evaluate.report.tsv",
               evaluation_report_to_tsv(report, categories));
  std::cout << json_text << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"value-category pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::string only;
  unsigned int jobs = 1;
  app.add_option("--config", config_path, "JSON run config")->required();
  app.add_option("--out", out_override, "override paths.out_dir");

  CLI::App* split = app.add_subcommand("split", "write the four id files");
  CLI::App* train_cmd =
      app.add_subcommand("train", "train the 12-model grid");
  train_cmd->add_option("--only", only,
                        "filter, e.g. base=A,objective=F1Max,seed=42");
  train_cmd->add_option("--jobs", jobs, "parallel training jobs");
  CLI::App* ensemble_cmd =
      app.add_subcommand("ensemble", "fit and evaluate a named ensemble");
  std::string ensemble_name;
  ensemble_cmd->add_option("name", ensemble_name, "registry entry")
      ->required();
  CLI::App* silver =
      app.add_subcommand("silver", "silver extension + fraction sweep");
  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "score interchange prediction files");
  std::vector<std::string> prediction_paths;
  evaluate_cmd
      ->add_option("predictions", prediction_paths, "score TSV file(s)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig run = parse_config(config_path);
    if (!out_override.empty()) run.out_dir = out_override;
    run.resolved = resolve_config_json(run);
    std::cout << "config_hash=" << config_hash(run.resolved) << "\n";

    if (split->parsed()) return cmd_split(run);
    if (train_cmd->parsed()) return cmd_train(run, only, jobs);
    if (ensemble_cmd->parsed()) return cmd_ensemble(run, ensemble_name);
    if (silver->parsed()) return cmd_silver(run);
    if (evaluate_cmd->parsed()) return cmd_evaluate(run, prediction_paths);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 4;
  } catch (const RegistryError& e) {
    std::cerr << "registry error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  }
}
