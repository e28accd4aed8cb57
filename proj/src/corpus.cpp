#include "valuecat/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "valuecat/rng.hpp"

namespace valuecat {

namespace {

std::vector<std::string> split_tsv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::vector<std::vector<std::string>> read_tsv(const std::string& path,
                                               std::vector<std::string>* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file (no header): " + path);
  *header = split_tsv_line(line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    rows.push_back(split_tsv_line(line));
  }
  return rows;
}

std::size_t find_column(const std::vector<std::string>& header,
                        const std::string& name, const std::string& path) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw FormatError("missing column '" + name + "' in " + path);
  }
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

const CategorySet& CategorySet::task_default() {
  static const CategorySet instance{{
      "Self-direction: thought",
      "Self-direction: action",
      "Stimulation",
      "Hedonism",
      "Achievement",
      "Power: dominance",
      "Power: resources",
      "Face",
      "Security: personal",
      "Security: societal",
      "Tradition",
      "Conformity: rules",
      "Conformity: interpersonal",
      "Humility",
      "Benevolence: caring",
      "Benevolence: dependability",
      "Universalism: concern",
      "Universalism: nature",
      "Universalism: tolerance",
      "Universalism: objectivity",
  }};
  return instance;
}

CategorySet::CategorySet(std::vector<std::string> names)
    : names_(std::move(names)) {
  if (names_.empty()) throw ConfigError("category set must not be empty");
}

Dataset load_arguments(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = read_tsv(path, &header);
  const std::size_t id_col = find_column(header, "Argument ID", path);
  const std::size_t conclusion_col = find_column(header, "Conclusion", path);
  const std::size_t stance_col = find_column(header, "Stance", path);
  const std::size_t premise_col = find_column(header, "Premise", path);

  Dataset dataset;
  dataset.arguments.reserve(rows.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != header.size()) {
      throw FormatError(path + ": row " + std::to_string(i + 2) + " has " +
                        std::to_string(row.size()) + " fields, expected " +
                        std::to_string(header.size()));
    }
    Argument arg{row[id_col], row[premise_col], row[stance_col],
                 row[conclusion_col]};
    if (arg.id.empty()) {
      throw FormatError(path + ": row " + std::to_string(i + 2) + " has empty id");
    }
    if (arg.premise.empty() || arg.conclusion.empty()) {
      throw FormatError(path + ": row " + std::to_string(i + 2) +
                        " has empty premise or conclusion");
    }
    if (!seen.insert(arg.id).second) {
      throw IntegrityError(path + ": duplicate argument id '" + arg.id + "'");
    }
    dataset.arguments.push_back(std::move(arg));
  }
  return dataset;
}

LabelMatrix load_labels(const std::string& path, const CategorySet& categories) {
  return load_label_file(path, categories).labels;
}

LabelFile load_label_file(const std::string& path,
                          const CategorySet& categories) {
  std::vector<std::string> header;
  const auto rows = read_tsv(path, &header);
  if (header.empty() || header[0] != "Argument ID") {
    throw FormatError(path + ": first column must be 'Argument ID'");
  }
  const std::size_t n_cat = categories.size();
  if (header.size() < 1 + n_cat) {
    throw FormatError(path + ": expected " + std::to_string(1 + n_cat) +
                      " columns, got " + std::to_string(header.size()));
  }
  for (std::size_t c = 0; c < n_cat; ++c) {
    if (header[1 + c] != categories.names()[c]) {
      throw FormatError(path + ": unknown or misplaced category column '" +
                        header[1 + c] + "' (expected '" +
                        categories.names()[c] + "')");
    }
  }

  LabelFile file;
  file.labels = LabelMatrix(rows.size(), n_cat);
  file.ids.reserve(rows.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() < 1 + n_cat) {
      throw FormatError(path + ": row " + std::to_string(i + 2) + " has " +
                        std::to_string(row.size()) + " fields");
    }
    if (!seen.insert(row[0]).second) {
      throw IntegrityError(path + ": duplicate argument id '" + row[0] + "'");
    }
    file.ids.push_back(row[0]);
    for (std::size_t c = 0; c < n_cat; ++c) {
      const std::string& cell = row[1 + c];
      if (cell == "0") continue;
      if (cell == "1") {
        file.labels.set(i, c, 1);
      } else {
        throw FormatError(path + ": non-binary cell '" + cell + "' at row " +
                          std::to_string(i + 2) + ", column '" +
                          categories.names()[c] + "'");
      }
    }
  }
  return file;
}

void attach_labels(Dataset& dataset, const LabelFile& file) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(file.ids.size());
  for (std::size_t i = 0; i < file.ids.size(); ++i) {
    index.emplace(file.ids[i], i);
  }
  LabelMatrix labels(dataset.size(), file.labels.cols());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto it = index.find(dataset.arguments[i].id);
    if (it == index.end()) {
      throw IntegrityError("attach_labels: no label row for id '" +
                           dataset.arguments[i].id + "'");
    }
    for (std::size_t c = 0; c < file.labels.cols(); ++c) {
      labels.set(i, c, file.labels(it->second, c));
    }
  }
  dataset.labels = std::move(labels);
}

void save_arguments(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write file: " + path);
  out << "Argument ID\tConclusion\tStance\tPremise\n";
  for (const auto& arg : dataset.arguments) {
    out << arg.id << '\t' << arg.conclusion << '\t' << arg.stance << '\t'
        << arg.premise << '\n';
  }
}

void save_labels(const std::string& path, const std::vector<std::string>& ids,
                 const LabelMatrix& labels, const CategorySet& categories,
                 const std::vector<std::string>* provenance) {
  if (ids.size() != labels.rows()) {
    throw DimensionError("save_labels: id count does not match label rows");
  }
  if (provenance && provenance->size() != ids.size()) {
    throw DimensionError("save_labels: provenance count does not match rows");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write file: " + path);
  out << "Argument ID";
  for (const auto& name : categories.names()) out << '\t' << name;
  if (provenance) out << "\tprovenance";
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (std::size_t c = 0; c < labels.cols(); ++c) {
      out << '\t' << static_cast<int>(labels(i, c));
    }
    if (provenance) out << '\t' << (*provenance)[i];
    out << '\n';
  }
}

std::string concatenate(const Argument& argument) {
  std::string text;
  text.reserve(argument.premise.size() + argument.stance.size() +
               argument.conclusion.size() + 2);
  text += argument.premise;
  text += ' ';
  text += argument.stance;
  text += ' ';
  text += argument.conclusion;
  return text;
}

SplitPlan make_split_plan(const Dataset& dataset, std::uint64_t seed,
                          const SplitSizes& sizes) {
  if (!dataset.labeled()) {
    throw IntegrityError("make_split_plan requires a labeled dataset");
  }
  const std::size_t required =
      sizes.leave_out + sizes.validation + sizes.internal_test;
  if (dataset.size() < required) {
    throw SizeError("make_split_plan: need at least " +
                    std::to_string(required) + " labeled samples, got " +
                    std::to_string(dataset.size()));
  }

  std::vector<std::string> ids;
  ids.reserve(dataset.size());
  for (const auto& arg : dataset.arguments) ids.push_back(arg.id);
  deterministic_shuffle(ids, seed);

  SplitPlan plan;
  plan.seed = seed;
  auto cursor = ids.begin();
  plan.leave_out_ids.assign(cursor, cursor + sizes.leave_out);
  cursor += sizes.leave_out;
  plan.validation_ids.assign(cursor, cursor + sizes.validation);
  cursor += sizes.validation;
  plan.internal_test_ids.assign(cursor, cursor + sizes.internal_test);
  cursor += sizes.internal_test;
  plan.train_ids.assign(cursor, ids.end());
  return plan;
}

std::vector<Fold> make_folds(const SplitPlan& plan,
                             const std::vector<std::uint64_t>& seeds,
                             std::size_t validation_size) {
  if (plan.train_ids.size() <= validation_size) {
    throw SizeError("make_folds: train split has " +
                    std::to_string(plan.train_ids.size()) +
                    " ids, need more than " + std::to_string(validation_size));
  }
  std::unordered_set<std::uint64_t> seen;
  for (const auto seed : seeds) {
    if (!seen.insert(seed).second) {
      throw ConfigError("make_folds: duplicate fold seed " + std::to_string(seed));
    }
  }

  std::vector<Fold> folds;
  folds.reserve(seeds.size());
  for (const auto seed : seeds) {
    std::vector<std::string> shuffled = plan.train_ids;
    deterministic_shuffle(shuffled, seed);
    Fold fold;
    fold.seed = seed;
    fold.validation_ids.assign(shuffled.begin(),
                               shuffled.begin() + validation_size);
    std::unordered_set<std::string> held(fold.validation_ids.begin(),
                                         fold.validation_ids.end());
    for (const auto& id : plan.train_ids) {
      if (!held.contains(id)) fold.train_ids.push_back(id);
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

Dataset subset_by_ids(const Dataset& dataset,
                      const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    index.emplace(dataset.arguments[i].id, i);
  }

  Dataset subset;
  subset.arguments.reserve(ids.size());
  if (dataset.labeled()) {
    subset.labels = LabelMatrix(ids.size(), dataset.labels->cols());
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = index.find(ids[i]);
    if (it == index.end()) {
      throw IntegrityError("subset_by_ids: unknown id '" + ids[i] + "'");
    }
    subset.arguments.push_back(dataset.arguments[it->second]);
    if (dataset.labeled()) {
      for (std::size_t c = 0; c < dataset.labels->cols(); ++c) {
        subset.labels->set(i, c, (*dataset.labels)(it->second, c));
      }
    }
  }
  return subset;
}

}  // namespace valuecat
