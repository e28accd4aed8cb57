#ifndef VALUECAT_CORPUS_HPP
#define VALUECAT_CORPUS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "valuecat/matrix.hpp"

namespace valuecat {

// One task sample. The TSV column order is Conclusion before Premise; the
// model input order (premise, stance, conclusion) is fixed independently of
// the file layout.
struct Argument {
  std::string id;
  std::string premise;
  std::string stance;
  std::string conclusion;
};

// The fixed, ordered list of the 20 value categories.
class CategorySet {
 public:
  static const CategorySet& task_default();

  explicit CategorySet(std::vector<std::string> names);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

struct Dataset {
  std::vector<Argument> arguments;
  std::optional<LabelMatrix> labels;

  std::size_t size() const { return arguments.size(); }
  bool labeled() const { return labels.has_value(); }
};

struct SplitPlan {
  std::vector<std::string> train_ids;
  std::vector<std::string> validation_ids;
  std::vector<std::string> leave_out_ids;
  std::vector<std::string> internal_test_ids;
  std::uint64_t seed = 0;
};

struct SplitSizes {
  std::size_t leave_out = 300;
  std::size_t validation = 500;
  std::size_t internal_test = 500;
};

struct Fold {
  std::uint64_t seed;
  std::vector<std::string> train_ids;
  std::vector<std::string> validation_ids;
};

Dataset load_arguments(const std::string& path);
LabelMatrix load_labels(const std::string& path, const CategorySet& categories);

// Labels file with its own id column, for id-keyed joins.
struct LabelFile {
  std::vector<std::string> ids;
  LabelMatrix labels;
};
LabelFile load_label_file(const std::string& path, const CategorySet& categories);

// Joins labels onto the dataset by id; every argument must have a label row.
void attach_labels(Dataset& dataset, const LabelFile& file);

void save_arguments(const std::string& path, const Dataset& dataset);
// provenance, when given, adds a trailing `provenance` column (one tag per row).
void save_labels(const std::string& path, const std::vector<std::string>& ids,
                 const LabelMatrix& labels, const CategorySet& categories,
                 const std::vector<std::string>* provenance = nullptr);

// Model input text: premise, stance, conclusion joined by single spaces.
std::string concatenate(const Argument& argument);

SplitPlan make_split_plan(const Dataset& dataset, std::uint64_t seed,
                          const SplitSizes& sizes = SplitSizes{});

std::vector<Fold> make_folds(const SplitPlan& plan,
                             const std::vector<std::uint64_t>& seeds,
                             std::size_t validation_size = 500);

// Row lookup helpers used throughout the pipeline.
Dataset subset_by_ids(const Dataset& dataset,
                      const std::vector<std::string>& ids);

}  // namespace valuecat

#endif
