#ifndef VALUECAT_MATRIX_HPP
#define VALUECAT_MATRIX_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "valuecat/errors.hpp"

namespace valuecat {

// Binary matrix of assigned/gold labels, row-major, aligned to a CategorySet
// column order. Column count is usually 20 but stays dynamic so small test
// matrices work too.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::uint8_t operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  void set(std::size_t r, std::size_t c, std::uint8_t v) {
    if (v > 1) {
      throw FormatError("label entry must be 0 or 1 at row " +
                        std::to_string(r) + ", column " + std::to_string(c));
    }
    data_[r * cols_ + c] = v;
  }

  const std::vector<std::uint8_t>& data() const { return data_; }

  bool operator==(const LabelMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> data_;
};

// Real-valued model confidences in [0,1], row-major.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  void set(std::size_t r, std::size_t c, double v) {
    if (std::isnan(v) || v < 0.0 || v > 1.0) {
      throw FormatError("score entry must be in [0,1] at row " +
                        std::to_string(r) + ", column " + std::to_string(c));
    }
    data_[r * cols_ + c] = v;
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& mutable_data() { return data_; }

  bool operator==(const ScoreMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void require_same_shape(std::size_t ar, std::size_t ac, std::size_t br,
                               std::size_t bc, const char* where) {
  if (ar != br || ac != bc) {
    throw DimensionError(std::string(where) + ": shape mismatch (" +
                         std::to_string(ar) + "x" + std::to_string(ac) +
                         " vs " + std::to_string(br) + "x" +
                         std::to_string(bc) + ")");
  }
}

}  // namespace valuecat

#endif
