#pragma once

#include <cstdint>
#include <vector>

namespace tribogen::dataset {

// Gray-code Sobol sequence over published direction numbers. Deterministic;
// index 0 is the all-zeros point.
class SobolSequence {
 public:
  static constexpr int kMaxDim = 64;

  explicit SobolSequence(int dim);

  int dim() const { return dim_; }

  // Discard the next n points.
  void skip(std::uint64_t n);

  // Write the next point into out (size dim), components in [0, 1).
  void next(double* out);

  std::vector<double> next_point();

 private:
  int dim_;
  std::uint64_t index_ = 0;
  std::vector<std::uint32_t> state_;       // dim current integers
  std::vector<std::uint32_t> directions_;  // dim x kBits, row-major
};

// count points of the sequence after discarding the leading skip entries,
// flattened row-major (count x dim).
std::vector<double> sobol_points(int dim, std::uint64_t count,
                                 std::uint64_t skip = 0);

}  // namespace tribogen::dataset
