#include "tribogen/sobol.hpp"

#include <bit>
#include <stdexcept>

namespace tribogen::dataset {

namespace {

constexpr int kBits = 31;

#include "sobol_table.inc"

}  // namespace

SobolSequence::SobolSequence(int dim) : dim_(dim) {
  if (dim < 1 || dim > kSobolMaxDim)
    throw std::out_of_range("unsupported Sobol dimension");
  state_.assign(dim, 0);
  directions_.assign(static_cast<std::size_t>(dim) * kBits, 0);

  for (int d = 0; d < dim; ++d) {
    std::uint32_t* v = &directions_[static_cast<std::size_t>(d) * kBits];
    const std::uint32_t poly = kSobolPoly[d];
    const int deg = std::bit_width(poly) - 1;
    if (d == 0) {
      for (int j = 0; j < kBits; ++j) v[j] = 1u << (kBits - 1 - j);
      continue;
    }
    for (int j = 0; j < deg; ++j)
      v[j] = kSobolVinit[d][j] << (kBits - 1 - j);
    for (int j = deg; j < kBits; ++j) {
      v[j] = v[j - deg] ^ (v[j - deg] >> deg);
      for (int t = 1; t < deg; ++t)
        if ((poly >> (deg - t)) & 1u) v[j] ^= v[j - t];
    }
  }
}

void SobolSequence::skip(std::uint64_t n) {
  // Per-point update keeps the Gray-code state consistent.
  for (std::uint64_t i = 0; i < n; ++i) {
    const int c = std::countr_zero(index_ + 1);
    for (int d = 0; d < dim_; ++d)
      state_[d] ^= directions_[static_cast<std::size_t>(d) * kBits + c];
    ++index_;
  }
}

void SobolSequence::next(double* out) {
  constexpr double scale = 1.0 / (1ull << kBits);
  for (int d = 0; d < dim_; ++d) out[d] = state_[d] * scale;
  const int c = std::countr_zero(index_ + 1);
  for (int d = 0; d < dim_; ++d)
    state_[d] ^= directions_[static_cast<std::size_t>(d) * kBits + c];
  ++index_;
}

std::vector<double> SobolSequence::next_point() {
  std::vector<double> p(dim_);
  next(p.data());
  return p;
}

std::vector<double> sobol_points(int dim, std::uint64_t count,
                                 std::uint64_t skip) {
  SobolSequence seq(dim);
  seq.skip(skip);
  std::vector<double> out(count * dim);
  for (std::uint64_t i = 0; i < count; ++i) seq.next(out.data() + i * dim);
  return out;
}

}  // namespace tribogen::dataset
