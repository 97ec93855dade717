#pragma once

// Reproducible randomness: every (seed, stream, index) triple owns an
// independent engine, so results do not depend on evaluation order.

#include <cstdint>
#include <random>

#include "glx/hilbert.hpp"

namespace glx {

class CaseRng {
 public:
  CaseRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    eng_.seed(seq);
  }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  // uniform integer in [lo, hi]
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
  }
  bool coin() { return integer(0, 1) == 1; }

  Vec cvec(Index n) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = cplx(normal(), normal());
    return v;
  }
  Mat cmat(Index r, Index c) {
    Mat m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = cplx(normal(), normal());
    return m;
  }
  Mat hermitian(Index n) {
    Mat a = cmat(n, n);
    return 0.5 * (a + a.adjoint());
  }
  RVec weights(Index n, double lo = 0.5, double hi = 3.0) {
    RVec w(n);
    for (Index i = 0; i < n; ++i) w(i) = uniform(lo, hi);
    return w;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace glx
