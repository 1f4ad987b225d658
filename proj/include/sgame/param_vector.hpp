#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "sgame/common.hpp"

namespace sgame {

// Flat double-precision parameter/gradient vector. Every public operation
// leaves entries finite or throws; dimension mismatches throw DimensionError.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(int dim) : v_(static_cast<std::size_t>(dim), 0.0) {
    require(dim >= 0, "ParamVector: negative dim");
  }
  ParamVector(std::initializer_list<double> init) : v_(init) { check_finite(); }

  static ParamVector zeros(int dim) { return ParamVector(dim); }

  int dim() const { return static_cast<int>(v_.size()); }
  double& operator[](int i) { return v_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  const std::vector<double>& raw() const { return v_; }

  ParamVector& operator+=(const ParamVector& o) {
    require(dim() == o.dim(), "ParamVector +=: dim mismatch");
    for (int i = 0; i < dim(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  ParamVector& operator-=(const ParamVector& o) {
    require(dim() == o.dim(), "ParamVector -=: dim mismatch");
    for (int i = 0; i < dim(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  ParamVector& operator*=(double a) {
    for (double& x : v_) x *= a;
    return *this;
  }

  friend ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
  friend ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
  friend ParamVector operator*(double a, ParamVector x) { return x *= a; }

  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }
  void check_finite(const char* what = "ParamVector") const {
    if (!all_finite()) throw NumericsError(std::string("non-finite entry in ") + what);
  }

 private:
  std::vector<double> v_;
};

inline double dot(const ParamVector& a, const ParamVector& b) {
  require(a.dim() == b.dim(), "dot: dim mismatch");
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const ParamVector& a) { return std::sqrt(dot(a, a)); }

// y += a * x
inline void axpy(double a, const ParamVector& x, ParamVector& y) {
  require(x.dim() == y.dim(), "axpy: dim mismatch");
  for (int i = 0; i < x.dim(); ++i) y[i] += a * x[i];
}

}  // namespace sgame
