#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace sfw {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Axis-aligned domain box [0,b_1] x ... x [0,b_d].
class Box {
 public:
  Box() = default;
  explicit Box(Vec upper) : upper_(std::move(upper)) {
    for (Eigen::Index j = 0; j < upper_.size(); ++j)
      if (!(upper_[j] > 0.0))
        throw std::invalid_argument("Box: upper bounds must be positive");
  }
  static Box cube(int dim, double b) { return Box(Vec::Constant(dim, b)); }

  int dim() const { return static_cast<int>(upper_.size()); }
  const Vec& upper() const { return upper_; }

  bool contains(const Vec& x, double tol = 0.0) const {
    if (x.size() != upper_.size()) return false;
    for (Eigen::Index j = 0; j < x.size(); ++j)
      if (x[j] < -tol || x[j] > upper_[j] + tol) return false;
    return true;
  }

  Vec clamp(Vec x) const {
    for (Eigen::Index j = 0; j < x.size(); ++j)
      x[j] = std::min(std::max(x[j], 0.0), upper_[j]);
    return x;
  }

 private:
  Vec upper_;
};

inline Vec point1d(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

inline Vec point3d(double x1, double x2, double x3) {
  Vec v(3);
  v << x1, x2, x3;
  return v;
}

/// Thrown when a certificate or atom-matrix construction is numerically rank
/// deficient; carries the offending condition number.
class ConstructionError : public std::runtime_error {
 public:
  ConstructionError(const std::string& what, double condition_number)
      : std::runtime_error(what), condition_number_(condition_number) {}
  double condition_number() const { return condition_number_; }

 private:
  double condition_number_;
};

}  // namespace sfw
