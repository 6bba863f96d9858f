#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>

// Discrete carriers for the two spaces the solver works in: functions on a
// uniform grid over [0,1] with values in R^d, and finitely supported real
// sequences indexed from 1 (stand-ins for elements of l1).

namespace phifix {

enum class VectorNorm { Max, Euclid, L1 };

inline const char* to_string(VectorNorm n) {
  switch (n) {
    case VectorNorm::Max: return "max";
    case VectorNorm::Euclid: return "euclid";
    case VectorNorm::L1: return "l1";
  }
  return "?";
}

inline double vector_norm(const Eigen::VectorXd& v, VectorNorm n) {
  switch (n) {
    case VectorNorm::Max: return v.lpNorm<Eigen::Infinity>();
    case VectorNorm::Euclid: return v.norm();
    case VectorNorm::L1: return v.lpNorm<1>();
  }
  return 0.0;
}

/// Values of a function [0,1] -> R^d at the N+1 nodes i/N, one row per node.
class GridFunction {
public:
  GridFunction(int n_intervals, int dim, Eigen::MatrixXd values)
      : n_(n_intervals), d_(dim), values_(std::move(values)) {
    if (n_ < 1) throw std::invalid_argument("grid needs at least 1 interval");
    if (d_ < 1) throw std::invalid_argument("dimension must be positive");
    if (values_.rows() != n_ + 1 || values_.cols() != d_)
      throw std::invalid_argument("grid value matrix has wrong shape");
    if (!values_.allFinite())
      throw std::invalid_argument("grid values must be finite");
  }

  static GridFunction zero(int n_intervals, int dim) {
    return GridFunction(n_intervals, dim,
                        Eigen::MatrixXd::Zero(n_intervals + 1, dim));
  }

  static GridFunction constant(int n_intervals, int dim, double c) {
    return GridFunction(n_intervals, dim,
                        Eigen::MatrixXd::Constant(n_intervals + 1, dim, c));
  }

  int n_intervals() const { return n_; }
  int dim() const { return d_; }
  double node(int i) const { return static_cast<double>(i) / n_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::RowVectorXd at(int i) const { return values_.row(i); }

  GridFunction with_values(Eigen::MatrixXd v) const {
    return GridFunction(n_, d_, std::move(v));
  }

  friend GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    a.require_same_grid(b);
    return GridFunction(a.n_, a.d_, a.values_ + b.values_);
  }
  friend GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    a.require_same_grid(b);
    return GridFunction(a.n_, a.d_, a.values_ - b.values_);
  }
  friend GridFunction operator*(double c, const GridFunction& a) {
    return GridFunction(a.n_, a.d_, c * a.values_);
  }

private:
  void require_same_grid(const GridFunction& o) const {
    if (n_ != o.n_ || d_ != o.d_)
      throw std::invalid_argument("grid functions live on different grids");
  }

  int n_;
  int d_;
  Eigen::MatrixXd values_;
};

inline double sup_norm(const GridFunction& f, VectorNorm n = VectorNorm::Max) {
  double best = 0.0;
  for (int i = 0; i <= f.n_intervals(); ++i) {
    const double r = vector_norm(f.at(i).transpose(), n);
    if (r > best) best = r;
  }
  return best;
}

/// Finitely supported sequence (x_k)_{k >= 1}. Exact zeros are never stored,
/// so support() is the true support and iteration order is by index.
class SeqVec {
public:
  SeqVec() = default;

  static SeqVec basis(int k) {
    SeqVec v;
    v.set(k, 1.0);
    return v;
  }

  void set(int k, double value) {
    if (k < 1) throw std::invalid_argument("sequence indices start at 1");
    if (!std::isfinite(value))
      throw std::invalid_argument("sequence coefficients must be finite");
    if (value == 0.0)
      entries_.erase(k);
    else
      entries_[k] = value;
  }

  double coeff(int k) const {
    auto it = entries_.find(k);
    return it == entries_.end() ? 0.0 : it->second;
  }

  const std::map<int, double>& entries() const { return entries_; }
  std::size_t support_size() const { return entries_.size(); }
  bool is_zero() const { return entries_.empty(); }

  int max_index() const {
    return entries_.empty() ? 0 : entries_.rbegin()->first;
  }

  friend SeqVec operator+(const SeqVec& a, const SeqVec& b) {
    SeqVec out = a;
    for (const auto& [k, x] : b.entries_) out.set(k, out.coeff(k) + x);
    return out;
  }
  friend SeqVec operator-(const SeqVec& a, const SeqVec& b) {
    SeqVec out = a;
    for (const auto& [k, x] : b.entries_) out.set(k, out.coeff(k) - x);
    return out;
  }
  friend SeqVec operator*(double c, const SeqVec& a) {
    SeqVec out;
    for (const auto& [k, x] : a.entries_) out.set(k, c * x);
    return out;
  }
  friend bool operator==(const SeqVec& a, const SeqVec& b) {
    return a.entries_ == b.entries_;
  }

private:
  std::map<int, double> entries_;
};

namespace detail {

/// Neumaier's compensated summation. Order-sensitive inputs (map iteration,
/// fixed weight order) therefore sum bit-reproducibly and with O(1) error.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace detail

inline double l1_norm(const SeqVec& v) {
  detail::CompensatedSum s;
  for (const auto& [k, x] : v.entries()) s.add(std::fabs(x));
  return s.value();
}

inline double sum_of_entries(const SeqVec& v) {
  detail::CompensatedSum s;
  for (const auto& [k, x] : v.entries()) s.add(x);
  return s.value();
}

enum class QuadKind { Trapezoid, Simpson };

inline const char* to_string(QuadKind k) {
  return k == QuadKind::Trapezoid ? "trapezoid" : "simpson";
}

/// Weights of a composite rule on the uniform grid, normalized so that they
/// sum to 1 (they integrate the constant function exactly).
class QuadratureRule {
public:
  static QuadratureRule trapezoid(int n_intervals) {
    require_n(n_intervals, 1);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n_intervals + 1,
                                                  1.0 / n_intervals);
    w(0) *= 0.5;
    w(n_intervals) *= 0.5;
    return QuadratureRule(QuadKind::Trapezoid, n_intervals, std::move(w));
  }

  static QuadratureRule simpson(int n_intervals) {
    require_n(n_intervals, 2);
    if (n_intervals % 2 != 0)
      throw std::invalid_argument("simpson needs an even interval count");
    const double h = 1.0 / n_intervals;
    Eigen::VectorXd w(n_intervals + 1);
    w(0) = h / 3.0;
    w(n_intervals) = h / 3.0;
    for (int i = 1; i < n_intervals; ++i)
      w(i) = (i % 2 == 1) ? 4.0 * h / 3.0 : 2.0 * h / 3.0;
    return QuadratureRule(QuadKind::Simpson, n_intervals, std::move(w));
  }

  static QuadratureRule make(QuadKind kind, int n_intervals) {
    return kind == QuadKind::Trapezoid ? trapezoid(n_intervals)
                                       : simpson(n_intervals);
  }

  QuadKind kind() const { return kind_; }
  int n_intervals() const { return n_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double node(int i) const { return static_cast<double>(i) / n_; }

private:
  QuadratureRule(QuadKind kind, int n, Eigen::VectorXd w)
      : kind_(kind), n_(n), weights_(std::move(w)) {
    detail::CompensatedSum s;
    for (int i = 0; i <= n_; ++i) s.add(weights_(i));
    if (std::fabs(s.value() - 1.0) > 1e-14)
      throw std::logic_error("quadrature weights fail to sum to 1");
  }

  static void require_n(int n, int least) {
    if (n < least)
      throw std::invalid_argument("too few intervals for this rule");
  }

  QuadKind kind_;
  int n_;
  Eigen::VectorXd weights_;
};

inline double integrate(const QuadratureRule& rule,
                        const Eigen::VectorXd& samples) {
  if (samples.size() != rule.n_intervals() + 1)
    throw std::invalid_argument("sample count does not match the rule");
  return rule.weights().dot(samples);
}

}  // namespace phifix
