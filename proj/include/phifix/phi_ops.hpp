#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "phifix/exprparse.hpp"
#include "phifix/gridfn.hpp"

// Concrete bounded linear operators phi together with the numerical side of
// the invertibility premises: trivial kernel (sampled), an inverse bound c
// with ||phi^-1 y|| <= c||y|| on the range, and phi not being a scalar
// multiple of the identity.

namespace phifix {

/// Nodes used to validate and bound multiplication operators. Norm and
/// bound values for that variant are sups over this fixed grid.
inline constexpr int kMultiplicationGrid = 1024;

/// Evaluation-based check that `tail(k)` settles near its declared positive
/// limit: |tail(k) - L| <= 0.01*L probed at k = 1e6, 1e7, 1e8.
inline void validate_declared_limit(const Expr& tail, double limit) {
  if (!(limit > 0.0) || !std::isfinite(limit))
    throw std::invalid_argument("declared tail limit must be positive and finite");
  Env env;
  for (double k : {1e6, 1e7, 1e8}) {
    env.set("k", k);
    const double v = eval(tail, env);
    if (!std::isfinite(v) || std::fabs(v - limit) > 0.01 * limit)
      throw std::invalid_argument(
          "tail expression '" + tail.str() + "' does not stay within 1% of its declared limit " +
          std::to_string(limit) + " at k = " + std::to_string(k));
  }
}

struct MultiplicationOp {
  Expr m;                    // over t
  double lower_bound;        // declared a with m(t) >= a > 0
  Eigen::VectorXd samples;   // m on the validation grid
};

struct RightShiftOp {};

struct MatrixOp {
  Eigen::MatrixXd a;
  Eigen::MatrixXd a_inv;
};

struct LiftedOp {
  Eigen::MatrixXd a;
  Eigen::MatrixXd a_inv;
};

struct DiagonalOp {
  Expr symbol;   // over k
  double limit;  // declared limit of symbol(k) as k -> infinity
};

namespace detail {

inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> checked_matrix(
    Eigen::MatrixXd a, const char* what) {
  if (a.rows() != a.cols() || a.rows() < 1)
    throw std::invalid_argument(std::string(what) + " must be square");
  if (!a.allFinite())
    throw std::invalid_argument(std::string(what) + " must have finite entries");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible())
    throw std::invalid_argument(std::string(what) + " is singular");
  Eigen::MatrixXd inv = lu.inverse();
  return {std::move(a), std::move(inv)};
}

inline double induced_norm(const Eigen::MatrixXd& a, VectorNorm n) {
  switch (n) {
    case VectorNorm::Max: return a.cwiseAbs().rowwise().sum().maxCoeff();
    case VectorNorm::L1: return a.cwiseAbs().colwise().sum().maxCoeff();
    case VectorNorm::Euclid: {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
      return svd.singularValues()(0);
    }
  }
  return 0.0;
}

inline const std::vector<double>& diagonal_probes() {
  static const std::vector<double> probes = [] {
    std::vector<double> p;
    for (int k = 1; k <= 64; ++k) p.push_back(k);
    for (int k = 128; k <= (1 << 20); k *= 2) p.push_back(k);
    return p;
  }();
  return probes;
}

}  // namespace detail

class PhiOperator {
public:
  using Storage = std::variant<MultiplicationOp, RightShiftOp, MatrixOp,
                               LiftedOp, DiagonalOp>;

  static PhiOperator multiplication(Expr m, double lower_bound) {
    if (!(lower_bound > 0.0))
      throw std::invalid_argument("multiplication operator needs a declared lower bound a > 0");
    Eigen::VectorXd samples(kMultiplicationGrid + 1);
    Env env;
    for (int i = 0; i <= kMultiplicationGrid; ++i) {
      env.set("t", static_cast<double>(i) / kMultiplicationGrid);
      samples(i) = eval(m, env);
    }
    if (!samples.allFinite())
      throw std::invalid_argument("multiplier must be finite on [0,1]");
    if (samples.minCoeff() < lower_bound)
      throw std::invalid_argument(
          "multiplier drops below its declared lower bound on the validation grid");
    return PhiOperator(MultiplicationOp{std::move(m), lower_bound, std::move(samples)});
  }

  static PhiOperator right_shift() { return PhiOperator(RightShiftOp{}); }

  static PhiOperator matrix(Eigen::MatrixXd a) {
    auto [m, inv] = detail::checked_matrix(std::move(a), "operator matrix");
    return PhiOperator(MatrixOp{std::move(m), std::move(inv)});
  }

  static PhiOperator lifted(Eigen::MatrixXd a) {
    auto [m, inv] = detail::checked_matrix(std::move(a), "lifted operator matrix");
    return PhiOperator(LiftedOp{std::move(m), std::move(inv)});
  }

  static PhiOperator diagonal(Expr symbol, double limit) {
    validate_declared_limit(symbol, limit);
    Env env;
    for (double k : detail::diagonal_probes()) {
      env.set("k", k);
      if (!std::isfinite(eval(symbol, env)))
        throw std::invalid_argument("diagonal symbol must be finite at probe indices");
    }
    return PhiOperator(DiagonalOp{std::move(symbol), limit});
  }

  const Storage& storage() const { return v_; }

  bool is_multiplication() const { return std::holds_alternative<MultiplicationOp>(v_); }
  bool is_right_shift() const { return std::holds_alternative<RightShiftOp>(v_); }
  bool is_matrix() const { return std::holds_alternative<MatrixOp>(v_); }
  bool is_lifted() const { return std::holds_alternative<LiftedOp>(v_); }
  bool is_diagonal() const { return std::holds_alternative<DiagonalOp>(v_); }

  const MultiplicationOp& as_multiplication() const { return std::get<MultiplicationOp>(v_); }
  const MatrixOp& as_matrix() const { return std::get<MatrixOp>(v_); }
  const LiftedOp& as_lifted() const { return std::get<LiftedOp>(v_); }
  const DiagonalOp& as_diagonal() const { return std::get<DiagonalOp>(v_); }

  const char* kind_name() const {
    struct V {
      const char* operator()(const MultiplicationOp&) const { return "multiplication"; }
      const char* operator()(const RightShiftOp&) const { return "right_shift"; }
      const char* operator()(const MatrixOp&) const { return "matrix"; }
      const char* operator()(const LiftedOp&) const { return "lifted"; }
      const char* operator()(const DiagonalOp&) const { return "diagonal"; }
    };
    return std::visit(V{}, v_);
  }

private:
  explicit PhiOperator(Storage v) : v_(std::move(v)) {}
  Storage v_;
};

namespace detail {

[[noreturn]] inline void carrier_mismatch(const PhiOperator& op, const char* carrier) {
  throw std::invalid_argument(std::string("carrier mismatch: ") + op.kind_name() +
                              " operator cannot act on " + carrier);
}

inline double eval_diagonal(const DiagonalOp& d, int k, Env& env) {
  env.set("k", static_cast<double>(k));
  return eval(d.symbol, env);
}

}  // namespace detail

inline GridFunction apply(const PhiOperator& op, const GridFunction& x) {
  if (op.is_multiplication()) {
    if (x.dim() != 1) detail::carrier_mismatch(op, "vector-valued grid functions");
    const auto& mo = op.as_multiplication();
    Eigen::MatrixXd out = x.values();
    Env env;
    for (int i = 0; i <= x.n_intervals(); ++i) {
      env.set("t", x.node(i));
      out(i, 0) *= eval(mo.m, env);
    }
    return x.with_values(std::move(out));
  }
  if (op.is_lifted()) {
    const auto& lo = op.as_lifted();
    if (lo.a.rows() != x.dim()) detail::carrier_mismatch(op, "grid functions of this dimension");
    return x.with_values(x.values() * lo.a.transpose());
  }
  detail::carrier_mismatch(op, "grid functions");
}

inline GridFunction inverse_apply(const PhiOperator& op, const GridFunction& y) {
  if (op.is_multiplication()) {
    if (y.dim() != 1) detail::carrier_mismatch(op, "vector-valued grid functions");
    const auto& mo = op.as_multiplication();
    Eigen::MatrixXd out = y.values();
    Env env;
    for (int i = 0; i <= y.n_intervals(); ++i) {
      env.set("t", y.node(i));
      out(i, 0) /= eval(mo.m, env);
    }
    return y.with_values(std::move(out));
  }
  if (op.is_lifted()) {
    const auto& lo = op.as_lifted();
    if (lo.a.rows() != y.dim()) detail::carrier_mismatch(op, "grid functions of this dimension");
    return y.with_values(y.values() * lo.a_inv.transpose());
  }
  detail::carrier_mismatch(op, "grid functions");
}

inline SeqVec apply(const PhiOperator& op, const SeqVec& x) {
  if (op.is_right_shift()) {
    SeqVec out;
    for (const auto& [k, c] : x.entries()) out.set(k + 1, c);
    return out;
  }
  if (op.is_diagonal()) {
    const auto& d = op.as_diagonal();
    SeqVec out;
    Env env;
    for (const auto& [k, c] : x.entries())
      out.set(k, c * detail::eval_diagonal(d, k, env));
    return out;
  }
  detail::carrier_mismatch(op, "sequences");
}

inline SeqVec inverse_apply(const PhiOperator& op, const SeqVec& y) {
  if (op.is_right_shift()) {
    if (y.coeff(1) != 0.0)
      throw std::domain_error(
          "sequence is outside the shift's range: index 1 carries a nonzero coefficient");
    SeqVec out;
    for (const auto& [k, c] : y.entries()) out.set(k - 1, c);
    return out;
  }
  if (op.is_diagonal()) {
    const auto& d = op.as_diagonal();
    SeqVec out;
    Env env;
    for (const auto& [k, c] : y.entries()) {
      const double g = detail::eval_diagonal(d, k, env);
      if (g == 0.0)
        throw std::domain_error("diagonal symbol vanishes at index " + std::to_string(k));
      out.set(k, c / g);
    }
    return out;
  }
  detail::carrier_mismatch(op, "sequences");
}

inline Eigen::VectorXd apply(const PhiOperator& op, const Eigen::VectorXd& x) {
  if (op.is_matrix()) {
    const auto& mo = op.as_matrix();
    if (mo.a.cols() != x.size()) detail::carrier_mismatch(op, "vectors of this dimension");
    return mo.a * x;
  }
  detail::carrier_mismatch(op, "plain vectors");
}

inline Eigen::VectorXd inverse_apply(const PhiOperator& op, const Eigen::VectorXd& y) {
  if (op.is_matrix()) {
    const auto& mo = op.as_matrix();
    if (mo.a.cols() != y.size()) detail::carrier_mismatch(op, "vectors of this dimension");
    return mo.a_inv * y;
  }
  detail::carrier_mismatch(op, "plain vectors");
}

inline double operator_norm(const PhiOperator& op, VectorNorm n = VectorNorm::Max) {
  struct V {
    VectorNorm n;
    double operator()(const MultiplicationOp& m) const {
      return m.samples.cwiseAbs().maxCoeff();
    }
    double operator()(const RightShiftOp&) const { return 1.0; }
    double operator()(const MatrixOp& m) const { return detail::induced_norm(m.a, n); }
    double operator()(const LiftedOp& m) const { return detail::induced_norm(m.a, n); }
    double operator()(const DiagonalOp& d) const {
      double best = std::fabs(d.limit);
      Env env;
      for (double k : detail::diagonal_probes()) {
        env.set("k", k);
        best = std::max(best, std::fabs(eval(d.symbol, env)));
      }
      return best;
    }
  };
  return std::visit(V{n}, op.storage());
}

inline double inverse_bound_c(const PhiOperator& op, VectorNorm n = VectorNorm::Max) {
  struct V {
    VectorNorm n;
    double operator()(const MultiplicationOp& m) const {
      return 1.0 / m.samples.minCoeff();
    }
    double operator()(const RightShiftOp&) const { return 1.0; }
    double operator()(const MatrixOp& m) const { return detail::induced_norm(m.a_inv, n); }
    double operator()(const LiftedOp& m) const { return detail::induced_norm(m.a_inv, n); }
    double operator()(const DiagonalOp& d) const {
      double least = std::fabs(d.limit);
      Env env;
      for (double k : detail::diagonal_probes()) {
        env.set("k", k);
        least = std::min(least, std::fabs(eval(d.symbol, env)));
      }
      if (least < 1e-300)
        throw std::domain_error("diagonal symbol vanishes on probe indices; no inverse bound");
      return 1.0 / least;
    }
  };
  return std::visit(V{n}, op.storage());
}

struct PremiseReport {
  bool not_in_span_of_identity = false;
  bool kernel_trivial_on_samples = false;
  std::optional<double> inverse_bound_c;
  double operator_norm = 0.0;
  int kernel_samples = 0;
  double min_kernel_ratio = std::numeric_limits<double>::infinity();
  std::string span_note;
  bool premises_hold = false;
  std::string verdict;
};

namespace detail {

struct SpanProbe {
  bool not_in_span;
  std::string note;
};

/// Decide span{I} membership from probe actions phi e_i. The operator is a
/// scalar multiple of the identity only if every probed basis vector is an
/// eigenvector and all eigenvalues agree.
inline SpanProbe span_from_lambdas(const std::vector<double>& lambdas,
                                   bool all_parallel, int first_bad) {
  if (!all_parallel)
    return {true, "phi e_" + std::to_string(first_bad) + " is not parallel to e_" +
                      std::to_string(first_bad)};
  double lo = lambdas[0], hi = lambdas[0];
  for (double l : lambdas) {
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  const double tol = 1e-12 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
  if (hi - lo <= tol)
    return {false, "phi acts as lambda*I on all probes, lambda = " + std::to_string(lambdas[0])};
  return {true, "probe eigenvalues spread over [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]"};
}

inline SpanProbe span_probe_matrix(const Eigen::MatrixXd& a) {
  const int d = static_cast<int>(a.rows());
  std::vector<double> lambdas;
  for (int i = 0; i < d; ++i) {
    const Eigen::VectorXd col = a.col(i);
    const double lambda = a(i, i);
    Eigen::VectorXd resid = col;
    resid(i) -= lambda;
    const double tol = 1e-12 * std::max(1.0, col.lpNorm<Eigen::Infinity>());
    if (resid.lpNorm<Eigen::Infinity>() > tol)
      return span_from_lambdas({}, false, i + 1);
    lambdas.push_back(lambda);
  }
  return span_from_lambdas(lambdas, true, 0);
}

inline SpanProbe span_probe(const PhiOperator& op) {
  struct V {
    SpanProbe operator()(const MultiplicationOp& m) const {
      std::vector<double> lambdas;
      for (int i = 0; i <= 16; ++i)
        lambdas.push_back(m.samples(i * (kMultiplicationGrid / 16)));
      return span_from_lambdas(lambdas, true, 0);
    }
    SpanProbe operator()(const RightShiftOp&) const {
      // phi e_k = e_{k+1} has zero component along e_k while being nonzero.
      return {true, "phi e_1 is not parallel to e_1"};
    }
    SpanProbe operator()(const MatrixOp& m) const { return span_probe_matrix(m.a); }
    SpanProbe operator()(const LiftedOp& m) const { return span_probe_matrix(m.a); }
    SpanProbe operator()(const DiagonalOp& d) const {
      std::vector<double> lambdas;
      Env env;
      for (int k = 1; k <= 16; ++k) {
        env.set("k", static_cast<double>(k));
        lambdas.push_back(eval(d.symbol, env));
      }
      return span_from_lambdas(lambdas, true, 0);
    }
  };
  return std::visit(V{}, op.storage());
}

inline double kernel_ratio_grid(const PhiOperator& op, const GridFunction& x,
                                VectorNorm n) {
  return sup_norm(apply(op, x), n) / sup_norm(x, n);
}

}  // namespace detail

/// Sample-based verification of the invertibility premises plus the span{I}
/// exclusion. Failures are verdicts, never exceptions.
inline PremiseReport check_phi_space_premises(const PhiOperator& op,
                                              int sample_count, std::uint64_t seed,
                                              VectorNorm n = VectorNorm::Max) {
  if (sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
  PremiseReport rep;
  rep.operator_norm = operator_norm(op, n);

  const detail::SpanProbe span = detail::span_probe(op);
  rep.not_in_span_of_identity = span.not_in_span;
  rep.span_note = span.note;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> index(1, 32);

  rep.kernel_samples = sample_count;
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int s = 0; s < sample_count; ++s) {
    double ratio;
    if (op.is_right_shift() || op.is_diagonal()) {
      SeqVec x;
      while (x.is_zero())
        for (int j = 0; j < 8; ++j) x.set(index(rng), unit(rng));
      ratio = l1_norm(apply(op, x)) / l1_norm(x);
    } else if (op.is_matrix()) {
      const int d = static_cast<int>(op.as_matrix().a.rows());
      Eigen::VectorXd x(d);
      do
        for (int j = 0; j < d; ++j) x(j) = unit(rng);
      while (x.isZero());
      ratio = vector_norm(apply(op, x), n) / vector_norm(x, n);
    } else {
      const int d = op.is_lifted() ? static_cast<int>(op.as_lifted().a.rows()) : 1;
      Eigen::MatrixXd values(17, d);
      do
        for (int i = 0; i < 17; ++i)
          for (int j = 0; j < d; ++j) values(i, j) = unit(rng);
      while (values.isZero());
      ratio = detail::kernel_ratio_grid(op, GridFunction(16, d, values), n);
    }
    min_ratio = std::min(min_ratio, ratio);
  }
  rep.min_kernel_ratio = min_ratio;
  rep.kernel_trivial_on_samples = min_ratio > 1e-12;

  if (rep.kernel_trivial_on_samples) {
    try {
      rep.inverse_bound_c = inverse_bound_c(op, n);
    } catch (const std::domain_error&) {
      rep.kernel_trivial_on_samples = false;
      rep.span_note += "; inverse bound computation failed";
    }
  }

  rep.premises_hold = rep.not_in_span_of_identity && rep.kernel_trivial_on_samples;
  if (rep.premises_hold) {
    rep.verdict = "premises-hold";
  } else {
    std::string reason;
    if (!rep.not_in_span_of_identity) reason = "in span{I}";
    if (!rep.kernel_trivial_on_samples) {
      if (!reason.empty()) reason += "; ";
      reason += "kernel not trivial on samples";
    }
    rep.verdict = "premises-fail(" + reason + ")";
  }
  return rep;
}

}  // namespace phifix
