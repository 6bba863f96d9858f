#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phifix/exprparse.hpp"
#include "phifix/gridfn.hpp"
#include "phifix/phi_ops.hpp"

// Nystrom discretization and damped Picard iteration for
//
//   y(t) = h(t) + integral_0^1 k(t,s) f(s, y(s)) ds,   y : [0,1] -> R^d,
//
// together with numerical checks of the solvability hypotheses: the growth
// bound ||f(s,x)|| <= Omega(||x||), the asymptotic coupling
// K * limsup Omega(u)/u <= 1 with K = sup_t integral |k(t,s)| ds, the ball
// radius ||h|| + K*Omega(R) <= R, and the sampled contraction factor
// alpha_hat of the phi-composed integral operator. All hypothesis checks
// are sample- or probe-based and the reports say so; none of them is a
// proof.

namespace phifix {

/// Raised when no ball radius satisfies the solvability inequality.
class NoFeasibleRadius : public std::runtime_error {
public:
  NoFeasibleRadius(double lo, double hi)
      : std::runtime_error("no R in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                           "] satisfies ||h|| + K*Omega(R) <= R"),
        lo_(lo), hi_(hi) {}
  explicit NoFeasibleRadius(double rejected)
      : std::runtime_error("R_override = " + std::to_string(rejected) +
                           " does not satisfy ||h|| + K*Omega(R) <= R"),
        lo_(rejected), hi_(rejected) {}
  double searched_lo() const { return lo_; }
  double searched_hi() const { return hi_; }

private:
  double lo_;
  double hi_;
};

struct ProblemConfig {
  int dim = 1;
  int grid = 64;
  std::string kernel;                           // expression in (t, s)
  std::optional<Eigen::MatrixXd> kernel_table;  // dense alternative, trapezoid only
  std::vector<std::string> f;                   // d expressions in (s, y) resp. (s, y1..yd)
  std::vector<std::string> h;                   // d expressions in t
  std::string omega;                            // expression in u
  Eigen::MatrixXd phi_matrix;                   // d x d, applied nodewise
  QuadKind quadrature = QuadKind::Trapezoid;
  VectorNorm norm = VectorNorm::Max;
  double tol = 1e-10;
  int max_iter = 200;
  double damping = 1.0;  // theta in (0,1]
  int alpha_samples = 100;
  std::uint64_t seed = 1;
  std::optional<double> r_override;
};

namespace detail {

/// Everything the iteration needs, assembled once: nodes, weights, the
/// kernel values k(t_i, s_j), the weighted kernel w_j*k(t_i,s_j), and the
/// sampled h.
struct Discretization {
  QuadratureRule rule;
  Eigen::VectorXd nodes;
  Eigen::MatrixXd kernel;
  Eigen::MatrixXd weighted_kernel;
  Eigen::MatrixXd h_values;
};

}  // namespace detail

class ProblemSpec {
public:
  explicit ProblemSpec(const ProblemConfig& cfg)
      : dim_(cfg.dim),
        grid_(cfg.grid),
        quadrature_(cfg.quadrature),
        norm_(cfg.norm),
        tol_(cfg.tol),
        max_iter_(cfg.max_iter),
        damping_(cfg.damping),
        alpha_samples_(cfg.alpha_samples),
        seed_(cfg.seed),
        r_override_(cfg.r_override),
        phi_(PhiOperator::lifted(cfg.phi_matrix)) {
    if (dim_ < 1) throw std::invalid_argument("dim must be >= 1");
    if (grid_ < 1) throw std::invalid_argument("grid must be >= 1");
    if (!(tol_ > 0.0)) throw std::invalid_argument("tol must be positive");
    if (max_iter_ < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (!(damping_ > 0.0 && damping_ <= 1.0))
      throw std::invalid_argument("damping must lie in (0, 1]");
    if (alpha_samples_ < 1) throw std::invalid_argument("alpha_samples must be >= 1");
    if (cfg.phi_matrix.rows() != dim_)
      throw std::invalid_argument("phi matrix dimension does not match dim");
    if (static_cast<int>(cfg.f.size()) != dim_)
      throw std::invalid_argument("f needs exactly dim component expressions");
    if (static_cast<int>(cfg.h.size()) != dim_)
      throw std::invalid_argument("h needs exactly dim component expressions");
    if (r_override_ && !(*r_override_ > 0.0))
      throw std::invalid_argument("R_override must be positive");

    std::vector<std::string_view> f_vars{"s"};
    if (dim_ == 1) {
      f_vars.push_back("y");
    } else {
      y_names_.reserve(dim_);
      for (int i = 1; i <= dim_; ++i) y_names_.push_back("y" + std::to_string(i));
      for (const auto& nm : y_names_) f_vars.push_back(nm);
    }
    for (const auto& src : cfg.f) f_.push_back(parse(src, f_vars));
    for (const auto& src : cfg.h) h_.push_back(parse(src, {"t"}));
    omega_ = parse(cfg.omega, {"u"});

    if (cfg.kernel_table) {
      if (quadrature_ != QuadKind::Trapezoid)
        throw std::invalid_argument("table kernels support the trapezoid rule only");
      if (cfg.kernel_table->rows() != grid_ + 1 || cfg.kernel_table->cols() != grid_ + 1)
        throw std::invalid_argument("kernel table must be (grid+1) x (grid+1)");
      if (!cfg.kernel_table->allFinite())
        throw std::invalid_argument("kernel table entries must be finite");
    } else {
      kernel_expr_ = parse(cfg.kernel, {"t", "s"});
    }

    disc_ = std::make_shared<detail::Discretization>(
        build_discretization(cfg.kernel_table));
    validate_omega();
    validate_phi_invertibility();
  }

  int dim() const { return dim_; }
  int grid() const { return grid_; }
  QuadKind quadrature() const { return quadrature_; }
  VectorNorm norm() const { return norm_; }
  double tol() const { return tol_; }
  int max_iter() const { return max_iter_; }
  double damping() const { return damping_; }
  int alpha_samples() const { return alpha_samples_; }
  std::uint64_t seed() const { return seed_; }
  const std::optional<double>& r_override() const { return r_override_; }
  const PhiOperator& phi() const { return phi_; }
  const Eigen::MatrixXd& phi_matrix() const { return phi_.as_lifted().a; }
  const std::vector<Expr>& f_components() const { return f_; }
  const std::vector<Expr>& h_components() const { return h_; }
  const Expr& omega() const { return omega_; }
  const Expr& kernel_expr() const { return kernel_expr_; }
  bool has_kernel_table() const { return kernel_expr_.empty(); }
  const detail::Discretization& disc() const { return *disc_; }

  GridFunction h_grid() const { return GridFunction(grid_, dim_, disc_->h_values); }

  double omega_at(double u) const {
    Env env;
    env.set("u", u);
    return eval(omega_, env);
  }

  /// f(s, y) componentwise; `out` must have dim entries.
  void eval_f(double s, const Eigen::RowVectorXd& y, Env& env,
              Eigen::RowVectorXd& out) const {
    env.set("s", s);
    if (dim_ == 1) {
      env.set("y", y(0));
    } else {
      for (int i = 0; i < dim_; ++i) env.set(y_names_[i], y(i));
    }
    for (int i = 0; i < dim_; ++i) out(i) = eval(f_[i], env);
  }

private:
  detail::Discretization build_discretization(
      const std::optional<Eigen::MatrixXd>& table) const {
    QuadratureRule rule = QuadratureRule::make(quadrature_, grid_);
    const int n = grid_;
    Eigen::VectorXd nodes(n + 1);
    for (int i = 0; i <= n; ++i) nodes(i) = static_cast<double>(i) / n;

    Eigen::MatrixXd kernel;
    if (table) {
      kernel = *table;
    } else {
      kernel.resize(n + 1, n + 1);
      Env env;
      for (int i = 0; i <= n; ++i) {
        env.set("t", nodes(i));
        for (int j = 0; j <= n; ++j) {
          env.set("s", nodes(j));
          try {
            kernel(i, j) = eval(kernel_expr_, env);
          } catch (const EvalError& e) {
            throw EvalError(std::string(e.message()) + " at kernel node (i=" +
                                std::to_string(i) + ", j=" + std::to_string(j) + ")",
                            e.subexpression());
          }
        }
      }
      if (!kernel.allFinite())
        throw std::invalid_argument("kernel evaluates to a non-finite value on the grid");
    }

    Eigen::MatrixXd h_values(n + 1, dim_);
    Env env;
    for (int i = 0; i <= n; ++i) {
      env.set("t", nodes(i));
      for (int c = 0; c < dim_; ++c) h_values(i, c) = eval(h_[c], env);
    }
    if (!h_values.allFinite())
      throw std::invalid_argument("h evaluates to a non-finite value on the grid");

    Eigen::MatrixXd weighted = kernel * rule.weights().asDiagonal();
    return {std::move(rule), std::move(nodes), std::move(kernel), std::move(weighted),
            std::move(h_values)};
  }

  void validate_omega() const {
    const double h_norm = sup_norm(h_grid(), norm_);
    const double hi = 10.0 * std::max(1.0, r_override_.value_or(1.0 + h_norm));
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 100; ++i) {
      const double u = hi * i / 100.0;
      const double w = omega_at(u);
      if (!std::isfinite(w) || w <= 0.0)
        throw std::invalid_argument("Omega must be positive on (0, " + std::to_string(hi) +
                                    "]; got " + std::to_string(w) + " at u = " +
                                    std::to_string(u));
      if (w < prev - 1e-12)
        throw std::invalid_argument("Omega must be nondecreasing; decrease detected at u = " +
                                    std::to_string(u));
      prev = w;
    }
  }

  void validate_phi_invertibility() const {
    PremiseReport rep = check_phi_space_premises(phi_, 16, seed_, norm_);
    if (!rep.kernel_trivial_on_samples || !rep.inverse_bound_c)
      throw std::invalid_argument(
          "phi fails the invertibility premises: " + rep.verdict);
  }

  int dim_;
  int grid_;
  QuadKind quadrature_;
  VectorNorm norm_;
  double tol_;
  int max_iter_;
  double damping_;
  int alpha_samples_;
  std::uint64_t seed_;
  std::optional<double> r_override_;
  PhiOperator phi_;
  std::vector<Expr> f_;
  std::vector<Expr> h_;
  Expr omega_;
  Expr kernel_expr_;
  std::vector<std::string> y_names_;
  std::shared_ptr<const detail::Discretization> disc_;
};

/// K = sup over grid nodes t_i of the quadrature of |k(t_i, .)|.
inline double compute_K(const ProblemSpec& spec) {
  const auto& d = spec.disc();
  return (d.kernel.cwiseAbs() * d.rule.weights()).maxCoeff();
}

namespace detail {

inline Eigen::MatrixXd sample_f(const ProblemSpec& spec, const Eigen::MatrixXd& x) {
  const int n = spec.grid();
  Eigen::MatrixXd out(n + 1, spec.dim());
  Env env;
  Eigen::RowVectorXd row(spec.dim());
  for (int j = 0; j <= n; ++j) {
    const double s = spec.disc().nodes(j);
    try {
      spec.eval_f(s, x.row(j), env, row);
    } catch (const EvalError& e) {
      throw EvalError(std::string(e.message()) + " at s index j=" + std::to_string(j) +
                          " (s = " + std::to_string(s) + ")",
                      e.subexpression());
    }
    out.row(j) = row;
  }
  return out;
}

inline Eigen::MatrixXd apply_T_values(const ProblemSpec& spec, const Eigen::MatrixXd& x) {
  return spec.disc().h_values + spec.disc().weighted_kernel * sample_f(spec, x);
}

inline double sup_norm_rows(const Eigen::MatrixXd& m, VectorNorm n) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    best = std::max(best, vector_norm(m.row(i).transpose(), n));
  return best;
}

}  // namespace detail

/// One application of the discretized integral operator:
/// (Tx)(t_i) = h(t_i) + sum_j w_j k(t_i,s_j) f(s_j, x(s_j)).
inline GridFunction apply_T(const ProblemSpec& spec, const GridFunction& x) {
  if (x.n_intervals() != spec.grid() || x.dim() != spec.dim())
    throw std::invalid_argument("iterate does not match the spec's grid");
  return GridFunction(spec.grid(), spec.dim(), detail::apply_T_values(spec, x.values()));
}

inline double residual(const ProblemSpec& spec, const GridFunction& y) {
  return sup_norm(apply_T(spec, y) - y, spec.norm());
}

/// Smallest R with ||h|| + K*Omega(R) <= R: geometric scan of 512 points
/// over [max(||h||, 1e-9), 1e6*(1+||h||)], then bisection of the bracketing
/// interval to relative width 1e-9. An R_override is validated and returned
/// as-is. Throws NoFeasibleRadius when the scan finds nothing.
inline double find_R(const ProblemSpec& spec) {
  const double k_bound = compute_K(spec);
  const double h_norm = sup_norm(spec.h_grid(), spec.norm());
  auto satisfied = [&](double r) {
    return h_norm + k_bound * spec.omega_at(r) <= r;
  };

  if (spec.r_override()) {
    const double r = *spec.r_override();
    if (!satisfied(r)) throw NoFeasibleRadius(r);
    return r;
  }

  const double lo0 = std::max(h_norm, 1e-9);
  const double hi0 = 1e6 * (1.0 + h_norm);
  constexpr int kScanPoints = 512;
  const double ratio = hi0 / lo0;

  int first_good = -1;
  double prev = lo0;
  double good = 0.0;
  for (int i = 0; i < kScanPoints; ++i) {
    const double r = lo0 * std::pow(ratio, static_cast<double>(i) / (kScanPoints - 1));
    if (satisfied(r)) {
      first_good = i;
      good = r;
      break;
    }
    prev = r;
  }
  if (first_good < 0) throw NoFeasibleRadius(lo0, hi0);
  if (first_good == 0) return good;

  double lo = prev, hi = good;
  while (hi - lo > 1e-9 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (satisfied(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

struct RadiusResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::string source;  // "override" | "scan" | "fallback"
  bool feasible = false;
};

/// R for the sampling checks: the override or the scan result when one
/// exists, else the fallback ball 1 + ||h|| (so growth and alpha sampling
/// stay meaningful on specs whose radius inequality fails).
inline RadiusResult resolve_radius(const ProblemSpec& spec) {
  if (spec.r_override()) {
    try {
      return {find_R(spec), "override", true};
    } catch (const NoFeasibleRadius&) {
      return {*spec.r_override(), "override-unverified", false};
    }
  }
  try {
    return {find_R(spec), "scan", true};
  } catch (const NoFeasibleRadius&) {
    return {1.0 + sup_norm(spec.h_grid(), spec.norm()), "fallback", false};
  }
}

struct GrowthReport {
  int samples = 0;
  double radius = 0.0;
  std::string radius_source;
  double max_violation = 0.0;
  bool holds = false;
};

/// Samples (s, x) with ||x|| <= 2R and reports the largest value of
/// ||f(s,x)|| - Omega(||x||). Holds-on-samples means max <= 1e-12.
inline GrowthReport check_growth(const ProblemSpec& spec, int n_samples) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  const RadiusResult rr = resolve_radius(spec);
  GrowthReport rep;
  rep.samples = n_samples;
  rep.radius = rr.value;
  rep.radius_source = rr.source;

  std::mt19937_64 rng(spec.seed() ^ 0x67726f77746871ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);

  Env env;
  Eigen::RowVectorXd fx(spec.dim());
  double max_violation = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    const double s = unit(rng);
    Eigen::RowVectorXd x(spec.dim());
    for (int c = 0; c < spec.dim(); ++c) x(c) = sym(rng);
    const double raw = vector_norm(x.transpose(), spec.norm());
    const double target = 2.0 * rr.value * unit(rng);
    if (raw > 0.0) x *= target / raw;
    spec.eval_f(s, x, env, fx);
    const double lhs = vector_norm(fx.transpose(), spec.norm());
    const double rhs = spec.omega_at(vector_norm(x.transpose(), spec.norm()));
    max_violation = std::max(max_violation, lhs - rhs);
  }
  rep.max_violation = max_violation;
  rep.holds = max_violation <= 1e-12;
  return rep;
}

struct AsymptoticReport {
  std::array<double, 4> probes{};
  std::array<double, 4> values{};
  bool holds = false;
  // A finite probe of a limsup is a heuristic, not a proof; specs whose
  // true ratio misbehaves beyond 1e8 need an explicit R_override.
  std::string method = "finite-probe";
};

/// Probes K*Omega(u)/u at u = 1e2, 1e4, 1e6, 1e8; holds when every value
/// is <= 1 + 1e-9.
inline AsymptoticReport check_asymptotic(const ProblemSpec& spec) {
  const double k_bound = compute_K(spec);
  AsymptoticReport rep;
  rep.probes = {1e2, 1e4, 1e6, 1e8};
  bool ok = true;
  for (std::size_t i = 0; i < rep.probes.size(); ++i) {
    rep.values[i] = k_bound * spec.omega_at(rep.probes[i]) / rep.probes[i];
    ok = ok && rep.values[i] <= 1.0 + 1e-9;
  }
  rep.holds = ok;
  return rep;
}

/// Sampled contraction factor of the phi-composed integral term over the
/// R-ball. Pairs are drawn with a constant difference: x has random node
/// values of size at most a, and y = x + rho*v for a fixed unit direction
/// v with a + rho <= R. This keeps both iterates in the ball and makes the
/// denominator ||phi((x-y)(t))|| node-independent, so the reported max
/// ratio is a genuine bound for this pair family (an unconstrained pair
/// can drive the pointwise ratio arbitrarily high by letting x-y vanish
/// at a single node while the integral difference does not).
inline double estimate_alpha(const ProblemSpec& spec) {
  const RadiusResult rr = resolve_radius(spec);
  const double radius = rr.value;
  const int n = spec.grid();
  const int d = spec.dim();
  const Eigen::MatrixXd& a = spec.phi_matrix();

  std::mt19937_64 rng(spec.seed());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> rho_frac(0.1, 1.0);

  Env env;
  Eigen::RowVectorXd fx(d), fy(d);
  double alpha = 0.0;
  for (int sample = 0; sample < spec.alpha_samples(); ++sample) {
    Eigen::MatrixXd x;
    Eigen::RowVectorXd v(d);
    double rho = 0.0, den = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      const double amp = radius * unit(rng);
      x.resize(n + 1, d);
      for (int i = 0; i <= n; ++i)
        for (int c = 0; c < d; ++c) x(i, c) = sym(rng);
      const double sn = detail::sup_norm_rows(x, spec.norm());
      if (sn > 0.0)
        x *= amp / sn;
      else
        x.setZero();

      for (int c = 0; c < d; ++c) v(c) = sym(rng);
      const double vn = vector_norm(v.transpose(), spec.norm());
      if (vn < 1e-12) continue;
      v /= vn;
      rho = (radius - amp) * rho_frac(rng);
      if (rho < 1e-12) continue;
      den = vector_norm(a * (rho * v.transpose()), spec.norm());
      ok = den > 1e-10;
    }
    if (!ok) continue;

    Eigen::MatrixXd diff(n + 1, d);
    for (int j = 0; j <= n; ++j) {
      const double s = spec.disc().nodes(j);
      spec.eval_f(s, x.row(j), env, fx);
      Eigen::RowVectorXd yj = x.row(j) + rho * v;
      spec.eval_f(s, yj, env, fy);
      diff.row(j) = fy - fx;
    }
    const Eigen::MatrixXd integral = spec.disc().weighted_kernel * diff;
    for (int i = 0; i <= n; ++i) {
      const double num = vector_norm(a * integral.row(i).transpose(), spec.norm());
      alpha = std::max(alpha, num / den);
    }
    if (alpha > 1e6) return std::numeric_limits<double>::infinity();
  }
  return alpha;
}

enum class Certificate { Contraction, CondensingSampled, None };

inline const char* to_string(Certificate c) {
  switch (c) {
    case Certificate::Contraction: return "contraction";
    case Certificate::CondensingSampled: return "condensing-sampled";
    case Certificate::None: return "none";
  }
  return "?";
}

struct SolveReport {
  GridFunction y = GridFunction::zero(1, 1);
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_history;
  std::vector<double> apriori_history;  // q^n * ||x1-x0|| / (1-q), contraction + theta=1 only
  double K = std::numeric_limits<double>::quiet_NaN();
  double R = std::numeric_limits<double>::quiet_NaN();
  std::string r_source;
  double alpha_hat = std::numeric_limits<double>::quiet_NaN();
  double q = std::numeric_limits<double>::quiet_NaN();
  Certificate certificate = Certificate::None;
  std::string status;  // "converged" | "max-iter" | "aborted-nonfinite"
};

/// Damped Picard iteration x_{n+1} = (1-theta) x_n + theta T x_n from
/// x_0 = h. Stops when sup_norm(T x_n - x_n) < tol. With `force` the
/// hypothesis work (R, alpha_hat, q) is skipped and the certificate is
/// none; otherwise q = c * alpha_hat * ||phi|| and the certificate is
/// contraction when q < 1, condensing-sampled when alpha_hat < 1 <= q.
inline SolveReport solve(const ProblemSpec& spec, bool force = false) {
  SolveReport rep;
  rep.K = compute_K(spec);

  if (!force) {
    const double r = find_R(spec);  // NoFeasibleRadius propagates
    rep.R = r;
    rep.r_source = spec.r_override() ? "override" : "scan";
    rep.alpha_hat = estimate_alpha(spec);
    const double c = inverse_bound_c(spec.phi(), spec.norm());
    const double nrm = operator_norm(spec.phi(), spec.norm());
    rep.q = c * rep.alpha_hat * nrm;
    if (rep.q < 1.0)
      rep.certificate = Certificate::Contraction;
    else if (rep.alpha_hat < 1.0)
      rep.certificate = Certificate::CondensingSampled;
    else
      rep.certificate = Certificate::None;
  }

  const double theta = spec.damping();
  Eigen::MatrixXd x = spec.disc().h_values;
  rep.status = "max-iter";
  for (int n = 1; n <= spec.max_iter(); ++n) {
    const Eigen::MatrixXd tx = detail::apply_T_values(spec, x);
    rep.iterations = n;
    if (!tx.allFinite()) {
      rep.status = "aborted-nonfinite";
      rep.residual_history.push_back(std::numeric_limits<double>::quiet_NaN());
      break;
    }
    const double r = detail::sup_norm_rows(tx - x, spec.norm());
    rep.residual_history.push_back(r);
    if (r < spec.tol()) {
      rep.converged = true;
      rep.status = "converged";
      break;
    }
    x = (1.0 - theta) * x + theta * tx;
  }
  rep.y = GridFunction(spec.grid(), spec.dim(), x);

  if (rep.certificate == Certificate::Contraction && theta == 1.0 &&
      !rep.residual_history.empty() && std::isfinite(rep.residual_history.front())) {
    const double r0 = rep.residual_history.front();
    rep.apriori_history.reserve(rep.residual_history.size());
    for (std::size_t i = 0; i < rep.residual_history.size(); ++i)
      rep.apriori_history.push_back(std::pow(rep.q, static_cast<double>(i)) * r0 /
                                    (1.0 - rep.q));
  }
  return rep;
}

}  // namespace phifix
