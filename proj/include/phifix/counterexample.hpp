#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phifix/gridfn.hpp"
#include "phifix/mnc.hpp"
#include "phifix/phi_ops.hpp"

// Executable demonstration that the right shift on the l1 simplex is a
// fixed-point-free isometry whose phi-composed measure of noncompactness
// never drops: the condensing hypothesis genuinely fails. Everything here
// is exact integer-index bookkeeping over sparse sequences, so the isometry
// holds bitwise, not just to rounding.

namespace phifix {

/// Element of M = {sum alpha_n e_n : alpha_n >= 0, sum alpha_n = 1}.
class SimplexPoint {
public:
  explicit SimplexPoint(SeqVec x) : x_(std::move(x)) {
    for (const auto& [k, c] : x_.entries())
      if (c < 0.0)
        throw std::invalid_argument("simplex coefficients must be nonnegative (index " +
                                    std::to_string(k) + ")");
    const double sum = sum_of_entries(x_);
    if (std::fabs(sum - 1.0) > 1e-14)
      throw std::invalid_argument("simplex coefficients must sum to 1, got " +
                                  std::to_string(sum));
  }

  static SimplexPoint vertex(int n) { return SimplexPoint(SeqVec::basis(n)); }

  static SimplexPoint uniform(int n) {
    if (n < 1) throw std::invalid_argument("uniform simplex point needs n >= 1");
    SeqVec v;
    const double c = 1.0 / n;
    for (int k = 1; k <= n; ++k) v.set(k, c);
    return SimplexPoint(std::move(v));
  }

  static SimplexPoint random(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> support_size(1, 10);
    std::uniform_int_distribution<int> index(1, 30);
    std::uniform_real_distribution<double> weight(0.01, 1.0);
    SeqVec raw;
    const int n = support_size(rng);
    for (int i = 0; i < n; ++i) {
      const int k = index(rng);
      raw.set(k, raw.coeff(k) + weight(rng));
    }
    const double total = sum_of_entries(raw);
    SeqVec v;
    for (const auto& [k, c] : raw.entries()) v.set(k, c / total);
    return SimplexPoint(std::move(v));
  }

  const SeqVec& coefficients() const { return x_; }

private:
  SeqVec x_;
};

/// T = phi restricted to M: every index moves up by one. The result is
/// revalidated, which doubles as a regression check that the shift
/// preserves nonnegativity and the unit sum bitwise.
inline SimplexPoint shift_map(const SimplexPoint& x) {
  return SimplexPoint(apply(PhiOperator::right_shift(), x.coefficients()));
}

struct IsometryReport {
  int pairs = 0;
  int violations = 0;
  std::string first_violation;
  bool exact() const { return violations == 0; }
};

/// Checks l1_norm(Tx - Ty) == l1_norm(x - y) bitwise on seeded random
/// simplex pairs. The shift relabels indices without touching values, so
/// the summand sequences are identical and equality is exact.
inline IsometryReport verify_isometry(std::uint64_t seed, int n_pairs) {
  if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
  std::mt19937_64 rng(seed);
  IsometryReport rep;
  rep.pairs = n_pairs;
  for (int i = 0; i < n_pairs; ++i) {
    const SimplexPoint x = SimplexPoint::random(rng);
    const SimplexPoint y = SimplexPoint::random(rng);
    const double before = l1_norm(x.coefficients() - y.coefficients());
    const double after =
        l1_norm(shift_map(x).coefficients() - shift_map(y).coefficients());
    if (before != after) {
      rep.violations += 1;
      if (rep.first_violation.empty()) {
        std::ostringstream os;
        os << "pair " << i << ": ||x-y|| = " << before << " but ||Tx-Ty|| = " << after;
        rep.first_violation = os.str();
      }
    }
  }
  return rep;
}

enum class GapFamily { Vertex, Uniform };

/// l1 distance between Tx and x for the two closed-form families:
/// vertices give 2 for every n, uniform-n gives 2/n (only the first and
/// (n+1)-th coefficients differ, by 1/n each).
inline double fixed_point_gap(GapFamily family, int n) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const SimplexPoint x = family == GapFamily::Vertex ? SimplexPoint::vertex(n)
                                                     : SimplexPoint::uniform(n);
  return l1_norm(shift_map(x).coefficients() - x.coefficients());
}

/// Residuals l1_norm(T x_k - x_k) along the Picard orbit of x0. From e_1
/// the orbit walks the vertices and every residual is exactly 2: Picard
/// iteration makes no progress on a fixed-point-free isometry.
inline std::vector<double> picard_orbit(const SimplexPoint& x0, int steps) {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  std::vector<double> residuals;
  residuals.reserve(steps);
  SimplexPoint x = x0;
  for (int i = 0; i < steps; ++i) {
    SimplexPoint tx = shift_map(x);
    residuals.push_back(l1_norm(tx.coefficients() - x.coefficients()));
    x = std::move(tx);
  }
  return residuals;
}

/// l1 adapter for the contraction estimator: the max over seeded simplex
/// pairs of ||phi T eta - phi T mu|| / ||phi eta - phi mu|| with phi = T =
/// the shift. The shift's bitwise isometry makes every ratio exactly 1.
inline double estimate_alpha_shift(std::uint64_t seed, int n_pairs) {
  if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
  std::mt19937_64 rng(seed);
  const PhiOperator shift = PhiOperator::right_shift();
  double alpha = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    const SimplexPoint eta = SimplexPoint::random(rng);
    const SimplexPoint mu = SimplexPoint::random(rng);
    const SeqVec phi_diff =
        apply(shift, eta.coefficients()) - apply(shift, mu.coefficients());
    const double den = l1_norm(phi_diff);
    if (den == 0.0) continue;
    const SeqVec phi_t_diff = apply(shift, apply(shift, eta.coefficients())) -
                              apply(shift, apply(shift, mu.coefficients()));
    const double ratio = l1_norm(phi_t_diff) / den;
    if (ratio > alpha) alpha = ratio;
  }
  return alpha;
}

struct CondensingCertificate {
  double chi_phi_ray = 0.0;
  double chi_phi_ray_image = 0.0;
  double chi_phi_finite = 0.0;
  double chi_phi_finite_image = 0.0;
  double alpha_hat = 0.0;
  int alpha_pairs = 0;
  bool holds = false;
};

/// Witness that T is not phi-condensing: on the vertex set {e_k} (inside
/// M), chi_phi stays at 2 under T instead of dropping, the finite witness
/// {e_1..e_9} stays at 0, and the sampled contraction factor sits at 1.
inline CondensingCertificate condensing_violation_certificate(
    std::uint64_t seed = 2024, int alpha_pairs = 200) {
  const PhiOperator shift = PhiOperator::right_shift();
  CondensingCertificate cert;
  cert.alpha_pairs = alpha_pairs;

  const SetDescriptor ray({Atom::basis_ray(SeqVec{}, 1.0, 1)}, false, false);
  cert.chi_phi_ray = chi_phi(ray, shift);
  cert.chi_phi_ray_image = chi_phi(image_under(shift, ray), shift);

  std::vector<SeqVec> vertices;
  for (int k = 1; k <= 9; ++k) vertices.push_back(SeqVec::basis(k));
  const SetDescriptor finite({Atom::finite_points(std::move(vertices))}, false, false);
  cert.chi_phi_finite = chi_phi(finite, shift);
  cert.chi_phi_finite_image = chi_phi(image_under(shift, finite), shift);

  cert.alpha_hat = estimate_alpha_shift(seed, alpha_pairs);

  cert.holds = cert.chi_phi_ray == 2.0 && cert.chi_phi_ray_image == 2.0 &&
               cert.chi_phi_finite == 0.0 && cert.chi_phi_finite_image == 0.0 &&
               cert.alpha_hat >= 1.0 - 1e-12;
  return cert;
}

}  // namespace phifix
