#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "phifix/exprparse.hpp"
#include "phifix/gridfn.hpp"
#include "phifix/mnc.hpp"
#include "phifix/phi_ops.hpp"

using namespace phifix;

namespace {

Atom unit_ray() { return Atom::basis_ray(SeqVec{}, 1.0, 1); }

SetDescriptor single(Atom atom) {
  std::vector<Atom> atoms;
  atoms.push_back(std::move(atom));
  return SetDescriptor(std::move(atoms), false, true);
}

}  // namespace

TEST_CASE("atom constructors validate their inputs") {
  CHECK_THROWS_AS(Atom::finite_points({}), std::invalid_argument);
  CHECK_THROWS_AS(Atom::basis_ray(SeqVec{}, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(Atom::basis_ray(SeqVec{}, -1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(Atom::basis_ray(SeqVec{}, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(Atom::basis_ray(SeqVec{}, 1.0, 1, parse("1/k", {"k"}), 1.0),
                  std::invalid_argument);
  CHECK_NOTHROW(Atom::basis_ray(SeqVec{}, 1.0, 1, parse("1 + 1/k", {"k"}), 1.0));
  CHECK_THROWS_AS(SetDescriptor({}, false, false), std::invalid_argument);
}

TEST_CASE("finite point sets have measure zero") {
  std::vector<SeqVec> pts = {SeqVec::basis(1), SeqVec::basis(2), SeqVec::basis(3)};
  const SetDescriptor c = single(Atom::finite_points(pts));
  CHECK(kuratowski(c) == 0.0);
}

TEST_CASE("the unit basis ray has measure two") {
  CHECK(kuratowski(single(unit_ray())) == 2.0);
  CHECK(kuratowski(single(Atom::basis_ray(SeqVec::basis(3), 1.0, 5))) == 2.0);
  CHECK(kuratowski(single(Atom::basis_ray(SeqVec{}, 0.5, 1))) == 1.0);
  CHECK(kuratowski(single(Atom::basis_ray(SeqVec{}, 1.0, 1, parse("1/2", {"k"}),
                                          0.5))) == 1.0);
}

TEST_CASE("unions take the max and flags change nothing") {
  std::vector<Atom> atoms;
  atoms.push_back(Atom::basis_ray(SeqVec{}, 1.0, 1));
  atoms.push_back(Atom::basis_ray(SeqVec{}, 0.25, 2, parse("2", {"k"}), 2.0));
  atoms.push_back(Atom::finite_points({SeqVec::basis(1)}));
  const SetDescriptor c(atoms, false, false);
  CHECK(kuratowski(c) == 2.0);
  CHECK(kuratowski(c.with_flags(true, false)) == 2.0);
  CHECK(kuratowski(c.with_flags(false, true)) == 2.0);
  CHECK(kuratowski(c.with_flags(true, true)) == 2.0);
}

TEST_CASE("shift images move rays one index without changing the measure") {
  const SetDescriptor c = single(unit_ray());
  const PhiOperator shift = PhiOperator::right_shift();
  const SetDescriptor image = image_under(shift, c);
  REQUIRE(image.atoms().size() == 1);
  const auto& ray = image.atoms()[0].as_basis_ray();
  CHECK(ray.start_index == 2);
  CHECK(ray.tail_limit == 1.0);
  CHECK(kuratowski(image) == 2.0);
  CHECK(chi_phi(c, shift) == kuratowski(c));
}

TEST_CASE("shift images translate finite points") {
  const SetDescriptor c = single(Atom::finite_points({SeqVec::basis(1)}));
  const SetDescriptor image = image_under(PhiOperator::right_shift(), c);
  const auto& pts = image.atoms()[0].as_finite_points().points;
  REQUIRE(pts.size() == 1);
  CHECK(pts[0] == SeqVec::basis(2));
  CHECK(kuratowski(image) == 0.0);
}

TEST_CASE("shifting a tailed ray reindexes its coefficients") {
  const Atom atom =
      Atom::basis_ray(SeqVec{}, 1.0, 1, parse("1 + 1/k", {"k"}), 1.0);
  const SetDescriptor image = image_under(PhiOperator::right_shift(), single(atom));
  const auto& ray = image.atoms()[0].as_basis_ray();
  CHECK(ray.start_index == 2);
  REQUIRE(ray.tail.has_value());
  CHECK(ray_coefficient(ray, 2) == 2.0);
  CHECK(ray_coefficient(ray, 11) == 1.1);
  CHECK(ray.tail_limit == 1.0);
}

TEST_CASE("diagonal images scale the measure by the symbol limit") {
  const SetDescriptor c = single(unit_ray());
  const PhiOperator half = PhiOperator::diagonal(parse("1/2", {"k"}), 0.5);
  CHECK(chi_phi(c, half) == 1.0);
  const PhiOperator twice = PhiOperator::diagonal(parse("2", {"k"}), 2.0);
  CHECK(chi_phi(c, twice) == 4.0);
  const SetDescriptor image = image_under(twice, c);
  const auto& ray = image.atoms()[0].as_basis_ray();
  CHECK(ray.tail_limit == 2.0);
  CHECK(ray_coefficient(ray, 7) == 2.0);
}

TEST_CASE("operators without an l1 sequence action are rejected") {
  const SetDescriptor c = single(unit_ray());
  const PhiOperator mult =
      PhiOperator::multiplication(parse("0.5 + 0.5*t", {"t"}), 0.5);
  CHECK_THROWS_AS(image_under(mult, c), std::invalid_argument);
  CHECK_THROWS_AS(image_under(PhiOperator::matrix(Eigen::MatrixXd::Identity(2, 2)), c),
                  std::invalid_argument);
}

TEST_CASE("separation and covering bounds pin the ray value") {
  struct Instance {
    const char* tail;  // nullptr means constant 1
    double limit;
  };
  const Instance instances[] = {
      {nullptr, 1.0},        {"1", 1.0},          {"1/2", 0.5},
      {"2", 2.0},            {"1 + 1/k", 1.0},    {"2 - 1/k", 2.0},
      {"1 + 100/k", 1.0},    {"3 + exp(-k)", 3.0}, {"1 + sin(k)/k", 1.0},
      {"1/2 + 1/k", 0.5},
  };
  std::mt19937_64 rng(314159);
  std::uniform_real_distribution<double> radius_dist(0.1, 3.0);
  std::uniform_int_distribution<int> k0_dist(1, 10);
  int checked = 0;
  for (const auto& inst : instances) {
    for (int rep = 0; rep < 2; ++rep) {
      const double r = radius_dist(rng);
      const int k0 = k0_dist(rng);
      std::optional<Expr> tail;
      if (inst.tail) tail = parse(inst.tail, {"k"});
      const Atom atom = inst.tail
                            ? Atom::basis_ray(SeqVec{}, r, k0, *tail, inst.limit)
                            : Atom::basis_ray(SeqVec{}, r, k0);
      const double chi = kuratowski(atom);
      const oracles::RayBracket bracket =
          oracles::ray_chi_bracket(tail ? &*tail : nullptr, r, k0);
      INFO("tail = " << (inst.tail ? inst.tail : "<none>") << ", r = " << r);
      REQUIRE(bracket.sep_lower <= bracket.cover_upper + 1e-12);
      CHECK(std::fabs(bracket.sep_lower - chi) <= 2e-4 * chi);
      CHECK(std::fabs(bracket.cover_upper - chi) <= 2e-4 * chi);
      ++checked;
    }
  }
  CHECK(checked == 20);
}

TEST_CASE("optimal truncated coverings match the sorted-pair formula") {
  std::mt19937_64 rng(271828);
  std::uniform_real_distribution<double> coeff(0.05, 3.0);
  std::uniform_int_distribution<int> size_dist(2, 9);
  std::uniform_int_distribution<int> parts_dist(1, 4);
  for (int rep = 0; rep < 60; ++rep) {
    const int n = size_dist(rng);
    const int parts = parts_dist(rng);
    std::vector<double> d(static_cast<std::size_t>(n));
    for (auto& x : d) x = coeff(rng);
    const double r = coeff(rng);
    const double brute = oracles::min_max_diameter_bruteforce(d, r, parts);
    const double closed = oracles::min_max_diameter_formula(d, r, parts);
    INFO("n = " << n << ", parts = " << parts);
    REQUIRE(brute == closed);
  }
}

TEST_CASE("property suite finds no violations on seeded cases") {
  const PropertyReport report = check_properties(0xC0FFEE, 500);
  CHECK(report.cases == 500);
  CHECK(report.checks == 500 * 9);
  for (const auto& v : report.violations)
    UNSCOPED_INFO("case " << v.case_index << " [" << v.property << "] " << v.details);
  REQUIRE(report.passed());
}

TEST_CASE("property suite is stable across generator seeds") {
  for (std::uint64_t seed : {1ULL, 42ULL, 20260818ULL}) {
    const PropertyReport report = check_properties(seed, 100);
    INFO("seed = " << seed);
    CHECK(report.passed());
  }
}

TEST_CASE("property suite rejects bad case counts") {
  CHECK_THROWS_AS(check_properties(1, 0), std::invalid_argument);
}

TEST_CASE("descriptor formatting names the atoms") {
  std::vector<Atom> atoms;
  atoms.push_back(Atom::basis_ray(SeqVec::basis(2), 0.5, 3, parse("1 + 1/k", {"k"}), 1.0));
  atoms.push_back(Atom::finite_points({SeqVec::basis(1), SeqVec::basis(4)}));
  const SetDescriptor c(atoms, true, false);
  const std::string s = to_string(c);
  CHECK(s.find("BasisRay") != std::string::npos);
  CHECK(s.find("FinitePoints(2 points)") != std::string::npos);
  CHECK(s.find("hull=true") != std::string::npos);
  CHECK(s.find("k0=3") != std::string::npos);
}
