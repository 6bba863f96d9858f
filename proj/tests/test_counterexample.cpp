#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "phifix/counterexample.hpp"
#include "phifix/gridfn.hpp"

using namespace phifix;

TEST_CASE("simplex points validate nonnegativity and the unit sum") {
  SeqVec bad;
  bad.set(1, 1.5);
  bad.set(2, -0.5);
  CHECK_THROWS_AS(SimplexPoint(bad), std::invalid_argument);
  SeqVec short_sum;
  short_sum.set(1, 0.5);
  CHECK_THROWS_AS(SimplexPoint(short_sum), std::invalid_argument);
  CHECK_NOTHROW(SimplexPoint::vertex(3));
  CHECK_NOTHROW(SimplexPoint::uniform(17));
  CHECK_THROWS_AS(SimplexPoint::uniform(0), std::invalid_argument);
}

TEST_CASE("random simplex points stay on the simplex") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    const SimplexPoint p = SimplexPoint::random(rng);
    CHECK(p.coefficients().support_size() >= 1);
  }
}

TEST_CASE("the shift maps vertices to vertices") {
  const SimplexPoint image = shift_map(SimplexPoint::vertex(1));
  CHECK(image.coefficients() == SeqVec::basis(2));
  CHECK(shift_map(image).coefficients() == SeqVec::basis(3));
}

TEST_CASE("vertex gap is exactly two for every n") {
  for (int n : {1, 2, 3, 7, 64, 1000})
    CHECK(fixed_point_gap(GapFamily::Vertex, n) == 2.0);
}

TEST_CASE("uniform gap is exactly 2/n") {
  for (int n = 1; n <= 1024; ++n) {
    INFO("n = " << n);
    REQUIRE(fixed_point_gap(GapFamily::Uniform, n) == 2.0 / n);
  }
  CHECK(fixed_point_gap(GapFamily::Uniform, 100000) == 2.0 / 100000);
}

TEST_CASE("gap arguments are validated") {
  CHECK_THROWS_AS(fixed_point_gap(GapFamily::Vertex, 0), std::invalid_argument);
}

TEST_CASE("picard residuals from a vertex never shrink") {
  const std::vector<double> residuals = picard_orbit(SimplexPoint::vertex(1), 100);
  REQUIRE(residuals.size() == 100);
  for (double r : residuals) REQUIRE(r == 2.0);
}

TEST_CASE("picard residuals from a uniform point are constant") {
  const std::vector<double> residuals = picard_orbit(SimplexPoint::uniform(4), 50);
  for (double r : residuals) REQUIRE(r == 0.5);
  CHECK_THROWS_AS(picard_orbit(SimplexPoint::vertex(1), 0), std::invalid_argument);
}

TEST_CASE("the shift is a bitwise isometry on random pairs") {
  const IsometryReport rep = verify_isometry(20240818, 1000);
  CHECK(rep.pairs == 1000);
  CHECK(rep.violations == 0);
  CHECK(rep.first_violation.empty());
  CHECK(rep.exact());
  CHECK_THROWS_AS(verify_isometry(1, 0), std::invalid_argument);
}

TEST_CASE("the sampled contraction factor of the shift is exactly one") {
  CHECK(estimate_alpha_shift(7, 200) == 1.0);
  CHECK(estimate_alpha_shift(123456, 200) == 1.0);
  CHECK_THROWS_AS(estimate_alpha_shift(1, 0), std::invalid_argument);
}

TEST_CASE("the condensing hypothesis fails with an exact certificate") {
  const CondensingCertificate cert = condensing_violation_certificate(2024, 200);
  CHECK(cert.chi_phi_ray == 2.0);
  CHECK(cert.chi_phi_ray_image == 2.0);
  CHECK(cert.chi_phi_finite == 0.0);
  CHECK(cert.chi_phi_finite_image == 0.0);
  CHECK(cert.alpha_hat == 1.0);
  CHECK(cert.alpha_pairs == 200);
  CHECK(cert.holds);
}
