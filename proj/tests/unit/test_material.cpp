#include <doctest.h>

#include <cmath>

#include "formctl/error.hpp"
#include "formctl/material.hpp"

using namespace formctl;

TEST_CASE("material params validate and fix density") {
  const MaterialParams p(9200.0, 7.5, 109.31);
  CHECK(p.density() == 1.0);
  CHECK(p.wave_speed() == doctest::Approx(95.91663046625439).epsilon(1e-15));
  CHECK_THROWS_AS(MaterialParams(0.0, 1.0, 1.0), InvalidParameter);
  CHECK_THROWS_AS(MaterialParams(1.0, -1.0, 1.0), InvalidParameter);
  CHECK_THROWS_AS(MaterialParams(1.0, 1.0, 0.0), InvalidParameter);
  CHECK_THROWS_AS(MaterialParams(NAN, 1.0, 1.0), InvalidParameter);
}

TEST_CASE("desired state from inward speeds") {
  const auto d = DesiredState::from_inward_speeds(146.0, 7.5, 1.5, 0.0);
  CHECK(d.velocity(0.0) == -1.5);  // die at x = 0 moves in the -x direction of the model
  CHECK(d.velocity(7.5) == doctest::Approx(0.0));
  CHECK(d.inward_speed_left() == 1.5);
  CHECK(d.inward_speed_right() == doctest::Approx(0.0));
  CHECK_THROWS_AS(DesiredState(1.0, 1.0, [](double x) { return 1.0 / (x - 0.5); }),
                  InvalidParameter);
}

TEST_CASE("norton law examples") {
  CHECK(norton_law(1, 1, 1).plastic_strain_rate(0.0, {}) == 0.0);
  CHECK(norton_law(100, 3, 1).plastic_strain_rate(100.0, {}) == doctest::Approx(1.0));
  CHECK(norton_law(100, 3, 2).plastic_strain_rate(200.0, {}) == doctest::Approx(4.0));
  CHECK(norton_law(100, 3, 2).plastic_strain_rate(-50.0, {}) == 0.0);
  const InternalRates r = norton_law(100, 3, 2).internal_state_rate(150.0, {});
  CHECK(r.globular_fraction == 0.0);
  CHECK(r.dislocation_density == 0.0);

  CHECK_THROWS_AS(norton_law(0, 3, 1), InvalidParameter);
  CHECK_THROWS_AS(norton_law(1, 0.5, 1), InvalidParameter);
  CHECK_THROWS_AS(norton_law(1, 3, 0), InvalidParameter);
}

namespace {

// Mixture stress 0, overstress rate sigma / 1 -> rate 1 at sigma = 1.
ViscoplasticLaw unit_hybrid(double generation, double annihilation) {
  TaylorCoeffs t;
  t.alpha = 0.0;
  t.drag_stress = 1.0;
  t.rate_exponent = 1.0;
  t.t_ref = 1.0;
  return hybrid_law({generation, annihilation}, {1.0, 2.0}, t);
}

}  // namespace

TEST_CASE("hybrid law examples") {
  SUBCASE("zero plastic rate leaves the internal state unchanged") {
    const ViscoplasticLaw law = unit_hybrid(1.0, 0.5);
    InternalState s{0.3, 4.0, 0.2, 1150.0};
    for (int k = 0; k < 100; ++k) s = euler_step(law, -1.0, s, 0.1);
    CHECK(s.globular_fraction == 0.3);
    CHECK(s.dislocation_density == 4.0);
  }
  SUBCASE("fully globular state uses the globular stress") {
    TaylorCoeffs t;
    t.sigma0_lamellar = 120.0;
    t.sigma0_globular = 80.0;
    t.shear_modulus = 40000.0;
    t.burgers_vector = 2.8e-7;
    const auto& h = std::get<HybridLaw>(hybrid_law({}, {}, t).variant());
    const InternalState s{1.0, 1e6, 0.0, 0.0};
    CHECK(h.mixture_stress(s) == h.globular_stress(s));
    CHECK(h.mixture_stress({0.0, 1e6, 0.0, 0.0}) == h.lamellar_stress(s));
  }
  SUBCASE("hand Euler step of the dislocation density") {
    const ViscoplasticLaw law = unit_hybrid(1.0, 0.0);
    const InternalState s = euler_step(law, 1.0, {0.0, 4.0, 0.0, 0.0}, 0.1);
    CHECK(s.dislocation_density == doctest::Approx(4.2).epsilon(1e-14));
  }
  SUBCASE("Avrami rate follows X = 1 - exp(-k eps^m)") {
    const ViscoplasticLaw law = unit_hybrid(0.0, 0.0);
    // k = 1, m = 2, eps = 0.5: dX/deps = 2 eps exp(-eps^2)
    const InternalRates r = law.internal_state_rate(1.0, {0.0, 0.0, 0.5, 0.0});
    CHECK(r.globular_fraction == doctest::Approx(1.0 * std::exp(-0.25)).epsilon(1e-14));
    CHECK(r.eq_plastic_strain == doctest::Approx(1.0));
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(hybrid_law({1.0, -1.0}, {}, {}), InvalidParameter);
    CHECK_THROWS_AS(hybrid_law({NAN, 0.0}, {}, {}), InvalidParameter);
    CHECK_THROWS_AS(hybrid_law({}, {1.0, 0.5}, {}), InvalidParameter);
  }
}

TEST_CASE("internal state bounds survive a step") {
  TaylorCoeffs t;
  t.alpha = 0.0;
  const ViscoplasticLaw law = hybrid_law({0.0, 50.0}, {100.0, 1.0}, t);
  const InternalState s = euler_step(law, 50.0, {0.99, 1.0, 0.0, 0.0}, 10.0);
  CHECK(s.globular_fraction <= 1.0);
  CHECK(s.globular_fraction >= 0.0);
  CHECK(s.dislocation_density >= 0.0);
}

TEST_CASE("plastic rate is monotone in stress") {
  const ViscoplasticLaw laws[] = {elastic_law(), norton_law(100, 5, 2), unit_hybrid(1.0, 1.0)};
  const InternalState s{0.4, 9.0, 0.1, 0.0};
  for (const auto& law : laws) {
    double prev = law.plastic_strain_rate(0.0, s);
    for (int k = 1; k <= 400; ++k) {
      const double now = law.plastic_strain_rate(0.5 * k, s);
      CHECK(now >= prev);
      prev = now;
    }
  }
}

TEST_CASE("S* examples") {
  SUBCASE("linear Norton law") {
    const auto d = DesiredState::from_inward_speeds(5.0, 1.0, 0.0, 0.0);
    CHECK(compute_s_star(norton_law(1, 1, 1), MaterialParams(1, 1, 1), d) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("cubic Norton law at the forming constants") {
    const auto d = DesiredState::from_inward_speeds(146.0, 7.5, 1.5, 0.0);
    const double s = compute_s_star(norton_law(100, 3, 1), MaterialParams(9200, 7.5, 109.31), d);
    CHECK(s == doctest::Approx(588.3216).epsilon(1e-4));
  }
  SUBCASE("no plastic flow") {
    const auto d = DesiredState::from_inward_speeds(146.0, 7.5, 1.5, 0.0);
    CHECK(compute_s_star(elastic_law(), MaterialParams(9200, 7.5, 1), d) == 0.0);
  }
  SUBCASE("matches the analytic derivative over (n, sigma*)") {
    for (double n : {1.0, 2.0, 3.0, 5.0, 8.0}) {
      for (double sig : {10.0, 68.0, 146.0, 300.0}) {
        const auto d = DesiredState::from_inward_speeds(sig, 1.0, 0.0, 0.0);
        const double e = 9200.0, ref = 146.0, tr = 5.0;
        const double exact = e * n * std::pow(sig, n - 1) / std::pow(ref, n) / tr;
        const double fd = compute_s_star(norton_law(ref, n, tr), MaterialParams(e, 1, 1), d);
        CHECK(fd == doctest::Approx(exact).epsilon(1e-8));
        CHECK(fd >= 0.0);
      }
    }
  }
  SUBCASE("non-finite stencil") {
    const auto d = DesiredState::from_inward_speeds(1e300, 1.0, 0.0, 0.0);
    CHECK_THROWS_AS(compute_s_star(norton_law(1e-300, 8, 1), MaterialParams(1, 1, 1), d),
                    NonFiniteError);
  }
  CHECK(default_fd_step(146.0) == doctest::Approx(1.46e-4));
  CHECK(default_fd_step(0.0) == 1e-8);
}
