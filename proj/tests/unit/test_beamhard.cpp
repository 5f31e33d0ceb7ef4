#include "bhct/beamhard.hpp"
#include "bhct/errors.hpp"
#include "common.hpp"

#include <doctest.h>

#include <cmath>

using namespace bhct;

TEST_SUITE("beamhard") {
    TEST_CASE("polynomial evaluation") {
        const Polynomial p{{0.1, -0.02, 0.003}};
        CHECK(p.degree() == 4);
        CHECK(p.coeff(3) == -0.02);
        CHECK(p.coeff(7) == 0.0);
        for (double t : {0.0, 0.5, 1.7, 3.0})
            CHECK(eval_nonlinearity(p, t) ==
                  doctest::Approx(0.1 * t * t - 0.02 * t * t * t + 0.003 * std::pow(t, 4)).epsilon(1e-14));
        CHECK(eval_nonlinearity(ZeroNonlinearity{}, 2.0) == 0.0);
    }

    TEST_CASE("nonlinearity is linear in its coefficients") {
        const Polynomial a{{0.3, -0.1, 0.05}};
        for (double lambda : {-2.0, 0.5, 3.0}) {
            Polynomial b = a;
            for (double& c : b.coeffs) c *= lambda;
            for (double t = 0.0; t <= 4.0; t += 0.25)
                CHECK(eval_nonlinearity(b, t) == doctest::Approx(lambda * eval_nonlinearity(a, t)).epsilon(1e-13));
        }
    }

    TEST_CASE("physical model approaches its quadratic term") {
        // Residual against -(ae t)^2 / 6 scales as C (ae t)^4; fit C.
        double num = 0.0, den = 0.0;
        for (double ae : {0.05, 0.1, 0.2})
            for (double t = 0.1; t <= 2.0; t += 0.1) {
                const double u = ae * t;
                const double r = std::abs(eval_nonlinearity(Physical{ae}, t) + u * u / 6.0);
                num += r * std::pow(u, 4);
                den += std::pow(u, 8);
                CHECK(r <= (1.0 / 180.0) * std::pow(u, 4) * 1.0001);
            }
        CHECK(num / den == doctest::Approx(1.0 / 180.0).epsilon(0.01));
    }

    TEST_CASE("physical model is continuous across its evaluation branches") {
        for (double u : {1e-4, 1.0}) {
            const double lo = eval_nonlinearity(Physical{1.0}, u * (1.0 - 1e-12));
            const double hi = eval_nonlinearity(Physical{1.0}, u * (1.0 + 1e-12));
            // |F'(u)| <= u / 3 near the branch points, so the step moves F by under 1e-12 u^2.
            CHECK(std::abs(lo - hi) <= 1e-12 * u * u + 1e-15);
        }
        const double big = eval_nonlinearity(Physical{1.0}, 800.0);
        CHECK(std::isfinite(big));
        CHECK(big == doctest::Approx(-(800.0 - M_LN2 - std::log(800.0))).epsilon(1e-12));
    }

    TEST_CASE("taylor coefficients of the physical model") {
        const double ae = 0.3;
        const auto p = taylor_of_physical(ae, 6);
        REQUIRE(p.coeffs.size() == 5);
        CHECK(p.coeff(2) == doctest::Approx(-ae * ae / 6.0).epsilon(1e-14));
        CHECK(p.coeff(3) == 0.0);
        CHECK(p.coeff(4) == doctest::Approx(std::pow(ae, 4) / 180.0).epsilon(1e-14));
        CHECK(p.coeff(5) == 0.0);
        CHECK(p.coeff(6) == doctest::Approx(-std::pow(ae, 6) / 2835.0).epsilon(1e-14));
        // Remainder after the degree-6 truncation is O(t^8).
        for (double t : {0.2, 0.4}) {
            const double r = eval_nonlinearity(Physical{ae}, t) - eval_nonlinearity(p, t);
            CHECK(std::abs(r) < std::pow(ae * t, 8) * 1e-3);
        }
        CHECK_THROWS_AS(taylor_of_physical(ae, 1), ConfigError);
    }

    TEST_CASE("invalid nonlinearities are rejected") {
        CHECK_THROWS_AS(validate(Polynomial{std::vector<double>(8, 0.1)}), ConfigError);
        CHECK_NOTHROW(validate(Polynomial{std::vector<double>(7, 0.1)}));
        CHECK_THROWS_AS(validate(Physical{0.0}), ConfigError);
        CHECK_THROWS_AS(validate(Physical{-0.2}), ConfigError);
        CHECK_THROWS_AS(validate(Polynomial{{NAN}}), ConfigError);
    }

    TEST_CASE("corruption does not depend on the tissue") {
        const SinogramGrid grid{4.0, 256, 90};
        const Polynomial f{{0.2, -0.05}};
        const auto a = synthesize(testing::two_disks(), f, grid);
        Scene other = testing::two_disks();
        other.tissue.push_back(GaussianBump{0.7, 0.3, {0.0, -1.8}});
        other.tissue.push_back(CompactBump{0.4, 0.5, {0.3, 1.9}});
        const auto b = synthesize(other, f, grid);
        CHECK(a.p_ma().values == b.p_ma().values);
        CHECK(b.p_ma().role == SinogramRole::PMA);
        CHECK(b.p.role == SinogramRole::P);
    }

    TEST_CASE("synthesis applies F to the metal sinogram") {
        const SinogramGrid grid{4.0, 128, 30};
        const Polynomial f{{0.1, -0.02}};
        const auto r = synthesize(testing::two_disks_with_tissue(), f, grid);
        for (int i = 0; i < grid.n_phi; i += 7)
            for (int k = 0; k < grid.n_s; k += 5)
                CHECK(r.p(i, k) == doctest::Approx(r.rf(i, k) + eval_nonlinearity(f, r.rchi(i, k))).epsilon(1e-14));
    }

    TEST_CASE("noise is seeded and has the requested statistics") {
        const SinogramGrid grid{4.0, 256, 64};
        const Sinogram zero(grid, SinogramRole::P);
        CHECK(add_noise(zero, 0.0, 1).values == zero.values);
        const double sigma = 0.01;
        const auto a = add_noise(zero, sigma, 42), b = add_noise(zero, sigma, 42), c = add_noise(zero, sigma, 43);
        CHECK(a.values == b.values);
        CHECK(a.values != c.values);
        const double n = static_cast<double>(a.values.size());
        const double mean = a.values.sum() / n;
        const double sd = std::sqrt((a.values.array() - mean).square().sum() / (n - 1));
        CHECK(std::abs(mean) < 4.0 * sigma / std::sqrt(n));
        CHECK(std::abs(sd / sigma - 1.0) < 0.03);
        CHECK_THROWS_AS(add_noise(zero, -1.0, 0), ConfigError);
    }

    TEST_CASE("scene validation") {
        CHECK_NOTHROW(validate_scene(testing::two_disks()));
        Scene collinear = testing::two_disks();
        collinear.metal.emplace_back(Disk{{6.0, 0.0}, 1.0});
        CHECK_THROWS_AS(validate_scene(collinear), DegenerateGeometry);
        Scene overlap;
        overlap.metal.emplace_back(Disk{{0.0, 0.0}, 1.0});
        overlap.metal.emplace_back(Disk{{1.0, 0.0}, 1.0});
        CHECK_THROWS_AS(validate_scene(overlap), DegenerateGeometry);
        Scene three = testing::two_disks();
        three.metal.emplace_back(Disk{{0.0, 2.5}, 0.5});
        CHECK_NOTHROW(validate_scene(three));
    }
}
