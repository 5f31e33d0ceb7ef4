#include "bhct/errors.hpp"
#include "bhct/identify.hpp"
#include "common.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace bhct;

namespace {

const SinogramGrid kFine{4.0, 2048, 1440};

double max_abs_error(const IdentifyReport& r, const Polynomial& f) {
    double err = 0.0;
    for (int j = 2; j <= r.j_max; ++j) err = std::max(err, std::abs(r.coeff(j) - f.coeff(j)));
    return err;
}

double max_abs_coeff(const Polynomial& f) {
    double m = 0.0;
    for (double a : f.coeffs) m = std::max(m, std::abs(a));
    return m;
}

Image reconstruct(const Scene& sc, const Nonlinearity& f, const SinogramGrid& grid, const ImageGrid& ig) {
    return fbp(synthesize(sc, f, grid).p, ig);
}

}  // namespace

TEST_SUITE("identify") {
    TEST_CASE("multinomial weights sum to 2^j") {
        for (int j = 0; j <= 8; ++j) {
            double sum = 0.0;
            for (int m = 0; m <= j; ++m) sum += multinomial(m, j - m);
            CHECK(sum == std::ldexp(1.0, j));
        }
        CHECK(multinomial(2, 1) == 3.0);
        CHECK(multinomial(3, 3) == 20.0);
    }

    TEST_CASE("method names") {
        CHECK(method_from_string("regression") == IdentifyMethod::Regression);
        CHECK(method_from_string("singular") == IdentifyMethod::Singular);
        CHECK(to_string(IdentifyMethod::Singular) == "singular");
        CHECK_THROWS_AS(method_from_string("fourier"), ConfigError);
    }

    TEST_CASE("two disks give four lines and eight sorted crossings") {
        const auto sc = testing::two_disks();
        CHECK(predict_streaks(sc).size() == 4);
        const auto qs = scene_crossings(sc);
        REQUIRE(qs.size() == 8);
        for (std::size_t i = 1; i < qs.size(); ++i)
            CHECK((qs[i - 1].phi < qs[i].phi || (qs[i - 1].phi == qs[i].phi && qs[i - 1].s < qs[i].s)));
        for (const auto& q : qs) CHECK(q.h_a == doctest::Approx(2.0 * std::sqrt(2.0)));
    }

    TEST_CASE("degenerate scenes") {
        Scene one;
        one.metal.emplace_back(Disk{{0.0, 0.0}, 1.0});
        CHECK(predict_streaks(one).empty());
        const auto p = synthesize(one, Polynomial{{0.1}}, SinogramGrid{4.0, 256, 90}).p;
        CHECK_THROWS_AS(identify_regression(p, one), NoCrossings);
        Scene collinear = testing::two_disks();
        collinear.metal.emplace_back(Disk{{6.0, 0.0}, 1.0});
        CHECK_THROWS_AS(predict_streaks(collinear), DegenerateGeometry);
    }

    TEST_CASE("invalid options are configuration errors") {
        const auto sc = testing::two_disks();
        const auto p = synthesize(sc, Polynomial{{0.1}}, SinogramGrid{4.0, 256, 90}).p;
        IdentifyOptions o;
        o.j_max = 1;
        CHECK_THROWS_AS(identify_regression(p, sc, o), ConfigError);
        o = {};
        o.nuisance_degree = -1;
        CHECK_THROWS_AS(identify_singular(p, sc, o), ConfigError);
    }

    TEST_CASE("an unreachable condition limit raises IllConditionedFit") {
        const auto sc = testing::two_disks();
        const auto p = synthesize(sc, Polynomial{{0.1}}, kFine).p;
        IdentifyOptions o;
        o.max_condition = 1.0;
        CHECK_THROWS_AS(identify_singular(p, sc, o), IllConditionedFit);
    }

    TEST_CASE("random polynomials are recovered by both methods") {
        const auto sc = testing::two_disks_with_tissue();
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> coef(-0.2, 0.2);
        for (int trial = 0; trial < 3; ++trial) {
            const int J = 3 + trial % 2;
            Polynomial f;
            for (int j = 2; j <= J; ++j) f.coeffs.push_back(coef(rng));
            const auto p = synthesize(sc, f, kFine).p;
            IdentifyOptions o;
            o.j_max = J;
            const auto ra = identify_regression(p, sc, o);
            const auto rb = identify_singular(p, sc, o);
            CAPTURE(trial);
            CHECK(max_abs_error(ra, f) <= 0.05 * max_abs_coeff(f));
            CHECK(max_abs_error(rb, f) <= 0.20 * max_abs_coeff(f));
            CHECK(ra.crossings.size() == 8);
            CHECK(ra.spread.size() == static_cast<std::size_t>(J - 1));
            for (double a : rb.coeffs) CHECK(std::isfinite(a));
        }
    }

    TEST_CASE("tissue does not change the estimates") {
        const Polynomial f{{0.1, -0.02}};
        const auto bare = synthesize(testing::two_disks(), f, kFine).p;
        Scene more = testing::two_disks_with_tissue();
        more.tissue.push_back(GaussianBump{0.3, 0.4, {0.0, -2.0}});
        const auto busy = synthesize(more, f, kFine).p;
        for (auto m : {IdentifyMethod::Regression, IdentifyMethod::Singular}) {
            const auto r0 = identify(bare, testing::two_disks(), m);
            const auto r1 = identify(busy, more, m);
            for (int j = 2; j <= 3; ++j) CHECK(testing::rel_err(r1.coeff(j), r0.coeff(j)) <= 0.01);
        }
    }

    TEST_CASE("the cubic term does not contaminate the (1,1) amplitude") {
        const auto sc = testing::two_disks();
        const auto a = synthesize(sc, Polynomial{{1.0}}, kFine);
        const auto b = synthesize(sc, Polynomial{{1.0, 1.0}}, kFine);
        Sinogram da = a.p, db = b.p;
        da.values -= a.rchi.values;
        db.values -= b.rchi.values;
        const double w = default_window(kFine);
        for (const auto& q : scene_crossings(sc))
            CHECK(testing::rel_err(fit_corner(db, q, w).cross(1, 1), fit_corner(da, q, w).cross(1, 1)) <= 0.03);
    }

    TEST_CASE("singular method reports per-pair estimates and edge amplitudes") {
        const auto sc = testing::two_disks();
        const auto p = synthesize(sc, Polynomial{{0.1, -0.02}}, kFine).p;
        IdentifyOptions o;
        const auto fitted = identify_singular(p, sc, o);
        o.edge_source = EdgeAmplitudeSource::Formula;
        const auto formula = identify_singular(p, sc, o);
        for (const auto& c : fitted.crossings) {
            CHECK(c.pairs.count({1, 1}) == 1);
            CHECK(c.pairs.count({2, 1}) == 1);
            CHECK(c.pairs.count({1, 2}) == 1);
            CHECK(testing::rel_err(c.h_a, c.h_formula_a) <= 0.02);
        }
        for (const auto& c : formula.crossings) CHECK(c.h_a == c.h_formula_a);
        CHECK(testing::rel_err(formula.coeff(2), 0.1) <= 0.1);
        CHECK(fitted.flags.empty());
    }

    TEST_CASE("peeling keeps the leading estimate") {
        const auto sc = testing::two_disks();
        const auto p = synthesize(sc, Polynomial{{1.0, 1.0}}, kFine).p;
        IdentifyOptions o;
        o.peel = true;
        const auto r = identify_singular(p, sc, o);
        CHECK(testing::rel_err(r.coeff(2), 1.0) <= 0.1);
        CHECK(testing::rel_err(r.coeff(3), 1.0) <= 0.2);
    }

    TEST_CASE("wrong geometry raises a mismatch flag") {
        const auto p = synthesize(testing::two_disks(), Polynomial{{0.1}}, kFine).p;
        Scene shifted = testing::two_disks();
        shifted.metal[1] = ConvexBody(Disk{{2.05, 0.0}, 1.0});
        const auto r = identify_regression(p, shifted);
        const bool flagged = std::any_of(r.flags.begin(), r.flags.end(),
                                         [](const std::string& s) { return s.rfind("geometry_mismatch", 0) == 0; });
        CHECK(flagged);
        const auto ok = identify_regression(p, testing::two_disks());
        CHECK(ok.flags.empty());
    }

    TEST_CASE("streak score is homogeneous in the coefficients") {
        const auto sc = testing::two_disks_with_tissue();
        const SinogramGrid grid{4.0, 1024, 1440};
        const ImageGrid ig{8.0, 512};
        const Image f1 = reconstruct(sc, Polynomial{{0.5, -0.1}}, grid, ig);
        const Image f2 = reconstruct(sc, Polynomial{{1.0, -0.2}}, grid, ig);
        for (const auto& line : predict_streaks(sc)) {
            const auto s1 = streak_score(f1, line, sc), s2 = streak_score(f2, line, sc);
            CHECK(s1.stations >= 8);
            CHECK(s1.score >= 0.0);
            CHECK(s2.score / s1.score == doctest::Approx(2.0).epsilon(0.1));
        }
    }

    TEST_CASE("streak stations avoid the bodies and the other lines") {
        const auto sc = testing::two_disks();
        const ImageGrid ig{8.0, 256};
        const Image f = reconstruct(sc, Polynomial{{1.0}}, SinogramGrid{4.0, 512, 720}, ig);
        const double w = 10.0 * ig.pixel();
        const auto lines = predict_streaks(sc);
        for (const auto& line : lines) {
            const auto s = streak_score(f, line, sc);
            CHECK(s.stations + s.excluded == 64);
            for (const auto& st : s.samples) {
                CHECK(std::abs(line.distance_to(st.position)) < 1e-12);
                for (const auto& b : sc.metal) CHECK(b.distance(st.position) >= 2.0 * w);
            }
        }
        StreakOptions tight;
        tight.min_stations = 65;
        CHECK_THROWS_AS(streak_score(f, lines.front(), sc, tight), InsufficientStations);
        CHECK_THROWS_AS(test_artifact_free(f, sc, 1.0, 0.0), ConfigError);
    }

    TEST_CASE("physical model streaks are detected on a finer angular grid") {
        // Physical(0.5) is about 24 times weaker than t^2; the null floor has
        // to drop below it, which takes 2880 angles and a 12 pixel profile.
        const auto sc = testing::two_disks_with_tissue();
        const SinogramGrid grid{4.0, 1024, 2880};
        const ImageGrid ig{8.0, 512};
        StreakOptions o;
        o.profile_half_width = 12.0 * ig.pixel();
        const double base = null_baseline(reconstruct(sc, ZeroNonlinearity{}, grid, ig), sc, o);
        const auto v = test_artifact_free(reconstruct(sc, Physical{0.5}, grid, ig), sc, base, 3.0, o);
        CHECK_FALSE(v.artifact_free);
    }
}
