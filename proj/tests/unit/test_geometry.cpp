#include "bhct/errors.hpp"
#include "bhct/geometry.hpp"
#include "common.hpp"

#include <Eigen/Geometry>
#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

using namespace bhct;

namespace {

std::vector<std::pair<double, double>> canonical(const std::vector<TangentLine>& lines) {
    std::vector<std::pair<double, double>> out;
    for (const auto& l : lines) out.emplace_back(l.s, l.phi);
    std::sort(out.begin(), out.end(), [](auto a, auto b) { return a.second < b.second || (a.second == b.second && a.first < b.first); });
    return out;
}

double line_distance(std::pair<double, double> a, std::pair<double, double> b) {
    // Lines near phi = 0 and phi = pi are the same up to an s sign flip.
    double d = std::hypot(a.first - b.first, a.second - b.second);
    d = std::min(d, std::hypot(a.first + b.first, std::abs(a.second - b.second) - M_PI));
    return d;
}

// Common tangents from a sign-change scan of h_a(phi) - h_b(phi) (outer) and
// h_a(phi) + h_b(phi + pi) (inner), using only the support functions.
std::vector<std::pair<double, double>> scan_tangents(const ConvexBody& a, const ConvexBody& b) {
    std::vector<std::pair<double, double>> out;
    auto scan = [&](auto f) {
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            double lo = -M_PI + 2.0 * M_PI * i / n, hi = lo + 2.0 * M_PI / n;
            if ((f(lo) > 0) == (f(hi) > 0)) continue;
            for (int k = 0; k < 100; ++k) {
                const double m = 0.5 * (lo + hi);
                ((f(m) > 0) == (f(lo) > 0) ? lo : hi) = m;
            }
            const double phi = 0.5 * (lo + hi);
            out.push_back(canonical_line(a.support(phi), phi));
        }
    };
    scan([&](double p) { return a.support(p) - b.support(p); });
    scan([&](double p) { return a.support(p) + b.support(p + M_PI); });
    return out;
}

}  // namespace

TEST_SUITE("geometry") {
    TEST_CASE("wrap_angle maps into [-pi, pi)") {
        CHECK(wrap_angle(M_PI) == doctest::Approx(-M_PI));
        CHECK(wrap_angle(-M_PI) == doctest::Approx(-M_PI));
        CHECK(wrap_angle(3.0 * M_PI + 0.25) == doctest::Approx(-M_PI + 0.25));
        CHECK(wrap_angle(0.3) == doctest::Approx(0.3));
    }

    TEST_CASE("disk support function is exact") {
        const Point c(0.7, -1.3);
        const ConvexBody d(Disk{c, 0.45});
        for (int i = 0; i < 360; ++i) {
            const double phi = -M_PI + i * M_PI / 180.0;
            CHECK(d.support(phi) == doctest::Approx(c.dot(unit(phi)) + 0.45).epsilon(1e-15));
        }
    }

    TEST_CASE("curvature matches a finite-difference oracle") {
        const std::vector<ConvexBody> bodies{ConvexBody(Disk{{0.2, 0.1}, 0.8}),
                                             ConvexBody(Ellipse{{0.0, 0.0}, {1.5, 0.6}, 0.4}),
                                             ConvexBody(Ellipse{{1.0, -2.0}, {0.3, 0.9}, -1.1})};
        const double h = 1e-4;
        for (const auto& body : bodies)
            for (int i = 0; i < 24; ++i) {
                const double phi = -M_PI + (i + 0.3) * M_PI / 12.0;
                // Turning angle 2h over the chord between neighbouring tangency points.
                const double ds = (body.tangency(phi + h) - body.tangency(phi - h)).norm();
                const double oracle = 2.0 * h / ds;
                CHECK(testing::rel_err(curvature(body, phi), oracle) < 1e-6);
            }
    }

    TEST_CASE("tangency point lies on the support line and on the boundary") {
        const ConvexBody e(Ellipse{{0.5, 0.5}, {1.2, 0.7}, 0.3});
        for (int i = 0; i < 16; ++i) {
            const double phi = -3.0 + 0.4 * i;
            const Point x = e.tangency(phi);
            CHECK(x.dot(unit(phi)) == doctest::Approx(e.support(phi)).epsilon(1e-12));
            CHECK(e.distance(x) < 1e-9);
        }
    }

    TEST_CASE("support curve from samples reproduces a trigonometric polynomial") {
        const SupportCurve ref{1.0, {0.1, 0.05}, {-0.2, 0.0, 0.02}};
        const ConvexBody body(ref);
        std::vector<double> samples;
        for (int i = 0; i < 64; ++i) samples.push_back(body.support(-M_PI + i * 2.0 * M_PI / 64));
        const ConvexBody rebuilt(SupportCurve::from_samples(samples, 3));
        for (int i = 0; i < 50; ++i) {
            const double phi = -M_PI + 0.1257 * i;
            CHECK(rebuilt.support(phi) == doctest::Approx(body.support(phi)).epsilon(1e-12));
        }
    }

    TEST_CASE("invalid bodies are rejected") {
        CHECK_THROWS_AS(ConvexBody(Disk{{0.0, 0.0}, -1.0}), InvalidBody);
        CHECK_THROWS_AS(ConvexBody(Ellipse{{0.0, 0.0}, {1.0, 0.0}, 0.0}), InvalidBody);
        // h + h'' = 1 - 1.5 cos(2 phi) changes sign.
        CHECK_THROWS_AS(ConvexBody(SupportCurve{1.0, {0.0, 0.5}, {}}), InvalidBody);
    }

    TEST_CASE("common tangents of two disks touch both boundaries") {
        const auto sc = testing::two_disks();
        const auto lines = common_tangents(sc.metal[0], sc.metal[1]);
        REQUIRE(lines.size() == 4);
        for (const auto& l : lines) {
            CHECK(std::abs(std::abs(l.distance_to({-2.0, 0.0})) - 1.0) < 1e-9);
            CHECK(std::abs(std::abs(l.distance_to({2.0, 0.0})) - 1.0) < 1e-9);
            CHECK(l.phi >= 0.0);
            CHECK(l.phi < M_PI);
        }
        const auto got = canonical(lines);
        const std::vector<std::pair<double, double>> expected{
            {0.0, M_PI / 3}, {-1.0, M_PI / 2}, {1.0, M_PI / 2}, {0.0, 2 * M_PI / 3}};
        for (std::size_t i = 0; i < 4; ++i) CHECK(line_distance(got[i], expected[i]) < 1e-9);
        int inner = 0;
        for (const auto& l : lines) inner += l.kind == TangentKind::Inner;
        CHECK(inner == 2);
    }

    TEST_CASE("common tangents of ellipses match an angle scan") {
        const ConvexBody a(Ellipse{{-1.8, 0.3}, {0.9, 0.5}, 0.7});
        const ConvexBody b(Ellipse{{1.5, -0.4}, {0.6, 1.1}, -0.2});
        const auto lines = common_tangents(a, b);
        const auto oracle = scan_tangents(a, b);
        REQUIRE(lines.size() == 4);
        REQUIRE(oracle.size() == 4);
        for (const auto& l : lines) {
            double best = 1e9;
            for (const auto& o : oracle) best = std::min(best, line_distance({l.s, l.phi}, o));
            CHECK(best < 1e-9);
            for (const ConvexBody* body : {&a, &b}) {
                const double touch = std::min(std::abs(body->branch(+1, l.phi) - l.s),
                                              std::abs(body->branch(-1, l.phi) - l.s));
                CHECK(touch < 1e-9);
            }
        }
    }

    TEST_CASE("each tangent line corresponds to exactly two crossings") {
        const ConvexBody a(Disk{{-1.5, 0.5}, 0.7});
        const ConvexBody b(Ellipse{{1.5, -0.3}, {0.8, 0.5}, 0.9});
        const auto lines = common_tangents(a, b);
        const auto qs = crossings(a, b);
        REQUIRE(lines.size() == 4);
        REQUIRE(qs.size() == 8);
        std::vector<int> hits(lines.size(), 0);
        for (const auto& q : qs) {
            CHECK(q.phi >= -M_PI);
            CHECK(q.phi < M_PI);
            const TangentLine l = q.line();
            int match = -1;
            for (std::size_t i = 0; i < lines.size(); ++i)
                if (line_distance({l.s, l.phi}, {lines[i].s, lines[i].phi}) < 1e-8) match = static_cast<int>(i);
            REQUIRE(match >= 0);
            ++hits[match];
            CHECK(std::abs(q.s - a.branch(q.sign_a, q.phi)) < 1e-10);
            CHECK(std::abs(q.s - b.branch(q.sign_b, q.phi)) < 1e-10);
            CHECK(q.h_a == doctest::Approx(2.0 * std::sqrt(2.0 / q.kappa_a)));
            CHECK(q.transversality > 0.0);
        }
        for (int h : hits) CHECK(h == 2);
    }

    TEST_CASE("crossing frame has u, v vanishing on the curves and positive inside the strips") {
        const auto sc = testing::two_disks();
        for (const auto& q : crossings(sc.metal[0], sc.metal[1])) {
            CHECK(std::abs(q.u(q.s, q.phi)) < 1e-10);
            CHECK(std::abs(q.v(q.s, q.phi)) < 1e-10);
            // Moving toward the centre of body a's strip along s increases u.
            const double toward_a = -q.sign_a * 1e-3;
            CHECK(q.u(q.s + toward_a, q.phi) > 0.0);
        }
    }

    TEST_CASE("tangent lines rotate with the scene") {
        const ConvexBody a(Ellipse{{-1.8, 0.3}, {0.9, 0.5}, 0.7});
        const ConvexBody b(Disk{{1.5, -0.4}, 0.8});
        const auto base = common_tangents(a, b);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> angle(-M_PI, M_PI);
        for (int trial = 0; trial < 5; ++trial) {
            const double rho = angle(rng);
            const Eigen::Rotation2Dd rot(rho);
            const ConvexBody ar(Ellipse{rot * Point(-1.8, 0.3), {0.9, 0.5}, 0.7 + rho});
            const ConvexBody br(Disk{rot * Point(1.5, -0.4), 0.8});
            const auto moved = common_tangents(ar, br);
            REQUIRE(moved.size() == base.size());
            for (const auto& l : base) {
                const auto target = canonical_line(l.s, l.phi + rho);
                double best = 1e9;
                for (const auto& m : moved) best = std::min(best, line_distance({m.s, m.phi}, target));
                CHECK(best < 1e-8);
            }
        }
    }

    TEST_CASE("overlapping or nearly touching bodies are degenerate") {
        const ConvexBody a(Disk{{0.0, 0.0}, 1.0});
        CHECK_THROWS_AS(require_disjoint(a, ConvexBody(Disk{{1.5, 0.0}, 1.0})), DegenerateGeometry);
        CHECK_THROWS_AS(require_disjoint(a, ConvexBody(Disk{{2.0 + 1e-5, 0.0}, 1.0})), DegenerateGeometry);
        CHECK_NOTHROW(require_disjoint(a, ConvexBody(Disk{{2.5, 0.0}, 1.0})));
        CHECK(separation(a, ConvexBody(Disk{{3.0, 0.0}, 1.0})) == doctest::Approx(1.0));
        CHECK(separation(a, ConvexBody(Disk{{1.0, 0.0}, 1.0})) < 0.0);
    }

    TEST_CASE("envelope branches are ordered") {
        const ConvexBody e(Ellipse{{0.3, -0.2}, {1.0, 0.4}, 0.5});
        std::vector<double> grid;
        for (int i = 0; i < 720; ++i) grid.push_back(-M_PI + i * M_PI / 360.0);
        const auto curve = envelope_curves(e, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) CHECK(curve.s_minus[i] < curve.s_plus[i]);
    }
}
