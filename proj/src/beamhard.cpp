#include "bhct/beamhard.hpp"

#include "bhct/errors.hpp"

#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/factorials.hpp>

#include <cmath>
#include <random>
#include <sstream>

namespace bhct {

void validate(const Nonlinearity& f) {
    if (const auto* p = std::get_if<Polynomial>(&f)) {
        if (p->degree() > Polynomial::kMaxDegree)
            throw ConfigError("polynomial degree above 8");
        for (double a : p->coeffs)
            if (!std::isfinite(a)) throw ConfigError("non-finite polynomial coefficient");
    } else if (const auto* ph = std::get_if<Physical>(&f)) {
        if (!(ph->alpha_eps > 0)) throw ConfigError("physical model requires alpha_eps > 0");
    }
}

double eval_nonlinearity(const Nonlinearity& f, double t) {
    if (const auto* p = std::get_if<Polynomial>(&f)) {
        // Horner over a_J t^J + ... + a_2 t^2.
        double acc = 0.0;
        for (auto it = p->coeffs.rbegin(); it != p->coeffs.rend(); ++it) acc = acc * t + *it;
        return acc * t * t;
    }
    if (const auto* ph = std::get_if<Physical>(&f)) {
        const double u = std::abs(ph->alpha_eps * t);
        if (u < 1e-4) {
            const double u2 = u * u;
            return -(u2 / 6.0 - u2 * u2 / 180.0 + u2 * u2 * u2 / 2835.0);
        }
        if (u < 1.0) return -std::log(std::sinh(u) / u);
        // log sinh u = u - ln 2 + log1p(-exp(-2u)), stable for large u.
        return -(u - M_LN2 + std::log1p(-std::exp(-2.0 * u)) - std::log(u));
    }
    return 0.0;
}

Polynomial taylor_of_physical(double alpha_eps, int order) {
    if (order < 2) throw ConfigError("taylor order must be >= 2");
    Polynomial p;
    p.coeffs.assign(order - 1, 0.0);
    // ln(sinh u / u) = sum_{n>=1} 2^{2n} B_{2n} u^{2n} / (2n (2n)!).
    for (int n = 1; 2 * n <= order; ++n) {
        const double b2n = boost::math::bernoulli_b2n<double>(n);
        const double c = std::ldexp(1.0, 2 * n) * b2n /
                         (2.0 * n * boost::math::factorial<double>(2 * n));
        p.coeffs[2 * n - 2] = -c * std::pow(alpha_eps, 2 * n);
    }
    return p;
}

void validate_scene(const Scene& scene, const GeometryTolerances& tol) {
    const auto& m = scene.metal;
    if (m.empty()) throw DegenerateGeometry("scene has no metal bodies");
    const double diam = diameter(m);
    for (std::size_t a = 0; a < m.size(); ++a)
        for (std::size_t b = a + 1; b < m.size(); ++b) require_disjoint(m[a], m[b], tol);
    if (m.size() < 3) return;
    const double touch = tol.gap_fraction * diam;
    for (std::size_t a = 0; a < m.size(); ++a)
        for (std::size_t b = a + 1; b < m.size(); ++b)
            for (const auto& line : common_tangents(m[a], m[b], tol))
                for (std::size_t c = 0; c < m.size(); ++c) {
                    if (c == a || c == b) continue;
                    const double gap = std::min(std::abs(line.s - m[c].branch(+1, line.phi)),
                                                std::abs(line.s - m[c].branch(-1, line.phi)));
                    if (gap < touch) {
                        std::ostringstream os;
                        os << "line (s=" << line.s << ", phi=" << line.phi << ") is tangent to bodies "
                           << a << ", " << b << " and " << c;
                        throw DegenerateGeometry(os.str());
                    }
                }
}

Sinogram SynthesisResult::p_ma() const {
    Sinogram out = metal;
    out.role = SinogramRole::PMA;
    return out;
}

SynthesisResult synthesize(const Scene& scene, const Nonlinearity& f, const SinogramGrid& grid) {
    validate(f);
    auto set = sinogram(scene, grid);
    SynthesisResult r;
    r.metal = Sinogram(grid, SinogramRole::PMA);
    if (!std::holds_alternative<ZeroNonlinearity>(f))
        r.metal.values = set.rchi.values.unaryExpr([&](double t) { return eval_nonlinearity(f, t); });
    r.p = Sinogram(grid, SinogramRole::P);
    r.p.values = set.rf.values + r.metal.values;
    r.rf = std::move(set.rf);
    r.rchi = std::move(set.rchi);
    r.rchi_bodies = std::move(set.rchi_bodies);
    return r;
}

Sinogram add_noise(const Sinogram& p, double sigma, std::uint64_t seed) {
    if (sigma < 0) throw ConfigError("noise sigma must be >= 0");
    Sinogram out = p;
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < out.values.size(); ++i) out.values.data()[i] += noise(rng);
    return out;
}

}  // namespace bhct
