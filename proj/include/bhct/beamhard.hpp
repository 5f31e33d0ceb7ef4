#pragma once

#include "bhct/geometry.hpp"
#include "bhct/scene.hpp"
#include "bhct/xray.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace bhct {

/// F(t) = sum_{j=2}^{J} a_j t^j; coeffs[0] is a_2.
struct Polynomial {
    std::vector<double> coeffs;

    static constexpr int kMaxDegree = 8;
    int degree() const { return static_cast<int>(coeffs.size()) + 1; }
    double coeff(int j) const {
        return j >= 2 && j - 2 < static_cast<int>(coeffs.size()) ? coeffs[j - 2] : 0.0;
    }
    bool operator==(const Polynomial&) const = default;
};

/// F(t) = -ln(sinh(alpha eps t) / (alpha eps t)); only the product matters.
struct Physical {
    double alpha_eps = 0.1;
    bool operator==(const Physical&) const = default;
};

struct ZeroNonlinearity {
    bool operator==(const ZeroNonlinearity&) const = default;
};

using Nonlinearity = std::variant<Polynomial, Physical, ZeroNonlinearity>;

/// Throws ConfigError on linear/constant terms, degree above 8 or
/// alpha_eps <= 0.
void validate(const Nonlinearity& f);

double eval_nonlinearity(const Nonlinearity& f, double t);

/// Taylor coefficients of the physical model in t up to `order`;
/// result[j - 2] is a_j.
Polynomial taylor_of_physical(double alpha_eps, int order);

/// Checks pairwise disjointness and that no common tangent of two metal
/// bodies also touches a third.  Throws DegenerateGeometry.
void validate_scene(const Scene& scene, const GeometryTolerances& tol = {});

struct SynthesisResult {
    Sinogram p;
    Sinogram rf;
    Sinogram rchi;
    std::vector<Sinogram> rchi_bodies;
    /// F(R chi_D); P = rf + p_ma() up to rounding.
    Sinogram metal;

    Sinogram p_ma() const;
};

SynthesisResult synthesize(const Scene& scene, const Nonlinearity& f, const SinogramGrid& grid);

/// Adds i.i.d. N(0, sigma^2) noise from a seeded mt19937_64; sigma = 0
/// returns the input unchanged.
Sinogram add_noise(const Sinogram& p, double sigma, std::uint64_t seed);

}  // namespace bhct
