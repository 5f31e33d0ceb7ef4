#pragma once

#include "bhct/geometry.hpp"

#include <variant>
#include <vector>

namespace bhct {

/// A * exp(-|x - c|^2 / (2 sigma^2)).
struct GaussianBump {
    double amplitude = 1.0;
    double sigma = 1.0;
    Point center{0.0, 0.0};

    bool operator==(const GaussianBump&) const = default;
};

/// A * exp(1 - 1 / (1 - |x - c|^2 / R^2)) inside |x - c| < R, zero outside.
/// Smooth, compactly supported, peak value A.
struct CompactBump {
    double amplitude = 1.0;
    double radius = 1.0;
    Point center{0.0, 0.0};

    bool operator==(const CompactBump&) const = default;
};

using TissueBump = std::variant<GaussianBump, CompactBump>;

double evaluate(const TissueBump& bump, const Point& x);

/// Phantom f = h + chi_D: smooth tissue h plus unit-density metal bodies.
struct Scene {
    std::vector<ConvexBody> metal;
    std::vector<TissueBump> tissue;

    double evaluate(const Point& x) const;
    /// Radius of a centred disk containing the metal and the effective
    /// support of the tissue (Gaussians cut at 4 sigma).
    double support_radius() const;

    bool operator==(const Scene&) const = default;
};

}  // namespace bhct
