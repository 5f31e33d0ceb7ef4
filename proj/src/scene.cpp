#include "bhct/scene.hpp"

#include <algorithm>
#include <cmath>

namespace bhct {

double evaluate(const TissueBump& bump, const Point& x) {
    if (const auto* g = std::get_if<GaussianBump>(&bump)) {
        const double r2 = (x - g->center).squaredNorm();
        return g->amplitude * std::exp(-r2 / (2.0 * g->sigma * g->sigma));
    }
    const auto& c = std::get<CompactBump>(bump);
    const double q = (x - c.center).squaredNorm() / (c.radius * c.radius);
    if (q >= 1.0) return 0.0;
    return c.amplitude * std::exp(1.0 - 1.0 / (1.0 - q));
}

double Scene::evaluate(const Point& x) const {
    double f = 0.0;
    for (const auto& t : tissue) f += bhct::evaluate(t, x);
    for (const auto& b : metal)
        if (b.contains(x)) f += 1.0;
    return f;
}

double Scene::support_radius() const {
    double r = 0.0;
    for (const auto& b : metal) {
        constexpr int grid = 720;
        for (int k = 0; k < grid; ++k) r = std::max(r, b.support(-M_PI + 2.0 * M_PI * k / grid));
    }
    for (const auto& t : tissue) {
        if (const auto* g = std::get_if<GaussianBump>(&t))
            r = std::max(r, g->center.norm() + 4.0 * g->sigma);
        else {
            const auto& c = std::get<CompactBump>(t);
            r = std::max(r, c.center.norm() + c.radius);
        }
    }
    return r;
}

}  // namespace bhct
