#pragma once

#include "bhct/beamhard.hpp"
#include "bhct/geometry.hpp"
#include "bhct/scene.hpp"

#include <cmath>

namespace bhct::testing {

inline Scene two_disks() {
    Scene s;
    s.metal.emplace_back(Disk{{-2.0, 0.0}, 1.0});
    s.metal.emplace_back(Disk{{2.0, 0.0}, 1.0});
    return s;
}

inline Scene two_disks_with_tissue() {
    Scene s = two_disks();
    s.tissue.push_back(GaussianBump{0.5, 0.5, {0.0, 1.5}});
    return s;
}

inline double rel_err(double value, double expected) { return std::abs(value / expected - 1.0); }

}  // namespace bhct::testing
