#pragma once

// Parallel-beam Radon transform of analytic phantoms and filtered
// back-projection.
//
// Normalisation: the ramp filter is the Fourier multiplier |sigma| in s
// (angular frequency), backproject integrates over the full circle
// phi in [-pi, pi), and fbp = backproject(ramp_filter(.)) / (4 pi) inverts
// the transform.

#include "bhct/geometry.hpp"
#include "bhct/scene.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace bhct {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SinogramGrid {
    double s_max = 1.0;
    int n_s = 256;    // samples on [-s_max, s_max], both endpoints included
    int n_phi = 360;  // samples on [-pi, pi), endpoint excluded

    double ds() const { return 2.0 * s_max / (n_s - 1); }
    double dphi() const { return 2.0 * M_PI / n_phi; }
    double s(int k) const { return -s_max + k * ds(); }
    double phi(int i) const { return -M_PI + i * dphi(); }
    std::vector<double> phi_values() const;
    /// Index of the grid angle nearest to phi (cyclic).
    int nearest_phi_index(double phi) const;

    bool operator==(const SinogramGrid&) const = default;
};

enum class SinogramRole { Rf, RChiD, RChiD1, RChiD2, P, PMA, Generic };

std::string to_string(SinogramRole role);
SinogramRole role_from_string(const std::string& name);

struct Sinogram {
    SinogramGrid grid;
    RowMatrix values;  // n_phi x n_s
    SinogramRole role = SinogramRole::Generic;

    Sinogram() = default;
    Sinogram(const SinogramGrid& g, SinogramRole r)
        : grid(g), values(RowMatrix::Zero(g.n_phi, g.n_s)), role(r) {}

    double& operator()(int i, int k) { return values(i, k); }
    double operator()(int i, int k) const { return values(i, k); }
    /// Linear interpolation in s at grid angle index i; zero outside.
    double sample(int i, double s) const;
};

struct ImageGrid {
    double fov = 2.0;  // side length of the square field of view, centred at 0
    int n_x = 256;

    double pixel() const { return fov / n_x; }
    double x(int i) const { return -0.5 * fov + (i + 0.5) * pixel(); }

    bool operator==(const ImageGrid&) const = default;
};

/// values(iy, ix) holds f(x(ix), x(iy)).
struct Image {
    ImageGrid grid;
    RowMatrix values;

    Image() = default;
    explicit Image(const ImageGrid& g) : grid(g), values(RowMatrix::Zero(g.n_x, g.n_x)) {}

    /// Bilinear interpolation at a point; zero outside the grid.
    double sample(const Point& p) const;
};

double radon_body(const ConvexBody& body, double s, double phi);
double radon_smooth(const TissueBump& bump, double s, double phi);

struct SinogramSet {
    Sinogram rf;
    Sinogram rchi;
    std::vector<Sinogram> rchi_bodies;
};

/// Throws OutOfField when the scene is not strictly inside |s| < s_max.
SinogramSet sinogram(const Scene& scene, const SinogramGrid& grid);

struct RampOptions {
    bool apodize = true;
    double apodize_start = 0.8;  // fraction of Nyquist where the Hann taper begins
};

Sinogram ramp_filter(const Sinogram& g, const RampOptions& opts = {});

enum class Interpolation { Linear, Cubic };

Image backproject(const Sinogram& g, const ImageGrid& grid,
                  Interpolation interp = Interpolation::Linear);

struct FbpOptions {
    RampOptions ramp;
    Interpolation interp = Interpolation::Linear;
    double scale = 1.0 / (4.0 * M_PI);
};

Image fbp(const Sinogram& p, const ImageGrid& grid, const FbpOptions& opts = {});

/// Samples the phantom on the image grid (pixel centres).
Image rasterize(const Scene& scene, const ImageGrid& grid);

}  // namespace bhct
