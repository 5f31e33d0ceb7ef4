#pragma once

// Local singularity fits on sinogram data.
//
// Edge fits model a single envelope curve crossing of a sinogram row,
//   g(s) ~ c x_+^e + c' x_+^(e+1) + b0 + b1 x,   x = signed distance into the strip,
// using interior samples for the singular part and a guard band outside the
// strip to pin down the smooth background.
//
// Corner fits model the neighbourhood of a crossing q0 of two envelope
// curves in the frame (u, v) of signed strip distances:
//   g ~ sum beta_{m,n} u_+^{m/2} v_+^{n/2}            (cross terms, m,n >= 1)
//     + sum u_+^{m/2} P_m(v) + sum v_+^{n/2} Q_n(u)    (edge terms with smooth modulation)
//     + poly(u, v)                                     (smooth nuisance)

#include "bhct/geometry.hpp"
#include "bhct/xray.hpp"

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace bhct {

/// An envelope branch of a body, used to describe singular curves that
/// must stay outside a fit window.
struct SingularCurve {
    ConvexBody body;
    int sign = 1;
};

struct EdgeFitOptions {
    std::optional<double> frozen_exponent;  // 0.5 gives the amplitude-only mode
    bool next_order_term = true;            // include x_+^(e+1)
    double exterior_fraction = 0.5;         // guard band width / window width
    std::vector<SingularCurve> other_curves;
};

struct EdgeFit {
    double phi0 = 0.0;   // grid angle actually used
    double s_edge = 0.0;
    double amplitude = 0.0;
    double exponent = 0.0;
    int k_begin = 0;     // interior sample range [k_begin, k_end)
    int k_end = 0;
    int n_samples = 0;   // interior + guard samples
    double residual = 0.0;
    double r2 = 0.0;
};

/// Fits the edge where row phi0 crosses branch `sign` of the curve.  The
/// curve must be sampled on the sinogram's angle grid.
EdgeFit fit_edge(const Sinogram& g, const EnvelopeCurve& curve, int sign, double phi0,
                 double window_width, const EdgeFitOptions& opts = {});

/// Same, with the edge position given directly.
EdgeFit fit_edge_at(const Sinogram& g, int row, double s_edge, int sign, double window_width,
                    const EdgeFitOptions& opts = {});

struct ScaleRange {
    double lo;
    double hi;
};

/// Slope of log g against log(distance into the strip) over the given
/// distance range.  Throws InvalidLogFit for nonpositive samples or a range
/// spanning less than 1.5 decades.
double fit_exponent(const Sinogram& g, const EnvelopeCurve& curve, int sign, double phi0,
                    ScaleRange range);

struct CornerFitOptions {
    int j_max = 3;            // cross amplitudes reported for m + n <= j_max
    int cross_order = -1;     // cross terms fitted up to m + n <= cross_order; -1 means j_max + 2
    int pure_order = -1;      // pure edge terms up to this order; -1 means j_max + 2
    int nuisance_degree = 2;  // polynomial degree of background and edge modulation
    double max_condition = 1e8;
    std::vector<SingularCurve> other_curves;
};

struct CornerFit {
    CrossingPoint q0;
    double window_width = 0.0;
    std::map<std::pair<int, int>, double> beta;  // (m, n) -> amplitude, includes (m,0) and (0,n)
    std::vector<double> nuisance;                // remaining coefficients (scaled frame)
    double condition = 0.0;
    double residual = 0.0;    // RMS
    double data_scale = 0.0;  // max |g| over the window
    int n_samples = 0;

    double cross(int m, int n) const {
        auto it = beta.find({m, n});
        return it == beta.end() ? 0.0 : it->second;
    }
};

/// Samples of g inside |u|, |v| <= w around q0, as (row, column) pairs.
std::vector<std::pair<int, int>> corner_window(const SinogramGrid& grid, const CrossingPoint& q0,
                                               double w);

/// Throws ContaminatedWindow when any of the curves passes through the
/// window of q0.
void require_clean_window(const SinogramGrid& grid, const CrossingPoint& q0, double w,
                          const std::vector<SingularCurve>& curves);

CornerFit fit_corner(const Sinogram& g, const CrossingPoint& q0, double window_width,
                     const CornerFitOptions& opts = {});

/// Default window: 5% of s_max.
inline double default_window(const SinogramGrid& grid) { return 0.05 * grid.s_max; }

}  // namespace bhct
