#pragma once

// Recovery of the polynomial nonlinearity from corrupted sinograms, and
// detection of the streaks it causes in reconstructions.

#include "bhct/beamhard.hpp"
#include "bhct/geometry.hpp"
#include "bhct/scene.hpp"
#include "bhct/singfit.hpp"
#include "bhct/xray.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace bhct {

/// Multinomial weight j! / (m! n!) with j = m + n.
double multinomial(int m, int n);

enum class IdentifyMethod { Regression, Singular };

std::string to_string(IdentifyMethod m);
IdentifyMethod method_from_string(const std::string& name);

enum class EdgeAmplitudeSource { Fitted, Formula };

struct IdentifyOptions {
    int j_max = 3;
    double window_width = 0.0;  // 0 selects default_window(grid)
    int nuisance_degree = 2;
    double max_condition = 1e8;
    // Regression: windows whose RMS residual exceeds this fraction of
    // max |P| over the window flag a geometry mismatch.
    double mismatch_threshold = 1e-2;
    // Singular method.
    EdgeAmplitudeSource edge_source = EdgeAmplitudeSource::Fitted;
    bool subtract_linear = true;   // fit the corner model on P - R chi_D
    bool peel = false;             // subtract a_j g^j before estimating degree j + 1
    double spread_limit = 0.5;     // per-(m, n) relative spread that raises a flag
    GeometryTolerances tol;
};

struct CrossingEstimate {
    double s = 0.0;
    double phi = 0.0;
    int body_a = 0, body_b = 1;
    int sign_a = 1, sign_b = 1;
    std::vector<double> coeffs;                   // a_j, j = 2..j_max
    std::map<std::pair<int, int>, double> pairs;  // singular: a_j from each (m, n)
    double h_a = 0.0, h_b = 0.0;                  // edge amplitudes used
    double h_formula_a = 0.0, h_formula_b = 0.0;  // 2 sqrt(2 / kappa)
    double residual = 0.0;                        // RMS
    double relative_residual = 0.0;
    double condition = 0.0;
    int n_samples = 0;
};

struct SkippedCrossing {
    double s = 0.0;
    double phi = 0.0;
    std::string reason;
};

struct IdentifyReport {
    IdentifyMethod method = IdentifyMethod::Regression;
    int j_max = 3;
    double window_width = 0.0;
    int nuisance_degree = 2;
    std::vector<double> coeffs;  // median over crossings, a_j for j = 2..j_max
    std::vector<double> spread;  // standard deviation over crossings
    std::vector<double> pair_spread;  // singular: relative spread over (m, n) per j
    std::vector<CrossingEstimate> crossings;
    std::vector<SkippedCrossing> skipped;
    double residual = 0.0;       // RMS over all windows
    double max_relative_residual = 0.0;
    double max_condition = 0.0;
    std::vector<std::string> flags;

    double coeff(int j) const {
        return j >= 2 && j - 2 < static_cast<int>(coeffs.size()) ? coeffs[j - 2] : 0.0;
    }
};

/// All sinogram crossings of envelope curves over metal body pairs, sorted
/// by (phi, s).
std::vector<CrossingPoint> scene_crossings(const Scene& scene, const GeometryTolerances& tol = {});

/// R chi_D of the scene's metal on the grid.
Sinogram metal_sinogram(const Scene& scene, const SinogramGrid& grid);

IdentifyReport identify_regression(const Sinogram& p, const Scene& scene,
                                   const IdentifyOptions& opts = {});
IdentifyReport identify_singular(const Sinogram& p, const Scene& scene,
                                 const IdentifyOptions& opts = {});
IdentifyReport identify(const Sinogram& p, const Scene& scene, IdentifyMethod method,
                        const IdentifyOptions& opts = {});

/// Common tangents of every metal body pair.  Throws DegenerateGeometry
/// when a tangent also touches a third body.
std::vector<TangentLine> predict_streaks(const Scene& scene, const GeometryTolerances& tol = {});

struct StreakOptions {
    double profile_half_width = 0.0;  // 0 selects 10 pixels
    int n_stations = 64;              // candidates spread along the line
    int min_stations = 8;
};

struct Station {
    Point position{0.0, 0.0};
    double kink = 0.0;    // c in p(t) ~ c|t| + a + b t, p averaged over |tau| <= w along the line
    double peak_offset = 0.0;  // nearest local max of |grad f| along the normal, in pixels
};

struct StreakScore {
    TangentLine line;
    double score = 0.0;  // median |c| over stations
    int stations = 0;
    int excluded = 0;    // candidates rejected by the exclusion zones
    std::vector<Station> samples;
};

StreakScore streak_score(const Image& image, const TangentLine& line, const Scene& scene,
                         const StreakOptions& opts = {});

struct ArtifactVerdict {
    bool artifact_free = true;
    double baseline = 0.0;
    double threshold_factor = 3.0;
    std::vector<StreakScore> scores;
};

/// Baseline for the test: largest line score of an image reconstructed
/// without the nonlinearity on the same geometry and grids.
double null_baseline(const Image& null_image, const Scene& scene, const StreakOptions& opts = {});

ArtifactVerdict test_artifact_free(const Image& image, const Scene& scene, double baseline,
                                   double threshold_factor = 3.0, const StreakOptions& opts = {});

}  // namespace bhct
