#include "bhct/identify.hpp"

#include "bhct/errors.hpp"
#include "bhct/lstsq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

namespace bhct {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (v.size() - 1));
}

void check_options(const IdentifyOptions& opts) {
    if (opts.j_max < 2 || opts.j_max > Polynomial::kMaxDegree) {
        std::ostringstream os;
        os << "j_max must lie in [2, " << Polynomial::kMaxDegree << "], got " << opts.j_max;
        throw ConfigError(os.str());
    }
    if (opts.nuisance_degree < 0) throw ConfigError("nuisance_degree must be nonnegative");
    if (opts.window_width < 0.0) throw ConfigError("window_width must be nonnegative");
}

// Curves of every body other than the two that define the crossing.
std::vector<SingularCurve> other_curves(const Scene& scene, const CrossingPoint& q) {
    std::vector<SingularCurve> out;
    for (int b = 0; b < static_cast<int>(scene.metal.size()); ++b)
        for (int sign : {+1, -1}) {
            if ((b == q.body_a && sign == q.sign_a) || (b == q.body_b && sign == q.sign_b)) continue;
            out.push_back({scene.metal[b], sign});
        }
    return out;
}

struct Usable {
    std::vector<CrossingPoint> points;
    std::vector<SkippedCrossing> skipped;
};

// Crossings whose window lies in the field and is free of other curves.
Usable usable_crossings(const Scene& scene, const SinogramGrid& grid, double w,
                        const GeometryTolerances& tol) {
    const auto all = scene_crossings(scene, tol);
    if (all.empty()) throw NoCrossings("the metal bodies produce no envelope crossings");
    Usable u;
    for (const auto& q : all) {
        if (std::abs(q.s) + 2.0 * w >= grid.s_max) {
            u.skipped.push_back({q.s, q.phi, "window leaves the sinogram field"});
            continue;
        }
        try {
            require_clean_window(grid, q, w, other_curves(scene, q));
            u.points.push_back(q);
        } catch (const ContaminatedWindow& e) {
            u.skipped.push_back({q.s, q.phi, e.what()});
        }
    }
    if (u.points.empty()) throw NoCrossings("no crossing has a usable window");
    return u;
}

void require_grid_match(const Sinogram& p, const Scene& scene) {
    if (p.values.rows() != p.grid.n_phi || p.values.cols() != p.grid.n_s)
        throw ConfigError("sinogram storage does not match its grid");
    if (scene.support_radius() >= p.grid.s_max)
        throw OutOfField("scene support exceeds the sinogram field");
}

CrossingEstimate start_estimate(const CrossingPoint& q) {
    CrossingEstimate e;
    e.s = q.s;
    e.phi = q.phi;
    e.body_a = q.body_a;
    e.body_b = q.body_b;
    e.sign_a = q.sign_a;
    e.sign_b = q.sign_b;
    e.h_formula_a = q.h_a;
    e.h_formula_b = q.h_b;
    return e;
}

void aggregate(IdentifyReport& r) {
    const int nj = r.j_max - 1;
    r.coeffs.assign(nj, 0.0);
    r.spread.assign(nj, 0.0);
    double ss = 0.0;
    int count = 0;
    for (int j = 0; j < nj; ++j) {
        std::vector<double> v;
        for (const auto& c : r.crossings) v.push_back(c.coeffs[j]);
        r.coeffs[j] = median(v);
        r.spread[j] = stddev(v);
    }
    for (const auto& c : r.crossings) {
        ss += c.residual * c.residual * c.n_samples;
        count += c.n_samples;
        r.max_relative_residual = std::max(r.max_relative_residual, c.relative_residual);
        r.max_condition = std::max(r.max_condition, c.condition);
    }
    r.residual = count ? std::sqrt(ss / count) : 0.0;
}

IdentifyReport start_report(IdentifyMethod method, const SinogramGrid& grid,
                            const IdentifyOptions& opts) {
    IdentifyReport r;
    r.method = method;
    r.j_max = opts.j_max;
    r.window_width = opts.window_width > 0.0 ? opts.window_width : default_window(grid);
    r.nuisance_degree = opts.nuisance_degree;
    return r;
}

Sinogram powered(const Sinogram& g, int j) {
    Sinogram out(g.grid, SinogramRole::Generic);
    out.values = g.values.array().pow(j).matrix();
    return out;
}

}  // namespace

double multinomial(int m, int n) {
    if (m < 0 || n < 0) return 0.0;
    double c = 1.0;
    for (int i = 1; i <= n; ++i) c = c * (m + i) / i;
    return std::round(c);
}

std::string to_string(IdentifyMethod m) {
    return m == IdentifyMethod::Regression ? "regression" : "singular";
}

IdentifyMethod method_from_string(const std::string& name) {
    if (name == "regression") return IdentifyMethod::Regression;
    if (name == "singular") return IdentifyMethod::Singular;
    throw ConfigError("unknown identification method '" + name + "'");
}

std::vector<CrossingPoint> scene_crossings(const Scene& scene, const GeometryTolerances& tol) {
    std::vector<CrossingPoint> out;
    const int n = static_cast<int>(scene.metal.size());
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            auto c = crossings(scene.metal[a], scene.metal[b], {-M_PI, M_PI}, tol, a, b);
            out.insert(out.end(), c.begin(), c.end());
        }
    std::sort(out.begin(), out.end(), [](const CrossingPoint& x, const CrossingPoint& y) {
        return x.phi != y.phi ? x.phi < y.phi : x.s < y.s;
    });
    return out;
}

Sinogram metal_sinogram(const Scene& scene, const SinogramGrid& grid) {
    Sinogram g(grid, SinogramRole::RChiD);
    for (int i = 0; i < grid.n_phi; ++i) {
        const double phi = grid.phi(i);
        for (const auto& body : scene.metal) {
            const double lo = body.branch(-1, phi), hi = body.branch(+1, phi);
            const int k0 = std::max(0, static_cast<int>(std::ceil((lo + grid.s_max) / grid.ds())));
            const int k1 =
                std::min(grid.n_s - 1, static_cast<int>(std::floor((hi + grid.s_max) / grid.ds())));
            for (int k = k0; k <= k1; ++k) g(i, k) += radon_body(body, grid.s(k), phi);
        }
    }
    return g;
}

IdentifyReport identify_regression(const Sinogram& p, const Scene& scene,
                                   const IdentifyOptions& opts) {
    check_options(opts);
    validate_scene(scene, opts.tol);
    require_grid_match(p, scene);
    auto report = start_report(IdentifyMethod::Regression, p.grid, opts);
    const double w = report.window_width;
    const auto usable = usable_crossings(scene, p.grid, w, opts.tol);
    report.skipped = usable.skipped;
    const Sinogram g = metal_sinogram(scene, p.grid);
    const int nj = opts.j_max - 1;
    const int deg = opts.nuisance_degree;

    std::vector<std::string> ill;
    for (const auto& q : usable.points) {
        const auto samples = corner_window(p.grid, q, w);
        const int cols = nj + (deg + 1) * (deg + 2) / 2;
        if (static_cast<int>(samples.size()) < 2 * cols) {
            report.skipped.push_back({q.s, q.phi, "window holds too few samples"});
            continue;
        }
        Eigen::MatrixXd a(samples.size(), cols);
        Eigen::VectorXd b(samples.size());
        double scale = 0.0;
        for (std::size_t r = 0; r < samples.size(); ++r) {
            const auto [i, k] = samples[r];
            const double phi = p.grid.phi(i), s = p.grid.s(k);
            const double gv = g(i, k);
            int c = 0;
            for (int j = 2; j <= opts.j_max; ++j) a(r, c++) = std::pow(gv, j);
            const double u = q.u(s, phi) / w, v = q.v(s, phi) / w;
            for (int pu = 0; pu <= deg; ++pu)
                for (int pv = 0; pu + pv <= deg; ++pv) a(r, c++) = std::pow(u, pu) * std::pow(v, pv);
            b(r) = p(i, k) - gv;
            scale = std::max(scale, std::abs(p(i, k)));
        }
        const auto sol = solve_least_squares(a, b);
        if (!(sol.condition <= opts.max_condition)) {
            std::ostringstream os;
            os << "regression design condition number " << sol.condition << " exceeds "
               << opts.max_condition;
            ill.push_back(os.str());
            report.skipped.push_back({q.s, q.phi, os.str()});
            continue;
        }
        auto est = start_estimate(q);
        est.h_a = q.h_a;
        est.h_b = q.h_b;
        est.coeffs.assign(sol.coef.data(), sol.coef.data() + nj);
        est.residual = sol.residual_rms;
        est.relative_residual = scale > 0.0 ? sol.residual_rms / scale : 0.0;
        est.condition = sol.condition;
        est.n_samples = static_cast<int>(samples.size());
        report.crossings.push_back(std::move(est));
    }
    if (report.crossings.empty()) {
        if (!ill.empty()) throw IllConditionedFit(ill.front());
        throw NoCrossings("no crossing window could be fitted");
    }
    aggregate(report);
    if (report.max_relative_residual > opts.mismatch_threshold) {
        std::ostringstream os;
        os << "geometry_mismatch: relative window residual " << report.max_relative_residual
           << " exceeds " << opts.mismatch_threshold;
        report.flags.push_back(os.str());
    }
    return report;
}

IdentifyReport identify_singular(const Sinogram& p, const Scene& scene,
                                 const IdentifyOptions& opts) {
    check_options(opts);
    validate_scene(scene, opts.tol);
    require_grid_match(p, scene);
    auto report = start_report(IdentifyMethod::Singular, p.grid, opts);
    const double w = report.window_width;
    const auto usable = usable_crossings(scene, p.grid, w, opts.tol);
    report.skipped = usable.skipped;
    const Sinogram g = metal_sinogram(scene, p.grid);
    const int nj = opts.j_max - 1;

    // Edge amplitudes h at each crossing.
    std::vector<std::pair<double, double>> amps;
    {
        std::vector<std::optional<Sinogram>> single(scene.metal.size());
        auto edge_amp = [&](int body, int sign, double phi, double formula) {
            if (opts.edge_source == EdgeAmplitudeSource::Formula) return formula;
            if (!single[body]) {
                Scene one;
                one.metal.push_back(scene.metal[body]);
                single[body] = metal_sinogram(one, p.grid);
            }
            const int row = p.grid.nearest_phi_index(phi);
            EdgeFitOptions eo;
            eo.frozen_exponent = 0.5;
            const double s_edge = scene.metal[body].branch(sign, p.grid.phi(row));
            return fit_edge_at(*single[body], row, s_edge, sign, w, eo).amplitude;
        };
        for (const auto& q : usable.points)
            amps.emplace_back(edge_amp(q.body_a, q.sign_a, q.phi, q.h_a),
                              edge_amp(q.body_b, q.sign_b, q.phi, q.h_b));
    }

    CornerFitOptions co;
    co.j_max = opts.j_max;
    co.nuisance_degree = opts.nuisance_degree;
    co.max_condition = opts.max_condition;

    Sinogram data(p.grid, SinogramRole::Generic);
    data.values = opts.subtract_linear ? (p.values - g.values).eval() : p.values;

    // Fits of all crossings against `data`; nullopt marks a failed window.
    std::vector<std::string> ill;
    auto fit_all = [&]() {
        std::vector<std::optional<CornerFit>> fits;
        for (const auto& q : usable.points) {
            co.other_curves = other_curves(scene, q);
            try {
                fits.push_back(fit_corner(data, q, w, co));
            } catch (const IllConditionedFit& e) {
                ill.push_back(e.what());
                fits.push_back(std::nullopt);
            }
        }
        return fits;
    };
    auto pair_estimate = [&](const CornerFit& f, std::size_t idx, int m, int n) {
        const auto [ha, hb] = amps[idx];
        return f.cross(m, n) / (multinomial(m, n) * std::pow(ha, m) * std::pow(hb, n));
    };

    const std::size_t nq = usable.points.size();
    std::vector<CrossingEstimate> est(nq);
    std::vector<bool> ok(nq, true);
    for (std::size_t c = 0; c < nq; ++c) {
        est[c] = start_estimate(usable.points[c]);
        est[c].h_a = amps[c].first;
        est[c].h_b = amps[c].second;
        est[c].coeffs.assign(nj, 0.0);
    }

    auto record = [&](const std::vector<std::optional<CornerFit>>& fits, int j_lo, int j_hi) {
        for (std::size_t c = 0; c < nq; ++c) {
            if (!fits[c]) {
                ok[c] = false;
                continue;
            }
            const auto& f = *fits[c];
            for (int j = j_lo; j <= j_hi; ++j) {
                double sum = 0.0;
                for (int m = 1; m < j; ++m) {
                    const double a = pair_estimate(f, c, m, j - m);
                    est[c].pairs[{m, j - m}] = a;
                    sum += a;
                }
                est[c].coeffs[j - 2] = sum / (j - 1);
            }
            est[c].residual = f.residual;
            est[c].relative_residual = f.data_scale > 0.0 ? f.residual / f.data_scale : 0.0;
            est[c].condition = std::max(est[c].condition, f.condition);
            est[c].n_samples = f.n_samples;
        }
    };

    if (!opts.peel) {
        record(fit_all(), 2, opts.j_max);
    } else {
        const RowMatrix base = data.values;
        std::vector<double> peeled;
        for (int j = 2; j <= opts.j_max; ++j) {
            data.values = base;
            for (int i = 2; i < j; ++i) data.values -= peeled[i - 2] * powered(g, i).values;
            record(fit_all(), j, j);
            std::vector<double> v;
            for (std::size_t c = 0; c < nq; ++c)
                if (ok[c]) v.push_back(est[c].coeffs[j - 2]);
            peeled.push_back(median(v));
        }
    }

    for (std::size_t c = 0; c < nq; ++c) {
        if (ok[c])
            report.crossings.push_back(std::move(est[c]));
        else
            report.skipped.push_back({usable.points[c].s, usable.points[c].phi,
                                      "corner fit is ill-conditioned"});
    }
    if (report.crossings.empty()) {
        if (!ill.empty()) throw IllConditionedFit(ill.front());
        throw NoCrossings("no crossing window could be fitted");
    }
    aggregate(report);

    // Consistency of the (m, n) routes to each a_j.
    double amax = 0.0;
    for (double a : report.coeffs) amax = std::max(amax, std::abs(a));
    report.pair_spread.assign(nj, 0.0);
    for (int j = 3; j <= opts.j_max; ++j) {
        std::vector<double> per_pair;
        for (int m = 1; m < j; ++m) {
            std::vector<double> v;
            for (const auto& c : report.crossings) v.push_back(c.pairs.at({m, j - m}));
            per_pair.push_back(median(v));
        }
        const auto [lo, hi] = std::minmax_element(per_pair.begin(), per_pair.end());
        const double mean = std::accumulate(per_pair.begin(), per_pair.end(), 0.0) / per_pair.size();
        const double den = std::max(std::abs(mean), 1e-2 * amax);
        report.pair_spread[j - 2] = den > 0.0 ? (*hi - *lo) / den : 0.0;
        if (report.pair_spread[j - 2] > opts.spread_limit) {
            std::ostringstream os;
            os << "inconsistent_pairs: degree " << j << " relative spread "
               << report.pair_spread[j - 2];
            report.flags.push_back(os.str());
        }
    }
    for (const auto& c : report.crossings) {
        const double da = std::abs(c.h_a / c.h_formula_a - 1.0);
        const double db = std::abs(c.h_b / c.h_formula_b - 1.0);
        if (std::max(da, db) > 0.05) {
            std::ostringstream os;
            os << "edge_amplitude: fitted value deviates from the curvature formula by "
               << std::max(da, db) << " at (s=" << c.s << ", phi=" << c.phi << ")";
            report.flags.push_back(os.str());
        }
    }
    return report;
}

IdentifyReport identify(const Sinogram& p, const Scene& scene, IdentifyMethod method,
                        const IdentifyOptions& opts) {
    return method == IdentifyMethod::Regression ? identify_regression(p, scene, opts)
                                                : identify_singular(p, scene, opts);
}

std::vector<TangentLine> predict_streaks(const Scene& scene, const GeometryTolerances& tol) {
    if (scene.metal.size() < 2) return {};
    validate_scene(scene, tol);
    std::vector<TangentLine> out;
    for (std::size_t a = 0; a < scene.metal.size(); ++a)
        for (std::size_t b = a + 1; b < scene.metal.size(); ++b) {
            auto lines = common_tangents(scene.metal[a], scene.metal[b], tol);
            out.insert(out.end(), lines.begin(), lines.end());
        }
    std::sort(out.begin(), out.end(), [](const TangentLine& x, const TangentLine& y) {
        return x.phi != y.phi ? x.phi < y.phi : x.s < y.s;
    });
    return out;
}

namespace {

double image_gradient_norm(const Image& f, const Point& q) {
    const double e = f.grid.pixel();
    const double gx = (f.sample(q + Point(e, 0.0)) - f.sample(q - Point(e, 0.0))) / (2.0 * e);
    const double gy = (f.sample(q + Point(0.0, e)) - f.sample(q - Point(0.0, e))) / (2.0 * e);
    return std::hypot(gx, gy);
}

// Parameter range of the line inside the square |x|, |y| <= half.
std::optional<std::pair<double, double>> chord(const TangentLine& line, double half) {
    const Point th = unit(line.phi), tp = unit_perp(line.phi);
    const Point p0 = line.s * th;
    double lo = -1e300, hi = 1e300;
    for (int d = 0; d < 2; ++d) {
        if (std::abs(tp(d)) < 1e-15) {
            if (std::abs(p0(d)) > half) return std::nullopt;
            continue;
        }
        double t1 = (-half - p0(d)) / tp(d), t2 = (half - p0(d)) / tp(d);
        if (t1 > t2) std::swap(t1, t2);
        lo = std::max(lo, t1);
        hi = std::min(hi, t2);
    }
    if (lo >= hi) return std::nullopt;
    return std::make_pair(lo, hi);
}

}  // namespace

StreakScore streak_score(const Image& image, const TangentLine& line, const Scene& scene,
                         const StreakOptions& opts) {
    const double px = image.grid.pixel();
    const double w = opts.profile_half_width > 0.0 ? opts.profile_half_width : 10.0 * px;
    if (opts.n_stations < 1) throw ConfigError("n_stations must be positive");
    const auto lines = predict_streaks(scene);

    StreakScore out;
    out.line = line;
    const auto range = chord(line, 0.5 * image.grid.fov - 2.0 * w);
    if (range) {
        const Point th = unit(line.phi), tp = unit_perp(line.phi);
        const double step = (range->second - range->first) / opts.n_stations;
        const double h = 0.5 * px;
        const int n = static_cast<int>(std::floor(w / h + 1e-9));
        for (int c = 0; c < opts.n_stations; ++c) {
            const Point x = line.s * th + (range->first + (c + 0.5) * step) * tp;
            bool admissible = true;
            for (const auto& body : scene.metal)
                if (body.distance(x) < 2.0 * w) admissible = false;
            for (const auto& other : lines) {
                if (std::abs(other.s - line.s) < 1e-9 && std::abs(other.phi - line.phi) < 1e-9)
                    continue;
                if (std::abs(other.distance_to(x)) < 2.0 * w) admissible = false;
            }
            if (!admissible) {
                ++out.excluded;
                continue;
            }

            Eigen::MatrixXd a(2 * n + 1, 3);
            Eigen::VectorXd b(2 * n + 1);
            for (int j = -n; j <= n; ++j) {
                const double t = j * h;
                a(j + n, 0) = std::abs(t);
                a(j + n, 1) = 1.0;
                a(j + n, 2) = t;
                // Parallel profiles over |tau| <= w are averaged; the streak is
                // invariant along the line while aliasing patterns are not.
                double acc = 0.0;
                for (int k = -n; k <= n; ++k) acc += image.sample(x + t * th + (k * h) * tp);
                b(j + n) = acc / (2 * n + 1);
            }
            Station st;
            st.position = x;
            st.kink = solve_least_squares(a, b).coef(0);

            // Nearest local maximum of |grad f| along the normal; -1 when none.
            const double hq = 0.25 * px;
            const int m = static_cast<int>(std::floor(0.5 * w / hq + 1e-9));
            std::vector<double> g(2 * m + 3);
            for (int j = -m - 1; j <= m + 1; ++j) g[j + m + 1] = image_gradient_norm(image, x + j * hq * th);
            st.peak_offset = -1.0;
            for (int j = -m; j <= m; ++j) {
                const double v = g[j + m + 1];
                if (v >= g[j + m] && v >= g[j + m + 2] && v > 0.0) {
                    const double off = std::abs(j * hq) / px;
                    if (st.peak_offset < 0.0 || off < st.peak_offset) st.peak_offset = off;
                }
            }
            out.samples.push_back(st);
        }
    }
    out.stations = static_cast<int>(out.samples.size());
    if (out.stations < opts.min_stations) {
        std::ostringstream os;
        os << "line (s=" << line.s << ", phi=" << line.phi << ") has " << out.stations
           << " admissible stations (< " << opts.min_stations << ")";
        throw InsufficientStations(os.str());
    }
    std::vector<double> kinks;
    for (const auto& st : out.samples) kinks.push_back(std::abs(st.kink));
    out.score = median(kinks);
    return out;
}

double null_baseline(const Image& null_image, const Scene& scene, const StreakOptions& opts) {
    double base = 0.0;
    for (const auto& line : predict_streaks(scene))
        base = std::max(base, streak_score(null_image, line, scene, opts).score);
    return base;
}

ArtifactVerdict test_artifact_free(const Image& image, const Scene& scene, double baseline,
                                   double threshold_factor, const StreakOptions& opts) {
    if (!(threshold_factor > 0.0)) throw ConfigError("threshold_factor must be positive");
    ArtifactVerdict v;
    v.baseline = baseline;
    v.threshold_factor = threshold_factor;
    for (const auto& line : predict_streaks(scene)) {
        v.scores.push_back(streak_score(image, line, scene, opts));
        if (v.scores.back().score > threshold_factor * baseline) v.artifact_free = false;
    }
    return v;
}

}  // namespace bhct
