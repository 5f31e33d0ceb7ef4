#include "bhct/singfit.hpp"

#include "bhct/errors.hpp"
#include "bhct/lstsq.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bhct {

namespace {

constexpr int kMinEdgeSamples = 16;

double pos_pow(double x, double e) { return x > 0.0 ? std::pow(x, e) : 0.0; }

int curve_row(const Sinogram& g, const EnvelopeCurve& curve, double phi0) {
    const int i = g.grid.nearest_phi_index(phi0);
    if (static_cast<int>(curve.phi.size()) != g.grid.n_phi ||
        std::abs(wrap_angle(curve.phi[i] - g.grid.phi(i))) > 1e-9)
        throw ConfigError("envelope curve is not sampled on the sinogram angle grid");
    return i;
}

double curve_edge(const EnvelopeCurve& curve, int row, int sign) {
    return sign > 0 ? curve.s_plus[row] : curve.s_minus[row];
}

struct EdgeSamples {
    std::vector<double> x;  // signed distance into the strip
    std::vector<double> y;
    int k_begin = 0, k_end = 0, interior = 0;
};

EdgeSamples collect_edge(const Sinogram& g, int row, double s_edge, int sign, double w,
                         double guard) {
    EdgeSamples out;
    out.k_begin = g.grid.n_s;
    for (int k = 0; k < g.grid.n_s; ++k) {
        const double x = sign * (s_edge - g.grid.s(k));
        if (x > w || x < -guard) continue;
        out.x.push_back(x);
        out.y.push_back(g(row, k));
        if (x > 0.0) {
            ++out.interior;
            out.k_begin = std::min(out.k_begin, k);
            out.k_end = std::max(out.k_end, k + 1);
        }
    }
    return out;
}

LstsqResult edge_lstsq(const EdgeSamples& smp, double e, bool next_order, double w) {
    const int cols = next_order ? 4 : 3;
    Eigen::MatrixXd a(smp.x.size(), cols);
    Eigen::VectorXd b(smp.x.size());
    for (std::size_t r = 0; r < smp.x.size(); ++r) {
        const double xs = smp.x[r] / w;
        int c = 0;
        a(r, c++) = pos_pow(xs, e);
        if (next_order) a(r, c++) = pos_pow(xs, e + 1.0);
        a(r, c++) = 1.0;
        a(r, c++) = xs;
        b(r) = smp.y[r];
    }
    return solve_least_squares(a, b);
}

}  // namespace

EdgeFit fit_edge(const Sinogram& g, const EnvelopeCurve& curve, int sign, double phi0,
                 double window_width, const EdgeFitOptions& opts) {
    const int row = curve_row(g, curve, phi0);
    return fit_edge_at(g, row, curve_edge(curve, row, sign), sign, window_width, opts);
}

EdgeFit fit_edge_at(const Sinogram& g, int row, double s_edge, int sign, double w,
                    const EdgeFitOptions& opts) {
    const double phi = g.grid.phi(row);
    const double guard = opts.exterior_fraction * w;
    for (const auto& c : opts.other_curves) {
        const double x = sign * (s_edge - c.body.branch(c.sign, phi));
        if (x <= w && x >= -guard) {
            std::ostringstream os;
            os << "edge window at phi = " << phi << " contains another singular curve";
            throw ContaminatedWindow(os.str());
        }
    }

    const auto smp = collect_edge(g, row, s_edge, sign, w, guard);
    if (smp.interior < kMinEdgeSamples) {
        std::ostringstream os;
        os << "edge window holds " << smp.interior << " interior samples (< " << kMinEdgeSamples
           << ")";
        throw IllConditionedFit(os.str());
    }

    double e = 0.5;
    if (opts.frozen_exponent) {
        e = *opts.frozen_exponent;
    } else {
        // Variable projection: scan the exponent, then refine with Brent.
        auto rss = [&](double ex) { return edge_lstsq(smp, ex, opts.next_order_term, w).residual_rms; };
        double best_e = 0.05, best = rss(best_e);
        for (double ex = 0.1; ex <= 4.0 + 1e-12; ex += 0.05) {
            const double r = rss(ex);
            if (r < best) {
                best = r;
                best_e = ex;
            }
        }
        e = boost::math::tools::brent_find_minima(rss, std::max(0.01, best_e - 0.05), best_e + 0.05, 40)
                .first;
    }
    const auto fit = edge_lstsq(smp, e, opts.next_order_term, w);

    EdgeFit out;
    out.phi0 = phi;
    out.s_edge = s_edge;
    out.exponent = e;
    out.amplitude = fit.coef(0) / std::pow(w, e);
    out.k_begin = smp.k_begin;
    out.k_end = smp.k_end;
    out.n_samples = static_cast<int>(smp.x.size());
    out.residual = fit.residual_rms;
    out.r2 = fit.r2;
    return out;
}

double fit_exponent(const Sinogram& g, const EnvelopeCurve& curve, int sign, double phi0,
                    ScaleRange range) {
    if (!(range.lo > 0.0) || range.hi / range.lo < std::pow(10.0, 1.5) * (1.0 - 1e-12))
        throw InvalidLogFit("scale range must span at least 1.5 decades");
    const int row = curve_row(g, curve, phi0);
    const double s_edge = curve_edge(curve, row, sign);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int k = 0; k < g.grid.n_s; ++k) {
        const double x = sign * (s_edge - g.grid.s(k));
        if (x < range.lo || x > range.hi) continue;
        const double y = g(row, k);
        if (!(y > 0.0)) {
            std::ostringstream os;
            os << "nonpositive sample " << y << " at distance " << x << " from the edge";
            throw InvalidLogFit(os.str());
        }
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 3) throw InvalidLogFit("fewer than 3 samples in the scale range");
    const double den = n * sxx - sx * sx;
    return (n * sxy - sx * sy) / den;
}

std::vector<std::pair<int, int>> corner_window(const SinogramGrid& grid, const CrossingPoint& q0,
                                               double w) {
    std::vector<std::pair<int, int>> out;
    const int i0 = grid.nearest_phi_index(q0.phi);
    auto scan_row = [&](int i) {
        const double phi = grid.phi(i);
        // |u| <= w  <=>  |s - s_a(phi)| <= w, and likewise for v.
        const double sa = q0.shape_a.branch(q0.sign_a, phi);
        const double sb = q0.shape_b.branch(q0.sign_b, phi);
        const double lo = std::max(sa, sb) - w, hi = std::min(sa, sb) + w;
        if (lo > hi) return false;
        const int k0 = std::max(0, static_cast<int>(std::ceil((lo + grid.s_max) / grid.ds())));
        const int k1 = std::min(grid.n_s - 1, static_cast<int>(std::floor((hi + grid.s_max) / grid.ds())));
        bool any = false;
        for (int k = k0; k <= k1; ++k) {
            out.emplace_back(i, k);
            any = true;
        }
        return any || std::abs(sa - sb) <= 2.0 * w;
    };
    scan_row(i0);
    for (int dir : {+1, -1}) {
        for (int step = 1; step < grid.n_phi / 2; ++step) {
            const int i = ((i0 + dir * step) % grid.n_phi + grid.n_phi) % grid.n_phi;
            if (!scan_row(i)) break;
        }
    }
    return out;
}

void require_clean_window(const SinogramGrid& grid, const CrossingPoint& q0, double w,
                          const std::vector<SingularCurve>& curves) {
    if (curves.empty()) return;
    int last_row = -1;
    for (const auto& [i, k] : corner_window(grid, q0, w)) {
        (void)k;
        if (i == last_row) continue;
        last_row = i;
        const double phi = grid.phi(i);
        const double sa = q0.shape_a.branch(q0.sign_a, phi);
        const double sb = q0.shape_b.branch(q0.sign_b, phi);
        for (const auto& c : curves) {
            const double s_o = c.body.branch(c.sign, phi);
            if (s_o >= std::max(sa, sb) - w && s_o <= std::min(sa, sb) + w) {
                std::ostringstream os;
                os << "corner window at (s=" << q0.s << ", phi=" << q0.phi
                   << ") contains a third singular curve";
                throw ContaminatedWindow(os.str());
            }
        }
    }
}

CornerFit fit_corner(const Sinogram& g, const CrossingPoint& q0, double w,
                     const CornerFitOptions& opts) {
    const auto& grid = g.grid;
    const auto samples = corner_window(grid, q0, w);

    require_clean_window(grid, q0, w, opts.other_curves);

    const int j_max = opts.j_max;
    const int cross = std::max(j_max, opts.cross_order < 0 ? j_max + 2 : opts.cross_order);
    const int pure = opts.pure_order < 0 ? j_max + 2 : opts.pure_order;
    const int deg = opts.nuisance_degree;

    // Column layout: cross terms, pure terms, then nuisance columns.
    std::vector<std::pair<int, int>> singular_terms;
    for (int total = 2; total <= cross; ++total)
        for (int m = 1; m < total; ++m) singular_terms.emplace_back(m, total - m);
    for (int m = 1; m <= pure; ++m) singular_terms.emplace_back(m, 0);
    for (int n = 1; n <= pure; ++n) singular_terms.emplace_back(0, n);
    struct Modulated {
        int m, n, p, q;  // u_+^{m/2} v_+^{n/2} u^p v^q
    };
    std::vector<Modulated> nuisance_terms;
    for (int m = 1; m <= pure; ++m)
        for (int q = 1; q <= deg; ++q) nuisance_terms.push_back({m, 0, 0, q});
    for (int n = 1; n <= pure; ++n)
        for (int p = 1; p <= deg; ++p) nuisance_terms.push_back({0, n, p, 0});
    for (int p = 0; p <= deg; ++p)
        for (int q = 0; q + p <= deg; ++q) nuisance_terms.push_back({0, 0, p, q});

    const int ns = static_cast<int>(singular_terms.size());
    const int cols = ns + static_cast<int>(nuisance_terms.size());
    if (static_cast<int>(samples.size()) < 2 * cols) {
        std::ostringstream os;
        os << "corner window holds " << samples.size() << " samples for " << cols << " basis functions";
        throw IllConditionedFit(os.str());
    }

    Eigen::MatrixXd a(samples.size(), cols);
    Eigen::VectorXd b(samples.size());
    double data_scale = 0.0;
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const auto [i, k] = samples[r];
        const double phi = grid.phi(i), s = grid.s(k);
        const double u = q0.u(s, phi) / w, v = q0.v(s, phi) / w;
        auto up = [&](int m) { return m == 0 ? 1.0 : pos_pow(u, 0.5 * m); };
        auto vp = [&](int n) { return n == 0 ? 1.0 : pos_pow(v, 0.5 * n); };
        int c = 0;
        for (const auto& [m, n] : singular_terms) a(r, c++) = up(m) * vp(n);
        for (const auto& t : nuisance_terms)
            a(r, c++) = up(t.m) * vp(t.n) * std::pow(u, t.p) * std::pow(v, t.q);
        b(r) = g(i, k);
        data_scale = std::max(data_scale, std::abs(b(r)));
    }

    const auto sol = solve_least_squares(a, b);
    CornerFit out;
    out.q0 = q0;
    out.window_width = w;
    out.condition = sol.condition;
    out.residual = sol.residual_rms;
    out.data_scale = data_scale;
    out.n_samples = static_cast<int>(samples.size());
    if (!(sol.condition <= opts.max_condition)) {
        std::ostringstream os;
        os << "corner design condition number " << sol.condition << " exceeds " << opts.max_condition;
        throw IllConditionedFit(os.str());
    }
    for (int c = 0; c < ns; ++c) {
        const auto [m, n] = singular_terms[c];
        out.beta[{m, n}] = sol.coef(c) / std::pow(w, 0.5 * (m + n));
    }
    out.nuisance.assign(sol.coef.data() + ns, sol.coef.data() + cols);
    return out;
}

}  // namespace bhct
