#include "bhct/xray.hpp"

#include "bhct/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <sstream>

namespace bhct {

namespace {

// Boundary point of a support-curve body whose projection onto theta(phi)
// equals s, searched on the normal-angle arc [lo, hi] where the projection
// is monotone.
Point arc_crossing(const ConvexBody& body, double phi, double s, double lo, double hi) {
    const Point th = unit(phi);
    auto g = [&](double psi) { return body.tangency(psi).dot(th) - s; };
    double glo = g(lo);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return body.tangency(0.5 * (lo + hi));
}

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

double cubic_weight(double t) {
    // Keys cubic convolution, a = -0.5.
    t = std::abs(t);
    if (t < 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

}  // namespace

std::vector<double> SinogramGrid::phi_values() const {
    std::vector<double> out(n_phi);
    for (int i = 0; i < n_phi; ++i) out[i] = phi(i);
    return out;
}

int SinogramGrid::nearest_phi_index(double p) const {
    const double idx = (wrap_angle(p) + M_PI) / dphi();
    int i = static_cast<int>(std::lround(idx));
    return ((i % n_phi) + n_phi) % n_phi;
}

std::string to_string(SinogramRole role) {
    switch (role) {
        case SinogramRole::Rf: return "Rf";
        case SinogramRole::RChiD: return "RchiD";
        case SinogramRole::RChiD1: return "RchiD1";
        case SinogramRole::RChiD2: return "RchiD2";
        case SinogramRole::P: return "P";
        case SinogramRole::PMA: return "P_MA";
        case SinogramRole::Generic: return "generic";
    }
    return "generic";
}

SinogramRole role_from_string(const std::string& name) {
    for (auto r : {SinogramRole::Rf, SinogramRole::RChiD, SinogramRole::RChiD1,
                   SinogramRole::RChiD2, SinogramRole::P, SinogramRole::PMA,
                   SinogramRole::Generic})
        if (to_string(r) == name) return r;
    throw ConfigError("unknown sinogram role '" + name + "'");
}

double Sinogram::sample(int i, double s) const {
    const double t = (s + grid.s_max) / grid.ds();
    if (t < 0.0 || t > grid.n_s - 1) return 0.0;
    const int k = std::min(static_cast<int>(t), grid.n_s - 2);
    const double w = t - k;
    return (1.0 - w) * values(i, k) + w * values(i, k + 1);
}

double Image::sample(const Point& p) const {
    const double h = grid.pixel();
    const double tx = (p.x() + 0.5 * grid.fov) / h - 0.5;
    const double ty = (p.y() + 0.5 * grid.fov) / h - 0.5;
    if (tx < 0.0 || ty < 0.0 || tx > grid.n_x - 1 || ty > grid.n_x - 1) return 0.0;
    const int ix = std::min(static_cast<int>(tx), grid.n_x - 2);
    const int iy = std::min(static_cast<int>(ty), grid.n_x - 2);
    const double wx = tx - ix, wy = ty - iy;
    return (1 - wy) * ((1 - wx) * values(iy, ix) + wx * values(iy, ix + 1)) +
           wy * ((1 - wx) * values(iy + 1, ix) + wx * values(iy + 1, ix + 1));
}

double radon_body(const ConvexBody& body, double s, double phi) {
    const auto& shape = body.shape();
    if (const auto* d = std::get_if<Disk>(&shape)) {
        const double off = s - d->center.dot(unit(phi));
        const double r2 = d->radius * d->radius - off * off;
        return r2 > 0.0 ? 2.0 * std::sqrt(r2) : 0.0;
    }
    if (const auto* e = std::get_if<Ellipse>(&shape)) {
        const double off = s - e->center.dot(unit(phi));
        const double psi = phi - e->rotation;
        const double a = e->semi_axes[0], b = e->semi_axes[1];
        const double q = a * a * std::cos(psi) * std::cos(psi) + b * b * std::sin(psi) * std::sin(psi);
        const double r2 = q - off * off;
        return r2 > 0.0 ? 2.0 * a * b * std::sqrt(r2) / q : 0.0;
    }
    const double top = body.branch(+1, phi), bottom = body.branch(-1, phi);
    if (s >= top || s <= bottom) return 0.0;
    const Point p1 = arc_crossing(body, phi, s, phi, phi + M_PI);
    const Point p2 = arc_crossing(body, phi, s, phi + M_PI, phi + 2.0 * M_PI);
    return (p1 - p2).norm();
}

double radon_smooth(const TissueBump& bump, double s, double phi) {
    if (const auto* g = std::get_if<GaussianBump>(&bump)) {
        const double off = s - g->center.dot(unit(phi));
        return g->amplitude * g->sigma * std::sqrt(2.0 * M_PI) *
               std::exp(-off * off / (2.0 * g->sigma * g->sigma));
    }
    const auto& c = std::get<CompactBump>(bump);
    const double off = s - c.center.dot(unit(phi));
    const double half2 = c.radius * c.radius - off * off;
    if (half2 <= 0.0) return 0.0;
    const double half = std::sqrt(half2);
    auto integrand = [&](double t) {
        const double q = (off * off + t * t) / (c.radius * c.radius);
        return q >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - q));
    };
    const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, -half, half, 20, 1e-13);
    return c.amplitude * val;
}

SinogramSet sinogram(const Scene& scene, const SinogramGrid& grid) {
    const double r = scene.support_radius();
    if (!(r < grid.s_max)) {
        std::ostringstream os;
        os << "scene support radius " << r << " does not fit inside s_max " << grid.s_max;
        throw OutOfField(os.str());
    }
    SinogramSet out;
    out.rf = Sinogram(grid, SinogramRole::Rf);
    out.rchi = Sinogram(grid, SinogramRole::RChiD);
    for (std::size_t j = 0; j < scene.metal.size(); ++j) {
        const auto role = j == 0 ? SinogramRole::RChiD1
                          : j == 1 ? SinogramRole::RChiD2
                                   : SinogramRole::Generic;
        Sinogram body_sino(grid, role);
        const auto& body = scene.metal[j];
        for (int i = 0; i < grid.n_phi; ++i) {
            const double phi = grid.phi(i);
            const double lo = body.branch(-1, phi), hi = body.branch(+1, phi);
            for (int k = 0; k < grid.n_s; ++k) {
                const double s = grid.s(k);
                if (s <= lo || s >= hi) continue;
                body_sino(i, k) = radon_body(body, s, phi);
            }
        }
        out.rchi.values += body_sino.values;
        out.rchi_bodies.push_back(std::move(body_sino));
    }
    out.rf.values = out.rchi.values;
    for (const auto& t : scene.tissue)
        for (int i = 0; i < grid.n_phi; ++i) {
            const double phi = grid.phi(i);
            for (int k = 0; k < grid.n_s; ++k) out.rf(i, k) += radon_smooth(t, grid.s(k), phi);
        }
    return out;
}

Sinogram ramp_filter(const Sinogram& g, const RampOptions& opts) {
    const int n = g.grid.n_s;
    const int np = next_pow2(2 * n);
    const int nc = np / 2 + 1;
    const double ds = g.grid.ds();

    std::unique_ptr<double, FftwFree> real(
        static_cast<double*>(fftw_malloc(sizeof(double) * np)));
    std::unique_ptr<fftw_complex, FftwFree> freq(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc)));
    PlanPtr fwd(fftw_plan_dft_r2c_1d(np, real.get(), freq.get(), FFTW_ESTIMATE));
    PlanPtr inv(fftw_plan_dft_c2r_1d(np, freq.get(), real.get(), FFTW_ESTIMATE));

    // Sampled band-limited impulse response of the |sigma| multiplier,
    // laid out circularly; its DFT is the discrete ramp without DC bias.
    double* buf = real.get();
    for (int m = 0; m < np; ++m) {
        const int idx = m < np / 2 ? m : m - np;
        if (idx == 0)
            buf[m] = M_PI / (2.0 * ds * ds);
        else if (idx % 2 != 0)
            buf[m] = -2.0 / (M_PI * idx * idx * ds * ds);
        else
            buf[m] = 0.0;
    }
    fftw_execute(fwd.get());
    std::vector<double> response(nc);
    for (int k = 0; k < nc; ++k) {
        double w = 1.0;
        const double frac = static_cast<double>(k) / (np / 2);  // fraction of Nyquist
        if (opts.apodize && frac > opts.apodize_start) {
            const double t = (frac - opts.apodize_start) / (1.0 - opts.apodize_start);
            w = 0.5 * (1.0 + std::cos(M_PI * t));
        }
        response[k] = freq.get()[k][0] * w * ds / np;
    }

    Sinogram out(g.grid, g.role);
    for (int i = 0; i < g.grid.n_phi; ++i) {
        std::fill(buf, buf + np, 0.0);
        for (int k = 0; k < n; ++k) buf[k] = g(i, k);
        fftw_execute(fwd.get());
        for (int k = 0; k < nc; ++k) {
            freq.get()[k][0] *= response[k];
            freq.get()[k][1] *= response[k];
        }
        fftw_execute(inv.get());
        for (int k = 0; k < n; ++k) out(i, k) = buf[k];
    }
    return out;
}

Image backproject(const Sinogram& g, const ImageGrid& grid, Interpolation interp) {
    Image img(grid);
    const int nx = grid.n_x;
    const int ns = g.grid.n_s;
    const double inv_ds = 1.0 / g.grid.ds();
    const double dphi = g.grid.dphi();
    const double h = grid.pixel();
    const double x0 = grid.x(0);

    for (int i = 0; i < g.grid.n_phi; ++i) {
        const double phi = g.grid.phi(i);
        const double c = std::cos(phi), sn = std::sin(phi);
        const double* row = g.values.row(i).data();
        for (int iy = 0; iy < nx; ++iy) {
            const double y = grid.x(iy);
            // Fractional sample index along the pixel row, linear in ix.
            const double t0 = (x0 * c + y * sn + g.grid.s_max) * inv_ds;
            const double dt = h * c * inv_ds;
            double* out = img.values.row(iy).data();
            if (interp == Interpolation::Linear) {
                for (int ix = 0; ix < nx; ++ix) {
                    const double t = t0 + ix * dt;
                    if (t < 0.0 || t >= ns - 1) continue;
                    const int k = static_cast<int>(t);
                    const double w = t - k;
                    out[ix] += row[k] + w * (row[k + 1] - row[k]);
                }
            } else {
                for (int ix = 0; ix < nx; ++ix) {
                    const double t = t0 + ix * dt;
                    if (t < 0.0 || t >= ns - 1) continue;
                    const int k = static_cast<int>(t);
                    const double w = t - k;
                    double acc = 0.0;
                    for (int m = -1; m <= 2; ++m) {
                        const int kk = k + m;
                        if (kk < 0 || kk >= ns) continue;
                        acc += row[kk] * cubic_weight(w - m);
                    }
                    out[ix] += acc;
                }
            }
        }
    }
    img.values *= dphi;
    return img;
}

Image fbp(const Sinogram& p, const ImageGrid& grid, const FbpOptions& opts) {
    Image img = backproject(ramp_filter(p, opts.ramp), grid, opts.interp);
    img.values *= opts.scale;
    return img;
}

Image rasterize(const Scene& scene, const ImageGrid& grid) {
    Image img(grid);
    for (int iy = 0; iy < grid.n_x; ++iy)
        for (int ix = 0; ix < grid.n_x; ++ix)
            img.values(iy, ix) = scene.evaluate({grid.x(ix), grid.x(iy)});
    return img;
}

}  // namespace bhct
