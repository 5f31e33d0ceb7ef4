#include "bhct/geometry.hpp"

#include "bhct/errors.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bhct {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double ellipse_quad(const Ellipse& e, double phi) {
    const double psi = phi - e.rotation;
    const double a = e.semi_axes[0], b = e.semi_axes[1];
    const double c = std::cos(psi), s = std::sin(psi);
    return a * a * c * c + b * b * s * s;
}

struct TrigTerms {
    double h = 0, dh = 0, d2h = 0;
};

TrigTerms eval_trig(const SupportCurve& c, double phi) {
    TrigTerms t;
    t.h = c.a0;
    const std::size_t order = std::max(c.cos_coeffs.size(), c.sin_coeffs.size());
    for (std::size_t i = 0; i < order; ++i) {
        const double k = static_cast<double>(i + 1);
        const double ak = i < c.cos_coeffs.size() ? c.cos_coeffs[i] : 0.0;
        const double bk = i < c.sin_coeffs.size() ? c.sin_coeffs[i] : 0.0;
        const double ck = std::cos(k * phi), sk = std::sin(k * phi);
        t.h += ak * ck + bk * sk;
        t.dh += k * (-ak * sk + bk * ck);
        t.d2h += -k * k * (ak * ck + bk * sk);
    }
    return t;
}

// Maximises f over the circle: coarse scan followed by Brent refinement.
template <class F>
std::pair<double, double> maximize_on_circle(F f, int grid = 1024) {
    double best_phi = -M_PI, best = -std::numeric_limits<double>::infinity();
    const double step = kTwoPi / grid;
    for (int k = 0; k < grid; ++k) {
        const double phi = -M_PI + k * step;
        const double val = f(phi);
        if (val > best) {
            best = val;
            best_phi = phi;
        }
    }
    auto neg = [&](double phi) { return -f(phi); };
    auto [phi, val] =
        boost::math::tools::brent_find_minima(neg, best_phi - step, best_phi + step, 52);
    if (-val > best) return {phi, -val};
    return {best_phi, best};
}

}  // namespace

double wrap_angle(double phi) {
    double w = std::fmod(phi + M_PI, kTwoPi);
    if (w < 0) w += kTwoPi;
    w -= M_PI;
    if (w >= M_PI) w -= kTwoPi;
    return w;
}

SupportCurve SupportCurve::from_samples(const std::vector<double>& samples, int max_order) {
    const int n = static_cast<int>(samples.size());
    if (n < 8) throw InvalidBody("support curve needs at least 8 samples");
    int order = (n - 1) / 2;
    if (max_order >= 0) order = std::min(order, max_order);
    SupportCurve c;
    c.a0 = 0.0;
    for (double v : samples) c.a0 += v;
    c.a0 /= n;
    c.cos_coeffs.assign(order, 0.0);
    c.sin_coeffs.assign(order, 0.0);
    for (int k = 1; k <= order; ++k) {
        double ak = 0, bk = 0;
        for (int i = 0; i < n; ++i) {
            const double phi = -M_PI + kTwoPi * i / n;
            ak += samples[i] * std::cos(k * phi);
            bk += samples[i] * std::sin(k * phi);
        }
        c.cos_coeffs[k - 1] = 2.0 * ak / n;
        c.sin_coeffs[k - 1] = 2.0 * bk / n;
    }
    return c;
}

ConvexBody::ConvexBody(Shape shape) : shape_(std::move(shape)) {
    std::visit(overloaded{
                   [](const Disk& d) {
                       if (!(d.radius > 0)) throw InvalidBody("disk radius must be positive");
                   },
                   [](const Ellipse& e) {
                       if (!(e.semi_axes[0] > 0 && e.semi_axes[1] > 0))
                           throw InvalidBody("ellipse semi-axes must be positive");
                   },
                   [](const SupportCurve& c) {
                       constexpr int grid = 4096;
                       double hmax = 0.0, rmin = std::numeric_limits<double>::infinity();
                       for (int k = 0; k < grid; ++k) {
                           const auto t = eval_trig(c, -M_PI + kTwoPi * k / grid);
                           hmax = std::max(hmax, std::abs(t.h));
                           rmin = std::min(rmin, t.h + t.d2h);
                       }
                       if (!(rmin > 1e-6 * hmax)) {
                           std::ostringstream os;
                           os << "support curve is not strictly convex (min h + h'' = " << rmin
                              << ")";
                           throw InvalidBody(os.str());
                       }
                   },
               },
               shape_);
}

double ConvexBody::support(double phi) const {
    return std::visit(overloaded{
                          [&](const Disk& d) { return d.center.dot(unit(phi)) + d.radius; },
                          [&](const Ellipse& e) {
                              return e.center.dot(unit(phi)) + std::sqrt(ellipse_quad(e, phi));
                          },
                          [&](const SupportCurve& c) { return eval_trig(c, phi).h; },
                      },
                      shape_);
}

double ConvexBody::support_derivative(double phi) const {
    return std::visit(overloaded{
                          [&](const Disk& d) { return d.center.dot(unit_perp(phi)); },
                          [&](const Ellipse& e) {
                              const double a = e.semi_axes[0], b = e.semi_axes[1];
                              const double q = ellipse_quad(e, phi);
                              const double dq = (b * b - a * a) * std::sin(2.0 * (phi - e.rotation));
                              return e.center.dot(unit_perp(phi)) + dq / (2.0 * std::sqrt(q));
                          },
                          [&](const SupportCurve& c) { return eval_trig(c, phi).dh; },
                      },
                      shape_);
}

double ConvexBody::radius_of_curvature(double phi) const {
    return std::visit(overloaded{
                          [&](const Disk& d) { return d.radius; },
                          [&](const Ellipse& e) {
                              const double a = e.semi_axes[0], b = e.semi_axes[1];
                              const double q = ellipse_quad(e, phi);
                              return a * a * b * b / (q * std::sqrt(q));
                          },
                          [&](const SupportCurve& c) {
                              const auto t = eval_trig(c, phi);
                              return t.h + t.d2h;
                          },
                      },
                      shape_);
}

Point ConvexBody::tangency(double phi) const {
    return support(phi) * unit(phi) + support_derivative(phi) * unit_perp(phi);
}

Point ConvexBody::centroid_hint() const {
    return std::visit(overloaded{
                          [](const Disk& d) { return d.center; },
                          [](const Ellipse& e) { return e.center; },
                          [](const SupportCurve& c) {
                              // Steiner point: (1/pi) int h(phi) theta dphi.
                              double cx = c.cos_coeffs.empty() ? 0.0 : c.cos_coeffs[0];
                              double cy = c.sin_coeffs.empty() ? 0.0 : c.sin_coeffs[0];
                              return Point{cx, cy};
                          },
                      },
                      shape_);
}

double ConvexBody::branch(int sign, double phi) const {
    return sign > 0 ? support(phi) : -support(phi + M_PI);
}

double ConvexBody::branch_derivative(int sign, double phi) const {
    return sign > 0 ? support_derivative(phi) : -support_derivative(phi + M_PI);
}

double ConvexBody::distance(const Point& p) const {
    if (const auto* d = std::get_if<Disk>(&shape_))
        return std::max(0.0, (p - d->center).norm() - d->radius);
    const auto [phi, gap] = maximize_on_circle([&](double a) { return p.dot(unit(a)) - support(a); });
    (void)phi;
    return std::max(0.0, gap);
}

bool ConvexBody::contains(const Point& p) const {
    return std::visit(overloaded{
                          [&](const Disk& d) { return (p - d.center).norm() <= d.radius; },
                          [&](const Ellipse& e) {
                              const Point r = p - e.center;
                              const double c = std::cos(e.rotation), s = std::sin(e.rotation);
                              const double x = (c * r.x() + s * r.y()) / e.semi_axes[0];
                              const double y = (-s * r.x() + c * r.y()) / e.semi_axes[1];
                              return x * x + y * y <= 1.0;
                          },
                          [&](const SupportCurve&) {
                              return maximize_on_circle([&](double a) {
                                         return p.dot(unit(a)) - support(a);
                                     }).second <= 0.0;
                          },
                      },
                      shape_);
}

double curvature(const ConvexBody& body, double boundary_param) {
    const double rho = body.radius_of_curvature(boundary_param);
    if (!(rho > 0)) throw InvalidBody("nonpositive radius of curvature");
    return 1.0 / rho;
}

SupportResult support(const ConvexBody& body, const Point& theta) {
    const double phi = std::atan2(theta.y(), theta.x());
    return {body.support(phi), body.tangency(phi)};
}

EnvelopeCurve envelope_curves(const ConvexBody& body, const std::vector<double>& phi_grid,
                              int body_index) {
    EnvelopeCurve e;
    e.body_index = body_index;
    e.phi = phi_grid;
    e.s_plus.reserve(phi_grid.size());
    e.s_minus.reserve(phi_grid.size());
    for (double phi : phi_grid) {
        e.s_plus.push_back(body.branch(+1, phi));
        e.s_minus.push_back(body.branch(-1, phi));
    }
    return e;
}

double CrossingPoint::u(double s_, double phi_) const {
    return -sign_a * (s_ - shape_a.branch(sign_a, phi_));
}

double CrossingPoint::v(double s_, double phi_) const {
    return -sign_b * (s_ - shape_b.branch(sign_b, phi_));
}

double CrossingPoint::normal_angle_a() const { return sign_a > 0 ? phi : wrap_angle(phi + M_PI); }
double CrossingPoint::normal_angle_b() const { return sign_b > 0 ? phi : wrap_angle(phi + M_PI); }

TangentLine CrossingPoint::line() const {
    const auto [cs, cphi] = canonical_line(s, phi);
    return {cs, cphi, sign_a == sign_b ? TangentKind::Outer : TangentKind::Inner};
}

std::pair<double, double> canonical_line(double s, double phi) {
    double p = wrap_angle(phi);
    if (p < 0) {
        p += M_PI;
        s = -s;
    }
    if (p >= M_PI) {
        p -= M_PI;
        s = -s;
    }
    return {s, p};
}

double separation(const ConvexBody& a, const ConvexBody& b) {
    return maximize_on_circle(
               [&](double phi) { return -b.support(phi + M_PI) - a.support(phi); })
        .second;
}

double diameter(const std::vector<ConvexBody>& bodies) {
    if (bodies.empty()) return 0.0;
    auto upper = [&](double phi) {
        double h = -std::numeric_limits<double>::infinity();
        for (const auto& b : bodies) h = std::max(h, b.support(phi));
        return h;
    };
    return maximize_on_circle([&](double phi) { return upper(phi) + upper(phi + M_PI); }).second;
}

void require_disjoint(const ConvexBody& a, const ConvexBody& b, const GeometryTolerances& tol) {
    const double gap = separation(a, b);
    const double diam = diameter({a, b});
    if (gap < tol.gap_fraction * diam) {
        std::ostringstream os;
        os << "bodies overlap or nearly touch (gap " << gap << ", required "
           << tol.gap_fraction * diam << ")";
        throw DegenerateGeometry(os.str());
    }
}

std::vector<CrossingPoint> crossings(const ConvexBody& d1, const ConvexBody& d2,
                                     std::pair<double, double> phi_domain,
                                     const GeometryTolerances& tol, int index_a, int index_b) {
    require_disjoint(d1, d2, tol);
    const double diam = diameter({d1, d2});
    const int n = tol.root_grid;
    const double step = kTwoPi / n;
    std::vector<CrossingPoint> out;

    for (int sa : {+1, -1}) {
        for (int sb : {+1, -1}) {
            auto f = [&](double phi) { return d1.branch(sa, phi) - d2.branch(sb, phi); };
            std::vector<double> values(n + 1);
            for (int k = 0; k <= n; ++k) values[k] = f(-M_PI + k * step);

            std::vector<double> roots;
            for (int k = 0; k < n; ++k) {
                double lo = -M_PI + k * step, hi = lo + step;
                double flo = values[k], fhi = values[k + 1];
                if (flo == 0.0) {
                    roots.push_back(lo);
                    continue;
                }
                if (flo * fhi >= 0.0) continue;
                while (hi - lo > tol.root_tolerance) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = f(mid);
                    if (fm == 0.0) {
                        lo = hi = mid;
                        break;
                    }
                    if ((fm < 0) == (flo < 0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push_back(0.5 * (lo + hi));
            }

            for (double root : roots) {
                const double phi = wrap_angle(root);
                if (phi < phi_domain.first || phi >= phi_domain.second) continue;
                const bool dup = std::any_of(out.begin(), out.end(), [&](const CrossingPoint& c) {
                    return c.sign_a == sa && c.sign_b == sb &&
                           std::abs(wrap_angle(c.phi - phi)) < 1e-9;
                });
                if (dup) continue;

                CrossingPoint c;
                c.phi = phi;
                c.s = 0.5 * (d1.branch(sa, phi) + d2.branch(sb, phi));
                c.body_a = index_a;
                c.body_b = index_b;
                c.sign_a = sa;
                c.sign_b = sb;
                c.shape_a = d1;
                c.shape_b = d2;
                c.transversality =
                    std::abs(d1.branch_derivative(sa, phi) - d2.branch_derivative(sb, phi));
                if (c.transversality < tol.transversality_fraction * diam) {
                    std::ostringstream os;
                    os << "near-tangential envelope crossing at phi = " << phi
                       << " (|d/dphi| = " << c.transversality << ")";
                    throw DegenerateGeometry(os.str());
                }
                c.kappa_a = curvature(d1, c.normal_angle_a());
                c.kappa_b = curvature(d2, c.normal_angle_b());
                c.h_a = 2.0 * std::sqrt(2.0 / c.kappa_a);
                c.h_b = 2.0 * std::sqrt(2.0 / c.kappa_b);
                out.push_back(std::move(c));
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const CrossingPoint& x, const CrossingPoint& y) {
        return x.phi != y.phi ? x.phi < y.phi : x.s < y.s;
    });
    return out;
}

std::vector<TangentLine> common_tangents(const ConvexBody& d1, const ConvexBody& d2,
                                         const GeometryTolerances& tol) {
    const auto cps = crossings(d1, d2, {-M_PI, M_PI}, tol);
    const double scale = std::max(1.0, diameter({d1, d2}));
    std::vector<TangentLine> lines;
    for (const auto& c : cps) {
        const TangentLine l = c.line();
        const bool dup = std::any_of(lines.begin(), lines.end(), [&](const TangentLine& m) {
            const double dphi = std::abs(m.phi - l.phi);
            const bool same_angle = dphi < 1e-8 || std::abs(dphi - M_PI) < 1e-8;
            const double s_other = dphi < 1e-8 ? m.s : -m.s;
            return same_angle && std::abs(s_other - l.s) < 1e-8 * scale;
        });
        if (!dup) lines.push_back(l);
    }
    std::sort(lines.begin(), lines.end(), [](const TangentLine& x, const TangentLine& y) {
        return x.phi != y.phi ? x.phi < y.phi : x.s < y.s;
    });
    return lines;
}

}  // namespace bhct
