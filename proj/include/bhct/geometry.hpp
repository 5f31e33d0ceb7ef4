#pragma once

// Strictly convex bodies described through their support functions, the
// sinogram envelope curves they induce, and the common tangent lines of
// body pairs.
//
// Angles follow the sinogram convention theta(phi) = (cos phi, sin phi); a
// line is {x : x . theta(phi) = s}.  Bodies are parametrised on their
// boundary by the outward normal angle, so the tangency point of the
// support line in direction phi is x(phi) = h(phi) theta + h'(phi) theta_perp.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace bhct {

using Point = Eigen::Vector2d;

inline Point unit(double phi) { return {std::cos(phi), std::sin(phi)}; }
inline Point unit_perp(double phi) { return {-std::sin(phi), std::cos(phi)}; }

/// Wraps an angle into [-pi, pi).
double wrap_angle(double phi);

struct Disk {
    Point center{0.0, 0.0};
    double radius = 1.0;

    bool operator==(const Disk&) const = default;
};

struct Ellipse {
    Point center{0.0, 0.0};
    std::array<double, 2> semi_axes{1.0, 1.0};
    double rotation = 0.0;

    bool operator==(const Ellipse&) const = default;
};

/// Support function given as a trigonometric polynomial
///   h(phi) = a0 + sum_k (cos_coeffs[k-1] cos(k phi) + sin_coeffs[k-1] sin(k phi)).
struct SupportCurve {
    double a0 = 1.0;
    std::vector<double> cos_coeffs;
    std::vector<double> sin_coeffs;

    /// Builds the trigonometric polynomial from uniform samples of h on
    /// [-pi, pi) (endpoint excluded) by a truncated DFT.
    static SupportCurve from_samples(const std::vector<double>& samples, int max_order = -1);

    bool operator==(const SupportCurve&) const = default;
};

class ConvexBody {
public:
    using Shape = std::variant<Disk, Ellipse, SupportCurve>;

    /// Throws InvalidBody for nonpositive sizes or a support curve whose
    /// radius of curvature h + h'' is not bounded away from zero.
    explicit ConvexBody(Shape shape);

    const Shape& shape() const { return shape_; }

    double support(double phi) const;                 // h(phi)
    double support_derivative(double phi) const;      // h'(phi)
    double radius_of_curvature(double phi) const;     // h(phi) + h''(phi)
    Point tangency(double phi) const;                 // boundary point with outward normal theta(phi)
    Point centroid_hint() const;                      // any interior point

    /// Upper (+1) or lower (-1) envelope branch s^{+-}(phi).
    double branch(int sign, double phi) const;
    double branch_derivative(int sign, double phi) const;

    /// Euclidean distance from p to the body (0 inside).
    double distance(const Point& p) const;
    bool contains(const Point& p) const;

    bool operator==(const ConvexBody& o) const { return shape_ == o.shape_; }

private:
    Shape shape_;
};

/// Curvature 1/(h + h'') at the boundary point with outward normal angle
/// `boundary_param`.
double curvature(const ConvexBody& body, double boundary_param);

struct SupportResult {
    double s;
    Point tangency;
};

SupportResult support(const ConvexBody& body, const Point& theta);

struct EnvelopeCurve {
    int body_index = 0;
    std::vector<double> phi;
    std::vector<double> s_plus;
    std::vector<double> s_minus;
};

EnvelopeCurve envelope_curves(const ConvexBody& body, const std::vector<double>& phi_grid,
                              int body_index = 0);

enum class TangentKind { Outer, Inner };

struct TangentLine {
    double s = 0.0;
    double phi = 0.0;  // canonical range [0, pi)
    TangentKind kind = TangentKind::Outer;

    double distance_to(const Point& p) const { return p.dot(unit(phi)) - s; }
};

/// Point of S_a intersect S_b in the sinogram, with the local frame used by
/// the corner fits.  u = orient_a (s - s^{sign_a}_a(phi)) is positive inside
/// the strip of body a, and likewise v for body b.
struct CrossingPoint {
    double s = 0.0;
    double phi = 0.0;  // raw sinogram angle in [-pi, pi)
    int body_a = 0;
    int body_b = 1;
    int sign_a = 1;
    int sign_b = 1;
    double kappa_a = 0.0;
    double kappa_b = 0.0;
    double h_a = 0.0;  // edge amplitude 2 sqrt(2 / kappa_a)
    double h_b = 0.0;
    double transversality = 0.0;  // |d/dphi (s_a - s_b)| at the crossing
    ConvexBody shape_a{Disk{}};
    ConvexBody shape_b{Disk{}};

    double u(double s_, double phi_) const;
    double v(double s_, double phi_) const;
    /// Normal angle of the tangency point on body a / body b.
    double normal_angle_a() const;
    double normal_angle_b() const;
    TangentLine line() const;
};

struct GeometryTolerances {
    double gap_fraction = 1e-3;          // min gap / pair diameter
    double transversality_fraction = 1e-3;  // min |d(s_a - s_b)/dphi| / pair diameter
    int root_grid = 4096;
    double root_tolerance = 1e-13;
};

/// Max over directions of the separating slab width; negative when the
/// bodies overlap.
double separation(const ConvexBody& a, const ConvexBody& b);
/// Width of the union of the bodies maximised over directions.
double diameter(const std::vector<ConvexBody>& bodies);

/// Throws DegenerateGeometry when the bodies overlap or nearly touch.
void require_disjoint(const ConvexBody& a, const ConvexBody& b,
                      const GeometryTolerances& tol = {});

std::vector<TangentLine> common_tangents(const ConvexBody& d1, const ConvexBody& d2,
                                         const GeometryTolerances& tol = {});

std::vector<CrossingPoint> crossings(const ConvexBody& d1, const ConvexBody& d2,
                                     std::pair<double, double> phi_domain = {-M_PI, M_PI},
                                     const GeometryTolerances& tol = {}, int index_a = 0,
                                     int index_b = 1);

/// Canonical (s, phi) with phi in [0, pi) for the unoriented line.
std::pair<double, double> canonical_line(double s, double phi);

}  // namespace bhct
