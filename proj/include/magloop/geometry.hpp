#pragma once

#include "magloop/errors.hpp"
#include "magloop/fields.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>

namespace magloop {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
using Vec2d = Vec2<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Tolerance for on-sphere and tangency invariants after repair.
inline constexpr double kSphereTol = 1e-12;

/// Point of the unit sphere in its ambient R^3 representation.
/// Renormalized on construction.
template <typename Scalar = double>
class SpherePoint {
public:
    SpherePoint() : x_(Vec3<Scalar>::UnitZ()) {}
    explicit SpherePoint(const Vec3<Scalar>& x) : x_(x / x.norm()) {}
    SpherePoint(Scalar x1, Scalar x2, Scalar x3) : SpherePoint(Vec3<Scalar>(x1, x2, x3)) {}

    const Vec3<Scalar>& vec() const noexcept { return x_; }
    Scalar operator[](int i) const { return x_(i); }

private:
    Vec3<Scalar> x_;
};

/// Tangent vector pinned to a base point; the normal component is removed on construction.
template <typename Scalar = double>
class TangentVector {
public:
    TangentVector() = default;
    TangentVector(const SpherePoint<Scalar>& base, const Vec3<Scalar>& v)
        : base_(base), v_(v - base.vec().dot(v) * base.vec()) {}

    const SpherePoint<Scalar>& base() const noexcept { return base_; }
    const Vec3<Scalar>& vec() const noexcept { return v_; }

private:
    SpherePoint<Scalar> base_;
    Vec3<Scalar> v_ = Vec3<Scalar>::Zero();
};

/// The conformal metric e^phi g_can on S^2.
struct ConformalMetric {
    SphericalField phi;

    static ConformalMetric round() { return {}; }
};

// ---------------------------------------------------------------------------
// raw ambient kernels; the typed wrappers below forward to these

template <typename Derived, typename Other>
auto tangent_part(const Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<Other>& w) {
    return (w - x.dot(w) * x).eval();
}

/// Round-metric covariant derivative plus the conformal correction
/// 1/2 [dphi(xdot) V + dphi(V) xdot - <xdot, V> grad phi].
template <typename Scalar>
Vec3<Scalar> conformal_covariant_derivative(const Vec3<Scalar>& x, const Vec3<Scalar>& grad_phi,
                                            const Vec3<Scalar>& xdot, const Vec3<Scalar>& V,
                                            const Vec3<Scalar>& Vdot) {
    const Vec3<Scalar> round = tangent_part(x, Vdot);
    return round + Scalar(0.5) * (grad_phi.dot(xdot) * V + grad_phi.dot(V) * xdot - xdot.dot(V) * grad_phi);
}

// ---------------------------------------------------------------------------

template <typename Scalar>
TangentVector<Scalar> project_tangent(const SpherePoint<Scalar>& x, const Vec3<Scalar>& w) {
    return TangentVector<Scalar>(x, w);
}

namespace detail {
template <typename Scalar>
void require_same_base(const SpherePoint<Scalar>& x, const TangentVector<Scalar>& u) {
    using std::abs;
    if ((x.vec() - u.base().vec()).norm() > kSphereTol)
        throw BasePointMismatch("tangent vector is not based at the evaluation point");
}
}  // namespace detail

template <typename Scalar>
Scalar metric_inner(const ConformalMetric& m, const SpherePoint<Scalar>& x, const TangentVector<Scalar>& u,
                    const TangentVector<Scalar>& v) {
    detail::require_same_base(x, u);
    detail::require_same_base(x, v);
    using std::exp;
    return exp(m.phi.value(x.vec())) * u.vec().dot(v.vec());
}

template <typename Scalar>
Scalar metric_norm(const ConformalMetric& m, const TangentVector<Scalar>& u) {
    using std::sqrt;
    return sqrt(metric_inner(m, u.base(), u, u));
}

/// Rotation by pi/2 in T_x S^2, x cross v. The same for every conformal metric.
template <typename Scalar>
TangentVector<Scalar> rotate_J(const SpherePoint<Scalar>& x, const TangentVector<Scalar>& v) {
    detail::require_same_base(x, v);
    return TangentVector<Scalar>(x, x.vec().cross(v.vec()));
}

/// D_t V along a curve through x with velocity xdot; Vdot is the ambient t-derivative of V.
template <typename Scalar>
TangentVector<Scalar> covariant_deriv(const ConformalMetric& m, const SpherePoint<Scalar>& x,
                                      const TangentVector<Scalar>& xdot, const TangentVector<Scalar>& V,
                                      const Vec3<Scalar>& Vdot) {
    detail::require_same_base(x, xdot);
    detail::require_same_base(x, V);
    const auto j = m.phi.jet(x.vec());
    return TangentVector<Scalar>(
        x, conformal_covariant_derivative<Scalar>(x.vec(), j.grad, xdot.vec(), V.vec(), Vdot));
}

/// Geodesic curvature <D_t xdot, J xdot>_g / |xdot|_g^3 from a 2-jet of the curve.
template <typename Scalar>
Scalar geodesic_curvature(const ConformalMetric& m, const SpherePoint<Scalar>& x, const Vec3<Scalar>& xdot,
                          const Vec3<Scalar>& xddot, double min_speed = 1e-12) {
    using std::exp;
    using std::sqrt;
    const Vec3<Scalar> v = tangent_part(x.vec(), xdot);
    if (v.norm() < min_speed) throw DegenerateCurve("geodesic curvature of a curve with zero velocity");
    const auto j = m.phi.jet(x.vec());
    const Vec3<Scalar> acc = conformal_covariant_derivative<Scalar>(x.vec(), j.grad, v, v, xddot);
    const Scalar ef = exp(j.value);
    const Scalar speed = sqrt(ef) * v.norm();
    return ef * acc.dot(x.vec().cross(v)) / (speed * speed * speed);
}

/// K = e^{-phi} (1 - Delta_can phi / 2).
template <typename Scalar>
Scalar gauss_curvature(const ConformalMetric& m, const SpherePoint<Scalar>& x) {
    using std::exp;
    const auto j = m.phi.jet(x.vec());
    return exp(-j.value) * (Scalar(1) - Scalar(0.5) * j.laplacian);
}

// ---------------------------------------------------------------------------
// stereographic charts

/// Orthonormal frame (e1, e2) of pole^perp with e1 x e2 = -pole, which makes
/// the chart orientation preserving for the outward orientation of S^2.
inline std::pair<Vec3d, Vec3d> chart_frame(const Vec3d& pole) {
    const Vec3d helper = std::abs(pole.x()) < 0.9 ? Vec3d::UnitX() : Vec3d::UnitY();
    const Vec3d e1 = (helper - helper.dot(pole) * pole).normalized();
    const Vec3d e2 = e1.cross(pole);
    return {e1, e2};
}

/// Projection from `pole` onto the plane through the origin orthogonal to it.
/// -pole maps to the origin and the equator of the pole to the unit circle.
inline Vec2d stereographic(const SpherePoint<double>& x, const SpherePoint<double>& pole) {
    const Vec3d& p = pole.vec();
    const double denom = 1.0 - x.vec().dot(p);
    if ((x.vec() - p).norm() < 1e-9) throw ChartError("stereographic chart evaluated at its pole");
    const auto [e1, e2] = chart_frame(p);
    return Vec2d(x.vec().dot(e1), x.vec().dot(e2)) / denom;
}

inline SpherePoint<double> inverse_stereographic(const Vec2d& y, const SpherePoint<double>& pole) {
    const Vec3d& p = pole.vec();
    const auto [e1, e2] = chart_frame(p);
    const double r2 = y.squaredNorm();
    const Vec3d x = (2.0 * y.x() * e1 + 2.0 * y.y() * e2 + (r2 - 1.0) * p) / (r2 + 1.0);
    return SpherePoint<double>(x);
}

/// Differential of the stereographic chart at x applied to a tangent vector v.
inline Vec2d stereographic_push(const Vec3d& x, const Vec3d& v, const Vec3d& pole) {
    const auto [e1, e2] = chart_frame(pole);
    const double denom = 1.0 - x.dot(pole);
    const double ddenom = -v.dot(pole);
    const Vec2d num(x.dot(e1), x.dot(e2));
    const Vec2d dnum(v.dot(e1), v.dot(e2));
    return dnum / denom - num * ddenom / (denom * denom);
}

}  // namespace magloop
