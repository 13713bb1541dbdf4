#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <vector>

namespace magloop {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using Vec3d = Vec3<double>;

/// One term c * Y_lm of a real spherical-harmonic expansion.
///
/// The basis is the Schmidt semi-normalized (Racah) real basis: order m > 0
/// selects the cosine-type harmonic, m < 0 the sine-type one. With this
/// normalization the degree-1 harmonics are exactly the coordinates
/// (l=1: m=1 -> x1, m=-1 -> x2, m=0 -> x3) and |Y_lm| <= 1 on S^2.
struct HarmonicTerm {
    int degree = 0;
    int order = 0;
    double coeff = 0.0;
};

/// Value, tangential round-metric gradient and Laplace-Beltrami of a field at a point.
template <typename Scalar>
struct FieldJet {
    Scalar value;
    Vec3<Scalar> grad;
    Scalar laplacian;
};

namespace detail {

inline int harmonic_index(int l, int m) { return l * l + l + m; }

/// Evaluates all regular solid harmonics up to degree L at x together with
/// their ambient gradients. Entries are stored at harmonic_index(l, m).
template <typename Scalar>
void solid_harmonics(const Vec3<Scalar>& x, int L, std::vector<Scalar>& val,
                     std::vector<Vec3<Scalar>>& grad) {
    const int count = (L + 1) * (L + 1);
    val.assign(count, Scalar(0));
    grad.assign(count, Vec3<Scalar>::Zero());

    const Vec3<Scalar> ex(Scalar(1), Scalar(0), Scalar(0));
    const Vec3<Scalar> ey(Scalar(0), Scalar(1), Scalar(0));
    const Vec3<Scalar> ez(Scalar(0), Scalar(0), Scalar(1));
    const Scalar r2 = x.squaredNorm();
    const Vec3<Scalar> grad_r2 = Scalar(2) * x;

    val[harmonic_index(0, 0)] = Scalar(1);
    for (int l = 0; l < L; ++l) {
        // sectoral step (l, l) -> (l+1, l+1)
        const double f = std::sqrt((l == 0 ? 2.0 : 1.0) * (2.0 * l + 1.0) / (2.0 * l + 2.0));
        const int cll = harmonic_index(l, l);
        const int sll = harmonic_index(l, -l);
        const Scalar c = val[cll];
        const Scalar s = (l == 0) ? Scalar(0) : val[sll];
        const Vec3<Scalar> gc = grad[cll];
        const Vec3<Scalar> gs = (l == 0) ? Vec3<Scalar>(Vec3<Scalar>::Zero()) : grad[sll];
        val[harmonic_index(l + 1, l + 1)] = f * (x(0) * c - x(1) * s);
        grad[harmonic_index(l + 1, l + 1)] = f * (c * ex + x(0) * gc - s * ey - x(1) * gs);
        val[harmonic_index(l + 1, -(l + 1))] = f * (x(1) * c + x(0) * s);
        grad[harmonic_index(l + 1, -(l + 1))] = f * (c * ey + x(1) * gc + s * ex + x(0) * gs);

        // vertical step (l, m), (l-1, m) -> (l+1, m)
        for (int m = 0; m <= l; ++m) {
            const double a = 2.0 * l + 1.0;
            const double b = std::sqrt(double(l + m) * double(l - m));
            const double d = std::sqrt(double(l + m + 1) * double(l - m + 1));
            for (int sign : {1, -1}) {
                if (m == 0 && sign < 0) continue;
                const int cur = harmonic_index(l, sign * m);
                const int next = harmonic_index(l + 1, sign * m);
                Scalar v = a * x(2) * val[cur];
                Vec3<Scalar> g = a * (val[cur] * ez + x(2) * grad[cur]);
                if (m <= l - 1) {
                    const int prev = harmonic_index(l - 1, sign * m);
                    v -= b * r2 * val[prev];
                    g -= b * (val[prev] * grad_r2 + r2 * grad[prev]);
                }
                val[next] = v / d;
                grad[next] = g / d;
            }
        }
    }
}

}  // namespace detail

/// Scalar field on S^2 given by a finite real spherical-harmonic expansion.
///
/// Fields are immutable values. Evaluation is templated on the scalar type so
/// the same code path serves plain doubles and forward-mode derivatives.
class SphericalField {
public:
    SphericalField() = default;
    explicit SphericalField(std::vector<HarmonicTerm> terms);

    static SphericalField constant(double c);

    const std::vector<HarmonicTerm>& terms() const noexcept { return terms_; }
    int max_degree() const noexcept { return max_degree_; }
    bool is_zero() const noexcept { return terms_.empty(); }
    bool is_constant() const noexcept { return max_degree_ <= 0; }

    /// Coefficient of Y_lm, zero when absent.
    double coefficient(int degree, int order) const;

    template <typename Scalar>
    FieldJet<Scalar> jet(const Vec3<Scalar>& x) const {
        FieldJet<Scalar> out{Scalar(0), Vec3<Scalar>::Zero(), Scalar(0)};
        if (terms_.empty()) return out;
        const Vec3<Scalar> xh = x / x.norm();
        thread_local std::vector<Scalar> val;
        thread_local std::vector<Vec3<Scalar>> grad;
        detail::solid_harmonics(xh, max_degree_, val, grad);
        Vec3<Scalar> g = Vec3<Scalar>::Zero();
        for (const auto& t : terms_) {
            const int idx = detail::harmonic_index(t.degree, t.order);
            out.value += t.coeff * val[idx];
            g += t.coeff * grad[idx];
            out.laplacian += (-double(t.degree) * double(t.degree + 1) * t.coeff) * val[idx];
        }
        out.grad = g - xh.dot(g) * xh;
        return out;
    }

    template <typename Scalar>
    Scalar value(const Vec3<Scalar>& x) const {
        return jet(x).value;
    }

    /// Sum over degrees of l * ||c_l||_2; bounds the tangential gradient norm.
    double lipschitz_bound() const;
    /// Sum over degrees of l^2 * ||c_l||_2; bounds second derivatives along unit-speed great circles.
    double second_derivative_bound() const;

    SphericalField operator*(double s) const;
    SphericalField operator+(const SphericalField& other) const;
    SphericalField operator+(double c) const;

    /// FNV-1a checksum over the canonical (l, m, coeff) list.
    std::uint64_t checksum() const;

    friend bool operator==(const SphericalField& a, const SphericalField& b);

private:
    std::vector<HarmonicTerm> terms_;  // sorted by (degree, order), no zero coefficients
    int max_degree_ = -1;
};

inline double eval_field(const SphericalField& f, const Vec3d& x) { return f.value(x); }

/// Tangential gradient with respect to the round metric.
inline Vec3d grad_field(const SphericalField& f, const Vec3d& x) { return f.jet(x).grad; }

inline double laplacian_field(const SphericalField& f, const Vec3d& x) { return f.jet(x).laplacian; }

/// Certified lower bound for the minimum of a field over S^2.
///
/// `lower <= min f <= lower + gap`; `argmin` is the best point found.
struct InfimumBound {
    double lower = 0.0;
    double gap = 0.0;
    Vec3d argmin = Vec3d::UnitZ();
};

/// Branch-and-bound over an icosahedral triangulation with a second-order
/// Taylor margin taken from the coefficient norms, seeded by local descent.
InfimumBound field_infimum(const SphericalField& f, double tol = 1e-9);

/// Conformal factor phi and curvature prescription k with a certified
/// positive lower bound k_inf of k (carried along the homotopy).
struct FieldPair {
    SphericalField phi;
    SphericalField k;
    double k_inf = 0.0;

    /// Certifies inf k and rejects non-positive prescriptions.
    static FieldPair certified(SphericalField phi, SphericalField k);
};

/// (t phi, (1 - t) k_inf + t k), keeping k_inf.
FieldPair homotopy_fields(const FieldPair& pair, double t);

}  // namespace magloop
