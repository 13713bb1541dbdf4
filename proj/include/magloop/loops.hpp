#pragma once

#include "magloop/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <complex>
#include <functional>
#include <vector>

namespace magloop {

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// N uniformly parameterized points gamma(i/N) on S^2, closed by periodic indexing.
/// N is even and at least 16; rows are renormalized on construction.
class DiscreteLoop {
public:
    DiscreteLoop() = default;
    explicit DiscreteLoop(PointMatrix points);

    /// Samples gamma(t) at t = i/N.
    static DiscreteLoop sample(int N, const std::function<Vec3d(double)>& gamma);

    int size() const noexcept { return static_cast<int>(points_.rows()); }
    const PointMatrix& points() const noexcept { return points_; }
    Vec3d point(int i) const { return points_.row(wrap(i)).transpose(); }
    int wrap(int i) const noexcept {
        const int n = size();
        return ((i % n) + n) % n;
    }

private:
    PointMatrix points_;
};

/// First and second parameter derivatives of the trigonometric interpolant.
struct LoopJet {
    PointMatrix velocity;
    PointMatrix acceleration;
};

/// Fourier differentiation matrices for period-1 samples on an even grid.
struct SpectralOperators {
    Eigen::MatrixXd d1;
    Eigen::MatrixXd d2;
};

/// Cached per N; safe to call concurrently.
const SpectralOperators& spectral_operators(int N);

LoopJet differentiate(const DiscreteLoop& loop);

/// Trigonometric interpolant of a loop (per coordinate, real signal).
class LoopInterpolant {
public:
    explicit LoopInterpolant(const DiscreteLoop& loop);
    explicit LoopInterpolant(const PointMatrix& samples);

    int size() const noexcept { return n_; }
    /// Interpolant value (not renormalized) at parameter t.
    Vec3d value(double t) const;
    Vec3d derivative(double t) const;
    /// Coefficients c_k, k = 0..N/2, with c_k = (1/N) sum_j x_j e^{-2 pi i k j / N}.
    const std::vector<std::array<std::complex<double>, 3>>& coefficients() const noexcept { return c_; }

private:
    int n_ = 0;
    std::vector<std::array<std::complex<double>, 3>> c_;
};

/// Grid shift: result(i) = loop(i + steps), i.e. theta * gamma with theta = steps / N.
DiscreteLoop shift(const DiscreteLoop& loop, int steps);
/// Continuous shift theta * gamma evaluated through the interpolant.
DiscreteLoop shift(const DiscreteLoop& loop, double theta);
/// gamma(-t).
DiscreteLoop reversed(const DiscreteLoop& loop);
/// Spectral resampling to M points (M even >= 16).
DiscreteLoop resample(const DiscreteLoop& loop, int M);

struct ShiftMatch {
    double distance = 0.0;  ///< RMS point distance at the best shift
    double shift = 0.0;     ///< theta in [0, 1) with theta * a closest to b
    int grid_shift = 0;     ///< best grid shift before sub-grid refinement
};

/// Minimum over shifts theta of the RMS distance between theta * a and b.
/// The grid search is refined to a continuous shift of the interpolant so the
/// distance is phase independent. Loops of different size are resampled to the larger.
ShiftMatch shift_distance(const DiscreteLoop& a, const DiscreteLoop& b);

inline constexpr double kIsotropyTol = 1e-7;

/// Largest n | N such that the shift by N/n grid steps leaves the loop fixed (RMS < tol).
int isotropy_order(const DiscreteLoop& loop, double tol = kIsotropyTol);

struct Crossing {
    int i = 0;
    int j = 0;
    Vec3d point = Vec3d::Zero();
};

struct IntersectionReport {
    std::vector<Crossing> crossings;
    /// Segment pairs lying on a common great circle with overlapping extent.
    std::vector<std::pair<int, int>> overlaps;

    bool degenerate() const noexcept { return !overlaps.empty(); }
    bool simple() const noexcept { return crossings.empty() && overlaps.empty(); }
};

/// Transversal crossings of non-adjacent great-circle arcs between consecutive samples.
IntersectionReport self_intersections(const DiscreteLoop& loop);

struct RotationIndex {
    int index = 0;
    double residual = 0.0;  ///< |winding / 2pi - index|
};

/// Winding number of the tangent of the stereographic image from `pole`.
/// The chart preserves orientation, so positively curved simple loops have index +1.
RotationIndex rotation_index(const DiscreteLoop& loop, const SpherePoint<double>& pole);

/// Minimum chordal distance between a point and the loop samples.
double distance_to_loop(const DiscreteLoop& loop, const Vec3d& x);

/// Round-metric area of the disk on the J gamma' side of a simple loop, in (0, 4 pi).
double enclosed_area(const DiscreteLoop& loop);

/// Round-metric length by spectral quadrature of |gamma'|.
double round_length(const DiscreteLoop& loop);

}  // namespace magloop
