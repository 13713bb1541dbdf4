#pragma once

#include "magloop/fields.hpp"
#include "magloop/geometry.hpp"
#include "magloop/loops.hpp"

#include <Eigen/Core>

#include <complex>
#include <vector>

namespace magloop {

/// Tangent vector field along a loop, one ambient 3-vector per sample.
struct LoopField {
    PointMatrix vectors;

    int size() const noexcept { return static_cast<int>(vectors.rows()); }
    Vec3d at(int i) const { return vectors.row(i).transpose(); }
};

/// Coefficients of a LoopField in the g-orthonormal moving frame
/// e1 = gamma' / |gamma'|_g, e2 = J e1.
struct FrameCoords {
    Eigen::VectorXd a;
    Eigen::VectorXd b;

    int size() const noexcept { return static_cast<int>(a.size()); }
    /// [a_0 .. a_{N-1}, b_0 .. b_{N-1}]
    Eigen::VectorXd stacked() const;
    static FrameCoords from_stacked(const Eigen::VectorXd& v);
};

/// Pointwise geometry of a loop in the metric e^phi g_can.
struct MovingFrame {
    PointMatrix e1;           ///< g-unit tangent
    PointMatrix e2;           ///< J e1
    Eigen::VectorXd speed;    ///< |gamma'|_g
    Eigen::VectorXd conformal;  ///< e^phi
    Eigen::VectorXd connection;  ///< <D_t e1, e2>_g = k_g |gamma'|_g
    Eigen::VectorXd curvature;   ///< k_g
};

MovingFrame moving_frame(const DiscreteLoop& loop, const SphericalField& phi);

FrameCoords field_to_frame(const MovingFrame& frame, const LoopField& field);
LoopField frame_to_field(const MovingFrame& frame, const FrameCoords& coords);

/// Samples of -D_t gamma' + |gamma'|_g k(gamma) J gamma'.
LoopField residual_prescribed(const DiscreteLoop& loop, const FieldPair& pair);

/// Samples of -D_t gamma' + k(gamma) J gamma' for the parameterization
/// tau = t * period (period 1 reads the loop with its native speed).
LoopField residual_magnetic(const DiscreteLoop& loop, const FieldPair& pair, double period = 1.0);

/// The prescribed-curvature residual in the loop's own moving frame, stacked (a, b).
Eigen::VectorXd residual_frame(const DiscreteLoop& loop, const FieldPair& pair);

/// Pointwise g-norm maximum of a field along the loop.
double sup_norm(const DiscreteLoop& loop, const SphericalField& phi, const LoopField& field);

/// Discrete -D_t^2 + 1 along a loop: a Hermitian cyclic tridiagonal operator on
/// z = a + i b, with the frame connection entering as phases on the off-diagonals.
class ConnectionOperator {
public:
    explicit ConnectionOperator(const MovingFrame& frame);

    int size() const noexcept { return static_cast<int>(phase_.size()); }
    /// (-D_t^2 + 1) z
    std::vector<std::complex<double>> apply(const std::vector<std::complex<double>>& z) const;
    /// Solves (-D_t^2 + 1) z = f directly (cyclic Thomas with Sherman-Morrison).
    std::vector<std::complex<double>> solve(const std::vector<std::complex<double>>& f) const;

    FrameCoords apply(const FrameCoords& c) const;
    FrameCoords solve(const FrameCoords& c) const;

private:
    std::vector<std::complex<double>> phase_;  // e^{i theta_{j+1/2}}
    double inv_h2_ = 0.0;
};

/// X_{k,g}(gamma): the solution of (-D_t^2 + 1) X = residual_prescribed.
LoopField apply_X(const DiscreteLoop& loop, const FieldPair& pair);

/// Applies the same discrete (-D_t^2 + 1) used by apply_X to a tangent field.
LoopField apply_connection_laplacian(const DiscreteLoop& loop, const FieldPair& pair, const LoopField& field);

/// Derivative of residual_frame with respect to the frame coordinates of a
/// tangential perturbation gamma -> normalize(gamma + a e1 + b e2). 2N x 2N, stacked.
Eigen::MatrixXd jacobian_residual(const DiscreteLoop& loop, const FieldPair& pair);

/// Moves every point along a tangent field and renormalizes to S^2.
DiscreteLoop displace(const DiscreteLoop& loop, const LoopField& field, double step = 1.0);

}  // namespace magloop
