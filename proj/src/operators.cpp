#include "magloop/operators.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <sstream>

namespace magloop {

Eigen::VectorXd FrameCoords::stacked() const {
    Eigen::VectorXd v(2 * a.size());
    v << a, b;
    return v;
}

FrameCoords FrameCoords::from_stacked(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size() / 2;
    return FrameCoords{v.head(n), v.tail(n)};
}

namespace {

constexpr double kMinSpeed = 1e-12;

/// Pointwise evaluation shared by the residuals and the Jacobian.
template <typename Scalar>
struct PointEval {
    Vec3<Scalar> residual;
    Vec3<Scalar> e1;
    Vec3<Scalar> e2;
    Scalar conformal;
};

template <typename Scalar>
PointEval<Scalar> evaluate_point(const FieldPair& pair, const Vec3<Scalar>& x_raw, const Vec3<Scalar>& v_raw,
                                 const Vec3<Scalar>& a_raw, bool speed_factor) {
    using std::exp;
    using std::sqrt;
    const Vec3<Scalar> x = x_raw / x_raw.norm();
    const Vec3<Scalar> v = v_raw - x.dot(v_raw) * x;
    const FieldJet<Scalar> phi = pair.phi.jet(x);
    const Scalar k = pair.k.value(x);
    const Scalar ef = exp(phi.value);
    const Scalar speed = sqrt(ef) * v.norm();
    const Vec3<Scalar> acc = conformal_covariant_derivative<Scalar>(x, phi.grad, v, v, a_raw);
    const Vec3<Scalar> jv = x.cross(v);
    const Scalar force = speed_factor ? Scalar(speed * k) : k;

    PointEval<Scalar> out;
    out.residual = force * jv - acc;
    out.e1 = v / speed;
    out.e2 = x.cross(out.e1);
    out.conformal = ef;
    return out;
}

void require_regular(const DiscreteLoop& loop, const LoopJet& jet) {
    for (int i = 0; i < loop.size(); ++i) {
        const Vec3d x = loop.point(i);
        const Vec3d v = tangent_part(x, Vec3d(jet.velocity.row(i).transpose()));
        if (v.norm() < kMinSpeed) {
            std::ostringstream msg;
            msg << "loop velocity vanishes at sample " << i;
            throw DegenerateCurve(msg.str());
        }
    }
}

LoopField residual_impl(const DiscreteLoop& loop, const FieldPair& pair, double period, bool speed_factor) {
    LoopJet jet = differentiate(loop);
    require_regular(loop, jet);
    jet.velocity /= period;
    jet.acceleration /= period * period;
    const int N = loop.size();
    LoopField out{PointMatrix(N, 3)};
    for (int i = 0; i < N; ++i) {
        const auto p = evaluate_point<double>(pair, loop.point(i), jet.velocity.row(i).transpose(),
                                              jet.acceleration.row(i).transpose(), speed_factor);
        out.vectors.row(i) = p.residual.transpose();
    }
    return out;
}

}  // namespace

MovingFrame moving_frame(const DiscreteLoop& loop, const SphericalField& phi) {
    const LoopJet jet = differentiate(loop);
    require_regular(loop, jet);
    const int N = loop.size();
    MovingFrame f;
    f.e1.resize(N, 3);
    f.e2.resize(N, 3);
    f.speed.resize(N);
    f.conformal.resize(N);
    f.connection.resize(N);
    f.curvature.resize(N);
    for (int i = 0; i < N; ++i) {
        const Vec3d x = loop.point(i);
        const Vec3d v = tangent_part(x, Vec3d(jet.velocity.row(i).transpose()));
        const auto j = phi.jet(x);
        const double ef = std::exp(j.value);
        const double speed = std::sqrt(ef) * v.norm();
        const Vec3d acc = conformal_covariant_derivative<double>(x, j.grad, v, v, jet.acceleration.row(i).transpose());
        const Vec3d e1 = v / speed;
        f.e1.row(i) = e1.transpose();
        f.e2.row(i) = x.cross(e1).transpose();
        f.speed(i) = speed;
        f.conformal(i) = ef;
        f.connection(i) = ef * acc.dot(x.cross(v)) / (speed * speed);
        f.curvature(i) = f.connection(i) / speed;
    }
    return f;
}

FrameCoords field_to_frame(const MovingFrame& frame, const LoopField& field) {
    const int N = field.size();
    FrameCoords c{Eigen::VectorXd(N), Eigen::VectorXd(N)};
    for (int i = 0; i < N; ++i) {
        c.a(i) = frame.conformal(i) * frame.e1.row(i).dot(field.vectors.row(i));
        c.b(i) = frame.conformal(i) * frame.e2.row(i).dot(field.vectors.row(i));
    }
    return c;
}

LoopField frame_to_field(const MovingFrame& frame, const FrameCoords& coords) {
    const int N = coords.size();
    LoopField out{PointMatrix(N, 3)};
    for (int i = 0; i < N; ++i) out.vectors.row(i) = coords.a(i) * frame.e1.row(i) + coords.b(i) * frame.e2.row(i);
    return out;
}

LoopField residual_prescribed(const DiscreteLoop& loop, const FieldPair& pair) {
    return residual_impl(loop, pair, 1.0, true);
}

LoopField residual_magnetic(const DiscreteLoop& loop, const FieldPair& pair, double period) {
    if (!(period > 0.0)) throw DomainError("period must be positive");
    return residual_impl(loop, pair, period, false);
}

Eigen::VectorXd residual_frame(const DiscreteLoop& loop, const FieldPair& pair) {
    const MovingFrame frame = moving_frame(loop, pair.phi);
    return field_to_frame(frame, residual_prescribed(loop, pair)).stacked();
}

double sup_norm(const DiscreteLoop& loop, const SphericalField& phi, const LoopField& field) {
    double best = 0.0;
    for (int i = 0; i < field.size(); ++i) {
        const double ef = std::exp(phi.value(loop.point(i)));
        best = std::max(best, std::sqrt(ef) * field.vectors.row(i).norm());
    }
    return best;
}

// ---------------------------------------------------------------------------
// (-D_t^2 + 1) in the moving frame

ConnectionOperator::ConnectionOperator(const MovingFrame& frame) {
    const int N = static_cast<int>(frame.speed.size());
    const double h = 1.0 / N;
    inv_h2_ = 1.0 / (h * h);
    phase_.resize(N);
    for (int j = 0; j < N; ++j) {
        const double theta = 0.5 * h * (frame.connection(j) + frame.connection((j + 1) % N));
        phase_[j] = std::polar(1.0, theta);
    }
}

std::vector<std::complex<double>> ConnectionOperator::apply(const std::vector<std::complex<double>>& z) const {
    const int N = size();
    std::vector<std::complex<double>> out(N);
    for (int i = 0; i < N; ++i) {
        const int ip = (i + 1) % N, im = (i + N - 1) % N;
        const std::complex<double> lap = phase_[i] * z[ip] - 2.0 * z[i] + std::conj(phase_[im]) * z[im];
        out[i] = -inv_h2_ * lap + z[i];
    }
    return out;
}

std::vector<std::complex<double>> ConnectionOperator::solve(const std::vector<std::complex<double>>& f) const {
    using C = std::complex<double>;
    const int N = size();
    const C diag = 2.0 * inv_h2_ + 1.0;
    // row i: lower(i) z_{i-1} + diag z_i + upper(i) z_{i+1}
    auto upper = [&](int i) { return C(-inv_h2_) * phase_[i]; };
    auto lower = [&](int i) { return C(-inv_h2_) * std::conj(phase_[(i + N - 1) % N]); };

    const C alpha = upper(N - 1);  // A(N-1, 0)
    const C beta = lower(0);       // A(0, N-1)
    const C gamma = -diag;

    std::vector<C> b(N, diag);
    b[0] -= gamma;
    b[N - 1] -= alpha * beta / gamma;

    auto thomas = [&](const std::vector<C>& rhs) {
        std::vector<C> cp(N), dp(N), x(N);
        cp[0] = upper(0) / b[0];
        dp[0] = rhs[0] / b[0];
        for (int i = 1; i < N; ++i) {
            const C m = b[i] - lower(i) * cp[i - 1];
            cp[i] = (i < N - 1) ? upper(i) / m : C(0.0);
            dp[i] = (rhs[i] - lower(i) * dp[i - 1]) / m;
        }
        x[N - 1] = dp[N - 1];
        for (int i = N - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
        return x;
    };

    const std::vector<C> x = thomas(f);
    std::vector<C> u(N, C(0.0));
    u[0] = gamma;
    u[N - 1] = alpha;
    const std::vector<C> zc = thomas(u);
    const C factor = (x[0] + beta * x[N - 1] / gamma) / (C(1.0) + zc[0] + beta * zc[N - 1] / gamma);
    std::vector<C> out(N);
    for (int i = 0; i < N; ++i) out[i] = x[i] - factor * zc[i];
    return out;
}

namespace {

std::vector<std::complex<double>> to_complex(const FrameCoords& c) {
    std::vector<std::complex<double>> z(c.size());
    for (int i = 0; i < c.size(); ++i) z[i] = {c.a(i), c.b(i)};
    return z;
}

FrameCoords from_complex(const std::vector<std::complex<double>>& z) {
    const int N = static_cast<int>(z.size());
    FrameCoords c{Eigen::VectorXd(N), Eigen::VectorXd(N)};
    for (int i = 0; i < N; ++i) {
        c.a(i) = z[i].real();
        c.b(i) = z[i].imag();
    }
    return c;
}

}  // namespace

FrameCoords ConnectionOperator::apply(const FrameCoords& c) const { return from_complex(apply(to_complex(c))); }

FrameCoords ConnectionOperator::solve(const FrameCoords& c) const { return from_complex(solve(to_complex(c))); }

namespace {

void require_well_conditioned(const MovingFrame& frame) {
    const double lo = frame.speed.minCoeff();
    const double hi = frame.speed.maxCoeff();
    const double condition = hi / lo;
    if (!(condition < 1e8)) {
        std::ostringstream msg;
        msg << "moving frame is near-degenerate (speed ratio " << condition << ")";
        throw LinearSolveError(msg.str(), condition);
    }
}

}  // namespace

LoopField apply_X(const DiscreteLoop& loop, const FieldPair& pair) {
    const MovingFrame frame = moving_frame(loop, pair.phi);
    require_well_conditioned(frame);
    const ConnectionOperator op(frame);
    const FrameCoords rhs = field_to_frame(frame, residual_prescribed(loop, pair));
    return frame_to_field(frame, op.solve(rhs));
}

LoopField apply_connection_laplacian(const DiscreteLoop& loop, const FieldPair& pair, const LoopField& field) {
    const MovingFrame frame = moving_frame(loop, pair.phi);
    const ConnectionOperator op(frame);
    return frame_to_field(frame, op.apply(field_to_frame(frame, field)));
}

// ---------------------------------------------------------------------------
// linearization

Eigen::MatrixXd jacobian_residual(const DiscreteLoop& loop, const FieldPair& pair) {
    using Derivative = Eigen::Matrix<double, 9, 1>;
    using AD = Eigen::AutoDiffScalar<Derivative>;

    const int N = loop.size();
    const LoopJet jet = differentiate(loop);
    require_regular(loop, jet);
    const auto& ops = spectral_operators(N);

    // pointwise partials d r_i / d(x, v, a): 2 x 9 per sample
    std::vector<Eigen::Matrix<double, 2, 9>> partial(N);
    PointMatrix e1(N, 3), e2(N, 3);
    for (int i = 0; i < N; ++i) {
        Vec3<AD> x, v, a;
        for (int d = 0; d < 3; ++d) {
            x(d) = AD(loop.points()(i, d), 9, d);
            v(d) = AD(jet.velocity(i, d), 9, 3 + d);
            a(d) = AD(jet.acceleration(i, d), 9, 6 + d);
        }
        const auto p = evaluate_point<AD>(pair, x, v, a, true);
        const AD ra = p.conformal * p.residual.dot(p.e1);
        const AD rb = p.conformal * p.residual.dot(p.e2);
        partial[i].row(0) = ra.derivatives().transpose();
        partial[i].row(1) = rb.derivatives().transpose();
        for (int d = 0; d < 3; ++d) {
            e1(i, d) = p.e1(d).value();
            e2(i, d) = p.e2(d).value();
        }
    }

    // columns: perturbation of sample j along e1 (a) or e2 (b)
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * N, 2 * N);
    for (int i = 0; i < N; ++i) {
        const auto Bx = partial[i].block<2, 3>(0, 0);
        const auto Bv = partial[i].block<2, 3>(0, 3);
        const auto Ba = partial[i].block<2, 3>(0, 6);
        for (int j = 0; j < N; ++j) {
            Eigen::Matrix<double, 2, 3> B = ops.d1(i, j) * Bv + ops.d2(i, j) * Ba;
            if (i == j) B += Bx;
            const Eigen::Vector2d ca = B * e1.row(j).transpose();
            const Eigen::Vector2d cb = B * e2.row(j).transpose();
            J(i, j) = ca(0);
            J(N + i, j) = ca(1);
            J(i, N + j) = cb(0);
            J(N + i, N + j) = cb(1);
        }
    }
    return J;
}

DiscreteLoop displace(const DiscreteLoop& loop, const LoopField& field, double step) {
    PointMatrix p = loop.points() + step * field.vectors;
    return DiscreteLoop(std::move(p));
}

}  // namespace magloop
