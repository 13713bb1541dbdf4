#include "magloop/solver.hpp"

#include "magloop/verify.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <thread>

namespace magloop {

void SolverOptions::validate() const {
    std::ostringstream msg;
    if (!(newton_tol > 0.0)) msg << "newton_tol must be positive; ";
    if (max_iters < 1) msg << "max_iters must be at least 1; ";
    if (!(damping > 0.0 && damping < 1.0)) msg << "damping must lie in (0, 1); ";
    if (N < 16 || N % 2 != 0) msg << "N must be even and >= 16; ";
    if (!(svd_cutoff >= 0.0)) msg << "svd_cutoff must be nonnegative; ";
    const std::string s = msg.str();
    if (!s.empty()) throw DomainError(s.substr(0, s.size() - 2));
}

double solution_residual(const OrbitSolution& sol) {
    if (sol.magnetic())
        return sup_norm(sol.loop, sol.pair.phi, residual_magnetic(sol.loop, sol.pair, sol.period));
    return sup_norm(sol.loop, sol.pair.phi, residual_prescribed(sol.loop, sol.pair));
}

// ---------------------------------------------------------------------------
// seeds

std::vector<Vec3d> seed_centers(int count) {
    if (count < 1) throw DomainError("seed count must be positive");
    std::vector<Vec3d> out;
    if (count == 8) {
        for (int sx : {1, -1})
            for (int sy : {1, -1})
                for (int sz : {1, -1}) out.push_back(Vec3d(sx, sy, sz).normalized());
        return out;
    }
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        out.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
    }
    return out;
}

DiscreteLoop circle_loop(const Vec3d& center, double rho, int N) {
    const Vec3d c = center.normalized();
    const Vec3d u = chart_frame(c).first;
    const Vec3d w = c.cross(u);
    return DiscreteLoop::sample(N, [&](double t) {
        return Vec3d(std::cos(rho) * c + std::sin(rho) * (std::cos(kTwoPi * t) * u + std::sin(kTwoPi * t) * w));
    });
}

std::vector<DiscreteLoop> seed_circles(const FieldPair& pair, int count, int N) {
    if (!(pair.k_inf > 0.0)) throw DomainError("seed circles need k_inf > 0");
    const double rho = std::atan2(1.0, pair.k_inf);
    std::vector<DiscreteLoop> out;
    for (const Vec3d& c : seed_centers(count)) out.push_back(circle_loop(c, rho, N));
    return out;
}

SeedRefinement refine_seed(const FieldPair& pair, const DiscreteLoop& seed, int max_iters, double tol) {
    if (!(pair.k_inf > 0.0)) throw DomainError("seed refinement needs k_inf > 0");
    const int N = seed.size();
    const double rho = std::atan2(1.0, pair.k_inf);
    Vec3d c = Vec3d::Zero();
    for (int i = 0; i < N; ++i) c += seed.point(i);
    if (c.norm() < 1e-12) throw DegenerateCurve("seed has no well-defined center");
    c.normalize();

    // In frame coordinates the t = 0 Jacobian is the same for every center, so one
    // cokernel basis serves the whole search.
    const FieldPair base = homotopy_fields(pair, 0.0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian_residual(circle_loop(c, rho, N), base), Eigen::ComputeFullU);
    const Eigen::MatrixXd coker = svd.matrixU().rightCols(3);

    const double eps = 1e-4;
    const FieldPair p1 = homotopy_fields(pair, eps), p2 = homotopy_fields(pair, 2.0 * eps);
    auto defect = [&](const Vec3d& center) -> Eigen::VectorXd {
        const DiscreteLoop loop = circle_loop(center, rho, N);
        const Eigen::VectorXd rt = (4.0 * residual_frame(loop, p1) - residual_frame(loop, p2)) / (2.0 * eps);
        return coker.transpose() * rt;
    };

    SeedRefinement out;
    Eigen::VectorXd h = defect(c);
    for (; out.iterations < max_iters && h.norm() >= tol; ++out.iterations) {
        const auto [e1, e2] = chart_frame(c);
        constexpr double d = 1e-6;
        Eigen::MatrixXd D(h.size(), 2);
        D.col(0) = (defect((c + d * e1).normalized()) - defect((c - d * e1).normalized())) / (2.0 * d);
        D.col(1) = (defect((c + d * e2).normalized()) - defect((c - d * e2).normalized())) / (2.0 * d);
        Eigen::Vector2d step = D.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(-h);
        if (step.norm() > 0.5) step *= 0.5 / step.norm();
        double lambda = 1.0;
        Vec3d trial = c;
        Eigen::VectorXd h_trial = h;
        for (int b = 0; b < 12; ++b, lambda *= 0.5) {
            trial = (c + lambda * (step(0) * e1 + step(1) * e2)).normalized();
            h_trial = defect(trial);
            if (h_trial.norm() < (1.0 - 1e-4 * lambda) * h.norm()) break;
        }
        if (!(h_trial.norm() < h.norm())) break;
        c = trial;
        h = h_trial;
    }
    out.loop = circle_loop(c, rho, N);
    out.defect = h.norm();
    out.converged = out.defect < tol;
    return out;
}

// ---------------------------------------------------------------------------
// parametrization

namespace {

Eigen::VectorXd g_speed(const DiscreteLoop& loop, const SphericalField& phi) {
    const LoopJet jet = differentiate(loop);
    Eigen::VectorXd s(loop.size());
    for (int i = 0; i < loop.size(); ++i) {
        const Vec3d x = loop.point(i);
        const Vec3d v = tangent_part(x, Vec3d(jet.velocity.row(i).transpose()));
        s(i) = std::exp(0.5 * phi.value(x)) * v.norm();
    }
    return s;
}

}  // namespace

double speed_variation(const DiscreteLoop& loop, const SphericalField& phi) {
    const Eigen::VectorXd s = g_speed(loop, phi);
    return (s.maxCoeff() - s.minCoeff()) / s.mean();
}

DiscreteLoop reparametrize_uniform(const DiscreteLoop& loop, const SphericalField& phi) {
    const int N = loop.size();
    const int half = N / 2;
    const Eigen::VectorXd s = g_speed(loop, phi);

    // Fourier coefficients of the speed, k = 0..N/2
    std::vector<std::complex<double>> c(half + 1);
    for (int k = 0; k <= half; ++k) {
        std::complex<double> acc = 0.0;
        for (int j = 0; j < N; ++j) acc += s(j) * std::polar(1.0, -kTwoPi * k * j / N);
        c[k] = acc / double(N);
    }
    const double L = c[0].real();

    // arclength S(t) - S(0) and its derivative from the trigonometric interpolant
    auto periodic = [&](double t) {
        double p = 0.0;
        for (int k = 1; k < half; ++k) {
            const std::complex<double> e = std::polar(1.0, kTwoPi * k * t);
            p += 2.0 * (c[k] * e / std::complex<double>(0.0, kTwoPi * k)).real();
        }
        p += c[half].real() * std::sin(kPi * N * t) / (kPi * N);
        return p;
    };
    auto rate = [&](double t) {
        double r = L;
        for (int k = 1; k < half; ++k) r += 2.0 * (c[k] * std::polar(1.0, kTwoPi * k * t)).real();
        r += c[half].real() * std::cos(kPi * N * t);
        return r;
    };
    const double p0 = periodic(0.0);

    const LoopInterpolant interp(loop);
    PointMatrix p(N, 3);
    for (int i = 0; i < N; ++i) {
        const double target = L * i / N;
        double t = double(i) / N;
        for (int it = 0; it < 50; ++it) {
            const double f = L * t + periodic(t) - p0 - target;
            const double step = f / rate(t);
            t -= step;
            if (std::abs(step) < 1e-16) break;
        }
        p.row(i) = interp.value(t).normalized().transpose();
    }
    return DiscreteLoop(std::move(p));
}

// ---------------------------------------------------------------------------
// Newton

namespace {

constexpr double kCollapseRatio = 1e-6;
constexpr double kReparamThreshold = 1e-6;
constexpr double kSpeedTol = 1e-8;

bool collapsed(const DiscreteLoop& loop, const SphericalField& phi) {
    const Eigen::VectorXd s = g_speed(loop, phi);
    return !(s.minCoeff() >= kCollapseRatio * s.mean());
}

double merit(const DiscreteLoop& loop, const FieldPair& pair) {
    try {
        if (collapsed(loop, pair.phi)) return std::numeric_limits<double>::infinity();
        const double m = residual_frame(loop, pair).norm();
        return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
    } catch (const DegenerateCurve&) {
        return std::numeric_limits<double>::infinity();
    }
}

Eigen::VectorXd truncated_lstsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double cutoff) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    Eigen::VectorXd ub = svd.matrixU().transpose() * b;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) ub(i) = sigma(i) > cutoff ? ub(i) / sigma(i) : 0.0;
    return svd.matrixV() * ub;
}

}  // namespace

OrbitSolution newton_solve(const DiscreteLoop& guess, const FieldPair& pair, const SolverOptions& opts) {
    opts.validate();
    DiscreteLoop loop = guess.size() == opts.N ? guess : resample(guess, opts.N);
    if (collapsed(loop, pair.phi)) throw CollapseError("initial guess is degenerate");
    if (speed_variation(loop, pair.phi) > kReparamThreshold) loop = reparametrize_uniform(loop, pair.phi);

    const int N = loop.size();
    double residual = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (;; ++iter) {
        residual = sup_norm(loop, pair.phi, residual_prescribed(loop, pair));
        if (residual <= opts.newton_tol && speed_variation(loop, pair.phi) <= kSpeedTol) break;
        if (iter == opts.max_iters) {
            std::ostringstream msg;
            msg << "newton: no convergence after " << iter << " iterations (residual " << residual << ")";
            throw NonConvergence(msg.str(), residual);
        }

        const MovingFrame frame = moving_frame(loop, pair.phi);
        const Eigen::VectorXd r = field_to_frame(frame, residual_prescribed(loop, pair)).stacked();
        const Eigen::MatrixXd J = jacobian_residual(loop, pair);

        // phase condition: the update is orthogonal to the shift direction gamma' = speed e1
        Eigen::MatrixXd A(2 * N + 1, 2 * N);
        A.topRows(2 * N) = J;
        A.row(2 * N).setZero();
        const double row_scale = J.norm() / std::sqrt(2.0 * N);
        A.row(2 * N).head(N) = row_scale * frame.speed.transpose() / frame.speed.norm();
        Eigen::VectorXd rhs(2 * N + 1);
        rhs << -r, 0.0;
        const Eigen::VectorXd delta = truncated_lstsq(A, rhs, opts.svd_cutoff);
        const LoopField step = frame_to_field(frame, FrameCoords::from_stacked(delta));

        const double m0 = r.norm();
        double lambda = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30; ++k, lambda *= opts.damping) {
            DiscreteLoop trial = displace(loop, step, lambda);
            if (merit(trial, pair) < m0) {
                loop = std::move(trial);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            std::ostringstream msg;
            msg << "newton: line search stalled at residual " << residual;
            throw NonConvergence(msg.str(), residual);
        }
        if (collapsed(loop, pair.phi)) throw CollapseError("newton: loop collapsed");
        if (speed_variation(loop, pair.phi) > kReparamThreshold) loop = reparametrize_uniform(loop, pair.phi);
    }

    OrbitSolution sol;
    sol.loop = loop;
    sol.pair = pair;
    sol.residual_norm = residual;
    sol.speed = g_speed(loop, pair.phi).mean();
    sol.newton_iters = iter;
    if (opts.verify) {
        VerifyOptions v;
        v.seed = opts.seed;
        sol.report = verify_orbit(sol, v);
    }
    return sol;
}

// ---------------------------------------------------------------------------
// magnetic flow

namespace {

struct State {
    Vec3d x;
    Vec3d v;
};

State flow_rhs(const State& s, const FieldPair& pair) {
    const auto jet = pair.phi.jet(s.x);
    const double k = pair.k.value(s.x);
    const double v2 = s.v.squaredNorm();
    const Vec3d acc = k * s.x.cross(s.v) - jet.grad.dot(s.v) * s.v + 0.5 * v2 * jet.grad - v2 * s.x;
    return {s.v, acc};
}

State rk4_step(const State& s, double h, const FieldPair& pair) {
    auto axpy = [](const State& a, double t, const State& d) { return State{a.x + t * d.x, a.v + t * d.v}; };
    const State k1 = flow_rhs(s, pair);
    const State k2 = flow_rhs(axpy(s, 0.5 * h, k1), pair);
    const State k3 = flow_rhs(axpy(s, 0.5 * h, k2), pair);
    const State k4 = flow_rhs(axpy(s, h, k3), pair);
    State out{s.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
              s.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
    out.x.normalize();
    out.v -= out.x.dot(out.v) * out.x;
    return out;
}

double g_norm(const FieldPair& pair, const State& s) { return std::exp(0.5 * pair.phi.value(s.x)) * s.v.norm(); }

// Endpoint after n equal steps over [0, T].
State flow_to(State s, double T, int n, const FieldPair& pair) {
    const double h = T / n;
    for (int i = 0; i < n; ++i) s = rk4_step(s, h, pair);
    return s;
}

}  // namespace

Trajectory integrate_flow(const SpherePoint<double>& x0, const TangentVector<double>& v0, double T,
                          const FieldPair& pair, double max_step) {
    if (!(T > 0.0) || !(max_step > 0.0)) throw DomainError("integrate_flow needs T > 0 and a positive step");
    State s{x0.vec(), v0.vec()};
    const double s0 = g_norm(pair, s);
    if (!(s0 > 0.0)) throw DomainError("integrate_flow needs a nonzero initial velocity");
    const int n = static_cast<int>(std::ceil(T / max_step));
    const double h = T / n;

    Trajectory tr;
    tr.times.resize(n + 1);
    tr.x.resize(n + 1, 3);
    tr.v.resize(n + 1, 3);
    tr.times[0] = 0.0;
    tr.x.row(0) = s.x.transpose();
    tr.v.row(0) = s.v.transpose();
    for (int i = 1; i <= n; ++i) {
        s = rk4_step(s, h, pair);
        tr.times[i] = h * i;
        tr.x.row(i) = s.x.transpose();
        tr.v.row(i) = s.v.transpose();
        tr.speed_drift = std::max(tr.speed_drift, std::abs(g_norm(pair, s) / s0 - 1.0));
    }
    return tr;
}

// ---------------------------------------------------------------------------
// shooting

namespace {

struct Section {
    Vec3d x0, n, u1;
    FieldPair pair;

    State initial(double s, double alpha) const {
        const Vec3d x = std::cos(s) * x0 + std::sin(s) * n;
        const Vec3d u2 = x.cross(u1);
        const double scale = std::exp(-0.5 * pair.phi.value(x));
        return {x, scale * (std::cos(alpha) * u1 + std::sin(alpha) * u2)};
    }
};

int steps_for(double T, double max_step) { return std::max(1, static_cast<int>(std::ceil(T / max_step))); }

Eigen::Matrix<double, 6, 1> defect(const Section& sec, const Eigen::Vector3d& p, double max_step) {
    const State s0 = sec.initial(p(0), p(1));
    const State s1 = flow_to(s0, p(2), steps_for(p(2), max_step), sec.pair);
    Eigen::Matrix<double, 6, 1> d;
    d << s1.x - s0.x, s1.v - s0.v;
    return d;
}

}  // namespace

ShootingResult shoot_return_map(const SpherePoint<double>& x0, const TangentVector<double>& v0, double T_guess,
                                const FieldPair& pair, int N, const ShootingOptions& opts) {
    if (!(T_guess > 0.0)) throw DomainError("shooting needs a positive period guess");
    if (!(v0.vec().norm() > 0.0)) throw DomainError("shooting needs a nonzero initial direction");
    Section sec{x0.vec(), Vec3d::Zero(), v0.vec().normalized(), pair};
    sec.n = sec.x0.cross(sec.u1);

    Eigen::Vector3d p(0.0, 0.0, T_guess);
    Eigen::Matrix<double, 6, 1> d = defect(sec, p, opts.max_step);
    int iter = 0;
    for (; d.norm() > opts.tol; ++iter) {
        if (iter == opts.max_iters) {
            std::ostringstream msg;
            msg << "shooting: no convergence after " << iter << " iterations (defect " << d.norm() << ")";
            throw NonConvergence(msg.str(), d.norm());
        }
        if (std::abs(std::cos(p(1))) < 0.1) throw SectionDegeneracy("flow is nearly tangent to the section; rotate it");

        Eigen::Matrix<double, 6, 3> J;
        for (int c = 0; c < 3; ++c) {
            Eigen::Vector3d e = Eigen::Vector3d::Zero();
            e(c) = opts.fd_step;
            J.col(c) = (defect(sec, p + e, opts.max_step) - defect(sec, p - e, opts.max_step)) / (2.0 * opts.fd_step);
        }
        Eigen::JacobiSVD<Eigen::Matrix<double, 6, 3>> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& sigma = svd.singularValues();
        Eigen::Vector3d ub = (svd.matrixU().transpose() * d).head<3>();
        for (int i = 0; i < 3; ++i) ub(i) = sigma(i) > 1e-8 * sigma(0) ? ub(i) / sigma(i) : 0.0;
        const Eigen::Vector3d delta = -(svd.matrixV() * ub);

        double lambda = 1.0;
        bool accepted = false;
        for (int k = 0; k < 20; ++k, lambda *= 0.5) {
            const Eigen::Vector3d trial = p + lambda * delta;
            if (!(trial(2) > 0.0)) continue;
            const auto dt = defect(sec, trial, opts.max_step);
            if (dt.norm() < d.norm()) {
                p = trial;
                d = dt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            std::ostringstream msg;
            msg << "shooting: line search stalled at defect " << d.norm();
            throw NonConvergence(msg.str(), d.norm());
        }
    }

    // resample on a step grid commensurate with N
    const double T = p(2);
    const int per_sample = std::max(1, static_cast<int>(std::ceil(T / (N * opts.max_step))));
    const double h = T / (N * per_sample);
    State s = sec.initial(p(0), p(1));
    ShootingResult out;
    out.x0 = SpherePoint<double>(s.x);
    out.v0 = TangentVector<double>(out.x0, s.v);
    PointMatrix pts(N, 3);
    for (int i = 0; i < N; ++i) {
        pts.row(i) = s.x.transpose();
        for (int k = 0; k < per_sample; ++k) s = rk4_step(s, h, pair);
    }
    out.loop = DiscreteLoop(std::move(pts));
    out.period = T;
    out.defect = d.norm();
    out.iterations = iter;
    return out;
}

OrbitSolution shoot_periodic(const SpherePoint<double>& x0, const TangentVector<double>& v0, double T_guess,
                             const FieldPair& pair, const SolverOptions& opts, const ShootingOptions& shooting) {
    const ShootingResult raw = shoot_return_map(x0, v0, T_guess, pair, opts.N, shooting);
    return newton_solve(raw.loop, pair, opts);
}

// ---------------------------------------------------------------------------
// continuation

ContinuationPath continue_path(const FieldPair& pair, const DiscreteLoop& seed, const SolverOptions& solver,
                               const ContinuationOptions& opts) {
    if (!(opts.t_start >= 0.0 && opts.t_start < 1.0)) throw DomainError("t_start must lie in [0, 1)");
    if (!(opts.dt_min > 0.0 && opts.dt_min <= opts.dt_initial && opts.dt_initial <= opts.dt_max))
        throw DomainError("continuation steps must satisfy 0 < dt_min <= dt_initial <= dt_max");
    SolverOptions inner = solver;
    inner.verify = false;

    ContinuationPath path;
    double t = opts.t_start;
    {
        const FieldPair start = homotopy_fields(pair, t);
        OrbitSolution s0;
        if (t == 0.0) {
            // the t = 0 family is degenerate; the first correction happens after the first step
            s0.loop = seed.size() == inner.N ? seed : resample(seed, inner.N);
            if (opts.refine_seed) {
                path.refinement = refine_seed(pair, s0.loop);
                s0.loop = path.refinement->loop;
            }
            s0.pair = start;
            s0.residual_norm = sup_norm(s0.loop, start.phi, residual_prescribed(s0.loop, start));
            s0.speed = g_speed(s0.loop, start.phi).mean();
        } else {
            s0 = newton_solve(seed, start, inner);
        }
        path.samples.emplace_back(t, std::move(s0));
    }

    DiscreteLoop current = path.samples.back().second.loop;
    DiscreteLoop previous;
    bool have_previous = false;
    double dt_prev = 0.0;
    double dt = opts.dt_initial;
    double max_rate = 0.0;
    int accepted_steps = 0;

    for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
        if (t >= 1.0) {
            path.status = PathStatus::Reached;
            return path;
        }
        dt = std::min(dt, 1.0 - t);
        const double t_next = (1.0 - t - dt) < 1e-14 ? 1.0 : t + dt;

        DiscreteLoop predicted = current;
        if (have_previous) {
            const DiscreteLoop aligned = shift(previous, shift_distance(previous, current).shift);
            predicted = DiscreteLoop(current.points() + (dt / dt_prev) * (current.points() - aligned.points()));
        }

        StepRecord rec;
        rec.t = t_next;
        rec.dt = dt;
        const FieldPair fields = homotopy_fields(pair, t_next);
        OrbitSolution sol;
        bool ok = false;
        try {
            sol = newton_solve(predicted, fields, inner);
            ok = true;
        } catch (const NonConvergence& e) {
            rec.residual = e.last_residual();
            rec.note = e.what();
        } catch (const LinearSolveError& e) {
            rec.note = e.what();
        } catch (const DegenerateCurve& e) {
            rec.note = e.what();
        } catch (const CollapseError& e) {
            std::ostringstream msg;
            msg << e.what() << " at t = " << t_next;
            throw CollapseError(msg.str());
        }

        double moved = 0.0;
        if (ok) {
            rec.iterations = sol.newton_iters;
            rec.residual = sol.residual_norm;
            moved = shift_distance(sol.loop, current).distance;
            if (accepted_steps >= 2 && moved > opts.continuity_factor * dt * max_rate) {
                ok = false;
                rec.note = "rejected: jump exceeds the continuity bound";
            }
        }

        if (!ok) {
            path.steps.push_back(rec);
            dt *= 0.5;
            if (dt < opts.dt_min) {
                path.status = PathStatus::Blocked;
                path.blocked_at = t;
                path.reason = "step underflow";
                return path;
            }
            continue;
        }

        rec.accepted = true;
        path.steps.push_back(rec);
        // the first step leaves the degenerate family and does not set the scale
        if (accepted_steps >= 1) max_rate = std::max(max_rate, moved / dt);
        ++accepted_steps;
        previous = current;
        have_previous = true;
        dt_prev = dt;
        current = sol.loop;
        t = t_next;
        path.samples.emplace_back(t, std::move(sol));
        if (rec.iterations <= opts.easy_iters) dt = std::min(dt * opts.grow, opts.dt_max);
    }
    if (t >= 1.0) {
        path.status = PathStatus::Reached;
        return path;
    }
    path.status = PathStatus::Blocked;
    path.blocked_at = t;
    path.reason = "attempt limit";
    return path;
}

// ---------------------------------------------------------------------------
// energy levels

OrbitSolution rescale_to_energy(const OrbitSolution& sol, double c) {
    if (!(c > 0.0)) throw DomainError("energy level must be positive");
    if (sol.magnetic()) throw DomainError("solution is already on an energy level");
    const double input = solution_residual(sol);
    if (!(input <= 1e-6)) throw DomainError("input does not solve the prescribed-curvature equation");

    OrbitSolution out = sol;
    const double L = g_speed(sol.loop, sol.pair.phi).mean();
    out.pair = FieldPair{sol.pair.phi, sol.pair.k * c, sol.pair.k_inf * c};
    out.period = L / c;
    out.energy = c;
    out.speed = c;
    out.residual_norm = solution_residual(out);
    out.report.residual_norm = out.residual_norm;
    return out;
}

// ---------------------------------------------------------------------------
// two-orbit search

SearchResult search_orbits(const FieldPair& pair, const SearchOptions& opts) {
    if (!(pair.k_inf > 0.0)) throw DomainError("the search needs k_inf > 0");
    SearchResult result;
    const double kmin = min_gauss_curvature(pair.phi);
    if (kmin < 0.0) {
        std::ostringstream msg;
        msg << "warning: Gauss curvature is negative on the test grid (min " << kmin
            << "); the existence argument does not apply";
        result.diagnostics.push_back(msg.str());
    }

    const auto seeds = seed_circles(pair, opts.seed_count, opts.solver.N);
    const int n = static_cast<int>(seeds.size());
    std::vector<ContinuationPath> paths(n);
    std::vector<std::string> errors(n);

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                paths[i] = continue_path(pair, seeds[i], opts.solver, opts.continuation);
            } catch (const Error& e) {
                paths[i].status = PathStatus::Blocked;
                paths[i].reason = e.what();
                errors[i] = e.what();
            }
        }
    };
    const int threads = std::max(1, std::min(n, opts.threads > 0 ? opts.threads : n));
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    VerifyOptions vopts;
    vopts.seed = opts.solver.seed;
    std::vector<OrbitSolution> certified;
    for (int i = 0; i < n; ++i) {
        std::ostringstream msg;
        msg << "seed " << i << ": ";
        if (!paths[i].reached()) {
            msg << "blocked at t = " << paths[i].blocked_at << " (" << paths[i].reason << ")";
            result.diagnostics.push_back(msg.str());
            continue;
        }
        OrbitSolution sol = paths[i].endpoint();
        sol.report = verify_orbit(sol, vopts);
        msg << "reached t = 1 in " << paths[i].samples.size() - 1 << " steps";
        if (!sol.report.passed) {
            msg << ", report failed:";
            for (const auto& f : sol.report.failures) msg << " " << f << ";";
        } else if (!sol.report.alexandrov.certified()) {
            msg << ", alexandrov check failed (" << sol.report.alexandrov.reason << ")";
        } else {
            msg << ", certified (" << to_string(sol.report.alexandrov.kind) << ")";
            certified.push_back(std::move(sol));
        }
        result.diagnostics.push_back(msg.str());
    }
    result.orbits = distinct_orbits(certified);
    result.paths = std::move(paths);
    return result;
}

std::vector<OrbitSolution> find_two_orbits(const FieldPair& pair, const SearchOptions& opts) {
    SearchResult r = search_orbits(pair, opts);
    if (r.orbits.size() < 2) {
        std::ostringstream msg;
        msg << "found " << r.orbits.size() << " distinct certified orbit(s):";
        for (const auto& d : r.diagnostics) msg << "\n  " << d;
        throw SearchFailure(msg.str());
    }
    return std::move(r.orbits);
}

}  // namespace magloop
