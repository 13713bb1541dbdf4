#include "magloop/loops.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace magloop {

namespace {

void require_grid_size(int N) {
    if (N < 16 || N % 2 != 0) {
        std::ostringstream msg;
        msg << "loop size must be even and >= 16 (got " << N << ")";
        throw DomainError(msg.str());
    }
}

}  // namespace

DiscreteLoop::DiscreteLoop(PointMatrix points) : points_(std::move(points)) {
    require_grid_size(size());
    for (int i = 0; i < size(); ++i) {
        const double n = points_.row(i).norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("loop point is zero or not finite");
        points_.row(i) /= n;
    }
}

DiscreteLoop DiscreteLoop::sample(int N, const std::function<Vec3d(double)>& gamma) {
    require_grid_size(N);
    PointMatrix p(N, 3);
    for (int i = 0; i < N; ++i) p.row(i) = gamma(double(i) / N).transpose();
    return DiscreteLoop(std::move(p));
}

// ---------------------------------------------------------------------------
// spectral differentiation

const SpectralOperators& spectral_operators(int N) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<SpectralOperators>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[N];
    if (slot) return *slot;

    require_grid_size(N);
    auto ops = std::make_unique<SpectralOperators>();
    const double h = kTwoPi / N;
    ops->d1.setZero(N, N);
    ops->d2.setZero(N, N);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            const int k = i - j;
            if (k == 0) {
                ops->d2(i, j) = -kPi * kPi / (3.0 * h * h) - 1.0 / 6.0;
                continue;
            }
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            const double half = 0.5 * k * h;
            ops->d1(i, j) = 0.5 * sign / std::tan(half);
            ops->d2(i, j) = -0.5 * sign / (std::sin(half) * std::sin(half));
        }
    }
    // period 1 instead of 2 pi
    ops->d1 *= kTwoPi;
    ops->d2 *= kTwoPi * kTwoPi;
    slot = std::move(ops);
    return *slot;
}

LoopJet differentiate(const DiscreteLoop& loop) {
    const auto& ops = spectral_operators(loop.size());
    return LoopJet{ops.d1 * loop.points(), ops.d2 * loop.points()};
}

// ---------------------------------------------------------------------------
// interpolation and shifts

LoopInterpolant::LoopInterpolant(const DiscreteLoop& loop) : LoopInterpolant(loop.points()) {}

LoopInterpolant::LoopInterpolant(const PointMatrix& samples) : n_(static_cast<int>(samples.rows())) {
    const int half = n_ / 2;
    c_.assign(half + 1, {});
    Eigen::FFT<double> fft;
    std::vector<double> in(n_);
    std::vector<std::complex<double>> out;
    for (int d = 0; d < 3; ++d) {
        for (int j = 0; j < n_; ++j) in[j] = samples(j, d);
        fft.fwd(out, in);
        for (int k = 0; k <= half; ++k) c_[k][d] = out[k] / double(n_);
    }
}

Vec3d LoopInterpolant::value(double t) const {
    const int half = n_ / 2;
    Vec3d v;
    for (int d = 0; d < 3; ++d) {
        double s = c_[0][d].real();
        for (int k = 1; k < half; ++k) {
            const std::complex<double> e = std::polar(1.0, kTwoPi * k * t);
            s += 2.0 * (c_[k][d] * e).real();
        }
        s += c_[half][d].real() * std::cos(kPi * n_ * t);
        v(d) = s;
    }
    return v;
}

Vec3d LoopInterpolant::derivative(double t) const {
    const int half = n_ / 2;
    Vec3d v;
    for (int d = 0; d < 3; ++d) {
        double s = 0.0;
        for (int k = 1; k < half; ++k) {
            const std::complex<double> e = std::polar(1.0, kTwoPi * k * t);
            s += 2.0 * (std::complex<double>(0.0, kTwoPi * k) * c_[k][d] * e).real();
        }
        s -= c_[half][d].real() * kPi * n_ * std::sin(kPi * n_ * t);
        v(d) = s;
    }
    return v;
}

DiscreteLoop shift(const DiscreteLoop& loop, int steps) {
    const int N = loop.size();
    PointMatrix p(N, 3);
    for (int i = 0; i < N; ++i) p.row(i) = loop.points().row(loop.wrap(i + steps));
    return DiscreteLoop(std::move(p));
}

DiscreteLoop shift(const DiscreteLoop& loop, double theta) {
    const LoopInterpolant interp(loop);
    const int N = loop.size();
    return DiscreteLoop::sample(N, [&](double t) { return interp.value(t + theta); });
}

DiscreteLoop reversed(const DiscreteLoop& loop) {
    const int N = loop.size();
    PointMatrix p(N, 3);
    for (int i = 0; i < N; ++i) p.row(i) = loop.points().row(loop.wrap(-i));
    return DiscreteLoop(std::move(p));
}

DiscreteLoop resample(const DiscreteLoop& loop, int M) {
    if (M == loop.size()) return loop;
    const LoopInterpolant interp(loop);
    return DiscreteLoop::sample(M, [&](double t) { return interp.value(t); });
}

// ---------------------------------------------------------------------------
// S^1 orbit comparison

namespace {

// RMS over grid samples of theta * a - b, evaluated through discrete Parseval.
double shifted_rms(const LoopInterpolant& a, const LoopInterpolant& b, double theta) {
    const int N = a.size();
    const int half = N / 2;
    const auto& ca = a.coefficients();
    const auto& cb = b.coefficients();
    double sum = 0.0;
    for (int d = 0; d < 3; ++d) {
        sum += std::norm(ca[0][d] - cb[0][d]);
        for (int k = 1; k < half; ++k) {
            const std::complex<double> e = std::polar(1.0, kTwoPi * k * theta);
            sum += 2.0 * std::norm(ca[k][d] * e - cb[k][d]);
        }
        sum += std::norm(ca[half][d] * std::cos(kPi * N * theta) - cb[half][d]);
    }
    return std::sqrt(std::max(sum, 0.0));
}

double wrap_unit(double theta) {
    theta -= std::floor(theta);
    return theta >= 1.0 ? 0.0 : theta;
}

}  // namespace

ShiftMatch shift_distance(const DiscreteLoop& a_in, const DiscreteLoop& b_in) {
    const int N = std::max(a_in.size(), b_in.size());
    const DiscreteLoop a = resample(a_in, N);
    const DiscreteLoop b = resample(b_in, N);

    ShiftMatch best;
    best.distance = std::numeric_limits<double>::infinity();
    for (int s = 0; s < N; ++s) {
        double sum = 0.0;
        for (int i = 0; i < N; ++i) sum += (a.points().row(a.wrap(i + s)) - b.points().row(i)).squaredNorm();
        const double rms = std::sqrt(sum / N);
        if (rms < best.distance) {
            best.distance = rms;
            best.grid_shift = s;
        }
    }
    best.shift = double(best.grid_shift) / N;
    if (best.distance == 0.0) return best;

    // golden-section refinement over one grid cell on either side
    const LoopInterpolant ia(a), ib(b);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = best.shift - 1.0 / N, hi = best.shift + 1.0 / N;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = shifted_rms(ia, ib, x1), f2 = shifted_rms(ia, ib, x2);
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = shifted_rms(ia, ib, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = shifted_rms(ia, ib, x2);
        }
    }
    const double theta = 0.5 * (lo + hi);
    const double refined = shifted_rms(ia, ib, theta);
    if (refined < best.distance) {
        best.distance = refined;
        best.shift = wrap_unit(theta);
    }
    return best;
}

int isotropy_order(const DiscreteLoop& loop, double tol) {
    const int N = loop.size();
    for (int n = N; n >= 2; --n) {
        if (N % n != 0) continue;
        const int steps = N / n;
        double sum = 0.0;
        for (int i = 0; i < N; ++i) sum += (loop.points().row(loop.wrap(i + steps)) - loop.points().row(i)).squaredNorm();
        if (std::sqrt(sum / N) < tol) return n;
    }
    return 1;
}

// ---------------------------------------------------------------------------
// self-intersections

namespace {

// Position of s along the arc from a with unit normal n, as an angle.
double arc_angle(const Vec3d& a, const Vec3d& s, const Vec3d& n) {
    return std::atan2(a.cross(s).dot(n), a.dot(s));
}

}  // namespace

IntersectionReport self_intersections(const DiscreteLoop& loop) {
    const int N = loop.size();
    const auto& P = loop.points();
    for (int i = 0; i < N; ++i) {
        const Vec3d a = loop.point(i), b = loop.point(i + 1);
        if (std::atan2(a.cross(b).norm(), a.dot(b)) >= kPi / 4.0)
            throw DomainError("consecutive loop points are too far apart; resample first");
    }

    struct Arc {
        Vec3d a, b, n, mid;
        double length;
    };
    std::vector<Arc> arcs(N);
    for (int i = 0; i < N; ++i) {
        Arc& s = arcs[i];
        s.a = P.row(i).transpose();
        s.b = P.row((i + 1) % N).transpose();
        const Vec3d c = s.a.cross(s.b);
        s.length = std::atan2(c.norm(), s.a.dot(s.b));
        s.n = c.norm() > 0.0 ? Vec3d(c / c.norm()) : Vec3d(Vec3d::Zero());
        s.mid = (s.a + s.b).normalized();
    }

    IntersectionReport report;
    constexpr double kPlaneTol = 1e-12;
    for (int i = 0; i < N; ++i) {
        const Arc& s = arcs[i];
        if (s.length == 0.0) continue;
        for (int j = i + 2; j < N; ++j) {
            if (i == 0 && j == N - 1) continue;
            const Arc& t = arcs[j];
            if (t.length == 0.0) continue;
            const double sep = std::atan2(s.mid.cross(t.mid).norm(), s.mid.dot(t.mid));
            if (sep > 0.5 * (s.length + t.length) + 1e-12) continue;

            const Vec3d line = s.n.cross(t.n);
            if (line.norm() < kPlaneTol) {
                // common great circle: overlap if either arc reaches into the other
                const double ta = arc_angle(s.a, t.a, s.n), tb = arc_angle(s.a, t.b, s.n);
                const double sa = arc_angle(t.a, s.a, t.n), sb = arc_angle(t.a, s.b, t.n);
                auto inside = [](double x, double len) { return x > 1e-12 && x < len - 1e-12; };
                const bool same_arc = (s.a - t.a).norm() < 1e-12 && (s.b - t.b).norm() < 1e-12;
                const bool reverse_arc = (s.a - t.b).norm() < 1e-12 && (s.b - t.a).norm() < 1e-12;
                if (same_arc || reverse_arc || inside(ta, s.length) || inside(tb, s.length) ||
                    inside(sa, t.length) || inside(sb, t.length))
                    report.overlaps.emplace_back(i, j);
                continue;
            }
            const Vec3d p = line.normalized();
            for (const Vec3d cand : {p, Vec3d(-p)}) {
                const double u = arc_angle(s.a, cand, s.n);
                const double v = arc_angle(t.a, cand, t.n);
                if (u >= 0.0 && u < s.length && v >= 0.0 && v < t.length) {
                    report.crossings.push_back({i, j, cand});
                    break;
                }
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// rotation index, area, length

double distance_to_loop(const DiscreteLoop& loop, const Vec3d& x) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < loop.size(); ++i) best = std::min(best, (loop.point(i) - x).norm());
    return best;
}

RotationIndex rotation_index(const DiscreteLoop& loop, const SpherePoint<double>& pole) {
    if (distance_to_loop(loop, pole.vec()) < 1e-3)
        throw ChartError("loop passes too close to the stereographic pole");
    const LoopJet jet = differentiate(loop);
    const int N = loop.size();
    double total = 0.0;
    double prev = 0.0;
    for (int i = 0; i <= N; ++i) {
        const int k = i % N;
        const Vec3d x = loop.point(k);
        const Vec3d v = tangent_part(x, Vec3d(jet.velocity.row(k).transpose()));
        const Vec2d w = stereographic_push(x, v, pole.vec());
        const double ang = std::atan2(w.y(), w.x());
        if (i > 0) {
            double d = ang - prev;
            d -= kTwoPi * std::round(d / kTwoPi);
            total += d;
        }
        prev = ang;
    }
    const double turns = total / kTwoPi;
    RotationIndex out;
    out.index = static_cast<int>(std::lround(turns));
    out.residual = std::abs(turns - out.index);
    return out;
}

double enclosed_area(const DiscreteLoop& loop) {
    if (!self_intersections(loop).simple()) throw Unsupported("enclosed area requires a simple loop");
    const LoopJet jet = differentiate(loop);
    const int N = loop.size();
    double turning = 0.0;
    for (int i = 0; i < N; ++i) {
        const Vec3d x = loop.point(i);
        const Vec3d v = tangent_part(x, Vec3d(jet.velocity.row(i).transpose()));
        const Vec3d a = tangent_part(x, Vec3d(jet.acceleration.row(i).transpose()));
        const double speed2 = v.squaredNorm();
        if (speed2 == 0.0) throw DegenerateCurve("enclosed area of a loop with zero velocity");
        turning += a.dot(x.cross(v)) / speed2;
    }
    turning /= N;
    return kTwoPi - turning;
}

double round_length(const DiscreteLoop& loop) {
    const LoopJet jet = differentiate(loop);
    double sum = 0.0;
    for (int i = 0; i < loop.size(); ++i) {
        const Vec3d x = loop.point(i);
        sum += tangent_part(x, Vec3d(jet.velocity.row(i).transpose())).norm();
    }
    return sum / loop.size();
}

}  // namespace magloop
