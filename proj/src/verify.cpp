#include "magloop/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

namespace magloop {

const char* to_string(AlexandrovClass c) noexcept {
    switch (c) {
        case AlexandrovClass::AlexandrovBySimplicity: return "AlexandrovBySimplicity";
        case AlexandrovClass::NecessaryConditionsPass: return "NecessaryConditionsPass";
        case AlexandrovClass::Fails: return "Fails";
    }
    return "Fails";
}

namespace {

constexpr int kPoleTries = 20;
constexpr double kPoleClearance = 1e-3;
constexpr int kMaxBisections = 30;

double unit_interval(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

// Winding number of a closed planar polygon around y (Sunday's crossing rule).
int winding_number(const std::vector<Vec2d>& poly, const Vec2d& y) {
    int w = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2d& a = poly[i];
        const Vec2d& b = poly[(i + 1) % n];
        const double cross = (b.x() - a.x()) * (y.y() - a.y()) - (y.x() - a.x()) * (b.y() - a.y());
        if (a.y() <= y.y()) {
            if (b.y() > y.y() && cross > 0) ++w;
        } else if (b.y() <= y.y() && cross < 0) {
            --w;
        }
    }
    return w;
}

Vec3d polar_point(double theta, double lon) {
    return {std::sin(theta) * std::cos(lon), std::sin(theta) * std::sin(lon), std::cos(theta)};
}

}  // namespace

SpherePoint<double> choose_pole(const DiscreteLoop& loop, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Vec3d best = Vec3d::UnitZ();
    double best_dist = -1.0;
    for (int i = 0; i < kPoleTries; ++i) {
        const double z = 2.0 * unit_interval(rng) - 1.0;
        const double a = kTwoPi * unit_interval(rng);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const Vec3d p(r * std::cos(a), r * std::sin(a), z);
        const double d = distance_to_loop(loop, p);
        if (d > best_dist) {
            best_dist = d;
            best = p;
        }
    }
    if (best_dist < kPoleClearance) throw ChartError("no admissible stereographic pole after 20 tries");
    return SpherePoint<double>(best);
}

double integrate_positive_side(const DiscreteLoop& loop, const std::function<double(const Vec3d&)>& f,
                               const SpherePoint<double>& pole, const VerifyOptions& opts) {
    const int rows = opts.grid_rows, cols = 2 * opts.grid_rows, sub = opts.subrows;
    if (rows < 4 || sub < 1) throw DomainError("quadrature grid too small");
    const int index = rotation_index(loop, pole).index;
    if (index != 1 && index != -1) throw Unsupported("positive side requires a simple loop");

    const int M = std::max(opts.polyline_points, loop.size());
    const DiscreteLoop fine = resample(loop, M % 2 == 0 ? M : M + 1);
    const int n = fine.size();
    std::vector<Vec3d> P(n);
    std::vector<Vec2d> image(n);
    for (int i = 0; i < n; ++i) {
        P[i] = fine.point(i);
        image[i] = stereographic(SpherePoint<double>(P[i]), pole);
    }
    // index +1: the J gamma' side is the bounded component of the image
    auto positive = [&](const Vec3d& x) {
        const int w = winding_number(image, stereographic(SpherePoint<double>(x), pole));
        return index == 1 ? w != 0 : w == 0;
    };

    // vertices where z turns; a band containing one is bisected, since the
    // crossing longitudes read at mid-height are only first order there
    std::vector<double> turning;
    for (int i = 0; i < n; ++i) {
        const double dz0 = P[i].z() - P[(i + n - 1) % n].z();
        const double dz1 = P[(i + 1) % n].z() - P[i].z();
        if (dz0 * dz1 <= 0.0) turning.push_back(P[i].z());
    }
    std::sort(turning.begin(), turning.end());
    auto has_turning = [&](double z_lo, double z_hi) {
        const auto it = std::lower_bound(turning.begin(), turning.end(), z_lo);
        return it != turning.end() && *it <= z_hi;
    };

    const double dth = kPi / rows, dlon = kTwoPi / cols;
    Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(rows, cols);
    std::vector<double> cross;

    std::function<void(int, double, double, int)> band = [&](int r, double ta, double tb, int depth) {
        if (depth < kMaxBisections && has_turning(std::cos(tb), std::cos(ta))) {
            const double tm = 0.5 * (ta + tb);
            band(r, ta, tm, depth + 1);
            band(r, tm, tb, depth + 1);
            return;
        }
        const double area = std::cos(ta) - std::cos(tb);
        const double zc = std::cos(0.5 * (ta + tb));
        cross.clear();
        for (int i = 0; i < n; ++i) {
            const Vec3d& a = P[i];
            const Vec3d& b = P[(i + 1) % n];
            const double da = a.z() - zc, db = b.z() - zc;
            if ((da > 0.0) == (db > 0.0)) continue;
            const Vec3d c = a + (da / (da - db)) * (b - a);
            cross.push_back(std::atan2(c.y(), c.x()));
        }
        std::sort(cross.begin(), cross.end());

        bool inside = positive(polar_point(0.5 * (ta + tb), -kPi));
        double start = -kPi;
        auto deposit = [&](double l0, double l1) {
            int j = std::clamp(static_cast<int>(std::floor((l0 + kPi) / dlon)), 0, cols - 1);
            while (j < cols && l0 < l1) {
                const double e = std::min(-kPi + (j + 1) * dlon, l1);
                weight(r, j) += area * (e - l0);
                l0 = e;
                ++j;
            }
        };
        for (double c : cross) {
            if (inside) deposit(start, c);
            inside = !inside;
            start = c;
        }
        if (inside) deposit(start, kPi);
    };
    for (int r = 0; r < rows; ++r)
        for (int s = 0; s < sub; ++s) band(r, (r + double(s) / sub) * dth, (r + double(s + 1) / sub) * dth, 0);

    double total = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < cols; ++j)
            if (weight(r, j) != 0.0) total += weight(r, j) * f(polar_point((r + 0.5) * dth, -kPi + (j + 0.5) * dlon));
    return total;
}

double gauss_bonnet_residual(const DiscreteLoop& loop, const SphericalField& phi, const VerifyOptions& opts) {
    const MovingFrame frame = moving_frame(loop, phi);
    const double boundary = (frame.curvature.array() * frame.speed.array()).mean();
    const SpherePoint<double> pole = choose_pole(loop, opts.seed);
    // K_g dA_g = (1 - Delta phi / 2) dA_can
    const double interior = integrate_positive_side(
        loop, [&](const Vec3d& x) { return 1.0 - 0.5 * phi.jet(x).laplacian; }, pole, opts);
    return boundary + interior - kTwoPi;
}

double isoperimetric_slack(const DiscreteLoop& loop) {
    const double L = round_length(loop);
    const double A = enclosed_area(loop);
    return L * L - (4.0 * kPi * A - A * A);
}

double min_gauss_curvature(const SphericalField& phi) {
    const ConformalMetric m{phi};
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 90; ++i)
        for (int j = 0; j < 180; ++j)
            lo = std::min(lo, gauss_curvature(m, SpherePoint<double>(polar_point((i + 0.5) * kPi / 90,
                                                                                 (j + 0.5) * kTwoPi / 180))));
    return lo;
}

AlexandrovResult alexandrov_check(const DiscreteLoop& loop, const ConformalMetric& m, std::uint64_t seed) {
    AlexandrovResult out;
    const SpherePoint<double> pole = choose_pole(loop, seed);
    out.rotation_index = rotation_index(loop, pole).index;
    out.isotropy = isotropy_order(loop);

    if (self_intersections(loop).simple()) {
        out.kind = AlexandrovClass::AlexandrovBySimplicity;
        return out;
    }
    if (out.isotropy > 1) {
        const MovingFrame frame = moving_frame(loop, m.phi);
        if (frame.curvature.minCoeff() >= -1e-9) {
            out.kind = AlexandrovClass::Fails;
            out.reason = "iterate";
            return out;
        }
    }
    if (out.rotation_index == 1) {
        out.kind = AlexandrovClass::NecessaryConditionsPass;
    } else {
        out.kind = AlexandrovClass::Fails;
        out.reason = "rotation index";
    }
    return out;
}

VerificationReport verify_orbit(const OrbitSolution& sol, const VerifyOptions& opts) {
    VerificationReport rep;
    const auto& tol = opts.tol;
    const DiscreteLoop& loop = sol.loop;
    const SphericalField& phi = sol.pair.phi;
    const double scale = sol.magnetic() ? sol.energy : 1.0;

    rep.residual_norm = solution_residual(sol);
    if (!std::isfinite(rep.residual_norm)) rep.failures.push_back("residual is not finite");

    const MovingFrame frame = moving_frame(loop, phi);
    rep.speed_variation = (frame.speed.maxCoeff() - frame.speed.minCoeff()) / frame.speed.mean();
    for (int i = 0; i < loop.size(); ++i)
        rep.curvature_mismatch =
            std::max(rep.curvature_mismatch, std::abs(frame.curvature(i) - sol.pair.k.value(loop.point(i)) / scale));
    rep.length = frame.speed.mean();
    rep.length_upper_bound = kTwoPi * scale / sol.pair.k_inf;
    rep.curvature_nonnegative = min_gauss_curvature(phi) >= 0.0;

    std::ostringstream msg;
    auto fail = [&](const char* what, double value, double limit) {
        msg.str("");
        msg << what << " " << value << " exceeds " << limit;
        rep.failures.push_back(msg.str());
    };
    if (!(rep.curvature_mismatch <= tol.curvature)) fail("curvature mismatch", rep.curvature_mismatch, tol.curvature);
    if (!(rep.speed_variation <= tol.speed_variation))
        fail("speed variation", rep.speed_variation, tol.speed_variation);
    if (rep.curvature_nonnegative && !(rep.length <= rep.length_upper_bound + tol.length))
        fail("length", rep.length, rep.length_upper_bound + tol.length);

    rep.simple = self_intersections(loop).simple();
    if (rep.simple) {
        rep.gauss_bonnet_residual = gauss_bonnet_residual(loop, phi, opts);
        if (!(std::abs(*rep.gauss_bonnet_residual) <= tol.gauss_bonnet))
            fail("Gauss-Bonnet residual", std::abs(*rep.gauss_bonnet_residual), tol.gauss_bonnet);
        rep.isoperimetric_slack = isoperimetric_slack(loop);
        if (!(*rep.isoperimetric_slack >= -tol.isoperimetric))
            fail("isoperimetric deficit", -*rep.isoperimetric_slack, tol.isoperimetric);
    }

    rep.alexandrov = alexandrov_check(loop, ConformalMetric{phi}, opts.seed);
    rep.rotation_idx = rep.alexandrov.rotation_index;
    rep.isotropy = rep.alexandrov.isotropy;
    rep.isotropy_tolerance = kIsotropyTol;
    rep.passed = rep.failures.empty();
    return rep;
}

std::vector<OrbitSolution> distinct_orbits(const std::vector<OrbitSolution>& sols, double threshold) {
    std::vector<OrbitSolution> out;
    for (const auto& s : sols) {
        bool merged = false;
        for (auto& kept : out) {
            if (shift_distance(s.loop, kept.loop).distance < threshold) {
                if (s.residual_norm < kept.residual_norm) kept = s;
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(s);
    }
    return out;
}

}  // namespace magloop
