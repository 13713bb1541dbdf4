#include <doctest.h>

#include "magloop/geometry.hpp"

#include <random>

using namespace magloop;

namespace {

SpherePoint<double> polar_point(double theta, double lon) {
    return SpherePoint<double>(std::sin(theta) * std::cos(lon), std::sin(theta) * std::sin(lon), std::cos(theta));
}

ConformalMetric metric_from(std::vector<HarmonicTerm> terms) { return ConformalMetric{SphericalField(std::move(terms))}; }

// Fourth-order central differences of the Laplace-Beltrami operator in
// (theta, lon): f_tt + cot(t) f_t + f_ll / sin^2(t).
double fd_laplacian(const SphericalField& f, double theta, double lon, double h_t, double h_l) {
    auto F = [&](double t, double l) { return f.value(polar_point(t, l).vec()); };
    auto d1 = [](double m2, double m1, double p1, double p2, double h) {
        return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    };
    auto d2 = [](double m2, double m1, double c, double p1, double p2, double h) {
        return (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
    };
    const double c = F(theta, lon);
    const double tm2 = F(theta - 2 * h_t, lon), tm1 = F(theta - h_t, lon);
    const double tp1 = F(theta + h_t, lon), tp2 = F(theta + 2 * h_t, lon);
    const double lm2 = F(theta, lon - 2 * h_l), lm1 = F(theta, lon - h_l);
    const double lp1 = F(theta, lon + h_l), lp2 = F(theta, lon + 2 * h_l);
    const double s = std::sin(theta);
    return d2(tm2, tm1, c, tp1, tp2, h_t) + std::cos(theta) / s * d1(tm2, tm1, tp1, tp2, h_t) +
           d2(lm2, lm1, c, lp1, lp2, h_l) / (s * s);
}

}  // namespace

TEST_CASE("project_tangent") {
    const SpherePoint<double> n(0, 0, 1);
    CHECK(project_tangent(n, Vec3d(1, 0, 0)).vec().isApprox(Vec3d(1, 0, 0)));
    CHECK(project_tangent(n, Vec3d(0, 0, 5)).vec().norm() == doctest::Approx(0.0));
    const SpherePoint<double> e(1, 0, 0);
    CHECK((project_tangent(e, Vec3d(1, 1, 0)).vec() - Vec3d(0, 1, 0)).norm() < 1e-15);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 50; ++trial) {
        const SpherePoint<double> x(g(rng), g(rng), g(rng));
        const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - x.vec() * x.vec().transpose();
        CHECK((P * P - P).norm() < 1e-14);
        CHECK((P - P.transpose()).norm() == 0.0);
        const Vec3d w(g(rng), g(rng), g(rng));
        const auto once = project_tangent(x, w);
        const auto twice = project_tangent(x, once.vec());
        CHECK((once.vec() - twice.vec()).norm() < 1e-15);
        CHECK(std::abs(x.vec().dot(once.vec())) < 1e-12);
    }
}

TEST_CASE("metric_inner") {
    const SpherePoint<double> n(0, 0, 1);
    const TangentVector<double> u(n, Vec3d(1, 0, 0)), v(n, Vec3d(0, 1, 0));
    CHECK(metric_inner(ConformalMetric::round(), n, u, u) == doctest::Approx(1.0));
    const ConformalMetric four{SphericalField::constant(std::log(4.0))};
    CHECK(metric_inner(four, n, u, u) == doctest::Approx(4.0));
    const auto m = metric_from({{1, 0, 0.7}, {2, 1, -0.3}});
    CHECK(metric_inner(m, n, u, v) == doctest::Approx(0.0));

    const SpherePoint<double> e(1, 0, 0);
    const TangentVector<double> w(e, Vec3d(0, 1, 0));
    CHECK_THROWS_AS(metric_inner(m, n, u, w), BasePointMismatch);
}

TEST_CASE("rotate_J") {
    const SpherePoint<double> n(0, 0, 1);
    CHECK(rotate_J(n, TangentVector<double>(n, Vec3d(1, 0, 0))).vec().isApprox(Vec3d(0, 1, 0)));

    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    const auto m = metric_from({{1, 0, 0.4}, {1, 1, -0.2}, {3, -2, 0.1}});
    for (int trial = 0; trial < 50; ++trial) {
        const SpherePoint<double> x(g(rng), g(rng), g(rng));
        const TangentVector<double> v(x, Vec3d(g(rng), g(rng), g(rng)));
        const auto jv = rotate_J(x, v);
        const auto jjv = rotate_J(x, jv);
        CHECK((jjv.vec() + v.vec()).norm() < 1e-14);
        CHECK(std::abs(x.vec().dot(jv.vec())) < 1e-14);
        CHECK(metric_norm(m, jv) == doctest::Approx(metric_norm(m, v)).epsilon(1e-14));
        CHECK(std::abs(metric_inner(m, x, v, jv)) < 1e-13);
    }
}

TEST_CASE("covariant_deriv") {
    const auto round = ConformalMetric::round();
    const auto constant = ConformalMetric{SphericalField::constant(0.8)};
    for (double t : {0.0, 0.3, 2.0}) {
        // great circle
        const SpherePoint<double> x(std::cos(t), std::sin(t), 0.0);
        const TangentVector<double> v(x, Vec3d(-std::sin(t), std::cos(t), 0.0));
        const Vec3d a(-std::cos(t), -std::sin(t), 0.0);
        CHECK(covariant_deriv(round, x, v, v, a).vec().norm() < 1e-15);

        // latitude circle at polar angle pi/4, unit round speed
        const double th = kPi / 4, s = std::sin(th);
        const SpherePoint<double> y(s * std::cos(t / s), s * std::sin(t / s), std::cos(th));
        const TangentVector<double> w(y, Vec3d(-std::sin(t / s), std::cos(t / s), 0.0));
        const Vec3d wd = -Vec3d(std::cos(t / s), std::sin(t / s), 0.0) / s;
        const auto D = covariant_deriv(round, y, w, w, wd);
        CHECK(D.vec().dot(rotate_J(y, w).vec()) == doctest::Approx(1.0 / std::tan(th)));
        const auto Dc = covariant_deriv(constant, y, w, w, wd);
        CHECK((Dc.vec() - D.vec()).norm() < 1e-15);
    }
}

TEST_CASE("covariant derivative is metric compatible along a sampled curve") {
    // <V, W>_g along gamma(t) differentiated by central differences
    const auto m = metric_from({{1, 0, 0.3}, {2, 2, 0.2}, {1, -1, -0.25}});
    auto gamma = [](double t) {
        return Vec3d(std::cos(t) + 0.2 * std::sin(3 * t), std::sin(t), 0.4 * std::cos(2 * t)).normalized();
    };
    auto tangent = [](const Vec3d& x, const Vec3d& w) { return Vec3d(w - x.dot(w) * x); };
    auto Vf = [&](double t) { return tangent(gamma(t), Vec3d(std::sin(t), 1.0, std::cos(2 * t))); };
    auto Wf = [&](double t) { return tangent(gamma(t), Vec3d(0.3, std::cos(3 * t), -1.0)); };
    auto inner = [&](double t) {
        const SpherePoint<double> x(gamma(t));
        return metric_inner(m, x, TangentVector<double>(x, Vf(t)), TangentVector<double>(x, Wf(t)));
    };
    double worst_coarse = 0.0, worst_fine = 0.0;
    for (double h : {1e-2, 5e-3}) {
        double worst = 0.0;
        for (double t = 0.1; t < 6.0; t += 0.37) {
            const SpherePoint<double> x(gamma(t));
            const Vec3d xd = (gamma(t + h) - gamma(t - h)) / (2 * h);
            const Vec3d Vd = (Vf(t + h) - Vf(t - h)) / (2 * h);
            const Vec3d Wd = (Wf(t + h) - Wf(t - h)) / (2 * h);
            const TangentVector<double> xdot(x, xd), V(x, Vf(t)), W(x, Wf(t));
            const double lhs = (inner(t + h) - inner(t - h)) / (2 * h);
            const double rhs = metric_inner(m, x, covariant_deriv(m, x, xdot, V, Vd), W) +
                               metric_inner(m, x, V, covariant_deriv(m, x, xdot, W, Wd));
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        (h == 1e-2 ? worst_coarse : worst_fine) = worst;
    }
    CHECK(worst_coarse < 5e-3);
    // second order: halving h divides the error by about four
    CHECK(worst_fine < 0.3 * worst_coarse);
}

TEST_CASE("geodesic_curvature") {
    const auto round = ConformalMetric::round();
    for (double t : {0.0, 1.0, 4.0}) {
        const SpherePoint<double> x(std::cos(t), 0.0, std::sin(t));
        CHECK(std::abs(geodesic_curvature(round, x, Vec3d(-std::sin(t), 0, std::cos(t)),
                                          Vec3d(-std::cos(t), 0, -std::sin(t)))) < 1e-12);
    }
    // latitude circles: k = cot(theta); constant conformal factor scales by e^{-c/2}
    for (double th : {kPi / 4, kPi / 3, 1.2}) {
        const double s = std::sin(th);
        for (double t : {0.0, 0.7}) {
            const SpherePoint<double> x(s * std::cos(t), s * std::sin(t), std::cos(th));
            const Vec3d v(-s * std::sin(t), s * std::cos(t), 0.0);
            const Vec3d a(-s * std::cos(t), -s * std::sin(t), 0.0);
            const double k = geodesic_curvature(round, x, v, a);
            CHECK(k == doctest::Approx(std::cos(th) / s).epsilon(1e-13));
            const double c = 0.9;
            const ConformalMetric scaled{SphericalField::constant(c)};
            CHECK(geodesic_curvature(scaled, x, v, a) == doctest::Approx(std::exp(-c / 2) * k).epsilon(1e-13));
        }
    }
    const SpherePoint<double> n(0, 0, 1);
    CHECK_THROWS_AS(geodesic_curvature(round, n, Vec3d(0, 0, 0), Vec3d(1, 0, 0)), DegenerateCurve);
}

TEST_CASE("gauss_curvature") {
    const SpherePoint<double> x(0.3, -0.5, 0.8);
    CHECK(gauss_curvature(ConformalMetric::round(), x) == 1.0);
    CHECK(gauss_curvature(ConformalMetric{SphericalField::constant(0.7)}, x) == doctest::Approx(std::exp(-0.7)));

    // phi = eps x3: the oracle Laplacian is a finite-difference one on the lat-long grid
    const double eps = 0.35;
    const SphericalField phi({{1, 0, eps}});
    const ConformalMetric m{phi};
    for (double th : {0.4, 1.1, 2.5}) {
        for (double lon : {0.0, 2.0}) {
            const auto p = polar_point(th, lon);
            const double fd = fd_laplacian(phi, th, lon, 1e-3, 1e-3);
            const double oracle = std::exp(-eps * p[2]) * (1.0 - 0.5 * fd);
            CHECK(gauss_curvature(m, p) == doctest::Approx(oracle).epsilon(1e-7));
            CHECK(gauss_curvature(m, p) == doctest::Approx(std::exp(-eps * p[2]) * (1 + eps * p[2])).epsilon(1e-14));
        }
    }
}

TEST_CASE("interpolated curvature stays nonnegative on a test grid") {
    const SphericalField phi({{1, 0, 0.3}, {2, 0, 0.1}, {2, 2, -0.05}});
    bool nonnegative_at_one = true;
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 60; ++j)
            nonnegative_at_one &= gauss_curvature(ConformalMetric{phi}, polar_point((i + 0.5) * kPi / 30, j * kTwoPi / 60)) >= 0;
    REQUIRE(nonnegative_at_one);
    for (double t = 0.0; t <= 1.0; t += 0.125) {
        const ConformalMetric mt{phi * t};
        for (int i = 0; i < 30; ++i)
            for (int j = 0; j < 60; ++j)
                CHECK(gauss_curvature(mt, polar_point((i + 0.5) * kPi / 30, j * kTwoPi / 60)) >= 0.0);
    }
}

TEST_CASE("stereographic") {
    const SpherePoint<double> pole(0, 0, 1);
    for (double lon = 0.0; lon < kTwoPi; lon += 0.5)
        CHECK(stereographic(SpherePoint<double>(std::cos(lon), std::sin(lon), 0.0), pole).norm() ==
              doctest::Approx(1.0));
    CHECK(stereographic(SpherePoint<double>(0, 0, -1), pole).norm() < 1e-15);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 100; ++trial) {
        const SpherePoint<double> p(g(rng), g(rng), g(rng));
        const SpherePoint<double> x(g(rng), g(rng), g(rng));
        if ((x.vec() - p.vec()).norm() < 0.05) continue;
        const auto back = inverse_stereographic(stereographic(x, p), p);
        CHECK((back.vec() - x.vec()).norm() < 1e-12);
    }
    CHECK_THROWS_AS(stereographic(pole, pole), ChartError);

    // orientation: J v maps to the positive rotation of the image of v
    const SpherePoint<double> x(0.2, 0.1, -0.9);
    const TangentVector<double> v(x, Vec3d(1, 0.3, 0));
    const Vec2d dv = stereographic_push(x.vec(), v.vec(), pole.vec());
    const Vec2d djv = stereographic_push(x.vec(), rotate_J(x, v).vec(), pole.vec());
    CHECK(dv.x() * djv.y() - dv.y() * djv.x() > 0.0);
}

// ---------------------------------------------------------------------------
// fields

TEST_CASE("eval_field") {
    const auto c = SphericalField::constant(2.5);
    CHECK(eval_field(c, Vec3d(0.1, 0.2, 0.9).normalized()) == doctest::Approx(2.5));
    const SphericalField z({{1, 0, 1.0}});
    CHECK(eval_field(z, Vec3d(0, 0, 1)) == doctest::Approx(1.0));
    CHECK(std::abs(eval_field(z, Vec3d(1, 0, 0))) < 1e-16);
    const SphericalField xy({{1, 1, 1.0}, {1, -1, 2.0}});
    CHECK(eval_field(xy, Vec3d(0.6, 0.8, 0.0)) == doctest::Approx(0.6 + 1.6));
    // Schmidt semi-normalized degree 2
    const Vec3d p = Vec3d(0.3, -0.4, 0.5).normalized();
    CHECK(eval_field(SphericalField({{2, 0, 1.0}}), p) == doctest::Approx(0.5 * (3 * p.z() * p.z() - 1)));
    CHECK(eval_field(SphericalField({{2, 1, 1.0}}), p) == doctest::Approx(std::sqrt(3.0) * p.x() * p.z()));
    CHECK(eval_field(SphericalField({{2, -2, 1.0}}), p) == doctest::Approx(std::sqrt(3.0) * p.x() * p.y()));
    CHECK_THROWS_AS(SphericalField({{1, 2, 1.0}}), DomainError);
}

TEST_CASE("addition theorem bounds every basis term by one") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        const Vec3d x = Vec3d(g(rng), g(rng), g(rng)).normalized();
        for (int l = 0; l <= 6; ++l) {
            double sum = 0.0;
            for (int m = -l; m <= l; ++m) {
                const double y = eval_field(SphericalField({{l, m, 1.0}}), x);
                sum += y * y;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("grad_field") {
    CHECK(grad_field(SphericalField::constant(3.0), Vec3d(0, 1, 0)).norm() == 0.0);
    CHECK(grad_field(SphericalField({{1, 0, 1.0}}), Vec3d(1, 0, 0)).isApprox(Vec3d(0, 0, 1)));

    // central differences along great circles, step 1e-4
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<HarmonicTerm> terms;
    for (int l = 0; l <= 4; ++l)
        for (int m = -l; m <= l; ++m) terms.push_back({l, m, 0.3 * g(rng)});
    const SphericalField f(terms);
    for (int trial = 0; trial < 30; ++trial) {
        const Vec3d x = Vec3d(g(rng), g(rng), g(rng)).normalized();
        const Vec3d gr = grad_field(f, x);
        CHECK(std::abs(gr.dot(x)) < 1e-14);
        for (int k = 0; k < 2; ++k) {
            Vec3d u(g(rng), g(rng), g(rng));
            u = (u - u.dot(x) * x).normalized();
            const double h = 1e-4;
            const double fd = (f.value(Vec3d(std::cos(h) * x + std::sin(h) * u)) -
                               f.value(Vec3d(std::cos(h) * x - std::sin(h) * u))) / (2 * std::sin(h));
            CHECK(std::abs(fd - gr.dot(u)) < 1e-6);
        }
    }
}

TEST_CASE("laplacian_field") {
    CHECK(laplacian_field(SphericalField::constant(1.0), Vec3d(0, 0, 1)) == 0.0);
    const SphericalField z({{1, 0, 1.0}});
    for (double th : {0.3, 1.0, 2.0}) {
        const auto p = polar_point(th, 0.4);
        CHECK(laplacian_field(z, p.vec()) == doctest::Approx(-2 * p[2]));
    }
    const SphericalField f({{2, 1, 0.5}, {3, -2, 0.25}});
    const SphericalField h({{1, -1, 1.0}, {2, 0, -0.75}});
    const Vec3d x = Vec3d(0.3, 0.2, -0.7).normalized();
    CHECK(laplacian_field(f * 2.0 + h * -3.0, x) ==
          doctest::Approx(2.0 * laplacian_field(f, x) - 3.0 * laplacian_field(h, x)));
}

TEST_CASE("Laplace-Beltrami eigenvalues match a finite-difference oracle on a 100x200 grid") {
    const int rows = 100, cols = 200;
    const double ht = kPi / rows, hl = kTwoPi / cols;
    for (int l = 0; l <= 3; ++l) {
        for (int m = -l; m <= l; ++m) {
            const SphericalField f({{l, m, 1.0}});
            double worst = 0.0;
            for (int i = 2; i < rows - 2; ++i) {
                const double th = (i + 0.5) * ht;
                for (int j = 0; j < cols; j += 7) {
                    const double lon = j * hl;
                    const double fd = fd_laplacian(f, th, lon, ht, hl);
                    worst = std::max(worst, std::abs(fd - laplacian_field(f, polar_point(th, lon).vec())));
                }
            }
            CAPTURE(l);
            CAPTURE(m);
            CHECK(worst < 2e-4);
        }
    }
}

TEST_CASE("field_infimum") {
    const auto c = field_infimum(SphericalField::constant(1.7));
    CHECK(c.lower == 1.7);
    CHECK(c.gap == 0.0);

    const auto lin = field_infimum(SphericalField({{0, 0, 1.0}, {1, 1, 0.3}}));
    CHECK(lin.lower <= 0.7);
    CHECK(lin.lower > 0.7 - 1e-6);
    CHECK(lin.gap < 1e-6);
    CHECK((lin.argmin - Vec3d(-1, 0, 0)).norm() < 1e-3);

    const double closed = 1.0 - std::sqrt(0.09 + 0.01);
    const auto lin2 = field_infimum(SphericalField({{0, 0, 1.0}, {1, 1, 0.3}, {1, -1, 0.1}}));
    CHECK(lin2.lower <= closed);
    CHECK(lin2.lower > closed - 1e-6);

    // bracket property against dense sampling for a mixed-degree field
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    std::vector<HarmonicTerm> terms{{0, 0, 2.0}};
    for (int l = 1; l <= 3; ++l)
        for (int m = -l; m <= l; ++m) terms.push_back({l, m, 0.2 * g(rng)});
    const SphericalField f(terms);
    const auto inf = field_infimum(f);
    double sampled = 1e300;
    for (int i = 0; i < 400; ++i)
        for (int j = 0; j < 800; ++j)
            sampled = std::min(sampled, f.value(polar_point((i + 0.5) * kPi / 400, j * kTwoPi / 800).vec()));
    CHECK(inf.lower <= sampled);
    CHECK(sampled - inf.lower < 1e-3);
    CHECK(inf.lower + inf.gap == doctest::Approx(f.value(inf.argmin)));
}

TEST_CASE("homotopy_fields") {
    const auto pair = FieldPair::certified(SphericalField({{1, 0, 0.2}}), SphericalField({{0, 0, 1.0}, {1, 1, 0.3}}));
    CHECK(pair.k_inf == doctest::Approx(0.7).epsilon(1e-6));

    const auto start = homotopy_fields(pair, 0.0);
    CHECK(start.phi.is_zero());
    CHECK(start.k.is_constant());
    CHECK(start.k.value(Vec3d(1, 0, 0)) == doctest::Approx(pair.k_inf));

    const auto end = homotopy_fields(pair, 1.0);
    CHECK(end.phi == pair.phi);
    CHECK(end.k == pair.k);

    const auto mid = homotopy_fields(pair, 0.5);
    for (const Vec3d x : {Vec3d(1, 0, 0), Vec3d(0, 1, 0), Vec3d(-0.6, 0, 0.8)})
        CHECK(mid.k.value(x) == doctest::Approx(0.5 * pair.k_inf + 0.5 * (1 + 0.3 * x.x())));
    const auto exact_mid = FieldPair::certified(SphericalField(), SphericalField({{0, 0, 1.0}, {1, 1, 0.3}}));
    const auto half = homotopy_fields(FieldPair{exact_mid.phi, exact_mid.k, 0.7}, 0.5);
    CHECK(half.k.value(Vec3d(1, 0, 0)) == doctest::Approx(0.85 + 0.15));

    for (double t = 0.0; t <= 1.0; t += 0.1)
        CHECK(field_infimum(homotopy_fields(pair, t).k).lower >= pair.k_inf - 1e-9);

    CHECK_THROWS_AS(homotopy_fields(pair, 1.5), DomainError);
    CHECK_THROWS_AS(homotopy_fields(pair, -0.1), DomainError);
    CHECK_THROWS_AS(FieldPair::certified(SphericalField(), SphericalField::constant(-1.0)), DomainError);
}
