#include <doctest.h>

#include "magloop/verify.hpp"

#include <random>

using namespace magloop;

namespace {

FieldPair constant_pair(double k) { return FieldPair{SphericalField(), SphericalField::constant(k), k}; }

FieldPair test_pair() {
    return FieldPair::certified(SphericalField({{1, 0, 0.2}}), SphericalField({{0, 0, 1.0}, {1, 1, 0.3}}));
}

double circle_length(double k) { return kTwoPi / std::sqrt(1.0 + k * k); }

// Pushes a circle about `center` off itself along the center direction.
DiscreteLoop perturbed(const DiscreteLoop& loop, const Vec3d& center, double eps, int mode = 3) {
    PointMatrix p = loop.points();
    const Vec3d n = center.normalized();
    for (int i = 0; i < p.rows(); ++i) {
        const Vec3d x = p.row(i).transpose();
        p.row(i) += eps * std::sin(mode * kTwoPi * i / p.rows()) * (n - n.dot(x) * x).transpose();
    }
    return DiscreteLoop(std::move(p));
}

SolverOptions fast(int N = 64) {
    SolverOptions o;
    o.N = N;
    o.verify = false;
    return o;
}

}  // namespace

TEST_CASE("SolverOptions::validate") {
    SolverOptions o;
    CHECK_NOTHROW(o.validate());
    o.N = 17;
    CHECK_THROWS_AS(o.validate(), DomainError);
    o.N = 64;
    o.newton_tol = 0.0;
    CHECK_THROWS_AS(o.validate(), DomainError);
}

TEST_CASE("seed_circles") {
    for (double k : {1.0, 2.0}) {
        const auto pair = constant_pair(k);
        const auto seeds = seed_circles(pair, 8, 128);
        REQUIRE(seeds.size() == 8);
        for (const auto& s : seeds) {
            CHECK(round_length(s) == doctest::Approx(circle_length(k)).epsilon(1e-12));
            CHECK(sup_norm(s, pair.phi, residual_prescribed(s, pair)) <= 1e-8);
        }
    }
    CHECK(circle_length(1.0) == doctest::Approx(4.442883).epsilon(1e-7));
    CHECK(circle_length(2.0) == doctest::Approx(2.809926).epsilon(1e-7));
    const auto nearly_geodesic = seed_circles(constant_pair(1e-6), 8, 64);
    CHECK(round_length(nearly_geodesic[0]) == doctest::Approx(kTwoPi).epsilon(1e-9));

    const auto centers = seed_centers(8);
    for (const auto& c : centers) CHECK(std::abs(std::abs(c.x()) - 1.0 / std::sqrt(3.0)) < 1e-15);
    const auto fib = seed_centers(12);
    REQUIRE(fib.size() == 12);
    for (std::size_t i = 0; i < fib.size(); ++i)
        for (std::size_t j = i + 1; j < fib.size(); ++j) CHECK((fib[i] - fib[j]).norm() > 0.5);
    CHECK_THROWS_AS(seed_circles(FieldPair{SphericalField(), SphericalField::constant(-1.0), -1.0}, 8), DomainError);
}

TEST_CASE("reparametrize_uniform") {
    // the latitude circle with a nonuniform parameter
    const auto loop = DiscreteLoop::sample(64, [](double t) {
        const double s = kTwoPi * t + 0.3 * std::sin(kTwoPi * t);
        return Vec3d(std::sin(1.0) * std::cos(s), std::sin(1.0) * std::sin(s), std::cos(1.0));
    });
    CHECK(speed_variation(loop, SphericalField()) > 0.1);
    const auto uniform = reparametrize_uniform(loop, SphericalField());
    CHECK(speed_variation(uniform, SphericalField()) < 1e-9);
    CHECK((uniform.point(0) - loop.point(0)).norm() < 1e-14);
    for (int i = 0; i < 64; ++i) CHECK(std::abs(uniform.point(i).z() - std::cos(1.0)) < 1e-10);
    // a conformal factor changes which parameter is uniform
    const SphericalField phi({{1, 1, 0.5}});
    CHECK(speed_variation(reparametrize_uniform(loop, phi), phi) < 1e-9);
}

TEST_CASE("newton_solve") {
    SUBCASE("exact circle is a fixed point") {
        const auto pair = constant_pair(1.0);
        const auto circle = circle_loop(Vec3d(0.3, -0.2, 1.0), std::atan(1.0), 128);
        const auto sol = newton_solve(circle, pair, fast(128));
        CHECK(sol.newton_iters <= 1);
        CHECK((sol.loop.points() - circle.points()).cwiseAbs().maxCoeff() < 1e-10);
    }

    SUBCASE("perturbed circle converges at N = 128") {
        const auto pair = constant_pair(1.0);
        const Vec3d c(0.1, 0.9, -0.3);
        const auto guess = perturbed(circle_loop(c, std::atan(1.0), 128), c, 1e-2);
        const auto sol = newton_solve(guess, pair, fast(128));
        CHECK(sol.residual_norm <= 1e-10);
        CHECK(sol.speed == doctest::Approx(circle_length(1.0)).epsilon(1e-10));
        CHECK(speed_variation(sol.loop, pair.phi) <= 1e-8);
    }

    SUBCASE("geodesics for k = 0") {
        const auto pair = constant_pair(0.0);
        const auto guess = perturbed(circle_loop(Vec3d(0, 0, 1), kPi / 2, 64), Vec3d(0, 0, 1), 2e-2, 2);
        const auto sol = newton_solve(guess, pair, fast());
        CHECK(sol.residual_norm <= 1e-10);
        CHECK(sol.speed == doctest::Approx(kTwoPi).epsilon(1e-10));
        // a great circle: all points on one plane through the origin
        const Vec3d n = sol.loop.point(0).cross(sol.loop.point(16)).normalized();
        for (int i = 0; i < 64; ++i) CHECK(std::abs(sol.loop.point(i).dot(n)) < 1e-10);
    }

    SUBCASE("gauge stability") {
        const auto pair = test_pair();
        const Vec3d c(1, 0, 0);
        const auto sol = newton_solve(circle_loop(c, std::atan2(1.0, 1.3), 64), pair, fast());
        const auto again = newton_solve(sol.loop, pair, fast());
        CHECK(again.newton_iters == 0);
        CHECK((again.loop.points() - sol.loop.points()).cwiseAbs().maxCoeff() < 1e-10);
    }

    SUBCASE("errors") {
        const auto pair = constant_pair(1.0);
        const Vec3d c(0, 0, 1);
        const auto guess = perturbed(circle_loop(c, 0.5, 64), c, 0.1);
        SolverOptions o = fast();
        o.max_iters = 1;
        try {
            newton_solve(guess, pair, o);
            FAIL("expected NonConvergence");
        } catch (const NonConvergence& e) {
            CHECK(e.last_residual() > o.newton_tol);
        }
        // a parameterization that nearly stops at t = 0
        const auto tiny = DiscreteLoop::sample(64, [](double t) {
            const double s = kTwoPi * t - (1.0 - 1e-8) * std::sin(kTwoPi * t);
            return Vec3d(std::sin(0.5) * std::cos(s), std::sin(0.5) * std::sin(s), std::cos(0.5));
        });
        CHECK_THROWS_AS(newton_solve(tiny, pair, fast()), CollapseError);
    }
}

TEST_CASE("integrate_flow") {
    const SpherePoint<double> x0(0, std::sin(kPi / 4), std::cos(kPi / 4));
    SUBCASE("circle closes after its period") {
        const auto pair = constant_pair(1.0);
        const TangentVector<double> v0(x0, Vec3d(-1, 0, 0));
        const auto tr = integrate_flow(x0, v0, circle_length(1.0), pair, 1e-3);
        CHECK((tr.x.row(tr.x.rows() - 1).transpose() - x0.vec()).norm() <= 1e-8);
        CHECK(tr.speed_drift <= 1e-9);
        CHECK(tr.times.back() == doctest::Approx(circle_length(1.0)));
    }
    SUBCASE("geodesic flow") {
        const auto pair = constant_pair(0.0);
        const TangentVector<double> v0(x0, Vec3d(1, 0, 0));
        const auto tr = integrate_flow(x0, v0, kTwoPi, pair, 1e-3);
        CHECK((tr.x.row(tr.x.rows() - 1).transpose() - x0.vec()).norm() <= 1e-8);
        CHECK(tr.speed_drift <= 1e-9);
        const Vec3d n = x0.vec().cross(v0.vec()).normalized();
        for (Eigen::Index i = 0; i < tr.x.rows(); i += 97) CHECK(std::abs(tr.x.row(i).dot(n)) < 1e-9);
    }
    SUBCASE("g-speed is conserved for a generic pair") {
        const auto pair = test_pair();
        const TangentVector<double> v0(x0, Vec3d(0.3, -1, 0.8));
        const auto tr = integrate_flow(x0, v0, 6.0, pair, 1e-3);
        CHECK(tr.speed_drift <= 1e-9);
        for (Eigen::Index i = 0; i < tr.x.rows(); ++i) {
            CHECK(std::abs(tr.x.row(i).norm() - 1.0) < 1e-14);
            CHECK(std::abs(tr.x.row(i).dot(tr.v.row(i))) < 1e-14);
        }
    }
}

TEST_CASE("shooting") {
    SUBCASE("round sphere period") {
        const auto pair = constant_pair(1.0);
        const SpherePoint<double> x0(0.2, 0.0, 1.0);
        const TangentVector<double> v0(x0, Vec3d(0, 1, 0));
        const auto raw = shoot_return_map(x0, v0, 4.0, pair, 64);
        CHECK(raw.period == doctest::Approx(circle_length(1.0)).epsilon(1e-8));
        CHECK(raw.defect <= 1e-10);
    }
    SUBCASE("exact periodic data needs no correction") {
        const auto pair = constant_pair(1.0);
        const auto circle = circle_loop(Vec3d(0, 0, 1), std::atan(1.0), 64);
        const SpherePoint<double> x0(circle.point(0));
        const Vec3d v = differentiate(circle).velocity.row(0).transpose();
        const TangentVector<double> v0(x0, v / v.norm());
        ShootingOptions o;
        o.tol = 1e-9;
        const auto raw = shoot_return_map(x0, v0, circle_length(1.0), pair, 64, o);
        CHECK(raw.iterations == 0);
        CHECK(shift_distance(raw.loop, circle).distance < 1e-9);
    }
    SUBCASE("agrees with newton_solve on a perturbed metric") {
        const auto pair = test_pair();
        const auto newton = newton_solve(circle_loop(Vec3d(1, 0, 0), std::atan2(1.0, 1.3), 64), pair, fast());
        // section anchored at the newton orbit, slightly detuned initial data
        const SpherePoint<double> x0(newton.loop.point(0));
        const Vec3d v = differentiate(newton.loop).velocity.row(0).transpose();
        const TangentVector<double> v0(x0, v + Vec3d(0.02, -0.01, 0.03));
        const auto raw = shoot_return_map(x0, v0, newton.speed * 1.01, pair, 64);
        CHECK(shift_distance(raw.loop, newton.loop).distance <= 1e-6);
        CHECK(raw.period == doctest::Approx(newton.speed).epsilon(1e-8));
        const auto polished = shoot_periodic(x0, v0, newton.speed * 1.01, pair, fast());
        CHECK(shift_distance(polished.loop, newton.loop).distance <= 1e-8);
    }
    SUBCASE("preconditions") {
        const auto pair = constant_pair(1.0);
        const SpherePoint<double> x0(0, 0, 1);
        CHECK_THROWS_AS(shoot_return_map(x0, TangentVector<double>(x0, Vec3d(1, 0, 0)), -1.0, pair, 64), DomainError);
    }
}

TEST_CASE("refine_seed") {
    SUBCASE("axisymmetric prescription: the poles are bifurcation centers") {
        const auto pair = FieldPair::certified(SphericalField(), SphericalField({{0, 0, 1.0}, {1, 0, 0.3}}));
        const double rho = std::atan2(1.0, pair.k_inf);
        const auto r = refine_seed(pair, circle_loop(Vec3d(0.3, -0.2, 1.0), rho, 64));
        REQUIRE(r.converged);
        Vec3d c = Vec3d::Zero();
        for (int i = 0; i < r.loop.size(); ++i) c += r.loop.point(i);
        CHECK(c.normalized().z() > 1.0 - 1e-8);
    }
    SUBCASE("constant prescription: nothing to do") {
        const auto pair = constant_pair(1.0);
        const auto seed = seed_circles(pair, 8, 64)[5];
        const auto r = refine_seed(pair, seed);
        CHECK(r.converged);
        CHECK(r.iterations == 0);
        CHECK(shift_distance(r.loop, seed).distance < 1e-12);
    }
    SUBCASE("every refined seed of a perturbed pair reaches t = 1") {
        const auto pair = test_pair();
        for (const auto& seed : seed_circles(pair, 8, 64)) {
            const auto r = refine_seed(pair, seed);
            if (!r.converged) continue;
            ContinuationOptions opts;
            opts.refine_seed = false;
            CHECK(continue_path(pair, r.loop, fast(), opts).reached());
        }
    }
}

TEST_CASE("continue_path") {
    SUBCASE("constant prescription: the path does not move") {
        const auto pair = constant_pair(1.0);
        const auto seed = seed_circles(pair, 8, 64)[2];
        const auto path = continue_path(pair, seed, fast());
        REQUIRE(path.reached());
        for (const auto& s : path.steps) CHECK(s.iterations <= 1);
        for (const auto& [t, sol] : path.samples) CHECK(shift_distance(sol.loop, seed).distance < 1e-9);
    }
    SUBCASE("test pair from two seeds") {
        const auto pair = test_pair();
        const auto seeds = seed_circles(pair, 8, 64);
        for (int i : {0, 7}) {
            const auto path = continue_path(pair, seeds[i], fast());
            REQUIRE(path.reached());
            CHECK(path.samples.size() - 1 <= 200);
            double last_t = -1.0;
            for (const auto& [t, sol] : path.samples) {
                CHECK(t > last_t);
                last_t = t;
            }
            CHECK(last_t == 1.0);
            const auto report = verify_orbit(path.endpoint());
            CHECK(report.passed);
        }
    }
    SUBCASE("unreachable tolerance blocks with step underflow") {
        const auto pair = test_pair();
        SolverOptions o = fast(32);
        o.newton_tol = 1e-16;
        const auto path = continue_path(pair, seed_circles(pair, 8, 32)[0], o);
        CHECK(path.status == PathStatus::Blocked);
        CHECK(path.reason == "step underflow");
        CHECK(path.blocked_at < 1.0);
    }
}

TEST_CASE("rescale_to_energy") {
    const double k = 1.0;
    for (double c : {0.5, 1.0, 2.0}) {
        // a k / c circle rescales to a magnetic orbit for k on E_c
        const auto pair = constant_pair(k / c);
        const auto sol = newton_solve(circle_loop(Vec3d(0.5, 0.5, 0.2), std::atan2(c, k), 64), pair, fast());
        const auto mag = rescale_to_energy(sol, c);
        CHECK(mag.magnetic());
        CHECK(mag.energy == c);
        CHECK(mag.residual_norm <= 1e-8);
        CHECK(mag.pair.k.value(Vec3d(0, 0, 1)) == doctest::Approx(k));
        CHECK(mag.period == doctest::Approx(sol.speed / c));
        // g-speed along tau is exactly c
        const auto f = moving_frame(mag.loop, mag.pair.phi);
        CHECK((f.speed.array() / mag.period - c).abs().maxCoeff() < 1e-10);
    }
    const auto sol = newton_solve(circle_loop(Vec3d(0, 0, 1), 0.7, 64), constant_pair(1.0 / std::tan(0.7)), fast());
    const auto same = rescale_to_energy(sol, sol.speed);
    CHECK(same.period == doctest::Approx(1.0));
    CHECK_THROWS_AS(rescale_to_energy(sol, 0.0), DomainError);
    CHECK_THROWS_AS(rescale_to_energy(sol, -2.0), DomainError);
}

TEST_CASE("find_two_orbits on the round sphere") {
    SearchOptions o;
    o.solver = fast(64);
    const auto orbits = find_two_orbits(constant_pair(1.0), o);
    REQUIRE(orbits.size() >= 2);
    for (std::size_t i = 0; i < orbits.size(); ++i) {
        CHECK(orbits[i].report.passed);
        CHECK(orbits[i].report.alexandrov.kind == AlexandrovClass::AlexandrovBySimplicity);
        for (std::size_t j = i + 1; j < orbits.size(); ++j)
            CHECK(shift_distance(orbits[i].loop, orbits[j].loop).distance > 0.1);
    }
    CHECK_THROWS_AS(search_orbits(FieldPair{SphericalField(), SphericalField::constant(-1.0), -1.0}, o), DomainError);
}

TEST_CASE("search reports blocked seeds") {
    SearchOptions o;
    o.solver = fast(32);
    o.solver.newton_tol = 1e-16;
    o.seed_count = 2;
    const auto r = search_orbits(test_pair(), o);
    CHECK(r.orbits.empty());
    REQUIRE(r.diagnostics.size() == 2);
    CHECK(r.diagnostics[0].find("blocked") != std::string::npos);
    CHECK_THROWS_AS(find_two_orbits(test_pair(), o), SearchFailure);
}
