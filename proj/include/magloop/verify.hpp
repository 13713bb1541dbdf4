#pragma once

#include "magloop/report.hpp"
#include "magloop/solver.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace magloop {

struct VerifyOptions {
    VerifyTolerances tol;
    int grid_rows = 400;  ///< lat-long quadrature grid; columns = 2 * rows
    int subrows = 8;
    int polyline_points = 2048;
    std::uint64_t seed = 20261019;
};

/// Pole for stereographic charts: the best of 20 seeded random points, farthest from the loop.
SpherePoint<double> choose_pole(const DiscreteLoop& loop, std::uint64_t seed);

/// Integral of f times the round area form over the disk on the J gamma' side of a simple loop.
/// Masked lat-long quadrature with exact cell areas and per-row crossing intervals.
double integrate_positive_side(const DiscreteLoop& loop, const std::function<double(const Vec3d&)>& f,
                               const SpherePoint<double>& pole, const VerifyOptions& opts = {});

/// Oint k_g dS_g + int K_g dA_g - 2 pi over the positive side of a simple loop.
double gauss_bonnet_residual(const DiscreteLoop& loop, const SphericalField& phi, const VerifyOptions& opts = {});

/// L^2 - (4 pi A - A^2) for the round metric.
double isoperimetric_slack(const DiscreteLoop& loop);

/// Minimum of K_g over a 90 x 180 cell-center grid.
double min_gauss_curvature(const SphericalField& phi);

AlexandrovResult alexandrov_check(const DiscreteLoop& loop, const ConformalMetric& m, std::uint64_t seed = 20261019);

VerificationReport verify_orbit(const OrbitSolution& sol, const VerifyOptions& opts = {});

/// Drops solutions within shift_distance 1e-4 of an earlier one, keeping the lower residual.
std::vector<OrbitSolution> distinct_orbits(const std::vector<OrbitSolution>& sols, double threshold = 1e-4);

}  // namespace magloop
