#pragma once

#include "magloop/fields.hpp"
#include "magloop/loops.hpp"
#include "magloop/operators.hpp"
#include "magloop/report.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace magloop {

struct SolverOptions {
    double newton_tol = 1e-10;  ///< sup-norm of the residual
    int max_iters = 50;
    double damping = 0.5;       ///< backtracking factor
    int N = 128;
    double svd_cutoff = 1e-8;   ///< singular values below this are dropped
    bool verify = true;         ///< attach a full verification report
    std::uint64_t seed = 20261019;  ///< pole choice for the report

    void validate() const;
};

/// A closed solution together with how it was obtained.
///
/// Prescribed-curvature solutions are sampled at t = i/N with constant g-speed
/// equal to their length. After rescale_to_energy the samples sit at
/// tau = period * i / N with constant g-speed `energy`.
struct OrbitSolution {
    DiscreteLoop loop;
    FieldPair pair;
    double residual_norm = 0.0;
    double speed = 0.0;
    VerificationReport report;
    int newton_iters = 0;
    double period = 1.0;
    double energy = 0.0;  ///< 0 for the prescribed-curvature form

    bool magnetic() const noexcept { return energy > 0.0; }
};

/// Residual sup-norm of a solution in its own form (prescribed or magnetic).
double solution_residual(const OrbitSolution& sol);

/// Centers used by seed_circles: cube vertices for 8, a Fibonacci lattice otherwise.
std::vector<Vec3d> seed_centers(int count);

/// Circle of geodesic radius rho about `center`, counterclockwise seen from outside.
DiscreteLoop circle_loop(const Vec3d& center, double rho, int N);

/// The t = 0 solutions: circles with cot rho = k_inf about quasi-uniform centers.
std::vector<DiscreteLoop> seed_circles(const FieldPair& pair, int count, int N = 128);

struct SeedRefinement {
    DiscreteLoop loop;
    double defect = 0.0;  ///< cokernel component of the t-derivative of the residual
    int iterations = 0;
    bool converged = false;
};

/// Moves a t = 0 seed circle (same radius) to a center from which the circle family
/// bifurcates along homotopy_fields(pair, t): the t-derivative of the residual has no
/// component in the cokernel of the t = 0 linearization.
SeedRefinement refine_seed(const FieldPair& pair, const DiscreteLoop& seed, int max_iters = 40, double tol = 1e-5);

/// Resamples to uniform g-speed, keeping sample 0 in place.
DiscreteLoop reparametrize_uniform(const DiscreteLoop& loop, const SphericalField& phi);

/// Relative variation (max - min) / mean of the g-speed.
double speed_variation(const DiscreteLoop& loop, const SphericalField& phi);

/// Gauss-Newton with a phase condition and truncated-SVD least squares.
OrbitSolution newton_solve(const DiscreteLoop& guess, const FieldPair& pair, const SolverOptions& opts = {});

struct Trajectory {
    std::vector<double> times;
    PointMatrix x;
    PointMatrix v;
    double speed_drift = 0.0;  ///< max relative deviation of |v|_g from its initial value
};

/// RK4 for D_t gamma' = k J gamma' with projection back to TS^2 after every step.
/// The step is the largest T / n not exceeding max_step.
Trajectory integrate_flow(const SpherePoint<double>& x0, const TangentVector<double>& v0, double T,
                          const FieldPair& pair, double max_step = 1e-3);

struct ShootingOptions {
    double tol = 1e-10;  ///< closing defect of the return map
    int max_iters = 30;
    double max_step = 1e-3;
    double fd_step = 1e-6;
};

/// Periodic orbit from the return map alone, before any loop-level polishing.
struct ShootingResult {
    DiscreteLoop loop;  ///< unit-speed orbit sampled at tau = period * i / N
    double period = 0.0;
    double defect = 0.0;
    int iterations = 0;
    SpherePoint<double> x0;
    TangentVector<double> v0;
};

/// Newton on the return map over the section through x0 orthogonal to v0, at unit g-speed.
ShootingResult shoot_return_map(const SpherePoint<double>& x0, const TangentVector<double>& v0, double T_guess,
                                const FieldPair& pair, int N, const ShootingOptions& opts = {});

/// shoot_return_map followed by newton_solve on the resampled loop.
OrbitSolution shoot_periodic(const SpherePoint<double>& x0, const TangentVector<double>& v0, double T_guess,
                             const FieldPair& pair, const SolverOptions& opts = {},
                             const ShootingOptions& shooting = {});

struct ContinuationOptions {
    double t_start = 0.0;
    double dt_initial = 0.05;
    double dt_min = 1e-4;
    double dt_max = 0.1;
    double grow = 1.5;
    int easy_iters = 3;     ///< corrector iterations counted as an easy success
    int max_attempts = 1000;
    double continuity_factor = 10.0;
    bool refine_seed = true;  ///< at t_start = 0, move the seed circle to a bifurcation center first
};

struct StepRecord {
    double t = 0.0;
    double dt = 0.0;
    bool accepted = false;
    int iterations = 0;
    double residual = 0.0;
    std::string note;
};

enum class PathStatus { Reached, Blocked };

struct ContinuationPath {
    std::vector<std::pair<double, OrbitSolution>> samples;
    std::vector<StepRecord> steps;
    PathStatus status = PathStatus::Blocked;
    double blocked_at = 0.0;
    std::string reason;
    std::optional<SeedRefinement> refinement;  ///< set when the seed was refined at t = 0

    bool reached() const noexcept { return status == PathStatus::Reached; }
    const OrbitSolution& endpoint() const { return samples.back().second; }
};

/// Predictor-corrector in t along homotopy_fields(pair, t), starting from a t_start solution.
ContinuationPath continue_path(const FieldPair& pair, const DiscreteLoop& seed, const SolverOptions& solver = {},
                               const ContinuationOptions& opts = {});

/// Reparameterizes a prescribed-curvature solution for k / c into a magnetic orbit
/// for k at g-speed c. The returned pair carries c times the input prescription.
OrbitSolution rescale_to_energy(const OrbitSolution& sol, double c);

struct SearchOptions {
    SolverOptions solver;
    ContinuationOptions continuation;
    int seed_count = 8;
    int threads = 0;  ///< 0: one per seed
};

struct SearchResult {
    std::vector<OrbitSolution> orbits;  ///< distinct, certified
    std::vector<ContinuationPath> paths;
    std::vector<std::string> diagnostics;
};

/// Continues every seed circle to t = 1 and keeps the distinct certified endpoints.
SearchResult search_orbits(const FieldPair& pair, const SearchOptions& opts = {});

/// search_orbits, throwing SearchFailure when fewer than two orbits survive.
std::vector<OrbitSolution> find_two_orbits(const FieldPair& pair, const SearchOptions& opts = {});

}  // namespace magloop
