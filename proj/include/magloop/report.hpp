#pragma once

#include <optional>
#include <string>
#include <vector>

namespace magloop {

enum class AlexandrovClass {
    AlexandrovBySimplicity,   ///< simple loop, bounds the disk on its J gamma' side
    NecessaryConditionsPass,  ///< prime, rotation index 1; embeddedness not decided
    Fails,
};

struct AlexandrovResult {
    AlexandrovClass kind = AlexandrovClass::Fails;
    std::string reason;  ///< "iterate", "rotation index", or empty
    int rotation_index = 0;
    int isotropy = 1;

    bool certified() const noexcept { return kind != AlexandrovClass::Fails; }
};

const char* to_string(AlexandrovClass c) noexcept;

/// Tolerances applied by verify_orbit.
struct VerifyTolerances {
    double curvature = 1e-6;
    double speed_variation = 1e-8;
    double length = 1e-6;
    double gauss_bonnet = 1e-4;
    double isoperimetric = 1e-6;
};

struct VerificationReport {
    double residual_norm = 0.0;
    double speed_variation = 0.0;     ///< (max - min) / mean of |gamma'|_g
    double curvature_mismatch = 0.0;  ///< max_i |k_g - k(gamma_i)|
    double length = 0.0;              ///< g-length
    double length_upper_bound = 0.0;  ///< 2 pi / k_inf
    bool curvature_nonnegative = true;  ///< K_g >= 0 on the test grid; gates the length bound
    std::optional<double> gauss_bonnet_residual;
    std::optional<double> isoperimetric_slack;
    int rotation_idx = 0;
    int isotropy = 1;
    double isotropy_tolerance = 0.0;  ///< shift-distance threshold behind `isotropy`
    bool simple = false;
    AlexandrovResult alexandrov;
    std::vector<std::string> failures;
    bool passed = false;
};

}  // namespace magloop
