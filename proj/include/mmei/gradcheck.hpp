#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmei {

struct GradCheckOptions {
    std::uint64_t seed = 1;
    std::size_t d = 8;
    std::size_t layers = 1;
    double epsilon = 1e-6;
    double tolerance = 1e-5;
    // Relative error denominator is max(|analytic|, |numeric|, floor).
    double floor = 1e-3;
};

struct ParamCheck {
    std::string name;
    std::size_t entries = 0;
    std::size_t failures = 0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<ParamCheck> params;
    std::size_t entries = 0;
    std::size_t failures = 0;
    double max_rel_error = 0.0;

    bool passed() const { return failures == 0 && entries > 0; }
};

/// Central finite differences against the taped gradient of the full training
/// objective (recognition + ranking, dropout off) for every entry of every
/// parameter of a small random model. Sequences have lengths 1, 2 and 5.
GradCheckReport grad_check(const GradCheckOptions& options);

double relative_error(double analytic, double numeric, double floor);

}  // namespace mmei
