#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "moca/params.hpp"

namespace moca {

// A scalar function of a parameter set together with its reverse-mode
// gradient, as produced by some tape construction.
struct DiffFunction {
    std::function<double(const ParamSet&)> value;
    std::function<GradMap(const ParamSet&)> gradient;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Central finite differences against the analytic gradient, coordinate by
// coordinate. Large tensors are subsampled (at least min(numel, 64) coords).
// Requires f64 parameters and a deterministic function; per-coordinate error
// is |a - f| / max(|a|, |f|, denom_floor).
GradCheckReport finite_difference_check(const DiffFunction& fn, const ParamSet& point, double step,
                                        size_t max_coords_per_tensor = 64, uint64_t seed = 0,
                                        double denom_floor = 1e-3);

}  // namespace moca
