#include "moca/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "moca/error.hpp"
#include "moca/rng.hpp"

namespace moca {

GradCheckReport finite_difference_check(const DiffFunction& fn, const ParamSet& point, double step,
                                        size_t max_coords_per_tensor, uint64_t seed, double denom_floor) {
    if (max_coords_per_tensor < 64) max_coords_per_tensor = 64;
    for (const auto& it : point.items()) {
        if (it.value.dtype() != DType::f64) {
            throw ContractError("finite_difference_check: f64 parameters required (" + it.name + ")");
        }
    }
    const double f0 = fn.value(point);
    if (fn.value(point) != f0) {
        throw ContractError("finite_difference_check: function is not deterministic");
    }

    const GradMap analytic = fn.gradient(point);
    Rng rng(seed ^ 0xfdc5a3b96ULL);
    GradCheckReport report;
    ParamSet probe = point;

    for (const auto& it : point.items()) {
        const Tensor& g = analytic.at(it.name);
        const size_t n = it.value.numel();
        std::vector<size_t> coords;
        if (n <= max_coords_per_tensor) {
            coords.resize(n);
            for (size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            std::unordered_set<size_t> seen;
            while (seen.size() < max_coords_per_tensor) seen.insert(rng.next_below(n));
            coords.assign(seen.begin(), seen.end());
            std::sort(coords.begin(), coords.end());
        }
        Tensor& pt = probe.get(it.name);
        for (size_t idx : coords) {
            const double keep = pt[idx];
            pt[idx] = keep + step;
            const double fp = fn.value(probe);
            pt[idx] = keep - step;
            const double fm = fn.value(probe);
            pt[idx] = keep;
            const double numeric = (fp - fm) / (2.0 * step);
            const double a = g[idx];
            const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), denom_floor});
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = it.name;
                report.worst_index = idx;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace moca
