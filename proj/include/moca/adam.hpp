#pragma once

#include <cstdint>

#include "moca/params.hpp"

namespace moca {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t warmup_steps = 0;  // linear warmup, then inverse-square-root decay
    double clip_norm = 0.0;    // 0 disables global-norm clipping
};

struct AdamState {
    int64_t step = 0;
    AdamHyper hyper;
    ParamSet first_moment;
    ParamSet second_moment;
};

AdamState make_adam_state(const ParamSet& params, const AdamHyper& hyper);

// Effective learning rate at 1-based step t: lr * t/W for t <= W, then
// lr * sqrt(W/t). With W == 0 the rate is lr throughout.
double schedule_lr(const AdamHyper& hyper, int64_t step);

// Bias-corrected Adam update in place. Gradient keys must match the
// parameter names exactly.
void adam_step(ParamSet& params, const GradMap& grads, AdamState& state);

}  // namespace moca
