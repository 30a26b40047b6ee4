#include "moca/adam.hpp"

#include <cmath>

#include "moca/error.hpp"

namespace moca {

AdamState make_adam_state(const ParamSet& params, const AdamHyper& hyper) {
    AdamState st;
    st.hyper = hyper;
    for (const auto& it : params.items()) {
        st.first_moment.add(it.name, Tensor::zeros(it.value.shape(), it.value.dtype()));
        st.second_moment.add(it.name, Tensor::zeros(it.value.shape(), it.value.dtype()));
    }
    return st;
}

double schedule_lr(const AdamHyper& hyper, int64_t step) {
    if (hyper.warmup_steps <= 0) return hyper.lr;
    const double t = static_cast<double>(step);
    const double w = static_cast<double>(hyper.warmup_steps);
    return step <= hyper.warmup_steps ? hyper.lr * t / w : hyper.lr * std::sqrt(w / t);
}

void adam_step(ParamSet& params, const GradMap& grads, AdamState& state) {
    if (grads.size() != params.size()) {
        throw ContractError("adam: gradient map has " + std::to_string(grads.size()) + " entries for " +
                            std::to_string(params.size()) + " parameters");
    }
    for (const auto& [name, g] : grads) {
        if (!params.has(name)) throw ContractError("adam: gradient for unknown parameter " + name);
        if (!params.get(name).same_shape(g)) {
            throw ContractError("adam: gradient shape " + g.shape_str() + " mismatches parameter " + name + " " +
                                params.get(name).shape_str());
        }
    }

    double clip_scale = 1.0;
    if (state.hyper.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& [name, g] : grads) {
            for (size_t i = 0; i < g.numel(); ++i) sq += g[i] * g[i];
        }
        const double norm = std::sqrt(sq);
        if (norm > state.hyper.clip_norm) clip_scale = state.hyper.clip_norm / norm;
    }

    state.step += 1;
    const double lr = schedule_lr(state.hyper, state.step);
    const double b1 = state.hyper.beta1;
    const double b2 = state.hyper.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    for (auto& item : params.items()) {
        const Tensor& g = grads.at(item.name);
        Tensor& m = state.first_moment.get(item.name);
        Tensor& v = state.second_moment.get(item.name);
        Tensor& p = item.value;
        for (size_t i = 0; i < p.numel(); ++i) {
            const double gi = g[i] * clip_scale;
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + state.hyper.eps);
        }
        m.quantize();
        v.quantize();
        p.quantize();
    }
}

}  // namespace moca
