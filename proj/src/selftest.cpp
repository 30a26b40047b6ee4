#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <vector>

#include "moca/calibrate.hpp"
#include "moca/gradcheck.hpp"
#include "moca/rouge.hpp"
#include "moca/trainer.hpp"

// Built-in verification harness. The reference computations here are kept
// deliberately naive and separate from the library implementations they
// check.

namespace moca {

namespace {

struct Harness {
    SelftestResult result;

    void check(const std::string& module, const std::string& what, bool ok, const std::string& detail = "") {
        if (ok) {
            result.checks.push_back(module + ": " + what);
        } else {
            result.passed = false;
            result.failures.push_back(module + ": " + what + (detail.empty() ? "" : " [" + detail + "]"));
        }
    }
};

uint64_t mix(uint64_t h, uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

// Deterministic pseudo-random sequence model over a tiny vocabulary;
// id 0 plays the eos role and every other id is generatable.
class HashModel : public SequenceModel {
public:
    HashModel(int vocab, uint64_t seed) : vocab_(vocab), seed_(seed) {}
    int vocab_size() const override { return vocab_; }
    int eos_id() const override { return 0; }
    bool generatable(int token) const override { return token != 0; }
    std::vector<double> next_logprobs(const std::vector<int>& prefix) override {
        uint64_t h = mix(0x51ef17ULL, seed_);
        for (int t : prefix) h = mix(h, static_cast<uint64_t>(t) + 1);
        std::vector<double> logits(static_cast<size_t>(vocab_));
        for (int v = 0; v < vocab_; ++v) {
            Rng r(mix(h, static_cast<uint64_t>(v) + 101));
            logits[static_cast<size_t>(v)] = r.uniform(-3.0, 3.0);
        }
        double mx = logits[0];
        for (double l : logits) mx = std::max(mx, l);
        double denom = 0.0;
        for (double l : logits) denom += std::exp(l - mx);
        const double lse = mx + std::log(denom);
        for (double& l : logits) l -= lse;
        return logits;
    }

private:
    int vocab_;
    uint64_t seed_;
};

// --- independent ROUGE references -----------------------------------------

// Clipped overlap by marking off reference positions one match at a time.
double ngram_overlap_reference(const std::vector<int>& cand, const std::vector<int>& ref, size_t n) {
    if (cand.size() < n || ref.size() < n) return 0.0;
    std::vector<bool> used(ref.size() - n + 1, false);
    double overlap = 0.0;
    for (size_t i = 0; i + n <= cand.size(); ++i) {
        for (size_t j = 0; j + n <= ref.size(); ++j) {
            if (used[j]) continue;
            bool same = true;
            for (size_t k = 0; k < n; ++k)
                if (cand[i + k] != ref[j + k]) {
                    same = false;
                    break;
                }
            if (same) {
                used[j] = true;
                overlap += 1.0;
                break;
            }
        }
    }
    return overlap;
}

// LCS by exponential enumeration of candidate subsequences (lengths <= ~10).
size_t lcs_reference(const std::vector<int>& cand, const std::vector<int>& ref) {
    const size_t n = cand.size();
    size_t best = 0;
    for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
        std::vector<int> sub;
        for (size_t i = 0; i < n; ++i)
            if (mask & (size_t{1} << i)) sub.push_back(cand[i]);
        if (sub.size() <= best) continue;
        size_t j = 0;
        for (int r : ref) {
            if (j < sub.size() && sub[j] == r) ++j;
        }
        if (j == sub.size()) best = sub.size();
    }
    return best;
}

double f1_from(double overlap, double cand_total, double ref_total) {
    if (cand_total <= 0 || ref_total <= 0) return 0.0;
    const double p = overlap / cand_total;
    const double r = overlap / ref_total;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

// --- gradient-check functions ----------------------------------------------

DiffFunction mlp_function(SelftestFault fault) {
    auto build = [](const ParamSet& point, Tape& tape, std::vector<std::pair<std::string, NodeId>>& leaves) {
        std::vector<NodeId> ids;
        for (const auto& item : point.items()) {
            const NodeId id = tape.leaf(item.value, true);
            leaves.emplace_back(item.name, id);
            ids.push_back(id);
        }
        OpAttrs ln;
        ln.eps = 1e-5;
        NodeId h = tape.apply(OpKind::matmul, {ids[0], ids[1]});
        h = tape.apply(OpKind::add, {h, ids[2]});
        h = tape.apply(OpKind::gelu, {h});
        h = tape.apply(OpKind::layer_norm, {h, ids[3], ids[4]}, ln);
        h = tape.apply(OpKind::matmul, {h, ids[5]});
        h = tape.apply(OpKind::log_softmax_rows, {h});
        OpAttrs ce;
        ce.ids = {1, 0, 2};
        h = tape.apply(OpKind::cross_entropy_from_logprobs, {h}, ce);
        return tape.apply(OpKind::mean, {h});
    };
    DiffFunction fn;
    fn.value = [build](const ParamSet& point) {
        Tape tape;
        std::vector<std::pair<std::string, NodeId>> leaves;
        return tape.value(build(point, tape, leaves)).scalar_value();
    };
    fn.gradient = [build, fault](const ParamSet& point) {
        Tape tape;
        std::vector<std::pair<std::string, NodeId>> leaves;
        const NodeId loss = build(point, tape, leaves);
        auto by_node = tape.backward(loss);
        GradMap out;
        for (const auto& [name, id] : leaves) out.emplace(name, std::move(by_node.at(id)));
        if (fault == SelftestFault::corrupt_gradient) {
            // Plant a doubled entry on the largest-magnitude coordinate.
            Tensor& g = out.begin()->second;
            size_t worst = 0;
            for (size_t i = 1; i < g.numel(); ++i)
                if (std::fabs(g[i]) > std::fabs(g[worst])) worst = i;
            g[worst] *= 2.0;
        }
        return out;
    };
    return fn;
}

ParamSet mlp_point(uint64_t seed) {
    Rng rng(seed);
    ParamSet p;
    auto rand_tensor = [&](std::vector<size_t> shape) {
        Tensor t(std::move(shape), DType::f64);
        for (size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-1.0, 1.0);
        return t;
    };
    p.add("w1", rand_tensor({3, 6}));
    p.add("x", rand_tensor({6, 5}));  // "inputs" treated as parameters too
    p.add("b1", rand_tensor({5}));
    p.add("gain", rand_tensor({5}));
    p.add("bias", rand_tensor({5}));
    p.add("w2", rand_tensor({5, 4}));
    return p;
}

TransformerHyper tiny_hyper() {
    TransformerHyper hy;
    hy.layers = 1;
    hy.d_model = 8;
    hy.heads = 2;
    hy.d_ff = 16;
    hy.vocab_size = 12;
    hy.max_positions = 10;
    hy.dtype = DType::f64;
    return hy;
}

Example tiny_example(uint64_t seed, int src_len, int tgt_len, int vocab) {
    Rng rng(seed);
    Example ex;
    ex.source.role = Role::source;
    ex.target.role = Role::target;
    for (int i = 0; i < src_len; ++i)
        ex.source.ids.push_back(kNumReserved + static_cast<int>(rng.next_below(static_cast<uint64_t>(vocab - kNumReserved))));
    for (int i = 0; i < tgt_len; ++i)
        ex.target.ids.push_back(kNumReserved + static_cast<int>(rng.next_below(static_cast<uint64_t>(vocab - kNumReserved))));
    return ex;
}

DiffFunction transformer_mle_function(const TransformerHyper& hy, const Example& ex) {
    DiffFunction fn;
    auto run = [hy, ex](const ParamSet& point, GradMap* grads) {
        TransformerParams params;
        params.hyper = hy;
        params.tensors = point;
        Tape tape;
        BoundParams bound = bind_params(tape, params);
        NodeId enc = encoder_forward(tape, bound, ex.source.ids);
        NodeId loss = mle_loss_node(tape, bound, enc, ex.target);
        if (grads != nullptr) *grads = grads_by_name(tape, bound, loss);
        return tape.value(loss).scalar_value();
    };
    fn.value = [run](const ParamSet& p) { return run(p, nullptr); };
    fn.gradient = [run](const ParamSet& p) {
        GradMap g;
        run(p, &g);
        return g;
    };
    return fn;
}

}  // namespace

SelftestResult run_selftest(SelftestFault fault) {
    Harness h;

    // -- tensor_autodiff ---------------------------------------------------
    {
        const GradCheckReport quad = [&] {
            DiffFunction fn;
            fn.value = [](const ParamSet& p) {
                double acc = 0.0;
                const Tensor& w = p.get("w");
                for (size_t i = 0; i < w.numel(); ++i) acc += w[i] * w[i];
                return acc;
            };
            fn.gradient = [](const ParamSet& p) {
                const Tensor& w = p.get("w");
                Tensor g(w.shape(), DType::f64);
                for (size_t i = 0; i < w.numel(); ++i) g[i] = 2.0 * w[i];
                GradMap out;
                out.emplace("w", std::move(g));
                return out;
            };
            ParamSet point;
            Rng rng(7);
            Tensor w({16}, DType::f64);
            for (size_t i = 0; i < w.numel(); ++i) w[i] = rng.uniform(-2.0, 2.0);
            point.add("w", std::move(w));
            return finite_difference_check(fn, point, 1e-3, 64, 1);
        }();
        h.check("tensor_autodiff", "quadratic central differences are exact", quad.max_rel_err < 1e-9,
                "rel=" + std::to_string(quad.max_rel_err));

        double worst = 0.0;
        for (uint64_t seed = 0; seed < 4; ++seed) {
            const GradCheckReport rep =
                finite_difference_check(mlp_function(fault), mlp_point(100 + seed), 1e-5, 64, seed);
            worst = std::max(worst, rep.max_rel_err);
        }
        // With a planted fault the doubled entry must surface here (rel
        // error around 0.5), failing the run and naming this module.
        h.check("tensor_autodiff", "2-layer MLP gradient matches finite differences", worst < 1e-6,
                "max rel err " + std::to_string(worst));

        const TransformerHyper hy = tiny_hyper();
        TransformerParams params = init_params(hy, 5);
        const Example ex = tiny_example(42, 4, 5, hy.vocab_size);
        const GradCheckReport rep =
            finite_difference_check(transformer_mle_function(hy, ex), params.tensors, 1e-5, 64, 3);
        h.check("tensor_autodiff", "tiny transformer MLE gradient matches finite differences",
                rep.max_rel_err < 1e-5, "rel=" + std::to_string(rep.max_rel_err) + " at " + rep.worst_param);
    }

    // -- decoding ----------------------------------------------------------
    {
        bool beam_matches = true, greedy_matches = true;
        std::string detail;
        for (uint64_t seed = 0; seed < 40 && (beam_matches && greedy_matches); ++seed) {
            const int vocab = 2 + static_cast<int>(seed % 3);         // 2..4
            const int max_len = 2 + static_cast<int>((seed / 3) % 3);  // 2..4
            HashModel model(vocab, seed * 977 + 13);
            DecodeConfig cfg;
            cfg.alpha = (seed % 4) * 0.5;  // 0, 0.5, 1.0, 1.5
            cfg.max_len = max_len;
            cfg.min_len = 1;
            cfg.width = 1;
            const Hypothesis greedy = greedy_decode(model, cfg);
            const std::vector<Hypothesis> beam1 = beam_search(model, cfg);
            if (beam1.empty() || !(beam1.front().seq == greedy.seq) ||
                beam1.front().sum_logprob != greedy.sum_logprob) {
                greedy_matches = false;
                detail = "seed " + std::to_string(seed);
            }
            int budget = 1;
            for (int i = 0; i < max_len; ++i) budget *= vocab;
            cfg.width = budget;
            const std::vector<Hypothesis> full = beam_search(model, cfg);
            const Hypothesis oracle = exhaustive_search(model, max_len, cfg.alpha, cfg.min_len);
            if (full.empty() || !(full.front().seq == oracle.seq)) {
                beam_matches = false;
                detail = "seed " + std::to_string(seed);
            }
        }
        h.check("decoding", "beam with exhaustive budget equals enumeration argmax (40 models)", beam_matches,
                detail);
        h.check("decoding", "beam width 1 equals greedy (40 models)", greedy_matches, detail);
    }

    // -- eval_metrics --------------------------------------------------------
    {
        Rng rng(2024);
        bool agree = true;
        std::string detail;
        for (int trial = 0; trial < 400 && agree; ++trial) {
            auto draw = [&rng]() {
                const size_t len = 1 + rng.next_below(8);
                std::vector<int> v(len);
                for (auto& x : v) x = static_cast<int>(rng.next_below(4));
                return v;
            };
            const std::vector<int> cand = draw(), ref = draw();
            for (int n = 1; n <= 2; ++n) {
                const RougeScore got = rouge_n(cand, ref, n);
                const size_t un = static_cast<size_t>(n);
                const double want =
                    f1_from(ngram_overlap_reference(cand, ref, un),
                            cand.size() >= un ? static_cast<double>(cand.size() - un + 1) : 0.0,
                            ref.size() >= un ? static_cast<double>(ref.size() - un + 1) : 0.0);
                if (std::fabs(got.f1 - want) > 1e-12) {
                    agree = false;
                    detail = "rouge" + std::to_string(n) + " trial " + std::to_string(trial);
                }
            }
            const RougeScore gl = rouge_l(cand, ref);
            const double want_l = f1_from(static_cast<double>(lcs_reference(cand, ref)),
                                          static_cast<double>(cand.size()), static_cast<double>(ref.size()));
            if (std::fabs(gl.f1 - want_l) > 1e-12) {
                agree = false;
                detail = "rougeL trial " + std::to_string(trial);
            }
        }
        h.check("eval_metrics", "rouge agrees with naive counting/enumeration (400 pairs)", agree, detail);

        const std::vector<int> cat_sat = {10, 11, 12};  // "the cat sat"
        const std::vector<int> cat_ate = {10, 11, 13};  // "the cat ate"
        const bool worked = std::fabs(rouge_n(cat_sat, cat_ate, 1).f1 - 2.0 / 3.0) < 1e-12 &&
                            std::fabs(rouge_n(cat_sat, cat_ate, 2).f1 - 0.5) < 1e-12 &&
                            std::fabs(rouge_l(cat_sat, cat_ate).f1 - 2.0 / 3.0) < 1e-12;
        h.check("eval_metrics", "worked three-token example scores 2/3, 1/2, 2/3", worked);
    }

    // -- calibration ---------------------------------------------------------
    {
        bool normalized = true, increasing = true;
        for (size_t n = 1; n <= 512; ++n) {
            const std::vector<double> w = positional_weights(n, Weighting::positional);
            double mean = 0.0;
            for (double x : w) mean += x;
            mean /= static_cast<double>(n);
            if (std::fabs(mean - 1.0) > 1e-12) normalized = false;
            for (size_t t = 1; t < n; ++t)
                if (w[t] <= w[t - 1]) increasing = false;
        }
        h.check("calibration", "positional weights have unit mean for n in [1,512]", normalized);
        h.check("calibration", "positional weights strictly increase", increasing);

        const std::vector<double> w3 = positional_weights(3, Weighting::positional);
        h.check("calibration", "n=3 weights equal [12/49, 27/49, 108/49]",
                std::fabs(w3[0] - 12.0 / 49.0) < 1e-15 && std::fabs(w3[1] - 27.0 / 49.0) < 1e-15 &&
                    std::fabs(w3[2] - 108.0 / 49.0) < 1e-15);

        const bool hinge_ok = ranking_loss({1.5, 1.0}, 0.001) == 0.0 &&
                              std::fabs(ranking_loss({1.0, 1.5}, 0.001) - 0.501) < 1e-12 &&
                              ranking_loss({3.0, 2.0, 1.0}, 0.5) == 0.0 &&
                              std::fabs(ranking_loss({3.0, 2.0, 1.0}, 1.5) - 2.0) < 1e-12;
        h.check("calibration", "margin ranking loss matches hand-computed cases", hinge_ok);
    }

    return h.result;
}

}  // namespace moca
