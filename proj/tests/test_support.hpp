#pragma once

#include <cmath>
#include <vector>

#include "moca/decode.hpp"
#include "moca/rng.hpp"
#include "moca/tensor.hpp"
#include "moca/transformer.hpp"
#include "moca/vocab.hpp"

namespace moca::test {

inline Tensor rand_tensor(std::vector<size_t> shape, Rng& rng, DType dtype, double lo = -2.0, double hi = 2.0) {
    Tensor t(std::move(shape), dtype);
    for (size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    t.quantize();
    return t;
}

inline std::vector<int> rand_content_ids(Rng& rng, size_t len, int vocab_size) {
    std::vector<int> ids(len);
    for (auto& id : ids) {
        id = kNumReserved + static_cast<int>(rng.next_below(static_cast<uint64_t>(vocab_size - kNumReserved)));
    }
    return ids;
}

inline Example rand_example(Rng& rng, size_t src_len, size_t tgt_len, int vocab_size) {
    Example ex;
    ex.source.ids = rand_content_ids(rng, src_len, vocab_size);
    ex.source.role = Role::source;
    ex.target.ids = rand_content_ids(rng, tgt_len, vocab_size);
    ex.target.role = Role::target;
    ex.target.terminated = true;
    return ex;
}

inline TransformerHyper tiny_hyper(DType dtype = DType::f64) {
    TransformerHyper hy;
    hy.layers = 1;
    hy.d_model = 8;
    hy.heads = 2;
    hy.d_ff = 16;
    hy.vocab_size = 12;
    hy.max_positions = 12;
    hy.dtype = dtype;
    return hy;
}

// Hand-built transformer that deterministically emits the first content
// token and then eos: position patterns survive to the final layer norm and
// a huge output weight turns them into near-one-hot distributions.
inline TransformerParams near_one_hot_model() {
    TransformerHyper hy = tiny_hyper(DType::f64);
    TransformerParams p = init_params(hy, 1);
    for (auto& item : p.tensors.items()) {
        for (size_t i = 0; i < item.value.numel(); ++i) item.value[i] = 0.0;
    }
    Tensor& pos = p.tensors.get("pos_emb");
    pos.at(0, 0) = 10.0;
    pos.at(1, 1) = 10.0;
    Tensor& lng = p.tensors.get("dec.ln_final.gain");
    for (size_t i = 0; i < lng.numel(); ++i) lng[i] = 1.0;
    Tensor& w = p.tensors.get("out.w");
    w.at(0, kNumReserved) = 40.0;  // position 0 -> first content token
    w.at(1, kEosId) = 40.0;        // position 1 -> eos
    return p;
}

// Deterministic pseudo-random distributions keyed by the whole prefix; token
// 0 acts as eos and everything else is generatable.
class HashModel : public SequenceModel {
public:
    HashModel(int vocab, uint64_t seed) : vocab_(vocab), seed_(seed) {}
    int vocab_size() const override { return vocab_; }
    int eos_id() const override { return 0; }
    bool generatable(int token) const override { return token != 0; }
    std::vector<double> next_logprobs(const std::vector<int>& prefix) override {
        uint64_t h = seed_ * 0x9e3779b97f4a7c15ULL + 0xabcdefULL;
        for (int t : prefix) h = (h ^ static_cast<uint64_t>(t + 1)) * 0x100000001b3ULL;
        std::vector<double> row(static_cast<size_t>(vocab_));
        for (int v = 0; v < vocab_; ++v) {
            Rng r(h + static_cast<uint64_t>(v) * 7919);
            row[static_cast<size_t>(v)] = r.uniform(-4.0, 2.0);
        }
        double mx = row[0];
        for (double x : row) mx = std::max(mx, x);
        double denom = 0.0;
        for (double x : row) denom += std::exp(x - mx);
        const double lse = mx + std::log(denom);
        for (double& x : row) x -= lse;
        return row;
    }

private:
    int vocab_;
    uint64_t seed_;
};

// Fixed per-step transition table: row[t][token] are logits for step t+1
// (prefix-independent). Handy for hand-built decode scenarios.
class TableModel : public SequenceModel {
public:
    TableModel(std::vector<std::vector<double>> step_logits, int eos = 0)
        : eos_(eos), steps_(std::move(step_logits)) {
        for (auto& row : steps_) {
            double mx = row[0];
            for (double x : row) mx = std::max(mx, x);
            double denom = 0.0;
            for (double x : row) denom += std::exp(x - mx);
            const double lse = mx + std::log(denom);
            for (double& x : row) x -= lse;
        }
    }
    int vocab_size() const override { return static_cast<int>(steps_.front().size()); }
    int eos_id() const override { return eos_; }
    bool generatable(int token) const override { return token != eos_; }
    std::vector<double> next_logprobs(const std::vector<int>& prefix) override {
        const size_t step = std::min(prefix.size(), steps_.size() - 1);
        return steps_[step];
    }

private:
    int eos_;
    std::vector<std::vector<double>> steps_;
};

}  // namespace moca::test
