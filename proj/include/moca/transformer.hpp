#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "moca/decode.hpp"
#include "moca/params.hpp"
#include "moca/tape.hpp"
#include "moca/vocab.hpp"

namespace moca {

struct TransformerHyper {
    int layers = 2;
    int d_model = 64;
    int heads = 4;
    int d_ff = 256;
    int vocab_size = 50;
    int max_positions = 64;
    DType dtype = DType::f32;

    bool same_architecture(const TransformerHyper& o) const {
        return layers == o.layers && d_model == o.d_model && heads == o.heads && d_ff == o.d_ff &&
               vocab_size == o.vocab_size && max_positions == o.max_positions;
    }
};

struct TransformerParams {
    TransformerHyper hyper;
    ParamSet tensors;
};

// Xavier-uniform weights, unit layer-norm gains, zero biases; deterministic
// in the seed.
TransformerParams init_params(const TransformerHyper& hyper, uint64_t seed);

// Parameter leaves registered on a tape, by name.
struct BoundParams {
    const TransformerParams* params = nullptr;
    std::unordered_map<std::string, NodeId> by_name;
    NodeId id(const std::string& name) const;
};

BoundParams bind_params(Tape& tape, const TransformerParams& params);

// Translates backward()'s node-id keyed gradients to parameter names.
GradMap grads_by_name(const Tape& tape, const BoundParams& bound, NodeId loss);

// Encoder stack over source content ids; returns the [S x d] memory node.
NodeId encoder_forward(Tape& tape, const BoundParams& bound, const std::vector<int>& src_ids);

// Causally masked decoder rows for a target-form sequence. Returns the
// [scored_positions x V] log-probability matrix node: one row per content
// token plus, when the sequence is terminated, one row predicting eos.
NodeId decoder_logprob_rows(Tape& tape, const BoundParams& bound, NodeId enc_out, const TokenSeq& target);

// Per-position negative log-likelihood column [scored_positions x 1].
NodeId decoder_nll_column(Tape& tape, const BoundParams& bound, NodeId enc_out, const TokenSeq& target);

// Eq.-style per-token mean of the gold negative log-likelihood (eos counts,
// bos does not).
NodeId mle_loss_node(Tape& tape, const BoundParams& bound, NodeId enc_out, const TokenSeq& target);

// No-grad conveniences.
Tensor forward_logprobs(const TransformerParams& params, const TokenSeq& source, const TokenSeq& target);
double mle_loss(const TransformerParams& params, const Example& example);

struct ExampleGrad {
    double loss = 0.0;
    GradMap grads;
};
ExampleGrad mle_loss_grad(const TransformerParams& params, const Example& example);

struct PositionalBucket {
    int start = 0;  // inclusive token position
    int end = 0;    // exclusive
    double accuracy = 0.0;
    size_t count = 0;
};

// Teacher-forced argmax-vs-gold accuracy per position bucket; zero-count
// buckets are omitted.
std::vector<PositionalBucket> positional_accuracy(const TransformerParams& params,
                                                  const std::vector<Example>& dataset, int bucket_width);

// Incremental next-token scorer used by the search code; caches per-prefix
// decoder state and reproduces the tape forward bit for bit.
class TransformerScorer : public SequenceModel {
public:
    TransformerScorer(const TransformerParams& params, std::vector<int> src_ids);
    ~TransformerScorer() override;

    int vocab_size() const override;
    int eos_id() const override { return kEosId; }
    bool generatable(int token) const override { return token >= kNumReserved; }
    std::vector<double> next_logprobs(const std::vector<int>& prefix) override;

    size_t cached_prefixes() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Decode wrappers over a scorer built from (params, source).
Hypothesis greedy_decode(const TransformerParams& params, const TokenSeq& source, const DecodeConfig& cfg);
std::vector<Hypothesis> beam_search(const TransformerParams& params, const TokenSeq& source,
                                    const DecodeConfig& cfg);
std::vector<Hypothesis> diverse_beam_search(const TransformerParams& params, const TokenSeq& source,
                                            const DecodeConfig& cfg);

}  // namespace moca
