#pragma once

#include <vector>

#include "moca/vocab.hpp"

namespace moca {

struct DecodeConfig {
    int width = 4;               // beam width (per group when groups > 1)
    int groups = 1;
    double diversity = 0.0;      // Hamming penalty strength between groups
    double alpha = 1.0;          // length penalty exponent for final ranking
    int max_len = 24;
    int min_len = 1;
    bool positional_scoring = false;  // experimental: rank pool with positional weights
};

struct Hypothesis {
    TokenSeq seq;                        // content tokens; seq.terminated == ended with eos
    std::vector<double> step_logprobs;   // one per generated token, eos included
    double sum_logprob = 0.0;
    double normalized_score = 0.0;       // sum_logprob / len^alpha, len counts eos
    bool finished = false;

    // Generated tokens including eos when present.
    size_t generated_len() const { return seq.scored_positions(); }
};

// Next-token distribution provider. Decoding needs nothing else from the
// model, which lets enumeration oracles drive the same search code.
class SequenceModel {
public:
    virtual ~SequenceModel() = default;
    virtual int vocab_size() const = 0;
    virtual int eos_id() const = 0;
    // Whether search may emit this (non-eos) token.
    virtual bool generatable(int token) const = 0;
    // Full log-probability row given the generated content so far.
    virtual std::vector<double> next_logprobs(const std::vector<int>& prefix) = 0;
};

// Argmax decoding, ties broken by lowest token id. eos is suppressed while
// the resulting length would undershoot min_len.
Hypothesis greedy_decode(SequenceModel& model, const DecodeConfig& cfg);

// Standard beam search over sum-logprob with the completed pool ranked by
// normalized score. Returns up to cfg.width finished hypotheses, best first.
std::vector<Hypothesis> beam_search(SequenceModel& model, const DecodeConfig& cfg);

// Hamming-diversity group beam search; groups advance in order at each step
// and later groups pay cfg.diversity per same-step token reuse. Returns the
// deduplicated concatenation of the groups' finished hypotheses.
std::vector<Hypothesis> diverse_beam_search(SequenceModel& model, const DecodeConfig& cfg);

// Enumerates the decoder's whole reachable hypothesis space (eos-terminated
// sequences plus max-length cutoffs) and returns the normalized-score argmax.
// Guarded to |vocab|^max_len <= 10^6.
Hypothesis exhaustive_search(SequenceModel& model, int max_len, double alpha, int min_len = 1);

}  // namespace moca
