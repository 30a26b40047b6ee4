#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moca/adam.hpp"
#include "moca/decode.hpp"
#include "moca/rng.hpp"
#include "moca/rouge.hpp"
#include "moca/transformer.hpp"

namespace moca {

enum class Weighting { constant, positional };
enum class CalibMode { offline, online_m0, momentum };

Weighting weighting_from_string(const std::string& s);
CalibMode calib_mode_from_string(const std::string& s);

struct CalibConfig {
    int k = 16;                 // candidate count
    double lambda = 0.001;      // margin coefficient
    double alpha = 2.0;         // cost length exponent
    double beta = 0.01;         // MLE mix weight
    double momentum = 0.99;
    Weighting weighting = Weighting::positional;
    CalibMode mode = CalibMode::momentum;
    DecodeConfig decode;        // candidate generation settings
    MetricKind metric = MetricKind::mean_of_1_2_l;

    // Momentum actually applied (the online-m0 ablation forces zero).
    double effective_momentum() const { return mode == CalibMode::online_m0 ? 0.0 : momentum; }
};

// Monotone positional weights of Eq.-6 shape, normalized to mean one;
// constant mode returns all ones.
std::vector<double> positional_weights(size_t n, Weighting mode);

// Cost node: (1/n^alpha) * sum_t gamma_t * nll_t over the candidate's scored
// positions; lower cost means the model prefers the candidate.
NodeId sequence_cost_node(Tape& tape, const BoundParams& bound, NodeId enc_out, const TokenSeq& candidate,
                          double alpha, Weighting weighting);
double sequence_cost(const TransformerParams& params, const TokenSeq& source, const TokenSeq& candidate,
                     double alpha, Weighting weighting);

// Pairwise hinge with rank-distance margins over quality-ascending costs.
NodeId ranking_loss_node(Tape& tape, const std::vector<NodeId>& costs_ascending_quality, double lambda);
double ranking_loss(const std::vector<double>& costs_ascending_quality, double lambda);

struct Candidate {
    TokenSeq tokens;
    double generator_score = 0.0;  // decode-time normalized score
    double metric_score = 0.0;
    double online_cost = 0.0;      // filled when a loss evaluates it
};

// Candidates ordered ascending by metric score (better candidates later).
struct RankedCandidateSet {
    std::vector<Candidate> candidates;
    TokenSeq source;
    TokenSeq gold;
};

// Decodes up to k candidates from the generator, dropping empty and
// duplicate sequences. Fewer than two survivors means "skip this example".
std::vector<Candidate> generate_candidates(const TransformerParams& generator, const TokenSeq& source,
                                           const CalibConfig& cfg);

RankedCandidateSet rank_candidates(std::vector<Candidate> candidates, const TokenSeq& source,
                                   const TokenSeq& gold, MetricKind metric);

struct MocaParts {
    double total = 0.0;
    double rank = 0.0;
    double mle = 0.0;
    std::vector<double> costs;  // quality-ascending, aligned with the ranked set
};

// Combined loss: ranking loss over the ranked candidates plus beta times the
// gold MLE term. Fills parts.costs and, when grads_out is set, the gradient
// with respect to the online parameters.
MocaParts moca_loss_parts(const TransformerParams& online, RankedCandidateSet& ranked, const Example& gold,
                          const CalibConfig& cfg, GradMap* grads_out);
double moca_loss(const TransformerParams& online, RankedCandidateSet& ranked, const Example& gold,
                 const CalibConfig& cfg);

// xi <- m*xi + (1-m)*theta elementwise; m=1 and m=0 are exact no-op/copy.
void ema_update(TransformerParams& generator, const TransformerParams& online, double m);

// Tau-a rank correlation; tied pairs contribute zero.
double kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

struct TrainState {
    TransformerParams online;
    TransformerParams generator;
    AdamState adam;
    int64_t step = 0;
    int phase = 0;  // 0 = likelihood fine-tuning, 1 = calibration
    std::string config_snapshot;
    Rng rng{0};
    int64_t generation_calls = 0;  // decode invocations made by calibration steps
};

struct StepReport {
    int64_t step = 0;
    double loss = 0.0;
    double rank_loss = 0.0;
    double mle_loss = 0.0;
    int batch_size = 0;
    int skipped = 0;
    double mean_metric = 0.0;
    double mean_candidates = 0.0;  // unique candidates per non-skipped example
    double kendall = 0.0;
    int64_t generation_calls = 0;
    bool empty_batch = false;
};

// Frozen candidate sets for the offline ablation, keyed by example index.
struct OfflineStore {
    bool enabled = false;
    std::vector<std::vector<Candidate>> by_example;
};

// One calibration step over a batch of (dataset index, example) pairs:
// generate (or reuse) candidates, rank, accumulate the combined loss, one
// Adam update on theta, one momentum update on xi.
StepReport moca_train_step(TrainState& state, const std::vector<std::pair<size_t, const Example*>>& batch,
                           const CalibConfig& cfg, OfflineStore* offline, int threads);

}  // namespace moca
