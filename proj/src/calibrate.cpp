#include "moca/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "moca/error.hpp"
#include "moca/parallel.hpp"

namespace moca {

Weighting weighting_from_string(const std::string& s) {
    if (s == "constant") return Weighting::constant;
    if (s == "positional") return Weighting::positional;
    throw ConfigError("unknown weighting mode: " + s);
}

CalibMode calib_mode_from_string(const std::string& s) {
    if (s == "offline") return CalibMode::offline;
    if (s == "online_m0") return CalibMode::online_m0;
    if (s == "momentum") return CalibMode::momentum;
    throw ConfigError("unknown calibration mode: " + s);
}

std::vector<double> positional_weights(size_t n, Weighting mode) {
    if (n < 1) throw ContractError("positional_weights: n must be >= 1");
    std::vector<double> w(n, 1.0);
    if (mode == Weighting::constant) return w;
    double inv_sq_sum = 0.0;
    for (size_t i = 1; i <= n; ++i) inv_sq_sum += 1.0 / (static_cast<double>(i) * static_cast<double>(i));
    for (size_t t = 1; t <= n; ++t) {
        const double rem = static_cast<double>(n + 1 - t);
        w[t - 1] = static_cast<double>(n) / (rem * rem * inv_sq_sum);
    }
    return w;
}

NodeId sequence_cost_node(Tape& tape, const BoundParams& bound, NodeId enc_out, const TokenSeq& candidate,
                          double alpha, Weighting weighting) {
    const size_t n = candidate.scored_positions();
    NodeId nll = decoder_nll_column(tape, bound, enc_out, candidate);  // [n x 1]
    const std::vector<double> gamma = positional_weights(n, weighting);
    Tensor gamma_row({1, n}, gamma, tape.value(nll).dtype());
    NodeId weighted = tape.apply(OpKind::matmul, {tape.leaf(std::move(gamma_row)), nll});
    OpAttrs sc;
    sc.factor = 1.0 / std::pow(static_cast<double>(n), alpha);
    return tape.apply(OpKind::scale, {weighted}, sc);
}

double sequence_cost(const TransformerParams& params, const TokenSeq& source, const TokenSeq& candidate,
                     double alpha, Weighting weighting) {
    Tape tape;
    BoundParams bound = bind_params(tape, params);
    NodeId enc = encoder_forward(tape, bound, source.ids);
    return tape.value(sequence_cost_node(tape, bound, enc, candidate, alpha, weighting)).scalar_value();
}

NodeId ranking_loss_node(Tape& tape, const std::vector<NodeId>& costs, double lambda) {
    const size_t k = costs.size();
    if (k < 2) throw ContractError("ranking_loss: need at least 2 candidates");
    OpAttrs cat;
    cat.dim = 0;
    NodeId stacked = tape.apply(OpKind::concat, costs, cat);  // [k x 1]
    const size_t pairs = k * (k - 1) / 2;
    const DType dt = tape.value(stacked).dtype();
    // Row per pair (i<j): +1 at j, -1 at i, margin (j-i)*lambda; the loss is
    // sum(relu(D*s + margin)).
    Tensor diff({pairs, k}, dt);
    Tensor margin({pairs, 1}, dt);
    size_t row = 0;
    for (size_t i = 0; i < k; ++i) {
        for (size_t j = i + 1; j < k; ++j, ++row) {
            diff.at(row, j) = 1.0;
            diff.at(row, i) = -1.0;
            margin.at(row, 0) = static_cast<double>(j - i) * lambda;
        }
    }
    diff.quantize();
    margin.quantize();
    NodeId gaps = tape.apply(OpKind::matmul, {tape.leaf(std::move(diff)), stacked});
    gaps = tape.apply(OpKind::add, {gaps, tape.leaf(std::move(margin))});
    NodeId hinged = tape.apply(OpKind::relu, {gaps});
    return tape.apply(OpKind::sum, {hinged});
}

double ranking_loss(const std::vector<double>& costs, double lambda) {
    const size_t k = costs.size();
    if (k < 2) throw ContractError("ranking_loss: need at least 2 candidates");
    double total = 0.0;
    for (size_t i = 0; i < k; ++i)
        for (size_t j = i + 1; j < k; ++j)
            total += std::max(0.0, costs[j] - costs[i] + static_cast<double>(j - i) * lambda);
    return total;
}

std::vector<Candidate> generate_candidates(const TransformerParams& generator, const TokenSeq& source,
                                           const CalibConfig& cfg) {
    std::vector<Hypothesis> hyps = cfg.decode.groups > 1 ? diverse_beam_search(generator, source, cfg.decode)
                                                         : beam_search(generator, source, cfg.decode);
    std::vector<Candidate> out;
    std::set<std::vector<int>> seen;
    for (Hypothesis& h : hyps) {
        if (h.seq.ids.empty()) continue;
        if (!seen.insert(h.seq.ids).second) continue;
        Candidate c;
        c.tokens = std::move(h.seq);
        c.generator_score = h.normalized_score;
        out.push_back(std::move(c));
        if (out.size() == static_cast<size_t>(cfg.k)) break;
    }
    return out;
}

RankedCandidateSet rank_candidates(std::vector<Candidate> candidates, const TokenSeq& source,
                                   const TokenSeq& gold, MetricKind metric) {
    if (candidates.size() < 2) throw ContractError("rank_candidates: need at least 2 unique candidates");
    for (Candidate& c : candidates) c.metric_score = eval_score(c.tokens, gold, metric);
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.metric_score != b.metric_score) return a.metric_score < b.metric_score;
        if (a.generator_score != b.generator_score) return a.generator_score > b.generator_score;
        return a.tokens.ids < b.tokens.ids;
    });
    RankedCandidateSet set;
    set.candidates = std::move(candidates);
    set.source = source;
    set.gold = gold;
    return set;
}

MocaParts moca_loss_parts(const TransformerParams& online, RankedCandidateSet& ranked, const Example& gold,
                          const CalibConfig& cfg, GradMap* grads_out) {
    if (ranked.candidates.size() < 2) throw ContractError("moca_loss: ranked set smaller than 2");
    Tape tape;
    BoundParams bound = bind_params(tape, online);
    NodeId enc = encoder_forward(tape, bound, gold.source.ids);

    std::vector<NodeId> costs;
    costs.reserve(ranked.candidates.size());
    for (const Candidate& c : ranked.candidates) {
        costs.push_back(sequence_cost_node(tape, bound, enc, c.tokens, cfg.alpha, cfg.weighting));
    }
    NodeId rank = ranking_loss_node(tape, costs, cfg.lambda);
    NodeId mle = mle_loss_node(tape, bound, enc, gold.target);
    OpAttrs sc;
    sc.factor = cfg.beta;
    NodeId total = tape.apply(OpKind::add, {rank, tape.apply(OpKind::scale, {mle}, sc)});

    MocaParts parts;
    parts.rank = tape.value(rank).scalar_value();
    parts.mle = tape.value(mle).scalar_value();
    parts.total = tape.value(total).scalar_value();
    for (size_t i = 0; i < costs.size(); ++i) {
        const double c = tape.value(costs[i]).scalar_value();
        parts.costs.push_back(c);
        ranked.candidates[i].online_cost = c;
    }
    if (grads_out != nullptr) *grads_out = grads_by_name(tape, bound, total);
    return parts;
}

double moca_loss(const TransformerParams& online, RankedCandidateSet& ranked, const Example& gold,
                 const CalibConfig& cfg) {
    return moca_loss_parts(online, ranked, gold, cfg, nullptr).total;
}

void ema_update(TransformerParams& generator, const TransformerParams& online, double m) {
    if (m < 0.0 || m > 1.0) throw ContractError("ema_update: momentum outside [0, 1]");
    if (!generator.tensors.same_schema(online.tensors)) {
        throw ContractError("ema_update: generator and online parameter schemas differ");
    }
    if (m == 1.0) return;
    for (size_t i = 0; i < generator.tensors.size(); ++i) {
        Tensor& g = generator.tensors.items()[i].value;
        const Tensor& o = online.tensors.items()[i].value;
        if (m == 0.0) {
            g = o;
            continue;
        }
        for (size_t e = 0; e < g.numel(); ++e) g[e] = m * g[e] + (1.0 - m) * o[e];
        g.quantize();
    }
}

double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ContractError("kendall_tau: need two aligned series");
    const size_t n = x.size();
    long concordant = 0, discordant = 0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            const double prod = dx * dy;
            if (prod > 0.0) ++concordant;
            else if (prod < 0.0) ++discordant;
        }
    }
    return static_cast<double>(concordant - discordant) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

namespace {

struct ExampleOutcome {
    bool skipped = false;
    bool generated = false;
    MocaParts parts;
    GradMap grads;
    double mean_metric = 0.0;
    double tau = 0.0;
    size_t candidates = 0;
};

}  // namespace

StepReport moca_train_step(TrainState& state, const std::vector<std::pair<size_t, const Example*>>& batch,
                           const CalibConfig& cfg, OfflineStore* offline, int threads) {
    StepReport report;
    report.step = state.step + 1;
    report.batch_size = static_cast<int>(batch.size());

    std::vector<ExampleOutcome> outcomes(batch.size());
    parallel_for(batch.size(), threads, [&](size_t i) {
        const Example& ex = *batch[i].second;
        ExampleOutcome& out = outcomes[i];
        std::vector<Candidate> cands;
        if (offline != nullptr && offline->enabled) {
            cands = offline->by_example.at(batch[i].first);
        } else {
            cands = generate_candidates(state.generator, ex.source, cfg);
            out.generated = true;
        }
        out.candidates = cands.size();
        if (cands.size() < 2) {
            out.skipped = true;
            return;
        }
        RankedCandidateSet ranked = rank_candidates(std::move(cands), ex.source, ex.target, cfg.metric);
        out.parts = moca_loss_parts(state.online, ranked, ex, cfg, &out.grads);
        std::vector<double> metrics, neg_costs;
        double metric_sum = 0.0;
        for (const Candidate& c : ranked.candidates) {
            metrics.push_back(c.metric_score);
            neg_costs.push_back(-c.online_cost);
            metric_sum += c.metric_score;
        }
        out.mean_metric = metric_sum / static_cast<double>(ranked.candidates.size());
        out.tau = kendall_tau(neg_costs, metrics);
    });

    GradMap grads;
    size_t used = 0;
    double metric_acc = 0.0, tau_acc = 0.0, cand_acc = 0.0;
    for (ExampleOutcome& out : outcomes) {
        if (out.generated) state.generation_calls += 1;
        if (out.skipped) {
            report.skipped += 1;
            continue;
        }
        used += 1;
        cand_acc += static_cast<double>(out.candidates);
        report.loss += out.parts.total;
        report.rank_loss += out.parts.rank;
        report.mle_loss += out.parts.mle;
        metric_acc += out.mean_metric;
        tau_acc += out.tau;
        for (auto& [name, g] : out.grads) {
            auto it = grads.find(name);
            if (it == grads.end()) {
                grads.emplace(name, std::move(g));
            } else {
                Tensor& acc = it->second;
                for (size_t e = 0; e < acc.numel(); ++e) acc[e] += g[e];
            }
        }
    }

    if (used == 0) {
        report.empty_batch = true;
        report.generation_calls = state.generation_calls;
        state.step += 1;
        return report;
    }

    const double inv = 1.0 / static_cast<double>(used);
    report.loss *= inv;
    report.rank_loss *= inv;
    report.mle_loss *= inv;
    report.mean_metric = metric_acc * inv;
    report.mean_candidates = cand_acc * inv;
    report.kendall = tau_acc * inv;
    for (auto& [name, g] : grads) {
        for (size_t e = 0; e < g.numel(); ++e) g[e] *= inv;
        (void)name;
    }

    adam_step(state.online.tensors, grads, state.adam);
    if (cfg.mode != CalibMode::offline) {
        ema_update(state.generator, state.online, cfg.effective_momentum());
    }
    state.step += 1;
    report.generation_calls = state.generation_calls;
    return report;
}

}  // namespace moca
