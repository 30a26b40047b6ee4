#include "moca/decode.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "moca/error.hpp"

namespace moca {

namespace {

double pool_score(const Hypothesis& h, double alpha, bool positional) {
    const double len = static_cast<double>(h.generated_len());
    if (!positional) return h.sum_logprob / std::pow(len, alpha);
    // Experimental: weight per-step logprobs by the monotone positional
    // weights before length normalization.
    const size_t n = h.step_logprobs.size();
    double inv_sq_sum = 0.0;
    for (size_t i = 1; i <= n; ++i) inv_sq_sum += 1.0 / (static_cast<double>(i) * static_cast<double>(i));
    double weighted = 0.0;
    for (size_t t = 1; t <= n; ++t) {
        const double rem = static_cast<double>(n + 1 - t);
        weighted += static_cast<double>(n) / (rem * rem * inv_sq_sum) * h.step_logprobs[t - 1];
    }
    return weighted / std::pow(len, alpha);
}

// Total order on finished hypotheses: better score first, then shorter, then
// lexicographically smaller token ids, then eos-terminated first.
struct PoolLess {
    double alpha;
    bool positional;
    bool operator()(const Hypothesis& a, const Hypothesis& b) const {
        const double sa = pool_score(a, alpha, positional);
        const double sb = pool_score(b, alpha, positional);
        if (sa != sb) return sa > sb;
        if (a.seq.ids.size() != b.seq.ids.size()) return a.seq.ids.size() < b.seq.ids.size();
        if (a.seq.ids != b.seq.ids) return a.seq.ids < b.seq.ids;
        return a.seq.terminated && !b.seq.terminated;
    }
};

struct Beam {
    std::vector<int> prefix;
    std::vector<double> step_logprobs;
    double sum_logprob = 0.0;
    double select_score = 0.0;  // sum_logprob plus accumulated diversity penalties
};

struct Expansion {
    size_t beam_index;
    int token;
    double sum_logprob;
    double select_score;
    double step_logprob;
};

Hypothesis finish(const Beam& beam, int token, double step_lp, bool is_eos, double alpha, bool positional) {
    Hypothesis h;
    h.seq.role = Role::target;
    h.seq.ids = beam.prefix;
    if (!is_eos) h.seq.ids.push_back(token);
    h.seq.terminated = is_eos;
    h.step_logprobs = beam.step_logprobs;
    h.step_logprobs.push_back(step_lp);
    h.sum_logprob = beam.sum_logprob + step_lp;
    h.finished = true;
    h.normalized_score = h.sum_logprob / std::pow(static_cast<double>(h.generated_len()), alpha);
    (void)positional;
    return h;
}

// One group advanced by one step. `step_counts` holds tokens already chosen
// at this time step by earlier groups; chosen tokens are appended to it.
void advance_group(SequenceModel& model, const DecodeConfig& cfg, int width, std::vector<Beam>& live,
                   std::vector<Hypothesis>& pool, std::map<int, int>& step_counts, double diversity) {
    if (live.empty()) return;
    // Each finished hypothesis keeps its beam slot, so the pool never
    // outgrows the width and the width-1 case degenerates to greedy.
    const size_t budget = static_cast<size_t>(width) - pool.size();
    if (budget == 0) {
        live.clear();
        return;
    }
    const int eos = model.eos_id();
    std::vector<Expansion> expansions;
    for (size_t b = 0; b < live.size(); ++b) {
        const Beam& beam = live[b];
        const std::vector<double> row = model.next_logprobs(beam.prefix);
        const size_t next_len = beam.prefix.size() + 1;  // length if a token is emitted now
        for (int tok = 0; tok < model.vocab_size(); ++tok) {
            const bool is_eos = tok == eos;
            if (is_eos) {
                if (next_len < static_cast<size_t>(cfg.min_len)) continue;
            } else if (!model.generatable(tok)) {
                continue;
            }
            double penalty = 0.0;
            if (diversity > 0.0) {
                auto it = step_counts.find(tok);
                if (it != step_counts.end()) penalty = diversity * static_cast<double>(it->second);
            }
            expansions.push_back({b, tok, beam.sum_logprob + row[tok], beam.select_score + row[tok] - penalty,
                                  row[tok]});
        }
    }
    std::sort(expansions.begin(), expansions.end(), [](const Expansion& a, const Expansion& b) {
        if (a.select_score != b.select_score) return a.select_score > b.select_score;
        if (a.token != b.token) return a.token < b.token;
        return a.beam_index < b.beam_index;
    });
    if (expansions.size() > budget) expansions.resize(budget);

    std::vector<Beam> next_live;
    for (const Expansion& e : expansions) {
        const Beam& parent = live[e.beam_index];
        const size_t new_len = parent.prefix.size() + 1;
        step_counts[e.token] += 1;
        if (e.token == eos) {
            pool.push_back(finish(parent, e.token, e.step_logprob, true, cfg.alpha, cfg.positional_scoring));
        } else if (new_len == static_cast<size_t>(cfg.max_len)) {
            pool.push_back(finish(parent, e.token, e.step_logprob, false, cfg.alpha, cfg.positional_scoring));
        } else {
            Beam nb;
            nb.prefix = parent.prefix;
            nb.prefix.push_back(e.token);
            nb.step_logprobs = parent.step_logprobs;
            nb.step_logprobs.push_back(e.step_logprob);
            nb.sum_logprob = e.sum_logprob;
            nb.select_score = e.select_score;
            next_live.push_back(std::move(nb));
        }
    }
    live = std::move(next_live);
}

std::vector<Hypothesis> grouped_search(SequenceModel& model, const DecodeConfig& cfg, int groups, int width,
                                       double diversity) {
    if (width < 1 || groups < 1) throw ContractError("decode: width and groups must be >= 1");
    if (cfg.max_len < cfg.min_len || cfg.min_len < 1) {
        throw ContractError("decode: need max_len >= min_len >= 1");
    }
    std::vector<std::vector<Beam>> live(static_cast<size_t>(groups), std::vector<Beam>{Beam{}});
    std::vector<std::vector<Hypothesis>> pools(static_cast<size_t>(groups));

    for (int step = 1; step <= cfg.max_len; ++step) {
        std::map<int, int> step_counts;
        bool any = false;
        for (int g = 0; g < groups; ++g) {
            advance_group(model, cfg, width, live[static_cast<size_t>(g)], pools[static_cast<size_t>(g)],
                          step_counts, g == 0 ? 0.0 : diversity);
            any = any || !live[static_cast<size_t>(g)].empty();
        }
        if (!any) break;
    }

    const PoolLess less{cfg.alpha, cfg.positional_scoring};
    std::vector<Hypothesis> out;
    std::set<std::vector<int>> seen;
    for (auto& pool : pools) {
        std::sort(pool.begin(), pool.end(), less);
        for (Hypothesis& h : pool) {
            if (seen.insert(h.seq.ids).second) out.push_back(std::move(h));
        }
    }
    return out;
}

}  // namespace

Hypothesis greedy_decode(SequenceModel& model, const DecodeConfig& cfg) {
    DecodeConfig one = cfg;
    one.width = 1;
    one.groups = 1;
    std::vector<Hypothesis> res = grouped_search(model, one, 1, 1, 0.0);
    if (res.empty()) throw ContractError("greedy: no hypothesis produced");
    return res.front();
}

std::vector<Hypothesis> beam_search(SequenceModel& model, const DecodeConfig& cfg) {
    return grouped_search(model, cfg, 1, cfg.width, 0.0);
}

std::vector<Hypothesis> diverse_beam_search(SequenceModel& model, const DecodeConfig& cfg) {
    return grouped_search(model, cfg, cfg.groups, cfg.width, cfg.diversity);
}

Hypothesis exhaustive_search(SequenceModel& model, int max_len, double alpha, int min_len) {
    double space = 1.0;
    for (int i = 0; i < max_len; ++i) space *= static_cast<double>(model.vocab_size());
    if (space > 1e6) throw ContractError("exhaustive_search: |vocab|^max_len exceeds 10^6");
    if (max_len < min_len || min_len < 1) throw ContractError("exhaustive_search: need max_len >= min_len >= 1");

    const PoolLess less{alpha, false};
    bool found = false;
    Hypothesis best;
    Beam root;

    // Depth-first over prefixes; every eos-eligible extension and every
    // max-length cutoff is a complete hypothesis.
    std::vector<Beam> stack{root};
    while (!stack.empty()) {
        Beam cur = std::move(stack.back());
        stack.pop_back();
        const std::vector<double> row = model.next_logprobs(cur.prefix);
        const size_t next_len = cur.prefix.size() + 1;
        for (int tok = 0; tok < model.vocab_size(); ++tok) {
            const bool is_eos = tok == model.eos_id();
            if (is_eos) {
                if (next_len < static_cast<size_t>(min_len)) continue;
            } else if (!model.generatable(tok)) {
                continue;
            }
            if (is_eos || next_len == static_cast<size_t>(max_len)) {
                Hypothesis h = finish(cur, tok, row[tok], is_eos, alpha, false);
                if (!found || less(h, best)) {
                    best = std::move(h);
                    found = true;
                }
            } else {
                Beam nb;
                nb.prefix = cur.prefix;
                nb.prefix.push_back(tok);
                nb.step_logprobs = cur.step_logprobs;
                nb.step_logprobs.push_back(row[tok]);
                nb.sum_logprob = cur.sum_logprob + row[tok];
                stack.push_back(std::move(nb));
            }
        }
    }
    if (!found) throw ContractError("exhaustive_search: empty hypothesis space");
    return best;
}

}  // namespace moca
