#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "moca/calibrate.hpp"
#include "moca/error.hpp"
#include "moca/gradcheck.hpp"
#include "test_support.hpp"

using namespace moca;
using moca::test::near_one_hot_model;
using moca::test::rand_example;
using moca::test::tiny_hyper;

namespace {

TokenSeq target_seq(std::vector<int> ids, bool terminated = true) {
    TokenSeq s;
    s.ids = std::move(ids);
    s.role = Role::target;
    s.terminated = terminated;
    return s;
}

CalibConfig small_calib(int k = 4) {
    CalibConfig c;
    c.k = k;
    c.lambda = 0.001;
    c.alpha = 1.0;
    c.beta = 0.01;
    c.momentum = 0.99;
    c.weighting = Weighting::constant;
    c.mode = CalibMode::momentum;
    c.decode.groups = k;
    c.decode.width = 1;
    c.decode.diversity = 2.0;
    c.decode.alpha = 1.0;
    c.decode.max_len = 8;
    c.decode.min_len = 1;
    c.metric = MetricKind::mean_of_1_2_l;
    return c;
}

Candidate make_candidate(std::vector<int> ids, double gen_score) {
    Candidate c;
    c.tokens = target_seq(std::move(ids));
    c.generator_score = gen_score;
    return c;
}

}  // namespace

TEST_CASE("positional weights: exact small cases and normalization") {
    CHECK(positional_weights(1, Weighting::positional) == std::vector<double>{1.0});
    const auto w3 = positional_weights(3, Weighting::positional);
    CHECK(w3[0] == doctest::Approx(12.0 / 49.0).epsilon(1e-15));
    CHECK(w3[1] == doctest::Approx(27.0 / 49.0).epsilon(1e-15));
    CHECK(w3[2] == doctest::Approx(108.0 / 49.0).epsilon(1e-15));
    CHECK((w3[0] + w3[1] + w3[2]) / 3.0 == doctest::Approx(1.0).epsilon(1e-15));

    const auto w100 = positional_weights(100, Weighting::positional);
    double mean = 0.0;
    for (double w : w100) mean += w;
    mean /= 100.0;
    CHECK(std::fabs(mean - 1.0) < 1e-12);
    for (size_t t = 1; t < w100.size(); ++t) CHECK(w100[t] > w100[t - 1]);

    CHECK(positional_weights(5, Weighting::constant) == std::vector<double>(5, 1.0));
    CHECK_THROWS_AS(positional_weights(0, Weighting::positional), ContractError);
}

TEST_CASE("ranking loss worked examples via both the scalar and the tape route") {
    CHECK(ranking_loss({1.5, 1.0}, 0.001) == 0.0);
    CHECK(ranking_loss({1.0, 1.5}, 0.001) == doctest::Approx(0.501).epsilon(1e-12));
    CHECK(ranking_loss({3.0, 2.0, 1.0}, 0.5) == 0.0);
    CHECK(ranking_loss({3.0, 2.0, 1.0}, 1.5) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(ranking_loss({1.0}, 0.1), ContractError);

    auto tape_loss = [](const std::vector<double>& costs, double lambda) {
        Tape tape;
        std::vector<NodeId> ids;
        for (double c : costs) ids.push_back(tape.leaf(Tensor({1, 1}, {c}, DType::f64), true));
        return tape.value(ranking_loss_node(tape, ids, lambda)).scalar_value();
    };
    CHECK(tape_loss({1.0, 1.5}, 0.001) == doctest::Approx(0.501).epsilon(1e-12));
    CHECK(tape_loss({3.0, 2.0, 1.0}, 1.5) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(tape_loss({3.0, 2.0, 1.0}, 0.5) == 0.0);
}

TEST_CASE("ranking loss with zero margin is exactly shift invariant on dyadic costs") {
    // Dyadic rationals plus a power-of-two shift keep every sum exact, so
    // the comparison can demand bitwise equality.
    const std::vector<double> base = {3.25, 1.5, 2.75, 0.125, -1.5};
    for (double shift : {2.0, -8.0, 0.5}) {
        std::vector<double> shifted = base;
        for (double& s : shifted) s += shift;
        CHECK(ranking_loss(shifted, 0.0) == ranking_loss(base, 0.0));
    }

    Rng rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> costs(5);
        for (double& c : costs) c = rng.uniform(-2.0, 2.0);
        std::vector<double> shifted = costs;
        const double c0 = rng.uniform(-1.0, 1.0);
        for (double& s : shifted) s += c0;
        CHECK(std::fabs(ranking_loss(shifted, 0.0) - ranking_loss(costs, 0.0)) < 1e-12);
    }
}

TEST_CASE("ranking loss is zero exactly when every dynamic margin is satisfied") {
    Rng rng(88);
    for (int trial = 0; trial < 200; ++trial) {
        const double lambda = 0.01 * static_cast<double>(rng.next_below(20));
        std::vector<double> costs(4);
        for (double& c : costs) c = rng.uniform(-1.0, 1.0);
        bool satisfied = true;
        for (size_t i = 0; i < costs.size(); ++i)
            for (size_t j = i + 1; j < costs.size(); ++j)
                if (costs[j] > costs[i] - static_cast<double>(j - i) * lambda) satisfied = false;
        CHECK((ranking_loss(costs, lambda) == 0.0) == satisfied);
    }
}

TEST_CASE("sequence cost of a certain candidate is zero and uniform cost is log V") {
    const TransformerParams sure = near_one_hot_model();
    TokenSeq src;
    src.ids = {kNumReserved, kNumReserved + 1};
    src.role = Role::source;
    CHECK(sequence_cost(sure, src, target_seq({kNumReserved}), 2.0, Weighting::positional) < 1e-6);

    TransformerHyper hy = tiny_hyper(DType::f64);
    hy.vocab_size = 50;
    TransformerParams uniform = init_params(hy, 5);
    Tensor& w = uniform.tensors.get("out.w");
    Tensor& b = uniform.tensors.get("out.b");
    for (size_t i = 0; i < w.numel(); ++i) w[i] = 0.0;
    for (size_t i = 0; i < b.numel(); ++i) b[i] = 0.0;
    Rng rng(5);
    const Example ex = rand_example(rng, 3, 4, hy.vocab_size);
    const double cost = sequence_cost(uniform, ex.source, ex.target, 1.0, Weighting::constant);
    CHECK(cost == doctest::Approx(std::log(50.0)).epsilon(1e-4));
}

TEST_CASE("sequence cost bridges to the decoder's normalized score") {
    TransformerHyper hy = tiny_hyper(DType::f32);
    hy.layers = 2;
    const TransformerParams p = init_params(hy, 321);
    Rng rng(9);
    const Example ex = rand_example(rng, 4, 4, hy.vocab_size);
    DecodeConfig cfg;
    cfg.width = 3;
    cfg.alpha = 1.0;
    cfg.max_len = 7;
    const std::vector<Hypothesis> beams = beam_search(p, ex.source, cfg);
    for (const Hypothesis& h : beams) {
        if (h.seq.ids.empty()) continue;
        const double cost = sequence_cost(p, ex.source, h.seq, 1.0, Weighting::constant);
        CHECK(std::fabs(cost - (-h.normalized_score)) < 1e-4);
    }
}

TEST_CASE("greedy output cost never beats a probability-lowering corruption (constant weights)") {
    TransformerHyper hy = tiny_hyper(DType::f64);
    const TransformerParams p = init_params(hy, 777);
    Rng rng(42);
    const Example ex = rand_example(rng, 4, 4, hy.vocab_size);
    DecodeConfig cfg;
    cfg.width = 1;
    cfg.alpha = 1.2;
    cfg.max_len = 6;
    const Hypothesis h = greedy_decode(p, ex.source, cfg);
    if (h.seq.ids.empty()) return;
    auto total_logprob = [&](const TokenSeq& seq) {
        const Tensor rows = forward_logprobs(p, ex.source, seq);
        std::vector<int> toks = seq.ids;
        if (seq.terminated) toks.push_back(kEosId);
        double sum = 0.0;
        for (size_t t = 0; t < toks.size(); ++t) sum += rows.at(t, static_cast<size_t>(toks[t]));
        return sum;
    };
    const double base_total = total_logprob(h.seq);
    const double base_cost = sequence_cost(p, ex.source, h.seq, 1.2, Weighting::constant);
    for (size_t pos = 0; pos < h.seq.ids.size(); ++pos) {
        TokenSeq corrupted = h.seq;
        corrupted.ids[pos] = kNumReserved + (corrupted.ids[pos] - kNumReserved + 1) % (hy.vocab_size - kNumReserved);
        if (total_logprob(corrupted) <= base_total) {
            CHECK(sequence_cost(p, ex.source, corrupted, 1.2, Weighting::constant) >= base_cost);
        }
    }
}

TEST_CASE("near-deterministic generators collapse to a single candidate (skip signal)") {
    const TransformerParams sure = near_one_hot_model();
    TokenSeq src;
    src.ids = {kNumReserved, kNumReserved + 1};
    src.role = Role::source;
    const CalibConfig cfg = small_calib(4);
    const std::vector<Candidate> cands = generate_candidates(sure, src, cfg);
    CHECK(cands.size() == 1);  // all groups emit the same string; caller skips
}

TEST_CASE("candidate generation is deterministic and bounded by K") {
    TransformerHyper hy = tiny_hyper(DType::f32);
    const TransformerParams p = init_params(hy, 50);
    Rng rng(3);
    const Example ex = rand_example(rng, 4, 4, hy.vocab_size);
    CalibConfig cfg = small_calib(6);
    cfg.decode.groups = 6;
    const std::vector<Candidate> a = generate_candidates(p, ex.source, cfg);
    const std::vector<Candidate> b = generate_candidates(p, ex.source, cfg);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() <= 6);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].tokens == b[i].tokens);
        CHECK(a[i].generator_score == b[i].generator_score);
        CHECK(!a[i].tokens.ids.empty());
        for (size_t j = i + 1; j < a.size(); ++j) CHECK(a[i].tokens.ids != a[j].tokens.ids);
    }
}

TEST_CASE("rank_candidates sorts ascending with generator-score tie-break") {
    const TokenSeq gold = target_seq({4, 5, 6});
    TokenSeq src;
    src.ids = {4, 5, 6};
    src.role = Role::source;

    std::vector<Candidate> cands;
    cands.push_back(make_candidate({4, 5}, -0.5));    // partial overlap
    cands.push_back(make_candidate({4, 5, 6}, -2.0)); // equals gold
    cands.push_back(make_candidate({9, 9, 9}, -1.0)); // disjoint
    RankedCandidateSet ranked = rank_candidates(cands, src, gold, MetricKind::mean_of_1_2_l);
    REQUIRE(ranked.candidates.size() == 3);
    CHECK(ranked.candidates.front().tokens.ids == std::vector<int>{9, 9, 9});
    CHECK(ranked.candidates.back().tokens.ids == std::vector<int>{4, 5, 6});
    CHECK(ranked.candidates.back().metric_score == 1.0);
    for (size_t i = 1; i < ranked.candidates.size(); ++i) {
        CHECK(ranked.candidates[i].metric_score >= ranked.candidates[i - 1].metric_score);
    }

    // All-tie metric: generator score descending decides.
    std::vector<Candidate> tied;
    tied.push_back(make_candidate({7, 7}, -3.0));
    tied.push_back(make_candidate({8, 8}, -1.0));
    tied.push_back(make_candidate({9, 9}, -2.0));
    const TokenSeq far_gold = target_seq({4, 5});
    RankedCandidateSet rt = rank_candidates(tied, src, far_gold, MetricKind::mean_of_1_2_l);
    CHECK(rt.candidates[0].generator_score == -1.0);
    CHECK(rt.candidates[1].generator_score == -2.0);
    CHECK(rt.candidates[2].generator_score == -3.0);

    CHECK_THROWS_AS(rank_candidates({make_candidate({4}, 0.0)}, src, gold, MetricKind::rouge1), ContractError);
}

TEST_CASE("moca loss decomposes into its components") {
    TransformerHyper hy = tiny_hyper(DType::f64);
    const TransformerParams p = init_params(hy, 8);
    Rng rng(21);
    const Example ex = rand_example(rng, 4, 4, hy.vocab_size);
    CalibConfig cfg = small_calib(4);
    std::vector<Candidate> cands = generate_candidates(p, ex.source, cfg);
    REQUIRE(cands.size() >= 2);
    RankedCandidateSet ranked = rank_candidates(std::move(cands), ex.source, ex.target, cfg.metric);

    MocaParts parts = moca_loss_parts(p, ranked, ex, cfg, nullptr);
    // Components recomputed independently.
    std::vector<double> costs;
    for (const Candidate& c : ranked.candidates) {
        costs.push_back(sequence_cost(p, ex.source, c.tokens, cfg.alpha, cfg.weighting));
    }
    const double rank_ref = ranking_loss(costs, cfg.lambda);
    const double mle_ref = mle_loss(p, ex);
    CHECK(parts.rank == doctest::Approx(rank_ref).epsilon(1e-6));
    CHECK(parts.mle == doctest::Approx(mle_ref).epsilon(1e-6));
    CHECK(parts.total == doctest::Approx(rank_ref + cfg.beta * mle_ref).epsilon(1e-6));
    for (size_t i = 0; i < costs.size(); ++i) {
        CHECK(parts.costs[i] == doctest::Approx(costs[i]).epsilon(1e-9));
        CHECK(ranked.candidates[i].online_cost == parts.costs[i]);
    }

    // beta = 0 reduces to the ranking loss alone.
    CalibConfig no_mle = cfg;
    no_mle.beta = 0.0;
    CHECK(moca_loss(p, ranked, ex, no_mle) == doctest::Approx(rank_ref).epsilon(1e-9));
}

TEST_CASE("a perfectly ordered candidate set has zero loss and zero gradients") {
    TransformerHyper hy = tiny_hyper(DType::f64);
    const TransformerParams p = init_params(hy, 64);
    Rng rng(31);
    const Example ex = rand_example(rng, 4, 3, hy.vocab_size);
    CalibConfig cfg = small_calib(4);
    cfg.beta = 0.0;
    cfg.lambda = 1e-9;
    std::vector<Candidate> cands = generate_candidates(p, ex.source, cfg);
    REQUIRE(cands.size() >= 2);
    // Order candidates by descending model cost: "quality" ascending in a
    // way theta already agrees with, so every hinge is strictly negative.
    std::vector<std::pair<double, Candidate>> scored;
    for (Candidate& c : cands) {
        scored.emplace_back(sequence_cost(p, ex.source, c.tokens, cfg.alpha, cfg.weighting), c);
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    RankedCandidateSet ranked;
    ranked.source = ex.source;
    ranked.gold = ex.target;
    for (auto& [cost, c] : scored) ranked.candidates.push_back(std::move(c));

    GradMap grads;
    const MocaParts parts = moca_loss_parts(p, ranked, ex, cfg, &grads);
    CHECK(parts.total == 0.0);
    for (const auto& [name, g] : grads) {
        (void)name;
        for (size_t i = 0; i < g.numel(); ++i) REQUIRE(g[i] == 0.0);
    }
}

TEST_CASE("moca loss gradient matches finite differences away from hinge kinks") {
    const TransformerHyper hy = tiny_hyper(DType::f64);
    TransformerParams params = init_params(hy, 12);
    Rng rng(17);
    const Example ex = rand_example(rng, 3, 3, hy.vocab_size);
    CalibConfig cfg = small_calib(3);
    cfg.lambda = 0.01;
    cfg.decode.groups = 3;
    std::vector<Candidate> cands = generate_candidates(params, ex.source, cfg);
    REQUIRE(cands.size() >= 2);
    RankedCandidateSet ranked = rank_candidates(std::move(cands), ex.source, ex.target, cfg.metric);

    // Confirm hinge inputs are far from their kinks so finite differences
    // stay on one side.
    std::vector<double> costs;
    for (const Candidate& c : ranked.candidates)
        costs.push_back(sequence_cost(params, ex.source, c.tokens, cfg.alpha, cfg.weighting));
    for (size_t i = 0; i < costs.size(); ++i)
        for (size_t j = i + 1; j < costs.size(); ++j)
            REQUIRE(std::fabs(costs[j] - costs[i] + static_cast<double>(j - i) * cfg.lambda) > 1e-3);

    DiffFunction fn;
    auto run = [&](const ParamSet& point, GradMap* grads) {
        TransformerParams p;
        p.hyper = hy;
        p.tensors = point;
        RankedCandidateSet local = ranked;
        const MocaParts parts = moca_loss_parts(p, local, ex, cfg, grads);
        return parts.total;
    };
    fn.value = [&run](const ParamSet& p) { return run(p, nullptr); };
    fn.gradient = [&run](const ParamSet& p) {
        GradMap g;
        run(p, &g);
        return g;
    };
    const GradCheckReport rep = finite_difference_check(fn, params.tensors, 1e-5, 64, 7);
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("ema update: fixed point, copy, arithmetic, and drift-free equality") {
    TransformerHyper hy = tiny_hyper(DType::f32);
    TransformerParams theta = init_params(hy, 1);
    TransformerParams xi = init_params(hy, 2);

    TransformerParams xi_m1 = xi;
    ema_update(xi_m1, theta, 1.0);
    CHECK(xi_m1.tensors.same_values(xi.tensors));

    TransformerParams xi_m0 = xi;
    ema_update(xi_m0, theta, 0.0);
    CHECK(xi_m0.tensors.same_values(theta.tensors));

    TransformerParams a;
    a.hyper = hy;
    a.tensors.add("w", Tensor::scalar(1.0, DType::f32));
    TransformerParams b;
    b.hyper = hy;
    b.tensors.add("w", Tensor::scalar(0.0, DType::f32));
    ema_update(a, b, 0.99);
    CHECK(a.tensors.get("w").scalar_value() == doctest::Approx(0.99).epsilon(1e-7));

    // Starting equal and freezing theta keeps them equal bit for bit.
    TransformerParams frozen = init_params(hy, 3);
    TransformerParams follower = frozen;
    for (int i = 0; i < 25; ++i) ema_update(follower, frozen, 0.97);
    CHECK(follower.tensors.same_values(frozen.tensors));

    TransformerParams mismatched;
    mismatched.hyper = hy;
    mismatched.tensors.add("other", Tensor::scalar(0.0, DType::f32));
    CHECK_THROWS_AS(ema_update(mismatched, theta, 0.5), ContractError);
}

TEST_CASE("kendall tau on hand cases") {
    CHECK(kendall_tau({1, 2, 3, 4}, {10, 20, 30, 40}) == 1.0);
    CHECK(kendall_tau({1, 2, 3, 4}, {40, 30, 20, 10}) == -1.0);
    CHECK(kendall_tau({1, 2, 3}, {5, 5, 5}) == 0.0);  // ties contribute zero
    CHECK(kendall_tau({1, 2, 3, 4}, {10, 20, 40, 30}) == doctest::Approx(4.0 / 6.0));
    CHECK_THROWS_AS(kendall_tau({1}, {2}), ContractError);
}

TEST_CASE("train step: m=1 with zero learning rate leaves both models untouched") {
    TransformerHyper hy = tiny_hyper(DType::f32);
    TrainState state;
    state.online = init_params(hy, 10);
    state.generator = state.online;
    AdamHyper ah;
    ah.lr = 0.0;
    state.adam = make_adam_state(state.online.tensors, ah);

    Rng rng(77);
    std::vector<Example> data;
    for (int i = 0; i < 3; ++i) data.push_back(rand_example(rng, 4, 4, hy.vocab_size));
    std::vector<std::pair<size_t, const Example*>> batch;
    for (size_t i = 0; i < data.size(); ++i) batch.emplace_back(i, &data[i]);

    CalibConfig cfg = small_calib(4);
    cfg.momentum = 1.0;
    const TransformerParams theta0 = state.online;
    const StepReport rep = moca_train_step(state, batch, cfg, nullptr, 1);
    CHECK(state.online.tensors.same_values(theta0.tensors));
    CHECK(state.generator.tensors.same_values(theta0.tensors));
    CHECK(state.step == 1);
    CHECK(state.adam.step == 1);
    CHECK(rep.step == 1);
    CHECK(rep.batch_size == 3);
}

TEST_CASE("train step is bitwise deterministic across runs and thread counts") {
    TransformerHyper hy = tiny_hyper(DType::f32);
    Rng rng(123);
    std::vector<Example> data;
    for (int i = 0; i < 6; ++i) data.push_back(rand_example(rng, 4, 4, hy.vocab_size));

    auto run = [&](int threads) {
        TrainState state;
        state.online = init_params(hy, 10);
        state.generator = state.online;
        AdamHyper ah;
        ah.lr = 1e-3;
        state.adam = make_adam_state(state.online.tensors, ah);
        CalibConfig cfg = small_calib(4);
        Rng batch_rng(5);
        for (int step = 0; step < 6; ++step) {
            std::vector<std::pair<size_t, const Example*>> batch;
            for (int b = 0; b < 3; ++b) {
                const size_t i = batch_rng.next_below(data.size());
                batch.emplace_back(i, &data[i]);
            }
            moca_train_step(state, batch, cfg, nullptr, threads);
        }
        return state;
    };
    const TrainState s1 = run(1);
    const TrainState s2 = run(1);
    const TrainState s4 = run(4);
    CHECK(s1.online.tensors.same_values(s2.online.tensors));
    CHECK(s1.online.tensors.same_values(s4.online.tensors));
    CHECK(s1.generator.tensors.same_values(s4.generator.tensors));
    CHECK(s1.adam.first_moment.same_values(s4.adam.first_moment));
}

TEST_CASE("train step reports an empty batch as a warning no-op") {
    const TransformerParams sure = near_one_hot_model();
    TrainState state;
    state.online = sure;
    state.generator = sure;
    AdamHyper ah;
    state.adam = make_adam_state(state.online.tensors, ah);

    Example ex;
    ex.source.ids = {kNumReserved, kNumReserved + 1};
    ex.source.role = Role::source;
    ex.target.ids = {kNumReserved};
    ex.target.role = Role::target;
    std::vector<std::pair<size_t, const Example*>> batch{{0, &ex}};

    CalibConfig cfg = small_calib(4);
    const StepReport rep = moca_train_step(state, batch, cfg, nullptr, 1);
    CHECK(rep.empty_batch);
    CHECK(rep.skipped == 1);
    CHECK(state.online.tensors.same_values(sure.tensors));
    CHECK(state.step == 1);
    CHECK(state.adam.step == 0);  // no update happened
}

TEST_CASE("ranking-only training drives the frozen set to zero loss and aligned argmin") {
    TransformerHyper hy = tiny_hyper(DType::f64);
    TrainState state;
    state.online = init_params(hy, 2000);
    state.generator = state.online;
    AdamHyper ah;
    ah.lr = 5e-3;
    state.adam = make_adam_state(state.online.tensors, ah);

    Rng rng(2);
    const Example ex = rand_example(rng, 4, 4, hy.vocab_size);
    CalibConfig cfg = small_calib(4);
    cfg.beta = 0.0;
    cfg.lambda = 0.001;
    std::vector<Candidate> cands = generate_candidates(state.online, ex.source, cfg);
    REQUIRE(cands.size() >= 3);
    RankedCandidateSet ranked = rank_candidates(std::move(cands), ex.source, ex.target, cfg.metric);
    // Break metric ties deterministically for this check: only keep a set
    // whose metric scores are strictly increasing somewhere.
    double final_loss = 1.0;
    for (int step = 0; step < 400 && final_loss > 0.0; ++step) {
        GradMap grads;
        RankedCandidateSet local = ranked;
        const MocaParts parts = moca_loss_parts(state.online, local, ex, cfg, &grads);
        final_loss = parts.total;
        if (final_loss == 0.0) break;
        adam_step(state.online.tensors, grads, state.adam);
    }
    CHECK(final_loss == 0.0);

    RankedCandidateSet local = ranked;
    MocaParts parts = moca_loss_parts(state.online, local, ex, cfg, nullptr);
    const size_t argmin =
        static_cast<size_t>(std::min_element(parts.costs.begin(), parts.costs.end()) - parts.costs.begin());
    CHECK(argmin == parts.costs.size() - 1);  // the best-metric candidate
}
