#include "moca/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "moca/error.hpp"
#include "moca/parallel.hpp"

namespace moca {

TaskSpec task_spec_from(const Config& cfg) {
    TaskSpec spec;
    spec.kind = task_kind_from_string(cfg.str("task.kind"));
    spec.vocab_size = static_cast<int>(cfg.i64("task.vocab_size"));
    spec.min_len = static_cast<int>(cfg.i64("task.min_len"));
    spec.max_len = static_cast<int>(cfg.i64("task.max_len"));
    spec.train = static_cast<size_t>(cfg.i64("task.train"));
    spec.valid = static_cast<size_t>(cfg.i64("task.valid"));
    spec.test = static_cast<size_t>(cfg.i64("task.test"));
    spec.seed = static_cast<uint64_t>(cfg.i64("seed"));
    spec.dir = cfg.str("data.dir");
    spec.train_file = cfg.str("task.train_file");
    spec.valid_file = cfg.str("task.valid_file");
    spec.test_file = cfg.str("task.test_file");
    return spec;
}

TransformerHyper hyper_from_config(const Config& cfg) {
    TransformerHyper hy;
    hy.layers = static_cast<int>(cfg.i64("model.layers"));
    hy.d_model = static_cast<int>(cfg.i64("model.d_model"));
    hy.heads = static_cast<int>(cfg.i64("model.heads"));
    hy.d_ff = static_cast<int>(cfg.i64("model.d_ff"));
    hy.max_positions = static_cast<int>(cfg.i64("model.max_positions"));
    hy.vocab_size = static_cast<int>(cfg.i64("task.vocab_size"));
    const std::string& precision = cfg.str("precision");
    if (precision != "f32" && precision != "f64") throw ConfigError("precision must be f32 or f64");
    hy.dtype = precision == "f64" ? DType::f64 : DType::f32;
    return hy;
}

AdamHyper adam_hyper_from_config(const Config& cfg, int phase) {
    AdamHyper h;
    h.beta1 = cfg.f64("adam.beta1");
    h.beta2 = cfg.f64("adam.beta2");
    h.eps = cfg.f64("adam.eps");
    h.clip_norm = cfg.f64("adam.clip");
    if (phase == 0) {
        h.lr = cfg.f64("mle.lr");
        h.warmup_steps = cfg.i64("mle.warmup");
    } else {
        h.lr = cfg.f64("calib.lr");
        h.warmup_steps = cfg.i64("calib.warmup");
    }
    return h;
}

CalibConfig calib_config_from(const Config& cfg) {
    CalibConfig c;
    c.k = static_cast<int>(cfg.i64("calib.k"));
    c.lambda = cfg.f64("calib.lambda");
    c.alpha = cfg.f64("calib.alpha");
    c.beta = cfg.f64("calib.beta");
    c.momentum = cfg.f64("calib.momentum");
    c.weighting = weighting_from_string(cfg.str("calib.weighting"));
    c.mode = calib_mode_from_string(cfg.str("calib.mode"));
    c.metric = metric_kind_from_string(cfg.str("calib.metric"));
    c.decode.groups = static_cast<int>(cfg.i64("calib.groups"));
    c.decode.width = static_cast<int>(cfg.i64("calib.group_width"));
    c.decode.diversity = cfg.f64("calib.diversity");
    const double da = cfg.f64("calib.decode_alpha");
    c.decode.alpha = da < 0.0 ? c.alpha : da;
    c.decode.max_len = static_cast<int>(cfg.i64("calib.decode_max_len"));
    c.decode.min_len = static_cast<int>(cfg.i64("calib.decode_min_len"));
    if (c.k < 2) throw ConfigError("calib.k must be >= 2");
    if (c.lambda < 0 || c.alpha < 0 || c.beta < 0) throw ConfigError("calib coefficients must be >= 0");
    if (c.momentum < 0 || c.momentum > 1) throw ConfigError("calib.momentum must lie in [0, 1]");
    return c;
}

DecodeConfig eval_decode_config(const Config& cfg) {
    DecodeConfig d;
    d.width = static_cast<int>(cfg.i64("decode.beam"));
    d.groups = 1;
    d.diversity = 0.0;
    d.alpha = cfg.f64("decode.alpha");
    d.max_len = static_cast<int>(cfg.i64("decode.max_len"));
    d.min_len = static_cast<int>(cfg.i64("decode.min_len"));
    d.positional_scoring = cfg.flag("decode.positional_scoring");
    return d;
}

// ---------------------------------------------------------------------------
// CSV

CsvLog::CsvLog(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvLog::row(const std::vector<double>& values) {
    if (values.size() != columns_.size()) throw ContractError("csv: row width mismatch");
    rows_.push_back(values);
}

namespace {

std::string csv_number(double v) {
    if (std::isnan(v)) return "";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

std::string CsvLog::to_string() const {
    std::string out;
    for (size_t c = 0; c < columns_.size(); ++c) {
        if (c) out += ',';
        out += columns_[c];
    }
    out += '\n';
    for (const auto& row : rows_) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += csv_number(row[c]);
        }
        out += '\n';
    }
    return out;
}

void CsvLog::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("csv: cannot write " + path);
    out << to_string();
    if (!out) throw IoError("csv: write failed for " + path);
}

double CsvLog::at(size_t row, const std::string& column) const {
    auto it = std::find(columns_.begin(), columns_.end(), column);
    if (it == columns_.end()) throw ContractError("csv: unknown column " + column);
    return rows_.at(row)[static_cast<size_t>(it - columns_.begin())];
}

// ---------------------------------------------------------------------------
// Likelihood phase

TrainState initial_mle_state(const Config& cfg) {
    TrainState state;
    const TransformerHyper hy = hyper_from_config(cfg);
    state.online = init_params(hy, static_cast<uint64_t>(cfg.i64("seed")));
    state.generator = state.online;
    state.adam = make_adam_state(state.online.tensors, adam_hyper_from_config(cfg, 0));
    state.step = 0;
    state.phase = 0;
    state.config_snapshot = cfg.snapshot();
    state.rng = Rng(static_cast<uint64_t>(cfg.i64("seed"))).fork(0xba7c);
    return state;
}

void restore_adam_hyper(TrainState& state) {
    const Config cfg = Config::from_text(state.config_snapshot);
    state.adam.hyper = adam_hyper_from_config(cfg, state.phase);
}

ValidStats validate(const TransformerParams& params, const std::vector<Example>& examples, int threads) {
    std::vector<double> losses(examples.size());
    std::vector<std::pair<size_t, size_t>> hits(examples.size());  // (correct, total)
    parallel_for(examples.size(), threads, [&](size_t i) {
        const Example& ex = examples[i];
        const Tensor rows = forward_logprobs(params, ex.source, ex.target);
        std::vector<int> gold = ex.target.ids;
        gold.push_back(kEosId);
        double nll = 0.0;
        size_t correct = 0;
        for (size_t t = 0; t < gold.size(); ++t) {
            nll -= rows.at(t, static_cast<size_t>(gold[t]));
            size_t best = 0;
            for (size_t j = 1; j < rows.cols(); ++j)
                if (rows.at(t, j) > rows.at(t, best)) best = j;
            if (static_cast<int>(best) == gold[t]) ++correct;
        }
        losses[i] = nll / static_cast<double>(gold.size());
        hits[i] = {correct, gold.size()};
    });
    ValidStats stats;
    size_t correct = 0, total = 0;
    for (size_t i = 0; i < examples.size(); ++i) {
        stats.loss += losses[i];
        correct += hits[i].first;
        total += hits[i].second;
    }
    stats.loss /= static_cast<double>(examples.size());
    stats.token_accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return stats;
}

namespace {

std::vector<size_t> sample_batch(Rng& rng, size_t population, size_t batch) {
    std::vector<size_t> idx(batch);
    for (auto& i : idx) i = rng.next_below(population);
    return idx;
}

struct BatchGrad {
    double loss = 0.0;
    GradMap grads;
};

BatchGrad mle_batch_grad(const TransformerParams& params, const Dataset& data,
                         const std::vector<size_t>& batch, int threads) {
    std::vector<ExampleGrad> per(batch.size());
    parallel_for(batch.size(), threads, [&](size_t i) {
        per[i] = mle_loss_grad(params, data.train[batch[i]]);
    });
    BatchGrad out;
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const ExampleGrad& eg : per) {
        out.loss += eg.loss;
        for (const auto& [name, g] : eg.grads) {
            auto it = out.grads.find(name);
            if (it == out.grads.end()) {
                out.grads.emplace(name, g);
            } else {
                Tensor& acc = it->second;
                for (size_t e = 0; e < acc.numel(); ++e) acc[e] += g[e];
            }
        }
    }
    out.loss *= inv;
    for (auto& [name, g] : out.grads) {
        (void)name;
        for (size_t e = 0; e < g.numel(); ++e) g[e] *= inv;
    }
    return out;
}

void maybe_save_interval(const TrainState& state, const Config& cfg, const char* stem, int64_t interval) {
    if (interval <= 0 || state.step % interval != 0) return;
    const std::string dir = cfg.str("out.dir");
    std::filesystem::create_directories(dir);
    save_checkpoint(state, dir + "/" + stem + "_step" + std::to_string(state.step) + ".ckpt");
}

}  // namespace

bool run_mle_steps(TrainState& state, const Dataset& data, const Config& cfg, int64_t target_steps,
                   CsvLog& log) {
    const int threads = static_cast<int>(cfg.i64("threads"));
    const size_t batch_size = static_cast<size_t>(cfg.i64("mle.batch"));
    const int64_t eval_interval = cfg.i64("mle.eval_interval");
    const int64_t patience = cfg.i64("mle.patience");
    if (batch_size < 1 || eval_interval < 1) throw ConfigError("mle.batch and mle.eval_interval must be >= 1");

    double best_valid = std::numeric_limits<double>::infinity();
    int64_t evals_since_best = 0;
    while (state.step < target_steps) {
        const std::vector<size_t> batch = sample_batch(state.rng, data.train.size(), batch_size);
        BatchGrad bg;
        try {
            bg = mle_batch_grad(state.online, data, batch, threads);
        } catch (const NumericFault& e) {
            throw NumericFault("mle step " + std::to_string(state.step + 1) + " diverged: " + e.what());
        }
        adam_step(state.online.tensors, bg.grads, state.adam);
        state.step += 1;
        maybe_save_interval(state, cfg, "mle", cfg.i64("mle.checkpoint_interval"));

        if (state.step % eval_interval == 0 || state.step == target_steps) {
            const ValidStats vs = validate(state.online, data.valid, threads);
            log.row({static_cast<double>(state.step), bg.loss, vs.loss, vs.token_accuracy,
                     schedule_lr(state.adam.hyper, state.adam.step)});
            if (patience > 0) {
                if (vs.loss < best_valid) {
                    best_valid = vs.loss;
                    evals_since_best = 0;
                } else if (++evals_since_best >= patience) {
                    return false;
                }
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Calibration phase

TrainState begin_calibration(const TrainState& finetuned, const Config& cfg) {
    TrainState state;
    state.online = finetuned.online;
    state.generator = finetuned.online;  // xi = theta at calibration start
    state.adam = make_adam_state(state.online.tensors, adam_hyper_from_config(cfg, 1));
    state.step = 0;
    state.phase = 1;
    state.config_snapshot = cfg.snapshot();
    state.rng = Rng(static_cast<uint64_t>(cfg.i64("seed"))).fork(0xca11b);
    state.generation_calls = 0;
    return state;
}

void fill_offline_store(OfflineStore& store, const TrainState& state, const Dataset& data, const Config& cfg) {
    const CalibConfig calib = calib_config_from(cfg);
    const int threads = static_cast<int>(cfg.i64("threads"));
    store.enabled = true;
    store.by_example.assign(data.train.size(), {});
    parallel_for(data.train.size(), threads, [&](size_t i) {
        store.by_example[i] = generate_candidates(state.generator, data.train[i].source, calib);
    });
}

void run_calib_steps(TrainState& state, const Dataset& data, const Config& cfg, int64_t target_steps,
                     CsvLog& log, OfflineStore& offline, std::vector<StepReport>* reports) {
    const CalibConfig calib = calib_config_from(cfg);
    const int threads = static_cast<int>(cfg.i64("threads"));
    const size_t batch_size = static_cast<size_t>(cfg.i64("calib.batch"));
    const int64_t log_interval = std::max<int64_t>(1, cfg.i64("calib.log_interval"));

    if (calib.mode == CalibMode::offline && !offline.enabled) {
        fill_offline_store(offline, state, data, cfg);
    }
    while (state.step < target_steps) {
        const std::vector<size_t> idx = sample_batch(state.rng, data.train.size(), batch_size);
        std::vector<std::pair<size_t, const Example*>> batch;
        batch.reserve(idx.size());
        for (size_t i : idx) batch.emplace_back(i, &data.train[i]);
        const StepReport rep = moca_train_step(state, batch, calib, &offline, threads);
        if (rep.empty_batch) {
            std::cerr << "warning: calibration step " << rep.step << " had no usable examples\n";
        }
        if (reports != nullptr) reports->push_back(rep);
        if (rep.step % log_interval == 0 || state.step == target_steps) {
            log.row({static_cast<double>(rep.step), rep.loss, rep.rank_loss, rep.mle_loss,
                     static_cast<double>(rep.skipped), static_cast<double>(rep.batch_size), rep.mean_metric,
                     rep.mean_candidates, rep.kendall, static_cast<double>(rep.generation_calls),
                     schedule_lr(state.adam.hyper, state.adam.step)});
        }
        maybe_save_interval(state, cfg, "calib", cfg.i64("calib.checkpoint_interval"));
    }
}

// ---------------------------------------------------------------------------
// Evaluation

EvalSummary score_predictions(const std::vector<Example>& examples, const std::vector<TokenSeq>& predictions,
                              MetricKind kind) {
    if (examples.size() != predictions.size()) throw ContractError("score_predictions: size mismatch");
    EvalSummary s;
    for (size_t i = 0; i < examples.size(); ++i) {
        s.r1 += rouge_n(predictions[i].ids, examples[i].target.ids, 1).f1;
        s.r2 += rouge_n(predictions[i].ids, examples[i].target.ids, 2).f1;
        s.rl += rouge_l(predictions[i].ids, examples[i].target.ids).f1;
        s.metric += eval_score(predictions[i], examples[i].target, kind);
    }
    s.count = examples.size();
    if (s.count > 0) {
        s.r1 /= static_cast<double>(s.count);
        s.r2 /= static_cast<double>(s.count);
        s.rl /= static_cast<double>(s.count);
        s.metric /= static_cast<double>(s.count);
    }
    return s;
}

EvalSummary evaluate_params(const TransformerParams& params, const std::vector<Example>& examples,
                            const Config& cfg, CsvLog* per_example) {
    const DecodeConfig decode = eval_decode_config(cfg);
    const CalibConfig calib = calib_config_from(cfg);
    const MetricKind kind = calib.metric;
    const bool want_tau = cfg.flag("eval.candidate_tau");
    const int threads = static_cast<int>(cfg.i64("threads"));

    struct RowResult {
        TokenSeq pred;
        double r1, r2, rl, metric;
        double tau = std::numeric_limits<double>::quiet_NaN();
    };
    std::vector<RowResult> rows(examples.size());
    parallel_for(examples.size(), threads, [&](size_t i) {
        const Example& ex = examples[i];
        const std::vector<Hypothesis> beams = beam_search(params, ex.source, decode);
        RowResult& r = rows[i];
        r.pred = beams.front().seq;
        r.r1 = rouge_n(r.pred.ids, ex.target.ids, 1).f1;
        r.r2 = rouge_n(r.pred.ids, ex.target.ids, 2).f1;
        r.rl = rouge_l(r.pred.ids, ex.target.ids).f1;
        r.metric = eval_score(r.pred, ex.target, kind);
        if (want_tau) {
            std::vector<Candidate> cands = generate_candidates(params, ex.source, calib);
            if (cands.size() >= 2) {
                RankedCandidateSet ranked = rank_candidates(std::move(cands), ex.source, ex.target, kind);
                std::vector<double> neg_costs, metrics;
                for (const Candidate& c : ranked.candidates) {
                    neg_costs.push_back(-sequence_cost(params, ex.source, c.tokens, calib.alpha, calib.weighting));
                    metrics.push_back(c.metric_score);
                }
                r.tau = kendall_tau(neg_costs, metrics);
            }
        }
    });

    EvalSummary s;
    s.count = examples.size();
    for (size_t i = 0; i < rows.size(); ++i) {
        const RowResult& r = rows[i];
        s.r1 += r.r1;
        s.r2 += r.r2;
        s.rl += r.rl;
        s.metric += r.metric;
        if (!std::isnan(r.tau)) {
            s.tau += r.tau;
            s.tau_count += 1;
        }
        if (per_example != nullptr) {
            per_example->row({static_cast<double>(i), static_cast<double>(examples[i].source.ids.size()),
                              static_cast<double>(examples[i].target.ids.size()),
                              static_cast<double>(r.pred.ids.size()), r.pred.terminated ? 1.0 : 0.0, r.r1, r.r2,
                              r.rl, r.metric, r.tau});
        }
    }
    if (s.count > 0) {
        s.r1 /= static_cast<double>(s.count);
        s.r2 /= static_cast<double>(s.count);
        s.rl /= static_cast<double>(s.count);
        s.metric /= static_cast<double>(s.count);
    }
    if (s.tau_count > 0) s.tau /= static_cast<double>(s.tau_count);
    return s;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

const std::vector<Example>& pick_split(const Dataset& data, const std::string& name) {
    if (name == "train") return data.train;
    if (name == "valid") return data.valid;
    if (name == "test") return data.test;
    throw ConfigError("unknown split: " + name);
}

TrainState load_state(const std::string& path) {
    TrainState state = load_checkpoint(path);
    restore_adam_hyper(state);
    return state;
}

void require_architecture(const TrainState& state, const Config& cfg) {
    if (!state.online.hyper.same_architecture(hyper_from_config(cfg))) {
        throw ConfigError("checkpoint architecture does not match the current model.* configuration");
    }
}

std::string out_path(const Config& cfg, const std::string& name) {
    const std::string dir = cfg.str("out.dir");
    std::filesystem::create_directories(dir);
    return dir + "/" + name;
}

CsvLog mle_log_columns() {
    return CsvLog({"step", "train_loss", "valid_loss", "valid_token_acc", "lr"});
}

CsvLog calib_log_columns() {
    return CsvLog({"step", "loss", "rank_loss", "mle_loss", "skipped", "batch", "mean_candidate_metric",
                   "mean_candidates", "kendall_tau", "generation_calls", "lr"});
}

}  // namespace

int cmd_make_data(const Config& cfg) {
    const Dataset data = make_dataset(task_spec_from(cfg));
    std::cout << "wrote " << data.train.size() << "/" << data.valid.size() << "/" << data.test.size()
              << " train/valid/test examples under " << cfg.str("data.dir") << "\n";
    return 0;
}

int cmd_train_mle(const Config& cfg) {
    const Dataset data = load_dataset(task_spec_from(cfg));
    TrainState state;
    if (!cfg.str("mle.resume").empty()) {
        state = load_state(cfg.str("mle.resume"));
        if (state.phase != 0) throw ConfigError("mle.resume expects a likelihood-phase checkpoint");
        require_architecture(state, cfg);
    } else {
        state = initial_mle_state(cfg);
    }
    CsvLog log = mle_log_columns();
    const bool completed = run_mle_steps(state, data, cfg, cfg.i64("mle.steps"), log);
    state.generator = state.online;
    save_checkpoint(state, out_path(cfg, "mle.ckpt"));
    log.write(out_path(cfg, "mle_log.csv"));
    std::cout << (completed ? "finished" : "early-stopped") << " at step " << state.step << "; checkpoint "
              << out_path(cfg, "mle.ckpt") << "\n";
    return 0;
}

int cmd_calibrate(const Config& cfg) {
    const Dataset data = load_dataset(task_spec_from(cfg));
    TrainState state;
    if (!cfg.str("calib.resume").empty()) {
        state = load_state(cfg.str("calib.resume"));
        if (state.phase != 1) throw ConfigError("calib.resume expects a calibration-phase checkpoint");
        require_architecture(state, cfg);
    } else {
        if (cfg.str("calib.init").empty()) throw ConfigError("calibrate needs calib.init (a fine-tuned checkpoint)");
        const TrainState finetuned = load_state(cfg.str("calib.init"));
        require_architecture(finetuned, cfg);
        state = begin_calibration(finetuned, cfg);
    }
    CsvLog log = calib_log_columns();
    OfflineStore offline;
    run_calib_steps(state, data, cfg, cfg.i64("calib.steps"), log, offline, nullptr);
    save_checkpoint(state, out_path(cfg, "calib.ckpt"));
    log.write(out_path(cfg, "calib_log.csv"));
    std::cout << "calibrated to step " << state.step << "; checkpoint " << out_path(cfg, "calib.ckpt") << "\n";
    return 0;
}

int cmd_evaluate(const Config& cfg) {
    if (cfg.str("eval.checkpoint").empty()) throw ConfigError("evaluate needs eval.checkpoint");
    const Dataset data = load_dataset(task_spec_from(cfg));
    const TrainState state = load_state(cfg.str("eval.checkpoint"));
    require_architecture(state, cfg);
    const std::vector<Example>& split = pick_split(data, cfg.str("eval.split"));

    CsvLog examples_log({"example", "source_len", "gold_len", "pred_len", "pred_terminated", "rouge1", "rouge2",
                         "rougeL", "metric", "kendall_tau"});
    const EvalSummary s = evaluate_params(state.online, split, cfg, &examples_log);
    examples_log.write(out_path(cfg, "eval_examples.csv"));

    CsvLog summary({"examples", "rouge1_f1", "rouge2_f1", "rougeL_f1", "metric_mean", "kendall_tau",
                    "kendall_tau_examples"});
    summary.row({static_cast<double>(s.count), s.r1, s.r2, s.rl, s.metric, s.tau,
                 static_cast<double>(s.tau_count)});
    summary.write(out_path(cfg, "eval_summary.csv"));

    CsvLog positional({"bucket_start", "bucket_end", "accuracy", "count"});
    for (const PositionalBucket& b :
         positional_accuracy(state.online, split, static_cast<int>(cfg.i64("diagnose.bucket_width")))) {
        positional.row({static_cast<double>(b.start), static_cast<double>(b.end), b.accuracy,
                        static_cast<double>(b.count)});
    }
    positional.write(out_path(cfg, "eval_positional.csv"));

    std::cout << "examples=" << s.count << " rouge1=" << s.r1 << " rouge2=" << s.r2 << " rougeL=" << s.rl
              << " metric=" << s.metric << " tau=" << s.tau << "\n";
    return 0;
}

int cmd_generate(const Config& cfg) {
    if (cfg.str("eval.checkpoint").empty()) throw ConfigError("generate needs eval.checkpoint");
    const Dataset data = load_dataset(task_spec_from(cfg));
    const TrainState state = load_state(cfg.str("eval.checkpoint"));
    require_architecture(state, cfg);
    const std::vector<Example>& split = pick_split(data, cfg.str("eval.split"));
    const DecodeConfig decode = eval_decode_config(cfg);
    const int threads = static_cast<int>(cfg.i64("threads"));

    std::vector<Hypothesis> best(split.size());
    parallel_for(split.size(), threads, [&](size_t i) {
        best[i] = beam_search(state.online, split[i].source, decode).front();
    });
    const std::string path = out_path(cfg, "generations.jsonl");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("generate: cannot write " + path);
    for (size_t i = 0; i < split.size(); ++i) {
        nlohmann::json rec;
        rec["index"] = i;
        rec["source"] = data.vocab.decode(split[i].source.ids);
        rec["target"] = data.vocab.decode(split[i].target.ids);
        rec["prediction"] = data.vocab.decode(best[i].seq.ids);
        rec["score"] = best[i].normalized_score;
        rec["terminated"] = best[i].seq.terminated;
        out << rec.dump() << '\n';
    }
    std::cout << "wrote " << split.size() << " generations to " << path << "\n";
    return 0;
}

int cmd_diagnose(const Config& cfg) {
    if (cfg.str("eval.checkpoint").empty()) throw ConfigError("diagnose needs eval.checkpoint");
    const Dataset data = load_dataset(task_spec_from(cfg));
    const TrainState state = load_state(cfg.str("eval.checkpoint"));
    require_architecture(state, cfg);
    const std::vector<Example>& split = pick_split(data, cfg.str("diagnose.split"));
    const int width = static_cast<int>(cfg.i64("diagnose.bucket_width"));

    const std::vector<PositionalBucket> buckets = positional_accuracy(state.online, split, width);
    CsvLog log({"bucket_start", "bucket_end", "accuracy", "count"});
    for (const PositionalBucket& b : buckets) {
        log.row({static_cast<double>(b.start), static_cast<double>(b.end), b.accuracy,
                 static_cast<double>(b.count)});
    }
    log.write(out_path(cfg, "positional.csv"));

    for (const PositionalBucket& b : buckets) {
        std::printf("positions [%d,%d): accuracy %.4f over %zu predictions\n", b.start, b.end, b.accuracy,
                    b.count);
    }
    const bool drops = buckets.size() >= 2 && buckets.back().accuracy < buckets.front().accuracy;
    std::cout << "late-position accuracy " << (drops ? "drops" : "holds up") << "; recommended_weighting = "
              << (drops ? "positional" : "constant") << "\n";
    return 0;
}

int cmd_selftest(const Config& cfg, SelftestFault fault) {
    (void)cfg;
    const SelftestResult res = run_selftest(fault);
    for (const std::string& line : res.checks) std::cout << "ok: " << line << "\n";
    for (const std::string& line : res.failures) std::cout << "FAIL: " << line << "\n";
    std::cout << (res.passed ? "selftest passed" : "selftest FAILED") << " (" << res.checks.size()
              << " checks, " << res.failures.size() << " failures)\n";
    return res.passed ? 0 : 1;
}

}  // namespace moca
