#pragma once

#include <string>
#include <vector>

#include "moca/calibrate.hpp"
#include "moca/checkpoint.hpp"
#include "moca/config.hpp"
#include "moca/dataset.hpp"

namespace moca {

TaskSpec task_spec_from(const Config& cfg);
TransformerHyper hyper_from_config(const Config& cfg);
AdamHyper adam_hyper_from_config(const Config& cfg, int phase);
CalibConfig calib_config_from(const Config& cfg);
DecodeConfig eval_decode_config(const Config& cfg);

// In-memory CSV with stable `%.10g` formatting (NaN renders empty).
class CsvLog {
public:
    explicit CsvLog(std::vector<std::string> columns);
    void row(const std::vector<double>& values);
    void write(const std::string& path) const;
    size_t rows() const { return rows_.size(); }
    double at(size_t row, const std::string& column) const;
    std::string to_string() const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

TrainState initial_mle_state(const Config& cfg);

// Rebuilds non-serialized Adam hyperparameters from the checkpoint's config
// snapshot; call after load_checkpoint.
void restore_adam_hyper(TrainState& state);

// Advances likelihood training to target_steps (one CSV row per evaluation
// interval). Returns false when early stopping fired first.
bool run_mle_steps(TrainState& state, const Dataset& data, const Config& cfg, int64_t target_steps,
                   CsvLog& log);

// Fresh calibration state off a fine-tuned checkpoint: theta = xi = its
// online parameters, new optimizer, step zero.
TrainState begin_calibration(const TrainState& finetuned, const Config& cfg);

// Pre-generates frozen candidates for the offline ablation.
void fill_offline_store(OfflineStore& store, const TrainState& state, const Dataset& data, const Config& cfg);

void run_calib_steps(TrainState& state, const Dataset& data, const Config& cfg, int64_t target_steps,
                     CsvLog& log, OfflineStore& offline, std::vector<StepReport>* reports);

struct ValidStats {
    double loss = 0.0;
    double token_accuracy = 0.0;
};
ValidStats validate(const TransformerParams& params, const std::vector<Example>& examples, int threads);

struct EvalSummary {
    double r1 = 0.0, r2 = 0.0, rl = 0.0, metric = 0.0;
    double tau = 0.0;
    size_t count = 0;
    size_t tau_count = 0;
};

// Beam-decodes every example and scores against gold; optionally also ranks
// fresh candidate sets to estimate cost/metric rank agreement.
EvalSummary evaluate_params(const TransformerParams& params, const std::vector<Example>& examples,
                            const Config& cfg, CsvLog* per_example);

// Aggregates metric scores for externally supplied predictions.
EvalSummary score_predictions(const std::vector<Example>& examples, const std::vector<TokenSeq>& predictions,
                              MetricKind kind);

int cmd_make_data(const Config& cfg);
int cmd_train_mle(const Config& cfg);
int cmd_calibrate(const Config& cfg);
int cmd_evaluate(const Config& cfg);
int cmd_generate(const Config& cfg);
int cmd_diagnose(const Config& cfg);

enum class SelftestFault { none, corrupt_gradient };

struct SelftestResult {
    bool passed = true;
    std::vector<std::string> checks;    // "module: description ... ok"
    std::vector<std::string> failures;  // "module: what disagreed"
};

SelftestResult run_selftest(SelftestFault fault);
int cmd_selftest(const Config& cfg, SelftestFault fault);

}  // namespace moca
