#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "moca/config.hpp"
#include "moca/error.hpp"
#include "moca/trainer.hpp"

namespace {

moca::Config build_config(const std::string& config_path, const std::vector<std::string>& sets) {
    moca::Config cfg = config_path.empty() ? moca::Config::defaults() : moca::Config::from_file(config_path);
    for (const std::string& kv : sets) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) throw moca::ConfigError("--set expects key=value, got `" + kv + "`");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequence-to-sequence training lab with momentum calibration"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "Configuration file (flat key = value lines)");
    app.add_option("--set", sets, "Override a config key, e.g. --set calib.momentum=0.995")->take_all();

    auto* make_data = app.add_subcommand("make-data", "Generate and persist the synthetic task splits");
    auto* train_mle = app.add_subcommand("train-mle", "Likelihood fine-tuning phase");
    auto* calibrate = app.add_subcommand("calibrate", "Momentum-calibration phase from a fine-tuned checkpoint");
    auto* evaluate = app.add_subcommand("evaluate", "Beam-decode a split and report metric scores");
    auto* generate = app.add_subcommand("generate", "Beam-decode a split and dump predictions");
    auto* diagnose = app.add_subcommand("diagnose", "Teacher-forced positional accuracy report");
    auto* selftest = app.add_subcommand("selftest", "Run the built-in oracle checks");

    bool plant_fault = false;
    selftest->add_flag("--plant-gradient-fault", plant_fault,
                       "Corrupt one gradient entry to prove the checks can fail");

    CLI11_PARSE(app, argc, argv);

    try {
        const moca::Config cfg = build_config(config_path, sets);
        if (make_data->parsed()) return moca::cmd_make_data(cfg);
        if (train_mle->parsed()) return moca::cmd_train_mle(cfg);
        if (calibrate->parsed()) return moca::cmd_calibrate(cfg);
        if (evaluate->parsed()) return moca::cmd_evaluate(cfg);
        if (generate->parsed()) return moca::cmd_generate(cfg);
        if (diagnose->parsed()) return moca::cmd_diagnose(cfg);
        if (selftest->parsed()) {
            return moca::cmd_selftest(cfg, plant_fault ? moca::SelftestFault::corrupt_gradient
                                                       : moca::SelftestFault::none);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
