#include "moca/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "moca/error.hpp"

namespace moca {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Config Config::defaults() {
    Config c;
    auto& v = c.values_;
    v["seed"] = int64_t{12345};
    v["precision"] = std::string("f32");
    v["threads"] = int64_t{0};
    v["data.dir"] = std::string("data");
    v["out.dir"] = std::string("runs/default");

    v["task.kind"] = std::string("reverse");
    v["task.vocab_size"] = int64_t{50};
    v["task.min_len"] = int64_t{5};
    v["task.max_len"] = int64_t{15};
    v["task.train"] = int64_t{2000};
    v["task.valid"] = int64_t{200};
    v["task.test"] = int64_t{200};
    v["task.train_file"] = std::string("");
    v["task.valid_file"] = std::string("");
    v["task.test_file"] = std::string("");

    v["model.layers"] = int64_t{2};
    v["model.d_model"] = int64_t{64};
    v["model.heads"] = int64_t{4};
    v["model.d_ff"] = int64_t{256};
    v["model.max_positions"] = int64_t{64};

    v["adam.beta1"] = 0.9;
    v["adam.beta2"] = 0.999;
    v["adam.eps"] = 1e-8;
    v["adam.clip"] = 0.0;

    v["mle.lr"] = 1e-3;
    v["mle.warmup"] = int64_t{200};
    v["mle.steps"] = int64_t{3000};
    v["mle.batch"] = int64_t{16};
    v["mle.eval_interval"] = int64_t{100};
    v["mle.patience"] = int64_t{0};
    v["mle.checkpoint_interval"] = int64_t{0};
    v["mle.resume"] = std::string("");

    v["calib.mode"] = std::string("momentum");
    v["calib.k"] = int64_t{16};
    v["calib.lambda"] = 0.001;
    v["calib.alpha"] = 2.0;
    v["calib.beta"] = 0.01;
    v["calib.momentum"] = 0.99;
    v["calib.weighting"] = std::string("positional");
    v["calib.metric"] = std::string("mean");
    v["calib.lr"] = 2e-4;
    v["calib.warmup"] = int64_t{50};
    v["calib.steps"] = int64_t{500};
    v["calib.batch"] = int64_t{16};
    v["calib.log_interval"] = int64_t{1};
    v["calib.checkpoint_interval"] = int64_t{0};
    v["calib.groups"] = int64_t{16};
    v["calib.group_width"] = int64_t{1};
    v["calib.diversity"] = 2.0;
    v["calib.decode_alpha"] = -1.0;  // negative: follow calib.alpha
    v["calib.decode_max_len"] = int64_t{20};
    v["calib.decode_min_len"] = int64_t{1};
    v["calib.init"] = std::string("");
    v["calib.resume"] = std::string("");

    v["decode.beam"] = int64_t{4};
    v["decode.alpha"] = 1.0;
    v["decode.max_len"] = int64_t{20};
    v["decode.min_len"] = int64_t{1};
    v["decode.positional_scoring"] = int64_t{0};

    v["eval.checkpoint"] = std::string("");
    v["eval.split"] = std::string("test");
    v["eval.candidate_tau"] = int64_t{1};

    v["diagnose.bucket_width"] = int64_t{5};
    v["diagnose.split"] = std::string("valid");
    return c;
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    Config c = defaults();
    c.apply_text(buf.str(), path);
    return c;
}

Config Config::from_text(const std::string& text) {
    Config c = defaults();
    c.apply_text(text, "<text>");
    return c;
}

void Config::apply_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected `key = value`");
        }
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void Config::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    try {
        if (std::holds_alternative<int64_t>(it->second)) {
            size_t pos = 0;
            const int64_t parsed = std::stoll(value, &pos);
            if (pos != value.size()) throw std::invalid_argument(value);
            it->second = parsed;
        } else if (std::holds_alternative<double>(it->second)) {
            size_t pos = 0;
            const double parsed = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument(value);
            it->second = parsed;
        } else {
            it->second = value;
        }
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": cannot parse value `" + value + "`");
    }
}

const Config::Value& Config::lookup(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
}

int64_t Config::i64(const std::string& key) const {
    const Value& v = lookup(key);
    if (!std::holds_alternative<int64_t>(v)) throw ConfigError("config key " + key + " is not an integer");
    return std::get<int64_t>(v);
}

double Config::f64(const std::string& key) const {
    const Value& v = lookup(key);
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    if (std::holds_alternative<int64_t>(v)) return static_cast<double>(std::get<int64_t>(v));
    throw ConfigError("config key " + key + " is not numeric");
}

const std::string& Config::str(const std::string& key) const {
    const Value& v = lookup(key);
    if (!std::holds_alternative<std::string>(v)) throw ConfigError("config key " + key + " is not a string");
    return std::get<std::string>(v);
}

std::string Config::snapshot() const {
    std::ostringstream out;
    for (const auto& [key, value] : values_) {
        out << key << " = ";
        if (std::holds_alternative<int64_t>(value)) {
            out << std::get<int64_t>(value);
        } else if (std::holds_alternative<double>(value)) {
            out << format_double(std::get<double>(value));
        } else {
            out << std::get<std::string>(value);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace moca
