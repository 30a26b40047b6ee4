#include "moca/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "moca/error.hpp"
#include "moca/rng.hpp"

namespace moca {

TaskSpec::Kind task_kind_from_string(const std::string& s) {
    if (s == "reverse") return TaskSpec::Kind::reverse;
    if (s == "sort") return TaskSpec::Kind::sort;
    if (s == "file") return TaskSpec::Kind::file;
    throw ConfigError("unknown task kind: " + s);
}

namespace {

std::vector<int> target_for(TaskSpec::Kind kind, const std::vector<int>& source) {
    std::vector<int> t = source;
    if (kind == TaskSpec::Kind::reverse) {
        std::reverse(t.begin(), t.end());
    } else {
        std::sort(t.begin(), t.end());
    }
    return t;
}

Example make_example(TaskSpec::Kind kind, std::vector<int> source_ids) {
    Example ex;
    ex.source.ids = std::move(source_ids);
    ex.source.role = Role::source;
    ex.target.ids = target_for(kind, ex.source.ids);
    ex.target.role = Role::target;
    ex.target.terminated = true;
    return ex;
}

}  // namespace

std::string split_path(const TaskSpec& spec, const char* split) {
    if (spec.kind == TaskSpec::Kind::file) {
        if (std::string(split) == "train") return spec.train_file;
        if (std::string(split) == "valid") return spec.valid_file;
        return spec.test_file;
    }
    return spec.dir + "/" + split + ".jsonl";
}

Dataset make_dataset(const TaskSpec& spec) {
    if (spec.kind == TaskSpec::Kind::file) {
        throw ConfigError("make_dataset: task kind `file` supplies its own splits");
    }
    if (spec.vocab_size < 8) throw ConfigError("make_dataset: vocab_size must be >= 8");
    if (spec.min_len < 1 || spec.max_len < spec.min_len) {
        throw ConfigError("make_dataset: need max_len >= min_len >= 1");
    }
    Dataset ds;
    ds.vocab = Vocab::synthetic(spec.vocab_size);
    const int content = ds.vocab.content_size();
    const int first = ds.vocab.first_content_id();

    Rng base(spec.seed);
    std::set<std::vector<int>> seen_sources;  // splits stay disjoint
    auto fill = [&](std::vector<Example>& out, size_t count, uint64_t stream) {
        Rng rng = base.fork(stream);
        while (out.size() < count) {
            const size_t len = static_cast<size_t>(spec.min_len) +
                               rng.next_below(static_cast<uint64_t>(spec.max_len - spec.min_len + 1));
            std::vector<int> src(len);
            for (auto& id : src) id = first + static_cast<int>(rng.next_below(static_cast<uint64_t>(content)));
            if (!seen_sources.insert(src).second) continue;
            out.push_back(make_example(spec.kind, std::move(src)));
        }
    };
    fill(ds.train, spec.train, 1);
    fill(ds.valid, spec.valid, 2);
    fill(ds.test, spec.test, 3);

    std::filesystem::create_directories(spec.dir);
    write_split(split_path(spec, "train"), ds.vocab, ds.train);
    write_split(split_path(spec, "valid"), ds.vocab, ds.valid);
    write_split(split_path(spec, "test"), ds.vocab, ds.test);
    return ds;
}

Dataset load_dataset(const TaskSpec& spec) {
    Dataset ds;
    ds.vocab = Vocab::synthetic(spec.vocab_size);
    ds.train = read_split(split_path(spec, "train"), ds.vocab);
    ds.valid = read_split(split_path(spec, "valid"), ds.vocab);
    ds.test = read_split(split_path(spec, "test"), ds.vocab);
    return ds;
}

void write_split(const std::string& path, const Vocab& vocab, const std::vector<Example>& examples) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw IoError("dataset: cannot write " + path);
    for (const Example& ex : examples) {
        nlohmann::json rec;
        rec["source"] = vocab.decode(ex.source.ids);
        rec["target"] = vocab.decode(ex.target.ids);
        out << rec.dump() << '\n';
    }
}

std::vector<Example> read_split(const std::string& path, const Vocab& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("dataset: cannot read " + path);
    std::vector<Example> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IoError("dataset: " + path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!rec.contains("source") || !rec.contains("target")) {
            throw IoError("dataset: " + path + ":" + std::to_string(lineno) + ": missing source/target field");
        }
        Example ex;
        ex.source.ids = vocab.encode(rec["source"].get<std::string>());
        ex.source.role = Role::source;
        ex.target.ids = vocab.encode(rec["target"].get<std::string>());
        ex.target.role = Role::target;
        ex.target.terminated = true;
        validate_content_ids(ex.source.ids, vocab.size(), "dataset source");
        validate_content_ids(ex.target.ids, vocab.size(), "dataset target");
        out.push_back(std::move(ex));
    }
    if (out.empty()) throw IoError("dataset: " + path + " holds no examples");
    return out;
}

}  // namespace moca
