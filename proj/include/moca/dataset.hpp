#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moca/vocab.hpp"

namespace moca {

struct TaskSpec {
    enum class Kind { reverse, sort, file };
    Kind kind = Kind::reverse;
    int vocab_size = 50;
    int min_len = 5;
    int max_len = 15;
    size_t train = 2000;
    size_t valid = 200;
    size_t test = 200;
    uint64_t seed = 12345;
    std::string dir = "data";
    std::string train_file, valid_file, test_file;  // kind == file only
};

TaskSpec::Kind task_kind_from_string(const std::string& s);

struct Dataset {
    Vocab vocab{std::vector<std::string>{}};
    std::vector<Example> train, valid, test;
};

// Generates the three splits deterministically (disjoint sources across the
// whole corpus) and persists them as JSON-lines files under spec.dir.
Dataset make_dataset(const TaskSpec& spec);

// Reads previously generated (or user-supplied, kind == file) split files.
Dataset load_dataset(const TaskSpec& spec);

void write_split(const std::string& path, const Vocab& vocab, const std::vector<Example>& examples);
std::vector<Example> read_split(const std::string& path, const Vocab& vocab);

std::string split_path(const TaskSpec& spec, const char* split);

}  // namespace moca
