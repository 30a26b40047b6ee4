#include "moca/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "moca/config.hpp"
#include "moca/error.hpp"

namespace moca {

namespace {

constexpr char kMagic[5] = {'M', 'O', 'C', 'A', '1'};
constexpr uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw IoError("checkpoint: cannot write " + path);
    }
    void bytes(const void* data, size_t n) { out_.write(static_cast<const char*>(data), static_cast<long>(n)); }
    void u32(uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
        bytes(b, 4);
    }
    void u64(uint64_t v) {
        u32(static_cast<uint32_t>(v));
        u32(static_cast<uint32_t>(v >> 32));
    }
    void f32(float v) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void finish(const std::string& path) {
        out_.flush();
        if (!out_) throw IoError("checkpoint: write failed for " + path);
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("checkpoint: cannot read " + path);
    }
    size_t offset() const { return offset_; }
    void bytes(void* data, size_t n) {
        in_.read(static_cast<char*>(data), static_cast<long>(n));
        if (static_cast<size_t>(in_.gcount()) != n) {
            throw IoError("checkpoint: " + path_ + " truncated at offset " + std::to_string(offset_));
        }
        offset_ += n;
    }
    uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 | static_cast<uint32_t>(b[2]) << 16 |
               static_cast<uint32_t>(b[3]) << 24;
    }
    uint64_t u64() {
        const uint64_t lo = u32();
        const uint64_t hi = u32();
        return lo | hi << 32;
    }
    float f32() {
        const uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str() {
        const uint32_t n = u32();
        if (n > (1u << 24)) throw IoError("checkpoint: " + path_ + " has oversized string at offset " +
                                          std::to_string(offset_));
        std::string s(n, '\0');
        if (n) bytes(s.data(), n);
        return s;
    }

private:
    std::string path_;
    std::ifstream in_;
    size_t offset_ = 0;
};

void write_tensors(Writer& w, const ParamSet& set) {
    w.u32(static_cast<uint32_t>(set.size()));
    for (const auto& item : set.items()) {
        w.str(item.name);
        w.u32(static_cast<uint32_t>(item.value.rank()));
        for (size_t d : item.value.shape()) w.u32(static_cast<uint32_t>(d));
        for (size_t i = 0; i < item.value.numel(); ++i) w.f32(static_cast<float>(item.value[i]));
    }
}

ParamSet read_tensors(Reader& r, DType dtype) {
    ParamSet set;
    const uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
        const std::string name = r.str();
        const uint32_t rank = r.u32();
        if (rank > 4) throw IoError("checkpoint: implausible tensor rank for " + name);
        std::vector<size_t> shape(rank);
        size_t numel = 1;
        for (auto& d : shape) {
            d = r.u32();
            numel *= d;
        }
        Tensor t(shape, dtype);
        for (size_t e = 0; e < numel; ++e) t[e] = static_cast<double>(r.f32());
        set.add(name, std::move(t));
    }
    return set;
}

void require_f32(const ParamSet& set, const char* what) {
    for (const auto& item : set.items()) {
        if (item.value.dtype() != DType::f32) {
            throw ConfigError(std::string("checkpoint: ") + what + " must be f32 for lossless serialization");
        }
    }
}

TransformerHyper hyper_from_snapshot(const std::string& snapshot) {
    const Config cfg = Config::from_text(snapshot);
    TransformerHyper hy;
    hy.layers = static_cast<int>(cfg.i64("model.layers"));
    hy.d_model = static_cast<int>(cfg.i64("model.d_model"));
    hy.heads = static_cast<int>(cfg.i64("model.heads"));
    hy.d_ff = static_cast<int>(cfg.i64("model.d_ff"));
    hy.max_positions = static_cast<int>(cfg.i64("model.max_positions"));
    hy.vocab_size = static_cast<int>(cfg.i64("task.vocab_size"));
    hy.dtype = cfg.str("precision") == "f64" ? DType::f64 : DType::f32;
    return hy;
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::string& path) {
    require_f32(state.online.tensors, "online parameters");
    require_f32(state.generator.tensors, "generator parameters");
    Writer w(path);
    w.bytes(kMagic, 5);
    w.u32(kVersion);
    w.u32(static_cast<uint32_t>(state.phase));
    w.u64(static_cast<uint64_t>(state.step));
    w.u64(static_cast<uint64_t>(state.generation_calls));
    const TransformerHyper& hy = state.online.hyper;
    w.u32(static_cast<uint32_t>(hy.layers));
    w.u32(static_cast<uint32_t>(hy.d_model));
    w.u32(static_cast<uint32_t>(hy.heads));
    w.u32(static_cast<uint32_t>(hy.d_ff));
    w.u32(static_cast<uint32_t>(hy.vocab_size));
    w.u32(static_cast<uint32_t>(hy.max_positions));
    for (int i = 0; i < Rng::kStateWords; ++i) w.u64(state.rng.state_word(i));
    w.u64(static_cast<uint64_t>(state.adam.step));
    w.str(state.config_snapshot);
    write_tensors(w, state.online.tensors);
    write_tensors(w, state.adam.first_moment);
    write_tensors(w, state.adam.second_moment);
    write_tensors(w, state.generator.tensors);
    w.finish(path);
}

TrainState load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[5];
    r.bytes(magic, 5);
    if (std::memcmp(magic, kMagic, 5) != 0) {
        throw IoError("checkpoint: " + path + " has bad magic (offset 0)");
    }
    const uint32_t version = r.u32();
    if (version != kVersion) {
        throw IoError("checkpoint: " + path + " has unsupported version " + std::to_string(version));
    }
    TrainState state;
    state.phase = static_cast<int>(r.u32());
    state.step = static_cast<int64_t>(r.u64());
    state.generation_calls = static_cast<int64_t>(r.u64());
    TransformerHyper hy;
    hy.layers = static_cast<int>(r.u32());
    hy.d_model = static_cast<int>(r.u32());
    hy.heads = static_cast<int>(r.u32());
    hy.d_ff = static_cast<int>(r.u32());
    hy.vocab_size = static_cast<int>(r.u32());
    hy.max_positions = static_cast<int>(r.u32());
    hy.dtype = DType::f32;
    for (int i = 0; i < Rng::kStateWords; ++i) state.rng.set_state_word(i, r.u64());
    const int64_t adam_step = static_cast<int64_t>(r.u64());
    state.config_snapshot = r.str();

    const TransformerHyper declared = hyper_from_snapshot(state.config_snapshot);
    if (!declared.same_architecture(hy)) {
        throw ConfigError("checkpoint: " + path + " architecture header disagrees with its config snapshot");
    }

    state.online.hyper = hy;
    state.online.tensors = read_tensors(r, hy.dtype);
    AdamState adam;
    adam.step = adam_step;
    adam.first_moment = read_tensors(r, hy.dtype);
    adam.second_moment = read_tensors(r, hy.dtype);
    state.adam = std::move(adam);
    state.generator.hyper = hy;
    state.generator.tensors = read_tensors(r, hy.dtype);

    if (!state.online.tensors.same_schema(state.generator.tensors) ||
        !state.online.tensors.same_schema(state.adam.first_moment) ||
        !state.online.tensors.same_schema(state.adam.second_moment)) {
        throw IoError("checkpoint: " + path + " tensor sections disagree on names/shapes");
    }
    return state;
}

}  // namespace moca
