#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace moca {

constexpr int kPadId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;
constexpr int kUnkId = 3;
constexpr int kNumReserved = 4;

class Vocab {
public:
    // Content tokens get ids 4.. in the given order.
    explicit Vocab(const std::vector<std::string>& content_tokens);

    // "t0".."t{n-1}" content tokens; total size = n + 4 reserved.
    static Vocab synthetic(int total_size);

    int size() const { return static_cast<int>(tokens_.size()); }
    int content_size() const { return size() - kNumReserved; }
    int first_content_id() const { return kNumReserved; }

    const std::string& token(int id) const;
    int id(const std::string& token) const;          // kUnkId when unknown
    bool is_reserved(int id) const { return id >= 0 && id < kNumReserved; }

    std::vector<int> encode(const std::string& space_joined) const;
    std::string decode(const std::vector<int>& ids) const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> lookup_;
};

enum class Role { source, target };

// Content token ids only; bos/eos are implied for targets. `terminated` is
// false for decoder outputs cut off at max length before emitting eos.
struct TokenSeq {
    std::vector<int> ids;
    Role role = Role::target;
    bool terminated = true;

    size_t length() const { return ids.size(); }
    // Predicted positions for a target-form sequence: content plus eos.
    size_t scored_positions() const { return ids.size() + (terminated ? 1 : 0); }

    bool operator==(const TokenSeq& other) const {
        return ids == other.ids && role == other.role && terminated == other.terminated;
    }
};

struct Example {
    TokenSeq source;
    TokenSeq target;
};

// Throws ContractError when a sequence carries reserved ids or is empty.
void validate_content_ids(const std::vector<int>& ids, int vocab_size, const char* where);

}  // namespace moca
