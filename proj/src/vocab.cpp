#include "moca/vocab.hpp"

#include <sstream>

#include "moca/error.hpp"

namespace moca {

Vocab::Vocab(const std::vector<std::string>& content_tokens) {
    tokens_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
    tokens_.insert(tokens_.end(), content_tokens.begin(), content_tokens.end());
    for (size_t i = 0; i < tokens_.size(); ++i) {
        if (!lookup_.emplace(tokens_[i], static_cast<int>(i)).second) {
            throw ContractError("vocab: duplicate token " + tokens_[i]);
        }
    }
}

Vocab Vocab::synthetic(int total_size) {
    if (total_size < kNumReserved + 1) {
        throw ContractError("vocab: size must exceed the 4 reserved ids");
    }
    std::vector<std::string> content;
    content.reserve(static_cast<size_t>(total_size - kNumReserved));
    for (int i = 0; i < total_size - kNumReserved; ++i) content.push_back("t" + std::to_string(i));
    return Vocab(content);
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || id >= size()) throw ContractError("vocab: id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<size_t>(id)];
}

int Vocab::id(const std::string& token) const {
    auto it = lookup_.find(token);
    return it == lookup_.end() ? kUnkId : it->second;
}

std::vector<int> Vocab::encode(const std::string& space_joined) const {
    std::vector<int> out;
    std::istringstream is(space_joined);
    std::string tok;
    while (is >> tok) out.push_back(id(tok));
    return out;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += token(ids[i]);
    }
    return out;
}

void validate_content_ids(const std::vector<int>& ids, int vocab_size, const char* where) {
    if (ids.empty()) throw ContractError(std::string(where) + ": empty sequence");
    for (int id : ids) {
        if (id < kNumReserved || id >= vocab_size) {
            throw ContractError(std::string(where) + ": id " + std::to_string(id) +
                                " is reserved or outside the vocabulary");
        }
    }
}

}  // namespace moca
