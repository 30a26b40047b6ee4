#include "moca/params.hpp"

#include "moca/error.hpp"

namespace moca {

void ParamSet::add(const std::string& name, Tensor value) {
    if (has(name)) throw ContractError("params: duplicate name " + name);
    index_.emplace(name, items_.size());
    items_.push_back({name, std::move(value)});
}

Tensor& ParamSet::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("params: unknown name " + name);
    return items_[it->second].value;
}

const Tensor& ParamSet::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("params: unknown name " + name);
    return items_[it->second].value;
}

size_t ParamSet::total_elements() const {
    size_t n = 0;
    for (const auto& it : items_) n += it.value.numel();
    return n;
}

bool ParamSet::same_schema(const ParamSet& other) const {
    if (items_.size() != other.items_.size()) return false;
    for (size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].name != other.items_[i].name) return false;
        if (!items_[i].value.same_shape(other.items_[i].value)) return false;
    }
    return true;
}

bool ParamSet::same_values(const ParamSet& other) const {
    if (!same_schema(other)) return false;
    for (size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].value.values() != other.items_[i].value.values()) return false;
    }
    return true;
}

}  // namespace moca
