#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "moca/tensor.hpp"

namespace moca {

// Sorted map keeps gradient iteration order deterministic.
using GradMap = std::map<std::string, Tensor>;

// Named tensors in a fixed insertion order (which also fixes RNG consumption
// at init time and the checkpoint layout).
class ParamSet {
public:
    struct Item {
        std::string name;
        Tensor value;
    };

    void add(const std::string& name, Tensor value);
    bool has(const std::string& name) const { return index_.count(name) != 0; }
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;

    size_t size() const { return items_.size(); }
    size_t total_elements() const;
    const std::vector<Item>& items() const { return items_; }
    std::vector<Item>& items() { return items_; }

    bool same_schema(const ParamSet& other) const;  // same names and shapes, same order
    bool same_values(const ParamSet& other) const;  // bitwise

private:
    std::vector<Item> items_;
    std::unordered_map<std::string, size_t> index_;
};

}  // namespace moca
