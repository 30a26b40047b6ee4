#include "moca/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "moca/error.hpp"

namespace moca {

static size_t shape_numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<size_t> shape, DType dtype)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0), dtype_(dtype) {}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> data, DType dtype)
    : shape_(std::move(shape)), data_(std::move(data)), dtype_(dtype) {
    if (shape_numel(shape_) != data_.size()) {
        throw ContractError("tensor: shape " + shape_str(shape_) + " does not match data length " +
                            std::to_string(data_.size()));
    }
    quantize();
}

Tensor Tensor::zeros(std::vector<size_t> shape, DType dtype) { return Tensor(std::move(shape), dtype); }

Tensor Tensor::full(std::vector<size_t> shape, double value, DType dtype) {
    Tensor t(std::move(shape), dtype);
    for (auto& v : t.data_) v = value;
    t.quantize();
    return t;
}

Tensor Tensor::scalar(double value, DType dtype) { return Tensor({1}, {value}, dtype); }

Tensor Tensor::row(std::vector<double> values, DType dtype) {
    const size_t n = values.size();
    return Tensor({n}, std::move(values), dtype);
}

double Tensor::scalar_value() const {
    if (!is_scalar()) throw ContractError("tensor: scalar_value on shape " + shape_str());
    return data_[0];
}

void Tensor::quantize() {
    if (dtype_ != DType::f32) return;
    for (auto& v : data_) v = static_cast<double>(static_cast<float>(v));
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str(const std::vector<size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

}  // namespace moca
