#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace moca {

enum class DType { f32, f64 };

// Dense row-major tensor. Values are held as doubles; in f32 mode every
// primitive rounds its outputs through float so that runs are reproducible
// bit-for-bit against the 32-bit checkpoint format.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<size_t> shape, DType dtype);
    Tensor(std::vector<size_t> shape, std::vector<double> data, DType dtype);

    static Tensor zeros(std::vector<size_t> shape, DType dtype);
    static Tensor full(std::vector<size_t> shape, double value, DType dtype);
    static Tensor scalar(double value, DType dtype);
    static Tensor row(std::vector<double> values, DType dtype);  // shape [n]

    const std::vector<size_t>& shape() const { return shape_; }
    DType dtype() const { return dtype_; }
    size_t rank() const { return shape_.size(); }
    size_t numel() const { return data_.size(); }
    size_t dim(size_t i) const { return shape_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    // 2-D accessors (row-major).
    double& at(size_t r, size_t c) { return data_[r * shape_[1] + c]; }
    double at(size_t r, size_t c) const { return data_[r * shape_[1] + c]; }
    size_t rows() const { return shape_.empty() ? 1 : shape_[0]; }
    size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

    bool is_scalar() const { return numel() == 1; }
    double scalar_value() const;

    // Rounds every element through float precision when dtype is f32.
    void quantize();

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    static std::string shape_str(const std::vector<size_t>& shape);
    std::string shape_str() const { return shape_str(shape_); }

private:
    std::vector<size_t> shape_;
    std::vector<double> data_;
    DType dtype_ = DType::f32;
};

}  // namespace moca
