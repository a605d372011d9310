#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "trackid/errors.hpp"

namespace trackid {

// Dense n-dimensional float32 array, row-major. The universal value type of
// the engine; data.size() == product(shape) always.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<float> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float v);
    static Tensor scalar(float v) { return full({1}, v); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& vec() { return data_; }
    const std::vector<float>& vec() const { return data_; }

    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    void fill(float v);

    // Copies data into a new shape with identical element count.
    Tensor reshaped(std::vector<int> shape) const;

    std::string shape_str() const;

  private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

int64_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": mismatched shapes " + a.shape_str() + " vs " + b.shape_str());
}

// Row-major flat offsets.
inline int64_t idx2(int i, int j, int J) { return static_cast<int64_t>(i) * J + j; }
inline int64_t idx3(int i, int j, int k, int J, int K) {
    return (static_cast<int64_t>(i) * J + j) * K + k;
}
inline int64_t idx4(int n, int c, int h, int w, int C, int H, int W) {
    return ((static_cast<int64_t>(n) * C + c) * H + h) * W + w;
}

}  // namespace trackid
