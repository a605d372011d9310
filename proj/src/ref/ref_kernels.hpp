#pragma once
#include "trackid/tensor.hpp"

// Plain serial reference kernels, written as directly as possible from the
// operation definitions. Linked only by the test suites and the benchmark;
// the production kernels are checked against these.
namespace trackid::ref {

// Direct 6-loop cross-correlation with zero padding.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad);

// Direct 2-loop-per-output 1-D cross-correlation over [N,C,L].
Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad);

// Window-scan max pooling.
Tensor maxpool2d(const Tensor& input, int k, int stride);

// Per-map arithmetic mean.
Tensor global_avgpool(const Tensor& input);

// Per-channel batch statistics, two-pass.
void channel_stats(const Tensor& input, std::vector<double>& mean, std::vector<double>& var);

// Triple-loop matrix product.
Tensor matmul(const Tensor& a, const Tensor& b);

}  // namespace trackid::ref
