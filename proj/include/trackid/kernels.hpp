#pragma once
#include "trackid/tensor.hpp"

// OpenMP-parallel compute kernels. Every parallel loop partitions disjoint
// output elements and reduces each element in a fixed serial order, so results
// are bit-identical for any thread count. Dot products and statistics
// accumulate in double and store float.
namespace trackid::kernels {

struct Conv2dDims {
    int n, c, h, w;        // input
    int o, kh, kw;         // weight
    int stride, pad;
    int oh, ow;            // output
};

Conv2dDims conv2d_dims(const Tensor& input, const Tensor& weight, int stride, int pad);

// Cross-correlation with zero padding; bias may be empty.
Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad);
void conv2d_backward_input(const Tensor& grad_out, const Tensor& weight, const Conv2dDims& d, Tensor& grad_input);
void conv2d_backward_weight(const Tensor& grad_out, const Tensor& input, const Conv2dDims& d, Tensor& grad_weight);
void conv2d_backward_bias(const Tensor& grad_out, Tensor& grad_bias);

// 1-D cross-correlation over [N,C,L] signals.
Tensor conv1d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad);
void conv1d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight, int stride, int pad,
                     Tensor& grad_input, Tensor& grad_weight, Tensor& grad_bias);

// Max pooling; argmax (first maximum in row-major scan) recorded for backward.
Tensor maxpool2d_forward(const Tensor& input, int k, int stride, std::vector<int64_t>& argmax);
void maxpool2d_backward(const Tensor& grad_out, const std::vector<int64_t>& argmax, Tensor& grad_input);
Tensor maxpool1d_forward(const Tensor& input, int k, int stride, std::vector<int64_t>& argmax);

Tensor global_avgpool_forward(const Tensor& input);  // [N,C,H,W] -> [N,C]
void global_avgpool_backward(const Tensor& grad_out, int h, int w, Tensor& grad_input);

// out[n,k] = sum_d a[n,d] * b[d,k]; transa/transb select the backward forms.
Tensor matmul(const Tensor& a, const Tensor& b, bool transa = false, bool transb = false);

// Per-channel statistics over N*H*W elements of a [N,C,H,W] tensor.
void channel_mean_var(const Tensor& input, std::vector<double>& mean, std::vector<double>& var);

Tensor softmax_rows(const Tensor& logits);  // [N,M] rows, max-subtracted

}  // namespace trackid::kernels
