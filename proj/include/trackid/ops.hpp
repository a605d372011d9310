#pragma once
#include <memory>
#include <vector>

#include "trackid/autodiff.hpp"
#include "trackid/prng.hpp"

namespace trackid {

enum class Mode { Train, Infer };

// Exponential-average running statistics for one batchnorm layer.
struct BnState {
    Tensor running_mean;  // [C]
    Tensor running_var;   // [C]
    explicit BnState(int channels) : running_mean({channels}), running_var(Tensor::full({channels}, 1.0f)) {}
};

namespace ops {

NodeRef add(const NodeRef& a, const NodeRef& b);   // eltwise sum, shapes equal
NodeRef mul(const NodeRef& a, const NodeRef& b);   // eltwise product
NodeRef relu(const NodeRef& x);
NodeRef sigmoid(const NodeRef& x);
NodeRef tanh_act(const NodeRef& x);

NodeRef matmul(const NodeRef& a, const NodeRef& b);              // [N,D]x[D,K]
NodeRef linear(const NodeRef& x, const NodeRef& w, const NodeRef& b);  // matmul + row-broadcast bias

NodeRef conv2d(const NodeRef& x, const NodeRef& w, const NodeRef& b, int stride, int pad);
NodeRef conv1d(const NodeRef& x, const NodeRef& w, const NodeRef& b, int stride, int pad);
NodeRef maxpool2d(const NodeRef& x, int k, int stride);
NodeRef maxpool1d(const NodeRef& x, int k, int stride);
NodeRef global_avgpool(const NodeRef& x);  // [N,C,H,W] -> [N,C]

// Train mode normalizes by batch statistics (N*H*W >= 2 required) and updates
// the running stats in place; infer mode normalizes by the running stats.
NodeRef batchnorm(const NodeRef& x, const NodeRef& gamma, const NodeRef& beta,
                  const std::shared_ptr<BnState>& state, Mode mode, float momentum = 0.9f, float eps = 1e-5f);

// Inverted dropout: train scales survivors by 1/(1-rate); infer is identity.
NodeRef dropout(const NodeRef& x, float rate, Mode mode, Prng& prng);

NodeRef softmax(const NodeRef& logits);  // [N,M], max-subtracted rows
NodeRef cross_entropy(const NodeRef& probs, const std::vector<int>& labels);  // mean -log(p+eps)

NodeRef sum(const NodeRef& x);  // scalar
NodeRef reshape(const NodeRef& x, std::vector<int> shape);
NodeRef slice_rows(const NodeRef& x, int start, int count);        // rank-2
NodeRef concat_rows(const std::vector<NodeRef>& parts);            // rank-2

constexpr float kLogEps = 1e-12f;

}  // namespace ops
}  // namespace trackid
