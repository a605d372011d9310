#pragma once
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trackid/ops.hpp"

namespace trackid {

// Ordered view over a model's named parameters and state buffers. Checkpoint
// files and the optimizer iterate entries in registration order.
struct ParamRegistry {
    struct Entry {
        std::string name;
        NodeRef param;           // trainable leaf, or
        Tensor* buffer = nullptr;  // non-trainable state (running stats)
        bool trainable() const { return param != nullptr; }
    };
    std::vector<Entry> entries;

    void add(const std::string& name, const NodeRef& p) { entries.push_back({name, p, nullptr}); }
    void add_buffer(const std::string& name, Tensor* t) { entries.push_back({name, nullptr, t}); }
    Entry* find(const std::string& name);
    const Entry* find(const std::string& name) const;
    Tensor& tensor_of(Entry& e) { return e.param ? e.param->value : *e.buffer; }
    const Tensor& tensor_of(const Entry& e) const { return e.param ? e.param->value : *e.buffer; }
};

// Parameter initializers (draw order is part of the determinism contract).
Tensor he_normal(std::vector<int> shape, int fan_in, Prng& prng);
Tensor uniform_fan_in(std::vector<int> shape, int fan_in, Prng& prng);

class Conv2dLayer {
  public:
    Conv2dLayer(int in_c, int out_c, int k, int stride, int pad, Prng& prng);
    NodeRef forward(const NodeRef& x) const { return ops::conv2d(x, w, b, stride, pad); }
    void register_params(const std::string& prefix, ParamRegistry& reg);
    NodeRef w, b;
    int stride, pad;
};

class BatchNormLayer {
  public:
    explicit BatchNormLayer(int channels);
    NodeRef forward(const NodeRef& x, Mode mode) const {
        return ops::batchnorm(x, gamma, beta, state, mode, momentum, eps);
    }
    void register_params(const std::string& prefix, ParamRegistry& reg);
    NodeRef gamma, beta;
    std::shared_ptr<BnState> state;
    float momentum = 0.9f;
    float eps = 1e-5f;
};

class LinearLayer {
  public:
    LinearLayer(int in_dim, int out_dim, Prng& prng);
    NodeRef forward(const NodeRef& x) const { return ops::linear(x, w, b); }
    void register_params(const std::string& prefix, ParamRegistry& reg);
    NodeRef w, b;
};

// Two 3x3 convolutions with batchnorm+ReLU between them, an element-wise sum
// with the (identity or 1x1-projected) input, then batchnorm+ReLU on the sum.
// The projection exists iff channels or stride change.
class ResidualStack {
  public:
    ResidualStack(int in_c, int out_c, int stride, Prng& prng);
    NodeRef forward(const NodeRef& x, Mode mode) const;
    void register_params(const std::string& prefix, ParamRegistry& reg);
    bool has_projection() const { return projection != nullptr; }

    Conv2dLayer conv_a;
    BatchNormLayer bn_a;
    Conv2dLayer conv_b;
    BatchNormLayer bn_b;  // applied to the sum
    std::unique_ptr<Conv2dLayer> projection;
    int in_channels, out_channels, stride;
};

// Four independent gates, no peepholes:
//   i = sig(xW_i + hU_i + b_i)   f = sig(xW_f + hU_f + b_f)
//   g = tanh(xW_g + hU_g + b_g)  o = sig(xW_o + hU_o + b_o)
//   c' = f*c + i*g               h' = o*tanh(c')
// Forget bias starts at 1, the rest at 0; weights uniform in +-1/sqrt(H).
class LstmLayer {
  public:
    LstmLayer(int input_size, int hidden_size, Prng& prng);

    struct State {
        NodeRef h, c;
    };
    State zero_state(int batch) const;
    State step(const NodeRef& x_t, const State& prev) const;  // x_t: [B,D]

    // [T,D] -> [T,H]; fresh zero state, one step per row.
    NodeRef forward(const NodeRef& sequence) const;

    void register_params(const std::string& prefix, ParamRegistry& reg);

    int input_size, hidden_size;
    NodeRef w_i, w_f, w_g, w_o;  // [D,H]
    NodeRef u_i, u_f, u_g, u_o;  // [H,H]
    NodeRef b_i, b_f, b_g, b_o;  // [H]
};

class Conv1dLayer {
  public:
    Conv1dLayer(int in_c, int out_c, int k, int stride, int pad, Prng& prng);
    NodeRef forward(const NodeRef& x) const { return ops::conv1d(x, w, b, stride, pad); }
    void register_params(const std::string& prefix, ParamRegistry& reg);
    int out_len(int l) const { return (l + 2 * pad - k) / stride + 1; }
    NodeRef w, b;
    int k, stride, pad;
};

}  // namespace trackid
