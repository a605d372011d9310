#include "trackid/layers.hpp"

#include <cmath>

namespace trackid {

ParamRegistry::Entry* ParamRegistry::find(const std::string& name) {
    for (auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

const ParamRegistry::Entry* ParamRegistry::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

Tensor he_normal(std::vector<int> shape, int fan_in, Prng& prng) {
    Tensor t(std::move(shape));
    const float std = std::sqrt(2.0f / static_cast<float>(fan_in));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = prng.normal() * std;
    return t;
}

Tensor uniform_fan_in(std::vector<int> shape, int fan_in, Prng& prng) {
    Tensor t(std::move(shape));
    const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = prng.uniform(-bound, bound);
    return t;
}

Conv2dLayer::Conv2dLayer(int in_c, int out_c, int k, int stride_, int pad_, Prng& prng)
    : stride(stride_), pad(pad_) {
    w = make_leaf(he_normal({out_c, in_c, k, k}, in_c * k * k, prng), true);
    b = make_leaf(Tensor({out_c}), true);
}

void Conv2dLayer::register_params(const std::string& prefix, ParamRegistry& reg) {
    reg.add(prefix + ".w", w);
    reg.add(prefix + ".b", b);
}

BatchNormLayer::BatchNormLayer(int channels) {
    gamma = make_leaf(Tensor::full({channels}, 1.0f), true);
    beta = make_leaf(Tensor({channels}), true);
    state = std::make_shared<BnState>(channels);
}

void BatchNormLayer::register_params(const std::string& prefix, ParamRegistry& reg) {
    reg.add(prefix + ".gamma", gamma);
    reg.add(prefix + ".beta", beta);
    reg.add_buffer(prefix + ".running_mean", &state->running_mean);
    reg.add_buffer(prefix + ".running_var", &state->running_var);
}

LinearLayer::LinearLayer(int in_dim, int out_dim, Prng& prng) {
    w = make_leaf(uniform_fan_in({in_dim, out_dim}, in_dim, prng), true);
    b = make_leaf(Tensor({out_dim}), true);
}

void LinearLayer::register_params(const std::string& prefix, ParamRegistry& reg) {
    reg.add(prefix + ".w", w);
    reg.add(prefix + ".b", b);
}

ResidualStack::ResidualStack(int in_c, int out_c, int stride_, Prng& prng)
    : conv_a(in_c, out_c, 3, stride_, 1, prng),
      bn_a(out_c),
      conv_b(out_c, out_c, 3, 1, 1, prng),
      bn_b(out_c),
      in_channels(in_c),
      out_channels(out_c),
      stride(stride_) {
    if (in_c != out_c || stride_ != 1)
        projection = std::make_unique<Conv2dLayer>(in_c, out_c, 1, stride_, 0, prng);
}

NodeRef ResidualStack::forward(const NodeRef& x, Mode mode) const {
    if (x->value.dim(1) != in_channels)
        throw ShapeError("residual stack: channel axis mismatch, expected " + std::to_string(in_channels) +
                         ", got " + std::to_string(x->value.dim(1)));
    NodeRef f = conv_a.forward(x);
    f = ops::relu(bn_a.forward(f, mode));
    f = conv_b.forward(f);
    NodeRef shortcut = projection ? projection->forward(x) : x;
    NodeRef y = ops::add(f, shortcut);
    return ops::relu(bn_b.forward(y, mode));
}

void ResidualStack::register_params(const std::string& prefix, ParamRegistry& reg) {
    conv_a.register_params(prefix + ".conv_a", reg);
    bn_a.register_params(prefix + ".bn_a", reg);
    conv_b.register_params(prefix + ".conv_b", reg);
    bn_b.register_params(prefix + ".bn_b", reg);
    if (projection) projection->register_params(prefix + ".proj", reg);
}

LstmLayer::LstmLayer(int input_size_, int hidden_size_, Prng& prng)
    : input_size(input_size_), hidden_size(hidden_size_) {
    const int h = hidden_size;
    auto wmat = [&](void) { return make_leaf(uniform_fan_in({input_size, h}, h, prng), true); };
    auto umat = [&](void) { return make_leaf(uniform_fan_in({h, h}, h, prng), true); };
    w_i = wmat(); w_f = wmat(); w_g = wmat(); w_o = wmat();
    u_i = umat(); u_f = umat(); u_g = umat(); u_o = umat();
    b_i = make_leaf(Tensor({h}), true);
    b_f = make_leaf(Tensor::full({h}, 1.0f), true);
    b_g = make_leaf(Tensor({h}), true);
    b_o = make_leaf(Tensor({h}), true);
}

LstmLayer::State LstmLayer::zero_state(int batch) const {
    return {make_leaf(Tensor({batch, hidden_size}), false), make_leaf(Tensor({batch, hidden_size}), false)};
}

LstmLayer::State LstmLayer::step(const NodeRef& x_t, const State& prev) const {
    if (x_t->value.rank() != 2 || x_t->value.dim(1) != input_size)
        throw ShapeError("lstm_step: input must be [B," + std::to_string(input_size) + "], got " +
                         x_t->value.shape_str());
    if (prev.h->value.dim(1) != hidden_size || prev.c->value.dim(1) != hidden_size)
        throw ShapeError("lstm_step: state must be [B," + std::to_string(hidden_size) + "]");
    auto gate = [&](const NodeRef& w, const NodeRef& u, const NodeRef& b) {
        return ops::add(ops::linear(x_t, w, b), ops::matmul(prev.h, u));
    };
    NodeRef i = ops::sigmoid(gate(w_i, u_i, b_i));
    NodeRef f = ops::sigmoid(gate(w_f, u_f, b_f));
    NodeRef g = ops::tanh_act(gate(w_g, u_g, b_g));
    NodeRef o = ops::sigmoid(gate(w_o, u_o, b_o));
    NodeRef c = ops::add(ops::mul(f, prev.c), ops::mul(i, g));
    NodeRef h = ops::mul(o, ops::tanh_act(c));
    return {h, c};
}

NodeRef LstmLayer::forward(const NodeRef& sequence) const {
    if (sequence->value.rank() != 2)
        throw ShapeError("lstm_forward: sequence must be [T,D], got " + sequence->value.shape_str());
    const int t_len = sequence->value.dim(0);
    if (t_len < 1) throw ShapeError("lstm_forward: empty sequence");
    State s = zero_state(1);
    std::vector<NodeRef> hs;
    hs.reserve(static_cast<size_t>(t_len));
    for (int t = 0; t < t_len; ++t) {
        s = step(ops::slice_rows(sequence, t, 1), s);
        hs.push_back(s.h);
    }
    return ops::concat_rows(hs);
}

void LstmLayer::register_params(const std::string& prefix, ParamRegistry& reg) {
    reg.add(prefix + ".w_i", w_i); reg.add(prefix + ".w_f", w_f);
    reg.add(prefix + ".w_g", w_g); reg.add(prefix + ".w_o", w_o);
    reg.add(prefix + ".u_i", u_i); reg.add(prefix + ".u_f", u_f);
    reg.add(prefix + ".u_g", u_g); reg.add(prefix + ".u_o", u_o);
    reg.add(prefix + ".b_i", b_i); reg.add(prefix + ".b_f", b_f);
    reg.add(prefix + ".b_g", b_g); reg.add(prefix + ".b_o", b_o);
}

Conv1dLayer::Conv1dLayer(int in_c, int out_c, int k_, int stride_, int pad_, Prng& prng)
    : k(k_), stride(stride_), pad(pad_) {
    w = make_leaf(he_normal({out_c, in_c, k_}, in_c * k_, prng), true);
    b = make_leaf(Tensor({out_c}), true);
}

void Conv1dLayer::register_params(const std::string& prefix, ParamRegistry& reg) {
    reg.add(prefix + ".w", w);
    reg.add(prefix + ".b", b);
}

}  // namespace trackid
