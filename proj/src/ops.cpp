#include "trackid/ops.hpp"

#include <algorithm>
#include <cmath>

#include "trackid/kernels.hpp"

namespace trackid::ops {

NodeRef add(const NodeRef& a, const NodeRef& b) {
    require_same_shape(a->value, b->value, "eltwise_add");
    Tensor out(a->value.shape());
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] + b->value[i];
    return make_node(std::move(out), "add", {a, b}, [](Node& self) {
        const int64_t n = self.value.numel();
        for (auto& in : self.inputs) {
            if (!in->requires_grad) continue;
            for (int64_t i = 0; i < n; ++i) in->grad[i] += self.grad[i];
        }
    });
}

NodeRef mul(const NodeRef& a, const NodeRef& b) {
    require_same_shape(a->value, b->value, "eltwise_mul");
    Tensor out(a->value.shape());
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] * b->value[i];
    return make_node(std::move(out), "mul", {a, b}, [](Node& self) {
        const int64_t n = self.value.numel();
        Node& a = *self.inputs[0];
        Node& b = *self.inputs[1];
        if (a.requires_grad)
            for (int64_t i = 0; i < n; ++i) a.grad[i] += self.grad[i] * b.value[i];
        if (b.requires_grad)
            for (int64_t i = 0; i < n; ++i) b.grad[i] += self.grad[i] * a.value[i];
    });
}

NodeRef relu(const NodeRef& x) {
    Tensor out(x->value.shape());
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = x->value[i] > 0.0f ? x->value[i] : 0.0f;
    return make_node(std::move(out), "relu", {x}, [](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const int64_t n = self.value.numel();
        for (int64_t i = 0; i < n; ++i)
            if (in.value[i] > 0.0f) in.grad[i] += self.grad[i];
    });
}

NodeRef sigmoid(const NodeRef& x) {
    Tensor out(x->value.shape());
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x->value[i]))));
    return make_node(std::move(out), "sigmoid", {x}, [](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const int64_t n = self.value.numel();
        for (int64_t i = 0; i < n; ++i) {
            const float y = self.value[i];
            in.grad[i] += self.grad[i] * y * (1.0f - y);
        }
    });
}

NodeRef tanh_act(const NodeRef& x) {
    Tensor out(x->value.shape());
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = static_cast<float>(std::tanh(static_cast<double>(x->value[i])));
    return make_node(std::move(out), "tanh", {x}, [](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const int64_t n = self.value.numel();
        for (int64_t i = 0; i < n; ++i) {
            const float y = self.value[i];
            in.grad[i] += self.grad[i] * (1.0f - y * y);
        }
    });
}

NodeRef matmul(const NodeRef& a, const NodeRef& b) {
    Tensor out = kernels::matmul(a->value, b->value);
    return make_node(std::move(out), "matmul", {a, b}, [](Node& self) {
        Node& a = *self.inputs[0];
        Node& b = *self.inputs[1];
        if (a.requires_grad) {
            Tensor da = kernels::matmul(self.grad, b.value, false, true);  // dY * B^T
            const int64_t n = da.numel();
            for (int64_t i = 0; i < n; ++i) a.grad[i] += da[i];
        }
        if (b.requires_grad) {
            Tensor db = kernels::matmul(a.value, self.grad, true, false);  // A^T * dY
            const int64_t n = db.numel();
            for (int64_t i = 0; i < n; ++i) b.grad[i] += db[i];
        }
    });
}

NodeRef linear(const NodeRef& x, const NodeRef& w, const NodeRef& b) {
    if (x->value.rank() != 2 || w->value.rank() != 2)
        throw ShapeError("linear: input and weight must be rank 2");
    if (b->value.rank() != 1 || b->value.dim(0) != w->value.dim(1))
        throw ShapeError("linear: bias axis K mismatch, expected [" + std::to_string(w->value.dim(1)) + "], got " +
                         b->value.shape_str());
    Tensor out = kernels::matmul(x->value, w->value);
    const int n = out.dim(0), k = out.dim(1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) out[idx2(i, j, k)] += b->value[j];
    return make_node(std::move(out), "linear", {x, w, b}, [](Node& self) {
        Node& x = *self.inputs[0];
        Node& w = *self.inputs[1];
        Node& b = *self.inputs[2];
        const int n = self.value.dim(0), k = self.value.dim(1);
        if (x.requires_grad) {
            Tensor dx = kernels::matmul(self.grad, w.value, false, true);
            const int64_t m = dx.numel();
            for (int64_t i = 0; i < m; ++i) x.grad[i] += dx[i];
        }
        if (w.requires_grad) {
            Tensor dw = kernels::matmul(x.value, self.grad, true, false);
            const int64_t m = dw.numel();
            for (int64_t i = 0; i < m; ++i) w.grad[i] += dw[i];
        }
        if (b.requires_grad) {
            for (int j = 0; j < k; ++j) {
                double acc = 0.0;
                for (int i = 0; i < n; ++i) acc += self.grad[idx2(i, j, k)];
                b.grad[j] += static_cast<float>(acc);
            }
        }
    });
}

NodeRef conv2d(const NodeRef& x, const NodeRef& w, const NodeRef& b, int stride, int pad) {
    Tensor out = kernels::conv2d_forward(x->value, w->value, b->value, stride, pad);
    kernels::Conv2dDims d = kernels::conv2d_dims(x->value, w->value, stride, pad);
    return make_node(std::move(out), "conv2d", {x, w, b}, [d](Node& self) {
        Node& x = *self.inputs[0];
        Node& w = *self.inputs[1];
        Node& b = *self.inputs[2];
        if (x.requires_grad) kernels::conv2d_backward_input(self.grad, w.value, d, x.grad);
        if (w.requires_grad) kernels::conv2d_backward_weight(self.grad, x.value, d, w.grad);
        if (b.requires_grad && b.value.numel()) kernels::conv2d_backward_bias(self.grad, b.grad);
    });
}

NodeRef conv1d(const NodeRef& x, const NodeRef& w, const NodeRef& b, int stride, int pad) {
    Tensor out = kernels::conv1d_forward(x->value, w->value, b->value, stride, pad);
    return make_node(std::move(out), "conv1d", {x, w, b}, [stride, pad](Node& self) {
        Node& x = *self.inputs[0];
        Node& w = *self.inputs[1];
        Node& b = *self.inputs[2];
        if (!x.requires_grad && !w.requires_grad && !b.requires_grad) return;
        Tensor dx(x.value.shape()), dw(w.value.shape()), db(b.value.shape());
        kernels::conv1d_backward(self.grad, x.value, w.value, stride, pad, dx, dw, db);
        if (x.requires_grad)
            for (int64_t i = 0; i < dx.numel(); ++i) x.grad[i] += dx[i];
        if (w.requires_grad)
            for (int64_t i = 0; i < dw.numel(); ++i) w.grad[i] += dw[i];
        if (b.requires_grad)
            for (int64_t i = 0; i < db.numel(); ++i) b.grad[i] += db[i];
    });
}

NodeRef maxpool2d(const NodeRef& x, int k, int stride) {
    auto argmax = std::make_shared<std::vector<int64_t>>();
    Tensor out = kernels::maxpool2d_forward(x->value, k, stride, *argmax);
    return make_node(std::move(out), "maxpool2d", {x}, [argmax](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        kernels::maxpool2d_backward(self.grad, *argmax, in.grad);
    });
}

NodeRef maxpool1d(const NodeRef& x, int k, int stride) {
    auto argmax = std::make_shared<std::vector<int64_t>>();
    Tensor out = kernels::maxpool1d_forward(x->value, k, stride, *argmax);
    return make_node(std::move(out), "maxpool1d", {x}, [argmax](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const int64_t n = self.value.numel();
        for (int64_t i = 0; i < n; ++i) in.grad[(*argmax)[static_cast<size_t>(i)]] += self.grad[i];
    });
}

NodeRef global_avgpool(const NodeRef& x) {
    Tensor out = kernels::global_avgpool_forward(x->value);
    const int h = x->value.dim(2), w = x->value.dim(3);
    return make_node(std::move(out), "global_avgpool", {x}, [h, w](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        kernels::global_avgpool_backward(self.grad, h, w, in.grad);
    });
}

NodeRef batchnorm(const NodeRef& x, const NodeRef& gamma, const NodeRef& beta,
                  const std::shared_ptr<BnState>& state, Mode mode, float momentum, float eps) {
    const Tensor& xv = x->value;
    if (xv.rank() != 4) throw ShapeError("batchnorm: input must be [N,C,H,W], got " + xv.shape_str());
    const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    if (gamma->value.numel() != c || beta->value.numel() != c)
        throw ShapeError("batchnorm: gamma/beta must be [C]=" + std::to_string(c));
    const int64_t m = static_cast<int64_t>(n) * h * w;

    auto mean = std::make_shared<std::vector<double>>();
    auto invstd = std::make_shared<std::vector<double>>();
    if (mode == Mode::Train) {
        if (m < 2) throw NumericError("batchnorm: train mode needs at least 2 elements per channel, got 1");
        std::vector<double> var;
        kernels::channel_mean_var(xv, *mean, var);
        invstd->resize(static_cast<size_t>(c));
        for (int ch = 0; ch < c; ++ch) {
            (*invstd)[ch] = 1.0 / std::sqrt(var[ch] + eps);
            state->running_mean[ch] = momentum * state->running_mean[ch] + (1.0f - momentum) * static_cast<float>((*mean)[ch]);
            state->running_var[ch] = momentum * state->running_var[ch] + (1.0f - momentum) * static_cast<float>(var[ch]);
        }
    } else {
        mean->resize(static_cast<size_t>(c));
        invstd->resize(static_cast<size_t>(c));
        for (int ch = 0; ch < c; ++ch) {
            (*mean)[ch] = state->running_mean[ch];
            (*invstd)[ch] = 1.0 / std::sqrt(static_cast<double>(state->running_var[ch]) + eps);
        }
    }

    auto xhat = std::make_shared<Tensor>(xv.shape());
    Tensor out(xv.shape());
    const float* px = xv.data();
    float* pxh = xhat->data();
    float* py = out.data();
    const int64_t plane = static_cast<int64_t>(h) * w;
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < n; ++b) {
        for (int ch = 0; ch < c; ++ch) {
            const double mu = (*mean)[ch];
            const double is = (*invstd)[ch];
            const float g = gamma->value[ch];
            const float bt = beta->value[ch];
            const int64_t base = (static_cast<int64_t>(b) * c + ch) * plane;
            for (int64_t i = 0; i < plane; ++i) {
                const float xh = static_cast<float>((px[base + i] - mu) * is);
                pxh[base + i] = xh;
                py[base + i] = g * xh + bt;
            }
        }
    }

    const bool train = mode == Mode::Train;
    return make_node(std::move(out), "batchnorm", {x, gamma, beta},
                     [mean, invstd, xhat, n, c, plane, train](Node& self) {
        Node& x = *self.inputs[0];
        Node& gamma = *self.inputs[1];
        Node& beta = *self.inputs[2];
        const int64_t m = static_cast<int64_t>(n) * plane;
        const float* pxh = xhat->data();
        const float* pg = self.grad.data();

        // Per-channel reductions; each channel handled serially by one thread.
        std::vector<double> sum_dy(static_cast<size_t>(c), 0.0);
        std::vector<double> sum_dy_xhat(static_cast<size_t>(c), 0.0);
#pragma omp parallel for schedule(static)
        for (int ch = 0; ch < c; ++ch) {
            double s = 0.0, sx = 0.0;
            for (int b = 0; b < n; ++b) {
                const int64_t base = (static_cast<int64_t>(b) * c + ch) * plane;
                for (int64_t i = 0; i < plane; ++i) {
                    s += pg[base + i];
                    sx += static_cast<double>(pg[base + i]) * pxh[base + i];
                }
            }
            sum_dy[ch] = s;
            sum_dy_xhat[ch] = sx;
        }
        if (gamma.requires_grad)
            for (int ch = 0; ch < c; ++ch) gamma.grad[ch] += static_cast<float>(sum_dy_xhat[ch]);
        if (beta.requires_grad)
            for (int ch = 0; ch < c; ++ch) beta.grad[ch] += static_cast<float>(sum_dy[ch]);
        if (!x.requires_grad) return;

        float* pgx = x.grad.data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int b = 0; b < n; ++b) {
            for (int ch = 0; ch < c; ++ch) {
                const double g = gamma.value[ch];
                const double is = (*invstd)[ch];
                const int64_t base = (static_cast<int64_t>(b) * c + ch) * plane;
                if (train) {
                    const double mean_dy = sum_dy[ch] / static_cast<double>(m);
                    const double mean_dy_xhat = sum_dy_xhat[ch] / static_cast<double>(m);
                    for (int64_t i = 0; i < plane; ++i)
                        pgx[base + i] += static_cast<float>(
                            g * is * (pg[base + i] - mean_dy - pxh[base + i] * mean_dy_xhat));
                } else {
                    for (int64_t i = 0; i < plane; ++i)
                        pgx[base + i] += static_cast<float>(g * is * pg[base + i]);
                }
            }
        }
    });
}

NodeRef dropout(const NodeRef& x, float rate, Mode mode, Prng& prng) {
    if (rate < 0.0f || rate >= 1.0f) throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(rate));
    if (mode == Mode::Infer || rate == 0.0f) return x;
    const float scale = 1.0f / (1.0f - rate);
    const int64_t n = x->value.numel();
    auto mask = std::make_shared<std::vector<float>>(static_cast<size_t>(n));
    Tensor out(x->value.shape());
    for (int64_t i = 0; i < n; ++i) {
        const float m = prng.next_double() < rate ? 0.0f : scale;
        (*mask)[static_cast<size_t>(i)] = m;
        out[i] = x->value[i] * m;
    }
    return make_node(std::move(out), "dropout", {x}, [mask](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const int64_t n = self.value.numel();
        for (int64_t i = 0; i < n; ++i) in.grad[i] += self.grad[i] * (*mask)[static_cast<size_t>(i)];
    });
}

NodeRef softmax(const NodeRef& logits) {
    const Tensor& lv = logits->value;
    if (lv.rank() != 2) throw ShapeError("softmax: input must be [N,M], got " + lv.shape_str());
    if (lv.dim(1) < 2) throw ShapeError("softmax: needs at least 2 classes, got " + std::to_string(lv.dim(1)));
    Tensor out = kernels::softmax_rows(lv);
    return make_node(std::move(out), "softmax", {logits}, [](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const int n = self.value.dim(0), m = self.value.dim(1);
        for (int i = 0; i < n; ++i) {
            const float* p = self.value.data() + static_cast<int64_t>(i) * m;
            const float* dy = self.grad.data() + static_cast<int64_t>(i) * m;
            double dot = 0.0;
            for (int j = 0; j < m; ++j) dot += static_cast<double>(dy[j]) * p[j];
            float* dx = in.grad.data() + static_cast<int64_t>(i) * m;
            for (int j = 0; j < m; ++j) dx[j] += static_cast<float>(p[j] * (dy[j] - dot));
        }
    });
}

NodeRef cross_entropy(const NodeRef& probs, const std::vector<int>& labels) {
    const Tensor& pv = probs->value;
    if (pv.rank() != 2) throw ShapeError("cross_entropy: probs must be [N,M], got " + pv.shape_str());
    const int n = pv.dim(0), m = pv.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw ShapeError("cross_entropy: got " + std::to_string(labels.size()) + " labels for batch " + std::to_string(n));
    for (int i = 0; i < n; ++i)
        if (labels[i] < 0 || labels[i] >= m)
            throw NumericError("cross_entropy: label " + std::to_string(labels[i]) + " out of range [0," +
                               std::to_string(m) + ") at row " + std::to_string(i));
    double loss = 0.0;
    for (int i = 0; i < n; ++i)
        loss -= std::log(static_cast<double>(pv[idx2(i, labels[i], m)]) + kLogEps);
    Tensor out({1});
    out[0] = static_cast<float>(loss / n);
    auto lab = std::make_shared<std::vector<int>>(labels);
    return make_node(std::move(out), "cross_entropy", {probs}, [lab](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const int n = in.value.dim(0), m = in.value.dim(1);
        const float g = self.grad[0];
        for (int i = 0; i < n; ++i) {
            const int y = (*lab)[static_cast<size_t>(i)];
            in.grad[idx2(i, y, m)] += -g / (n * (in.value[idx2(i, y, m)] + kLogEps));
        }
    });
}

NodeRef sum(const NodeRef& x) {
    double acc = 0.0;
    const int64_t n = x->value.numel();
    for (int64_t i = 0; i < n; ++i) acc += x->value[i];
    Tensor out({1});
    out[0] = static_cast<float>(acc);
    return make_node(std::move(out), "sum", {x}, [](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const float g = self.grad[0];
        const int64_t n = in.value.numel();
        for (int64_t i = 0; i < n; ++i) in.grad[i] += g;
    });
}

NodeRef reshape(const NodeRef& x, std::vector<int> shape) {
    Tensor out = x->value.reshaped(std::move(shape));
    return make_node(std::move(out), "reshape", {x}, [](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const int64_t n = self.value.numel();
        for (int64_t i = 0; i < n; ++i) in.grad[i] += self.grad[i];
    });
}

NodeRef slice_rows(const NodeRef& x, int start, int count) {
    const Tensor& xv = x->value;
    if (xv.rank() != 2) throw ShapeError("slice_rows: input must be rank 2");
    if (start < 0 || count < 1 || start + count > xv.dim(0))
        throw ShapeError("slice_rows: range [" + std::to_string(start) + "," + std::to_string(start + count) +
                         ") out of " + std::to_string(xv.dim(0)) + " rows");
    const int cols = xv.dim(1);
    Tensor out({count, cols});
    std::copy(xv.data() + static_cast<int64_t>(start) * cols, xv.data() + static_cast<int64_t>(start + count) * cols,
              out.data());
    return make_node(std::move(out), "slice_rows", {x}, [start, cols](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const int64_t n = self.value.numel();
        float* dst = in.grad.data() + static_cast<int64_t>(start) * cols;
        for (int64_t i = 0; i < n; ++i) dst[i] += self.grad[i];
    });
}

NodeRef concat_rows(const std::vector<NodeRef>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const int cols = parts[0]->value.dim(1);
    int rows = 0;
    for (const auto& p : parts) {
        if (p->value.rank() != 2 || p->value.dim(1) != cols)
            throw ShapeError("concat_rows: all parts must be rank 2 with equal column axis");
        rows += p->value.dim(0);
    }
    Tensor out({rows, cols});
    float* dst = out.data();
    for (const auto& p : parts) {
        std::copy(p->value.data(), p->value.data() + p->value.numel(), dst);
        dst += p->value.numel();
    }
    return make_node(std::move(out), "concat_rows", parts, [](Node& self) {
        const float* src = self.grad.data();
        for (auto& in : self.inputs) {
            const int64_t n = in->value.numel();
            if (in->requires_grad)
                for (int64_t i = 0; i < n; ++i) in->grad[i] += src[i];
            src += n;
        }
    });
}

}  // namespace trackid::ops
