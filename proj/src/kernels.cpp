#include "trackid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trackid::kernels {

Conv2dDims conv2d_dims(const Tensor& input, const Tensor& weight, int stride, int pad) {
    if (input.rank() != 4) throw ShapeError("conv2d: input must be [N,C,H,W], got " + input.shape_str());
    if (weight.rank() != 4) throw ShapeError("conv2d: weight must be [O,C,kH,kW], got " + weight.shape_str());
    if (stride < 1) throw ShapeError("conv2d: stride must be positive");
    if (pad < 0) throw ShapeError("conv2d: pad must be non-negative");
    Conv2dDims d;
    d.n = input.dim(0);
    d.c = input.dim(1);
    d.h = input.dim(2);
    d.w = input.dim(3);
    d.o = weight.dim(0);
    d.kh = weight.dim(2);
    d.kw = weight.dim(3);
    d.stride = stride;
    d.pad = pad;
    if (weight.dim(1) != d.c)
        throw ShapeError("conv2d: channel axis mismatch, input C=" + std::to_string(d.c) + " weight C=" +
                         std::to_string(weight.dim(1)));
    if (d.h + 2 * pad < d.kh)
        throw ShapeError("conv2d: height axis too small, H+2*pad=" + std::to_string(d.h + 2 * pad) + " < kH=" +
                         std::to_string(d.kh));
    if (d.w + 2 * pad < d.kw)
        throw ShapeError("conv2d: width axis too small, W+2*pad=" + std::to_string(d.w + 2 * pad) + " < kW=" +
                         std::to_string(d.kw));
    d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
    d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
    return d;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad) {
    Conv2dDims d = conv2d_dims(input, weight, stride, pad);
    const bool has_bias = bias.numel() > 0;
    if (has_bias && (bias.rank() != 1 || bias.dim(0) != d.o))
        throw ShapeError("conv2d: bias axis O mismatch, expected [" + std::to_string(d.o) + "], got " + bias.shape_str());
    Tensor out({d.n, d.o, d.oh, d.ow});
    const float* x = input.data();
    const float* w = weight.data();
    const float* b = has_bias ? bias.data() : nullptr;
    float* y = out.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < d.n; ++n) {
        for (int o = 0; o < d.o; ++o) {
            for (int oh = 0; oh < d.oh; ++oh) {
                for (int ow = 0; ow < d.ow; ++ow) {
                    double acc = b ? b[o] : 0.0;
                    const int ih0 = oh * d.stride - d.pad;
                    const int iw0 = ow * d.stride - d.pad;
                    for (int c = 0; c < d.c; ++c) {
                        for (int kh = 0; kh < d.kh; ++kh) {
                            const int ih = ih0 + kh;
                            if (ih < 0 || ih >= d.h) continue;
                            const float* xrow = x + idx4(n, c, ih, 0, d.c, d.h, d.w);
                            const float* wrow = w + idx4(o, c, kh, 0, d.c, d.kh, d.kw);
                            for (int kw = 0; kw < d.kw; ++kw) {
                                const int iw = iw0 + kw;
                                if (iw < 0 || iw >= d.w) continue;
                                acc += static_cast<double>(xrow[iw]) * wrow[kw];
                            }
                        }
                    }
                    y[idx4(n, o, oh, ow, d.o, d.oh, d.ow)] = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

void conv2d_backward_input(const Tensor& grad_out, const Tensor& weight, const Conv2dDims& d, Tensor& grad_input) {
    const float* go = grad_out.data();
    const float* w = weight.data();
    float* gx = grad_input.data();

    // Gather form: each input cell sums the output cells it fed, so parallel
    // (n,c) planes never collide.
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < d.n; ++n) {
        for (int c = 0; c < d.c; ++c) {
            for (int ih = 0; ih < d.h; ++ih) {
                for (int iw = 0; iw < d.w; ++iw) {
                    double acc = 0.0;
                    for (int kh = 0; kh < d.kh; ++kh) {
                        const int oh_num = ih + d.pad - kh;
                        if (oh_num < 0 || oh_num % d.stride != 0) continue;
                        const int oh = oh_num / d.stride;
                        if (oh >= d.oh) continue;
                        for (int kw = 0; kw < d.kw; ++kw) {
                            const int ow_num = iw + d.pad - kw;
                            if (ow_num < 0 || ow_num % d.stride != 0) continue;
                            const int ow = ow_num / d.stride;
                            if (ow >= d.ow) continue;
                            for (int o = 0; o < d.o; ++o) {
                                acc += static_cast<double>(go[idx4(n, o, oh, ow, d.o, d.oh, d.ow)]) *
                                       w[idx4(o, c, kh, kw, d.c, d.kh, d.kw)];
                            }
                        }
                    }
                    gx[idx4(n, c, ih, iw, d.c, d.h, d.w)] += static_cast<float>(acc);
                }
            }
        }
    }
}

void conv2d_backward_weight(const Tensor& grad_out, const Tensor& input, const Conv2dDims& d, Tensor& grad_weight) {
    const float* go = grad_out.data();
    const float* x = input.data();
    float* gw = grad_weight.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int o = 0; o < d.o; ++o) {
        for (int c = 0; c < d.c; ++c) {
            for (int kh = 0; kh < d.kh; ++kh) {
                for (int kw = 0; kw < d.kw; ++kw) {
                    double acc = 0.0;
                    for (int n = 0; n < d.n; ++n) {
                        for (int oh = 0; oh < d.oh; ++oh) {
                            const int ih = oh * d.stride - d.pad + kh;
                            if (ih < 0 || ih >= d.h) continue;
                            for (int ow = 0; ow < d.ow; ++ow) {
                                const int iw = ow * d.stride - d.pad + kw;
                                if (iw < 0 || iw >= d.w) continue;
                                acc += static_cast<double>(go[idx4(n, o, oh, ow, d.o, d.oh, d.ow)]) *
                                       x[idx4(n, c, ih, iw, d.c, d.h, d.w)];
                            }
                        }
                    }
                    gw[idx4(o, c, kh, kw, d.c, d.kh, d.kw)] += static_cast<float>(acc);
                }
            }
        }
    }
}

void conv2d_backward_bias(const Tensor& grad_out, Tensor& grad_bias) {
    const int n = grad_out.dim(0), o = grad_out.dim(1);
    const int64_t plane = static_cast<int64_t>(grad_out.dim(2)) * grad_out.dim(3);
    const float* go = grad_out.data();
    float* gb = grad_bias.data();
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < o; ++oc) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b) {
            const float* p = go + (static_cast<int64_t>(b) * o + oc) * plane;
            for (int64_t i = 0; i < plane; ++i) acc += p[i];
        }
        gb[oc] += static_cast<float>(acc);
    }
}

Tensor conv1d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad) {
    if (input.rank() != 3) throw ShapeError("conv1d: input must be [N,C,L], got " + input.shape_str());
    if (weight.rank() != 3) throw ShapeError("conv1d: weight must be [O,C,k], got " + weight.shape_str());
    const int n = input.dim(0), c = input.dim(1), l = input.dim(2);
    const int o = weight.dim(0), k = weight.dim(2);
    if (weight.dim(1) != c)
        throw ShapeError("conv1d: channel axis mismatch, input C=" + std::to_string(c) + " weight C=" +
                         std::to_string(weight.dim(1)));
    if (l + 2 * pad < k) throw ShapeError("conv1d: length axis too small for kernel");
    const int ol = (l + 2 * pad - k) / stride + 1;
    const bool has_bias = bias.numel() > 0;
    Tensor out({n, o, ol});
    const float* x = input.data();
    const float* w = weight.data();
    float* y = out.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < n; ++b) {
        for (int oc = 0; oc < o; ++oc) {
            for (int ow = 0; ow < ol; ++ow) {
                double acc = has_bias ? bias[oc] : 0.0;
                for (int ic = 0; ic < c; ++ic) {
                    for (int kk = 0; kk < k; ++kk) {
                        const int iw = ow * stride - pad + kk;
                        if (iw < 0 || iw >= l) continue;
                        acc += static_cast<double>(x[idx3(b, ic, iw, c, l)]) * w[idx3(oc, ic, kk, c, k)];
                    }
                }
                y[idx3(b, oc, ow, o, ol)] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

void conv1d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight, int stride, int pad,
                     Tensor& grad_input, Tensor& grad_weight, Tensor& grad_bias) {
    const int n = input.dim(0), c = input.dim(1), l = input.dim(2);
    const int o = weight.dim(0), k = weight.dim(2);
    const int ol = grad_out.dim(2);
    const float* go = grad_out.data();
    const float* x = input.data();
    const float* w = weight.data();

    float* gx = grad_input.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < n; ++b) {
        for (int ic = 0; ic < c; ++ic) {
            for (int iw = 0; iw < l; ++iw) {
                double acc = 0.0;
                for (int kk = 0; kk < k; ++kk) {
                    const int ow_num = iw + pad - kk;
                    if (ow_num < 0 || ow_num % stride != 0) continue;
                    const int ow = ow_num / stride;
                    if (ow >= ol) continue;
                    for (int oc = 0; oc < o; ++oc)
                        acc += static_cast<double>(go[idx3(b, oc, ow, o, ol)]) * w[idx3(oc, ic, kk, c, k)];
                }
                gx[idx3(b, ic, iw, c, l)] += static_cast<float>(acc);
            }
        }
    }

    float* gw = grad_weight.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int oc = 0; oc < o; ++oc) {
        for (int ic = 0; ic < c; ++ic) {
            for (int kk = 0; kk < k; ++kk) {
                double acc = 0.0;
                for (int b = 0; b < n; ++b) {
                    for (int ow = 0; ow < ol; ++ow) {
                        const int iw = ow * stride - pad + kk;
                        if (iw < 0 || iw >= l) continue;
                        acc += static_cast<double>(go[idx3(b, oc, ow, o, ol)]) * x[idx3(b, ic, iw, c, l)];
                    }
                }
                gw[idx3(oc, ic, kk, c, k)] += static_cast<float>(acc);
            }
        }
    }

    float* gb = grad_bias.data();
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < o; ++oc) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b)
            for (int ow = 0; ow < ol; ++ow) acc += go[idx3(b, oc, ow, o, ol)];
        gb[oc] += static_cast<float>(acc);
    }
}

Tensor maxpool2d_forward(const Tensor& input, int k, int stride, std::vector<int64_t>& argmax) {
    if (input.rank() != 4) throw ShapeError("maxpool2d: input must be [N,C,H,W], got " + input.shape_str());
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (k > h) throw ShapeError("maxpool2d: k=" + std::to_string(k) + " exceeds height axis H=" + std::to_string(h));
    if (k > w) throw ShapeError("maxpool2d: k=" + std::to_string(k) + " exceeds width axis W=" + std::to_string(w));
    const int oh = (h - k) / stride + 1;
    const int ow = (w - k) / stride + 1;
    Tensor out({n, c, oh, ow});
    argmax.assign(static_cast<size_t>(out.numel()), 0);
    const float* x = input.data();
    float* y = out.data();
    int64_t* am = argmax.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < n; ++b) {
        for (int ch = 0; ch < c; ++ch) {
            for (int i = 0; i < oh; ++i) {
                for (int j = 0; j < ow; ++j) {
                    float best = -std::numeric_limits<float>::infinity();
                    int64_t best_idx = -1;
                    for (int kh = 0; kh < k; ++kh) {
                        for (int kw = 0; kw < k; ++kw) {
                            const int64_t src = idx4(b, ch, i * stride + kh, j * stride + kw, c, h, w);
                            if (x[src] > best) {  // strict: first maximum wins on ties
                                best = x[src];
                                best_idx = src;
                            }
                        }
                    }
                    const int64_t dst = idx4(b, ch, i, j, c, oh, ow);
                    y[dst] = best;
                    am[dst] = best_idx;
                }
            }
        }
    }
    return out;
}

void maxpool2d_backward(const Tensor& grad_out, const std::vector<int64_t>& argmax, Tensor& grad_input) {
    const int n = grad_out.dim(0), c = grad_out.dim(1);
    const int64_t plane = static_cast<int64_t>(grad_out.dim(2)) * grad_out.dim(3);
    const float* go = grad_out.data();
    float* gx = grad_input.data();
    // Overlapping windows can route to one input cell, so parallelize over
    // (n,c) planes which own disjoint regions of grad_input.
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < n; ++b) {
        for (int ch = 0; ch < c; ++ch) {
            const int64_t base = (static_cast<int64_t>(b) * c + ch) * plane;
            for (int64_t i = 0; i < plane; ++i) gx[argmax[static_cast<size_t>(base + i)]] += go[base + i];
        }
    }
}

Tensor maxpool1d_forward(const Tensor& input, int k, int stride, std::vector<int64_t>& argmax) {
    if (input.rank() != 3) throw ShapeError("maxpool1d: input must be [N,C,L], got " + input.shape_str());
    const int n = input.dim(0), c = input.dim(1), l = input.dim(2);
    if (k > l) throw ShapeError("maxpool1d: k exceeds length axis");
    const int ol = (l - k) / stride + 1;
    Tensor out({n, c, ol});
    argmax.assign(static_cast<size_t>(out.numel()), 0);
    const float* x = input.data();
    float* y = out.data();
    for (int b = 0; b < n; ++b) {
        for (int ch = 0; ch < c; ++ch) {
            for (int j = 0; j < ol; ++j) {
                float best = -std::numeric_limits<float>::infinity();
                int64_t best_idx = -1;
                for (int kk = 0; kk < k; ++kk) {
                    const int64_t src = idx3(b, ch, j * stride + kk, c, l);
                    if (x[src] > best) {
                        best = x[src];
                        best_idx = src;
                    }
                }
                const int64_t dst = idx3(b, ch, j, c, ol);
                y[dst] = best;
                argmax[static_cast<size_t>(dst)] = best_idx;
            }
        }
    }
    return out;
}

Tensor global_avgpool_forward(const Tensor& input) {
    if (input.rank() != 4) throw ShapeError("global_avgpool: input must be [N,C,H,W], got " + input.shape_str());
    const int n = input.dim(0), c = input.dim(1);
    const int64_t plane = static_cast<int64_t>(input.dim(2)) * input.dim(3);
    Tensor out({n, c});
    const float* x = input.data();
    float* y = out.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < n; ++b) {
        for (int ch = 0; ch < c; ++ch) {
            const float* p = x + (static_cast<int64_t>(b) * c + ch) * plane;
            double acc = 0.0;
            for (int64_t i = 0; i < plane; ++i) acc += p[i];
            y[idx2(b, ch, c)] = static_cast<float>(acc / static_cast<double>(plane));
        }
    }
    return out;
}

void global_avgpool_backward(const Tensor& grad_out, int h, int w, Tensor& grad_input) {
    const int n = grad_out.dim(0), c = grad_out.dim(1);
    const int64_t plane = static_cast<int64_t>(h) * w;
    const float* go = grad_out.data();
    float* gx = grad_input.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < n; ++b) {
        for (int ch = 0; ch < c; ++ch) {
            const float g = go[idx2(b, ch, c)] / static_cast<float>(plane);
            float* p = gx + (static_cast<int64_t>(b) * c + ch) * plane;
            for (int64_t i = 0; i < plane; ++i) p[i] += g;
        }
    }
}

Tensor matmul(const Tensor& a, const Tensor& b, bool transa, bool transb) {
    if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul: operands must be rank 2");
    const int ar = a.dim(0), ac = a.dim(1);
    const int br = b.dim(0), bc = b.dim(1);
    const int m = transa ? ac : ar;
    const int ka = transa ? ar : ac;
    const int kb = transb ? bc : br;
    const int nn = transb ? br : bc;
    if (ka != kb)
        throw ShapeError("matmul: inner axis mismatch " + std::to_string(ka) + " vs " + std::to_string(kb));
    Tensor out({m, nn});
    const float* pa = a.data();
    const float* pb = b.data();
    float* pc = out.data();

#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nn; ++j) {
            double acc = 0.0;
            for (int k = 0; k < ka; ++k) {
                const float av = transa ? pa[idx2(k, i, ac)] : pa[idx2(i, k, ac)];
                const float bv = transb ? pb[idx2(j, k, bc)] : pb[idx2(k, j, bc)];
                acc += static_cast<double>(av) * bv;
            }
            pc[idx2(i, j, nn)] = static_cast<float>(acc);
        }
    }
    return out;
}

void channel_mean_var(const Tensor& input, std::vector<double>& mean, std::vector<double>& var) {
    const int n = input.dim(0), c = input.dim(1);
    const int64_t plane = static_cast<int64_t>(input.dim(2)) * input.dim(3);
    const int64_t count = static_cast<int64_t>(n) * plane;
    mean.assign(static_cast<size_t>(c), 0.0);
    var.assign(static_cast<size_t>(c), 0.0);
    const float* x = input.data();
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        double s = 0.0, s2 = 0.0;
        for (int b = 0; b < n; ++b) {
            const float* p = x + (static_cast<int64_t>(b) * c + ch) * plane;
            for (int64_t i = 0; i < plane; ++i) {
                const double v = p[i];
                s += v;
                s2 += v * v;
            }
        }
        const double mu = s / static_cast<double>(count);
        mean[static_cast<size_t>(ch)] = mu;
        var[static_cast<size_t>(ch)] = s2 / static_cast<double>(count) - mu * mu;
    }
}

Tensor softmax_rows(const Tensor& logits) {
    if (logits.rank() != 2) throw ShapeError("softmax: input must be [N,M], got " + logits.shape_str());
    const int n = logits.dim(0), m = logits.dim(1);
    Tensor out({n, m});
    const float* x = logits.data();
    float* y = out.data();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const float* row = x + static_cast<int64_t>(i) * m;
        float* dst = y + static_cast<int64_t>(i) * m;
        float mx = row[0];
        for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (int j = 0; j < m; ++j) {
            const double e = std::exp(static_cast<double>(row[j]) - mx);
            dst[j] = static_cast<float>(e);
            denom += e;
        }
        const double inv = 1.0 / denom;
        for (int j = 0; j < m; ++j) dst[j] = static_cast<float>(dst[j] * inv);
    }
    return out;
}

}  // namespace trackid::kernels
