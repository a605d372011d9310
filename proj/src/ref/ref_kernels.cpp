#include "ref_kernels.hpp"

#include <algorithm>
#include <limits>

namespace trackid::ref {

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad) {
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int o = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (w + 2 * pad - kw) / stride + 1;
    Tensor out({n, o, oh, ow});
    for (int b = 0; b < n; ++b)
        for (int oc = 0; oc < o; ++oc)
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j) {
                    double acc = bias.numel() ? bias[oc] : 0.0;
                    for (int ic = 0; ic < c; ++ic)
                        for (int y = 0; y < kh; ++y)
                            for (int x = 0; x < kw; ++x) {
                                const int ih = i * stride - pad + y;
                                const int iw = j * stride - pad + x;
                                if (ih < 0 || ih >= h || iw < 0 || iw >= w) continue;
                                acc += static_cast<double>(input[idx4(b, ic, ih, iw, c, h, w)]) *
                                       weight[idx4(oc, ic, y, x, c, kh, kw)];
                            }
                    out[idx4(b, oc, i, j, o, oh, ow)] = static_cast<float>(acc);
                }
    return out;
}

Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad) {
    const int n = input.dim(0), c = input.dim(1), l = input.dim(2);
    const int o = weight.dim(0), k = weight.dim(2);
    const int ol = (l + 2 * pad - k) / stride + 1;
    Tensor out({n, o, ol});
    for (int b = 0; b < n; ++b)
        for (int oc = 0; oc < o; ++oc)
            for (int j = 0; j < ol; ++j) {
                double acc = bias.numel() ? bias[oc] : 0.0;
                for (int ic = 0; ic < c; ++ic)
                    for (int kk = 0; kk < k; ++kk) {
                        const int iw = j * stride - pad + kk;
                        if (iw < 0 || iw >= l) continue;
                        acc += static_cast<double>(input[idx3(b, ic, iw, c, l)]) * weight[idx3(oc, ic, kk, c, k)];
                    }
                out[idx3(b, oc, j, o, ol)] = static_cast<float>(acc);
            }
    return out;
}

Tensor maxpool2d(const Tensor& input, int k, int stride) {
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int oh = (h - k) / stride + 1;
    const int ow = (w - k) / stride + 1;
    Tensor out({n, c, oh, ow});
    for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j) {
                    float best = -std::numeric_limits<float>::infinity();
                    for (int y = 0; y < k; ++y)
                        for (int x = 0; x < k; ++x)
                            best = std::max(best, input[idx4(b, ch, i * stride + y, j * stride + x, c, h, w)]);
                    out[idx4(b, ch, i, j, c, oh, ow)] = best;
                }
    return out;
}

Tensor global_avgpool(const Tensor& input) {
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    Tensor out({n, c});
    for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch) {
            double acc = 0.0;
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) acc += input[idx4(b, ch, i, j, c, h, w)];
            out[idx2(b, ch, c)] = static_cast<float>(acc / (static_cast<double>(h) * w));
        }
    return out;
}

void channel_stats(const Tensor& input, std::vector<double>& mean, std::vector<double>& var) {
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const double count = static_cast<double>(n) * h * w;
    mean.assign(static_cast<size_t>(c), 0.0);
    var.assign(static_cast<size_t>(c), 0.0);
    for (int ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (int b = 0; b < n; ++b)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) s += input[idx4(b, ch, i, j, c, h, w)];
        const double mu = s / count;
        double sv = 0.0;
        for (int b = 0; b < n; ++b)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    const double d = input[idx4(b, ch, i, j, c, h, w)] - mu;
                    sv += d * d;
                }
        mean[static_cast<size_t>(ch)] = mu;
        var[static_cast<size_t>(ch)] = sv / count;
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += static_cast<double>(a[idx2(i, p, k)]) * b[idx2(p, j, n)];
            out[idx2(i, j, n)] = static_cast<float>(acc);
        }
    return out;
}

}  // namespace trackid::ref
