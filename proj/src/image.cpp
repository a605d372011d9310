#include "trackid/image.hpp"

#include <algorithm>
#include <cmath>

namespace trackid {

Tensor resize_bilinear(const Tensor& chw, int out_h, int out_w) {
    if (chw.rank() != 3) throw ShapeError("resize: image must be [C,H,W], got " + chw.shape_str());
    const int c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
    if (h == out_h && w == out_w) return chw;
    Tensor out({c, out_h, out_w});
    const float sy = static_cast<float>(h) / out_h;
    const float sx = static_cast<float>(w) / out_w;
    for (int i = 0; i < out_h; ++i) {
        const float fy = std::max(0.0f, (i + 0.5f) * sy - 0.5f);
        const int y0 = std::min(static_cast<int>(fy), h - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const float wy = fy - y0;
        for (int j = 0; j < out_w; ++j) {
            const float fx = std::max(0.0f, (j + 0.5f) * sx - 0.5f);
            const int x0 = std::min(static_cast<int>(fx), w - 1);
            const int x1 = std::min(x0 + 1, w - 1);
            const float wx = fx - x0;
            for (int ch = 0; ch < c; ++ch) {
                const float a = chw[idx3(ch, y0, x0, h, w)];
                const float b = chw[idx3(ch, y0, x1, h, w)];
                const float d = chw[idx3(ch, y1, x0, h, w)];
                const float e = chw[idx3(ch, y1, x1, h, w)];
                out[idx3(ch, i, j, out_h, out_w)] =
                    (a * (1 - wx) + b * wx) * (1 - wy) + (d * (1 - wx) + e * wx) * wy;
            }
        }
    }
    return out;
}

Tensor crop(const Tensor& chw, int top, int left, int out_h, int out_w) {
    if (chw.rank() != 3) throw ShapeError("crop: image must be [C,H,W], got " + chw.shape_str());
    const int c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
    if (top < 0 || left < 0 || top + out_h > h || left + out_w > w)
        throw ShapeError("crop: window exceeds image bounds");
    Tensor out({c, out_h, out_w});
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < out_h; ++i)
            for (int j = 0; j < out_w; ++j)
                out[idx3(ch, i, j, out_h, out_w)] = chw[idx3(ch, top + i, left + j, h, w)];
    return out;
}

Tensor center_crop(const Tensor& chw, int out_h, int out_w) {
    return crop(chw, (chw.dim(1) - out_h) / 2, (chw.dim(2) - out_w) / 2, out_h, out_w);
}

}  // namespace trackid
