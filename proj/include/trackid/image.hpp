#pragma once
#include "trackid/tensor.hpp"

namespace trackid {

// Bilinear resample of a [C,H,W] image to [C,out_h,out_w], align-corners-false
// convention (sample centers at (i+0.5)/out * in - 0.5).
Tensor resize_bilinear(const Tensor& chw, int out_h, int out_w);

Tensor crop(const Tensor& chw, int top, int left, int out_h, int out_w);
Tensor center_crop(const Tensor& chw, int out_h, int out_w);

}  // namespace trackid
