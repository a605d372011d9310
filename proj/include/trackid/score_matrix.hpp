#pragma once
#include <string>
#include <vector>

#include "trackid/tensor.hpp"

namespace trackid {

// N x M per-frame class confidences for one tracklet; rows are softmax
// outputs, so each sums to 1 within tolerance.
struct ScoreMatrix {
    int rows = 0;  // frames
    int cols = 0;  // classes
    std::vector<float> p;

    ScoreMatrix() = default;
    ScoreMatrix(int n, int m) : rows(n), cols(m), p(static_cast<size_t>(n) * m, 0.0f) {}

    float* row(int i) { return p.data() + static_cast<int64_t>(i) * cols; }
    const float* row(int i) const { return p.data() + static_cast<int64_t>(i) * cols; }
    float at(int i, int j) const { return p[static_cast<size_t>(i) * cols + static_cast<size_t>(j)]; }

    // Row-stochastic within tol, entries in [0,1].
    void validate(float tol = 1e-6f) const;

    // One row per frame, header = raw class labels.
    std::string to_csv(const std::vector<int>& raw_labels) const;
};

// Lowest index wins ties.
int argmax_index(const float* v, int n);
int argmax_index(const std::vector<float>& v);

}  // namespace trackid
