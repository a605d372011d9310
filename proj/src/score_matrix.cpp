#include "trackid/score_matrix.hpp"

#include <cmath>
#include <sstream>

namespace trackid {

void ScoreMatrix::validate(float tol) const {
    if (rows < 1 || cols < 1) throw ShapeError("score matrix: empty");
    if (static_cast<int64_t>(p.size()) != static_cast<int64_t>(rows) * cols)
        throw ShapeError("score matrix: buffer size mismatch");
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        const float* r = row(i);
        for (int j = 0; j < cols; ++j) {
            if (r[j] < -tol || r[j] > 1.0f + tol)
                throw NumericError("score matrix: entry out of [0,1] at row " + std::to_string(i));
            s += r[j];
        }
        if (std::abs(s - 1.0) > tol)
            throw NumericError("score matrix: row " + std::to_string(i) + " sums to " + std::to_string(s));
    }
}

std::string ScoreMatrix::to_csv(const std::vector<int>& raw_labels) const {
    std::ostringstream os;
    for (size_t j = 0; j < raw_labels.size(); ++j) {
        if (j) os << ',';
        os << raw_labels[j];
    }
    os << '\n';
    for (int i = 0; i < rows; ++i) {
        const float* r = row(i);
        for (int j = 0; j < cols; ++j) {
            if (j) os << ',';
            os << r[j];
        }
        os << '\n';
    }
    return os.str();
}

int argmax_index(const float* v, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

int argmax_index(const std::vector<float>& v) { return argmax_index(v.data(), static_cast<int>(v.size())); }

}  // namespace trackid
