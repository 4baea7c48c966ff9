#pragma once
// Dense row-major matrix and the labeled sample batch used everywhere.

#include <algorithm>
#include <cstddef>
#include <vector>

namespace fedfair {

struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }
    double* row(size_t r) { return data.data() + r * cols; }
    const double* row(size_t r) const { return data.data() + r * cols; }
};

struct Batch {
    Matrix features;
    std::vector<int> labels;

    size_t size() const { return features.rows; }
    bool empty() const { return features.rows == 0; }
};

// Rows of src selected by idx, in idx order.
inline Batch gather_rows(const Batch& src, const std::vector<size_t>& idx) {
    Batch out;
    out.features = Matrix(idx.size(), src.features.cols);
    out.labels.resize(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        const double* r = src.features.row(idx[i]);
        std::copy(r, r + src.features.cols, out.features.row(i));
        out.labels[i] = src.labels[idx[i]];
    }
    return out;
}

inline Batch concat_batches(const Batch& a, const Batch& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    Batch out;
    out.features = Matrix(a.size() + b.size(), a.features.cols);
    std::copy(a.features.data.begin(), a.features.data.end(), out.features.data.begin());
    std::copy(b.features.data.begin(), b.features.data.end(),
              out.features.data.begin() + static_cast<long>(a.features.data.size()));
    out.labels = a.labels;
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    return out;
}

}  // namespace fedfair
