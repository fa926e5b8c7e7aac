#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace aam::nn {

// Dense row-major matrix of doubles. Small sizes only; no BLAS.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> d;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), d(static_cast<size_t>(r) * c, 0.0) {}
    Matrix(int r, int c, std::vector<double> v) : rows(r), cols(c), d(std::move(v)) {
        assert(static_cast<int>(d.size()) == rows * cols);
    }

    double& at(int i, int j) { return d[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return d[static_cast<size_t>(i) * cols + j]; }
    size_t size() const { return d.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix zeros(int r, int c) { return Matrix(r, c); }

    static Matrix row(std::vector<double> v) {
        int n = static_cast<int>(v.size());
        return Matrix(1, n, std::move(v));
    }
    static Matrix col(std::vector<double> v) {
        int n = static_cast<int>(v.size());
        return Matrix(n, 1, std::move(v));
    }
    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }
};

// Order-independent summation: sorting the terms by value makes the result
// invariant to the order contributions arrive in, which keeps graph outputs
// bitwise stable under node relabeling.
inline double stable_sum(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    if (xs.size() == 1) return xs[0];
    std::vector<double> tmp(xs.begin(), xs.end());
    std::sort(tmp.begin(), tmp.end());
    double s = 0.0;
    for (double x : tmp) s += x;
    return s;
}

inline Matrix matmul_val(const Matrix& a, const Matrix& b) {
    assert(a.cols == b.rows);
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* ar = &a.d[static_cast<size_t>(i) * a.cols];
        double* cr = &c.d[static_cast<size_t>(i) * c.cols];
        for (int k = 0; k < a.cols; ++k) {
            double av = ar[k];
            if (av == 0.0) continue;
            const double* br = &b.d[static_cast<size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) cr[j] += av * br[j];
        }
    }
    return c;
}

}  // namespace aam::nn
