#pragma once

#include <cstddef>
#include <vector>

namespace ipcamo {

// Dense row-major matrix of doubles; column vectors are n x 1.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    static Matrix column(std::vector<double> v) {
        Matrix m;
        m.rows = v.size();
        m.cols = 1;
        m.data = std::move(v);
        return m;
    }

    std::size_t size() const { return data.size(); }
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double& operator[](std::size_t k) { return data[k]; }
    double operator[](std::size_t k) const { return data[k]; }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace ipcamo
