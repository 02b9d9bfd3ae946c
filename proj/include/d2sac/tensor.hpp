#pragma once

#include <cstddef>
#include <vector>

namespace d2sac::nn {

// Dense row-major matrix of 64-bit reals. Row vectors are 1xN; a batch of
// observations is one tensor with one row per sample.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    static Tensor row(std::vector<double> values) {
        Tensor t;
        t.rows_ = 1;
        t.cols_ = static_cast<int>(values.size());
        t.data_ = std::move(values);
        return t;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    std::vector<int> shape() const { return {rows_, cols_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row_ptr(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row_ptr(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    const std::vector<double>& values() const { return data_; }
    std::vector<double>& values() { return data_; }

    bool same_shape(const Tensor& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const;
    void fill(double v);

    bool requires_grad = false;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Raw math shared by the no-grad forward paths and the compute-graph ops.
// Keeping one set of kernels makes the recorded and un-recorded passes
// bit-identical.
namespace kernels {

// out = x * w^T + b, with w stored (out_dim x in_dim) and b (1 x out_dim).
void linear(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& out);
// dx += dy * w
void linear_dx(const Tensor& dy, const Tensor& w, Tensor& dx);
// dw += dy^T * x ; db += column sums of dy
void linear_dwdb(const Tensor& dy, const Tensor& x, Tensor& dw, Tensor& db);

// out = a * b (general matrix product)
void matmul(const Tensor& a, const Tensor& b, Tensor& out);

void softmax_rows(const Tensor& x, Tensor& out);

void axpby(double sa, const Tensor& a, double sb, const Tensor& b, Tensor& out);

}  // namespace kernels

}  // namespace d2sac::nn
