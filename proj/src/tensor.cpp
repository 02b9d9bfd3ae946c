#include "d2sac/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace d2sac::nn {

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

namespace kernels {

void linear(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& out) {
    const int n = x.rows(), in = x.cols(), od = w.rows();
    if (w.cols() != in) throw std::invalid_argument("linear: weight/input dimension mismatch");
    if (b.cols() != od || b.rows() != 1) throw std::invalid_argument("linear: bias dimension mismatch");
    out = Tensor(n, od);
    if (n >= 8) {
        // Batched path: transpose w once, then accumulate rank-1 row updates so
        // the inner loop is a contiguous axpy.
        Tensor wt(in, od);
        for (int o = 0; o < od; ++o) {
            const double* wr = w.row_ptr(o);
            for (int k = 0; k < in; ++k) wt.at(k, o) = wr[k];
        }
        for (int i = 0; i < n; ++i) {
            double* yr = out.row_ptr(i);
            const double* br = b.row_ptr(0);
            for (int o = 0; o < od; ++o) yr[o] = br[o];
            const double* xr = x.row_ptr(i);
            for (int k = 0; k < in; ++k) {
                const double xv = xr[k];
                const double* wr = wt.row_ptr(k);
                for (int o = 0; o < od; ++o) yr[o] += xv * wr[o];
            }
        }
    } else {
        for (int i = 0; i < n; ++i) {
            const double* xr = x.row_ptr(i);
            double* yr = out.row_ptr(i);
            for (int o = 0; o < od; ++o) {
                const double* wr = w.row_ptr(o);
                double acc = b.at(0, o);
                for (int k = 0; k < in; ++k) acc += xr[k] * wr[k];
                yr[o] = acc;
            }
        }
    }
}

void linear_dx(const Tensor& dy, const Tensor& w, Tensor& dx) {
    const int n = dy.rows(), od = dy.cols(), in = w.cols();
    for (int i = 0; i < n; ++i) {
        const double* dyr = dy.row_ptr(i);
        double* dxr = dx.row_ptr(i);
        for (int o = 0; o < od; ++o) {
            const double g = dyr[o];
            if (g == 0.0) continue;
            const double* wr = w.row_ptr(o);
            for (int k = 0; k < in; ++k) dxr[k] += g * wr[k];
        }
    }
}

void linear_dwdb(const Tensor& dy, const Tensor& x, Tensor& dw, Tensor& db) {
    const int n = dy.rows(), od = dy.cols(), in = x.cols();
    for (int i = 0; i < n; ++i) {
        const double* dyr = dy.row_ptr(i);
        const double* xr = x.row_ptr(i);
        double* dbr = db.row_ptr(0);
        for (int o = 0; o < od; ++o) {
            const double g = dyr[o];
            dbr[o] += g;
            if (g == 0.0) continue;
            double* dwr = dw.row_ptr(o);
            for (int k = 0; k < in; ++k) dwr[k] += g * xr[k];
        }
    }
}

void matmul(const Tensor& a, const Tensor& b, Tensor& out) {
    const int n = a.rows(), k = a.cols(), m = b.cols();
    if (b.rows() != k) throw std::invalid_argument("matmul: inner dimension mismatch");
    out = Tensor(n, m);
    for (int i = 0; i < n; ++i) {
        const double* ar = a.row_ptr(i);
        double* yr = out.row_ptr(i);
        for (int p = 0; p < k; ++p) {
            const double av = ar[p];
            if (av == 0.0) continue;
            const double* br = b.row_ptr(p);
            for (int j = 0; j < m; ++j) yr[j] += av * br[j];
        }
    }
}

void softmax_rows(const Tensor& x, Tensor& out) {
    out = Tensor(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i) {
        const double* xr = x.row_ptr(i);
        double* yr = out.row_ptr(i);
        double mx = xr[0];
        for (int j = 1; j < x.cols(); ++j) mx = std::max(mx, xr[j]);
        double sum = 0.0;
        for (int j = 0; j < x.cols(); ++j) {
            yr[j] = std::exp(xr[j] - mx);
            sum += yr[j];
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < x.cols(); ++j) yr[j] *= inv;
    }
}

void axpby(double sa, const Tensor& a, double sb, const Tensor& b, Tensor& out) {
    if (!a.same_shape(b)) throw std::invalid_argument("axpby: shape mismatch");
    out = Tensor(a.rows(), a.cols());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) po[i] = sa * pa[i] + sb * pb[i];
}

}  // namespace kernels

}  // namespace d2sac::nn
