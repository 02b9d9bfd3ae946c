#pragma once

#include <cmath>
#include <stdexcept>

#include "d2sac/tensor.hpp"

namespace d2sac::nn {

// ln(1 + e^x) with the tails handled so neither exp overflow nor cancellation
// bites for |x| > 20.
inline double softplus(double x) {
    if (x > 20.0) return x + std::log1p(std::exp(-x));
    if (x < -20.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double mish(double x) { return x * std::tanh(softplus(x)); }

inline double mish_grad(double x) {
    const double t = std::tanh(softplus(x));
    const double sig = 1.0 / (1.0 + std::exp(-x));
    return t + x * (1.0 - t * t) * sig;
}

// [sin(t/10000^(2k/dim)) for k < dim/2] ++ [cos(t/10000^(2k/dim)) for k < dim/2]
inline Tensor sinusoidal_pos_emb(double t, int dim) {
    if (dim <= 0 || dim % 2 != 0) throw std::invalid_argument("sinusoidal_pos_emb: dim must be even and positive");
    if (t < 0) throw std::invalid_argument("sinusoidal_pos_emb: t must be nonnegative");
    Tensor emb(1, dim);
    const int half = dim / 2;
    for (int k = 0; k < half; ++k) {
        const double freq = std::pow(10000.0, -2.0 * k / dim);
        emb.at(0, k) = std::sin(t * freq);
        emb.at(0, half + k) = std::cos(t * freq);
    }
    return emb;
}

}  // namespace d2sac::nn
