#pragma once

#include <vector>

#include "d2sac/tensor.hpp"

namespace d2sac::agod {

enum class NoiseScaleMode {
    Paper,  // (tilde_beta_t / 2)^2
    Ddpm,   // sqrt(tilde_beta_t)
};

// Variance-preserving noise schedule,
//   beta_t = 1 - exp(-beta_min/T - (2t-1)/(2T^2) * (beta_max - beta_min)),
// with derived tables alpha_t = 1 - beta_t, alpha_bar_t = prod alpha, and
// tilde_beta_t = (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t.
// Tables are 1-based in t; alpha_bar[0] == 1, so tilde_beta[1] == 0.
struct DiffusionSchedule {
    int steps = 0;
    double beta_min = 0.0;
    double beta_max = 0.0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;
    std::vector<double> tilde_beta;

    double noise_scale(int t, NoiseScaleMode mode) const;
};

DiffusionSchedule build_vp_schedule(int steps, double beta_min, double beta_max);

// Closed-form noised vector x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
// Only exercised by tests of the reverse process; never used in training.
nn::Tensor forward_marginal(const nn::Tensor& x0, int t, const DiffusionSchedule& s, const nn::Tensor& noise);

}  // namespace d2sac::agod
