#include "d2sac/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace d2sac::agod {

double DiffusionSchedule::noise_scale(int t, NoiseScaleMode mode) const {
    if (t < 1 || t > steps) throw std::out_of_range("noise_scale: t out of range");
    const double tb = tilde_beta[t];
    if (mode == NoiseScaleMode::Paper) return (tb / 2.0) * (tb / 2.0);
    return std::sqrt(tb);
}

DiffusionSchedule build_vp_schedule(int steps, double beta_min, double beta_max) {
    if (steps < 1) throw std::invalid_argument("build_vp_schedule: steps must be >= 1");
    if (!(beta_min > 0.0) || !(beta_min < beta_max)) throw std::invalid_argument("build_vp_schedule: need 0 < beta_min < beta_max");
    DiffusionSchedule s;
    s.steps = steps;
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    s.beta.assign(steps + 1, 0.0);
    s.alpha.assign(steps + 1, 0.0);
    s.alpha_bar.assign(steps + 1, 1.0);
    s.tilde_beta.assign(steps + 1, 0.0);
    const double T = static_cast<double>(steps);
    for (int t = 1; t <= steps; ++t) {
        const double expo = -beta_min / T - (2.0 * t - 1.0) / (2.0 * T * T) * (beta_max - beta_min);
        s.beta[t] = 1.0 - std::exp(expo);
        s.alpha[t] = 1.0 - s.beta[t];
        s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
        s.tilde_beta[t] = (1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]) * s.beta[t];
    }
    return s;
}

nn::Tensor forward_marginal(const nn::Tensor& x0, int t, const DiffusionSchedule& s, const nn::Tensor& noise) {
    if (t < 1 || t > s.steps) throw std::out_of_range("forward_marginal: t out of range");
    if (!x0.same_shape(noise)) throw std::invalid_argument("forward_marginal: shape mismatch");
    const double a = std::sqrt(s.alpha_bar[t]);
    const double b = std::sqrt(1.0 - s.alpha_bar[t]);
    nn::Tensor out(x0.rows(), x0.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a * x0.data()[i] + b * noise.data()[i];
    return out;
}

}  // namespace d2sac::agod
