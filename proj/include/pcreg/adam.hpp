#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pcreg/model.hpp"

namespace pcreg {

// Standard bias-corrected Adam (beta1=0.9, beta2=0.999, eps=1e-8).
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Applies one Adam update in place. Returns false without touching params or
// state when the gradient contains a non-finite entry.
[[nodiscard]] inline bool adam_step(std::vector<double>& params, std::span<const double> grad,
                                    AdamState& state, double lr) {
    if (params.size() != grad.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    for (double g : grad) {
        if (!std::isfinite(g)) return false;
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
    return true;
}

// theta' <- alpha * theta' + (1 - alpha) * theta, element-wise.
inline void ema_update(ModelParameters& teacher, const ModelParameters& student, double alpha) {
    if (teacher.size() != student.size()) throw std::invalid_argument("ema_update: length mismatch");
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("ema_update: alpha outside [0, 1]");
    for (std::size_t i = 0; i < teacher.size(); ++i) {
        teacher[i] = alpha * teacher[i] + (1.0 - alpha) * student[i];
    }
}

}  // namespace pcreg
