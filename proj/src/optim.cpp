#include "tvnet/optim.hpp"

#include <cmath>

namespace tvnet::nn {

Adam::Adam(ParameterSet& params, real beta1, real beta2, real epsilon) : params_(&params) {
    state_.beta1 = beta1;
    state_.beta2 = beta2;
    state_.epsilon = epsilon;
    for (Tensor* t : params.all()) {
        state_.m.emplace_back(t->numel(), real(0));
        state_.v.emplace_back(t->numel(), real(0));
    }
}

void Adam::step(real learning_rate) {
    auto tensors = params_->all();
    require(tensors.size() == state_.m.size(), "Adam: parameter set changed size");
    ++state_.step;
    real b1 = state_.beta1, b2 = state_.beta2;
    real bc1 = real(1) - std::pow(b1, static_cast<real>(state_.step));
    real bc2 = real(1) - std::pow(b2, static_cast<real>(state_.step));
    for (std::size_t p = 0; p < tensors.size(); ++p) {
        Tensor& t = *tensors[p];
        auto& vals = t.values();
        auto& grads = t.grad();
        auto& m = state_.m[p];
        auto& v = state_.v[p];
        for (std::size_t i = 0; i < vals.size(); ++i) {
            real g = grads[i];
            if (!std::isfinite(g))
                throw std::runtime_error("Adam: non-finite gradient in parameter " + t.name());
            m[i] = b1 * m[i] + (real(1) - b1) * g;
            v[i] = b2 * v[i] + (real(1) - b2) * g * g;
            real m_hat = m[i] / bc1;
            real v_hat = v[i] / bc2;
            vals[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state_.epsilon);
        }
    }
}

}  // namespace tvnet::nn
