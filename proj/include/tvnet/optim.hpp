#pragma once

#include <functional>
#include <vector>

#include "tvnet/autograd.hpp"
#include "tvnet/layers.hpp"

namespace tvnet::nn {

// Piecewise-constant learning rate: run `epochs` at `lr`, then next segment.
// Past the last segment the final rate sticks.
struct LrSchedule {
    std::vector<std::pair<int, real>> segments;  // (epochs, lr)

    real at_epoch(int epoch) const {
        int e = epoch;
        for (const auto& [len, lr] : segments) {
            if (e < len) return lr;
            e -= len;
        }
        return segments.empty() ? real(1e-3) : segments.back().second;
    }
    int total_epochs() const {
        int n = 0;
        for (const auto& [len, lr] : segments) n += len;
        return n;
    }
};

struct AdamState {
    long step = 0;
    real beta1 = real(0.9);
    real beta2 = real(0.999);
    real epsilon = real(1e-8);
    // One moment pair per parameter, index-aligned with the parameter list.
    std::vector<std::vector<real>> m;
    std::vector<std::vector<real>> v;
};

class Adam {
public:
    Adam(ParameterSet& params, real beta1 = real(0.9), real beta2 = real(0.999),
         real epsilon = real(1e-8));

    // One bias-corrected update from the parameters' accumulated gradients.
    // Throws (naming the parameter) on non-finite gradients.
    void step(real learning_rate);

    const AdamState& state() const { return state_; }

private:
    ParameterSet* params_;
    AdamState state_;
};

}  // namespace tvnet::nn
