#pragma once

#include <map>
#include <string>
#include <vector>

#include "tvnet/autograd.hpp"
#include "tvnet/common.hpp"

namespace tvnet::nn {

using ag::Tensor;

// Named trainable leaves of one model. Names double as checkpoint keys.
class ParameterSet {
public:
    Tensor& add(const std::string& name, Tensor t) {
        require(!params_.count(name), "ParameterSet: duplicate parameter " + name);
        auto [it, ok] = params_.emplace(name, std::move(t));
        order_.push_back(name);
        return it->second;
    }
    Tensor& at(const std::string& name) {
        auto it = params_.find(name);
        require(it != params_.end(), "ParameterSet: unknown parameter " + name);
        return it->second;
    }
    const Tensor& at(const std::string& name) const { return const_cast<ParameterSet*>(this)->at(name); }
    const std::vector<std::string>& names() const { return order_; }
    std::size_t size() const { return order_.size(); }

    void zero_grad() {
        for (auto& [k, t] : params_) t.zero_grad();
    }

    std::vector<Tensor*> all() {
        std::vector<Tensor*> out;
        for (const auto& name : order_) out.push_back(&params_.at(name));
        return out;
    }

private:
    std::map<std::string, Tensor> params_;
    std::vector<std::string> order_;
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
std::vector<real> init_uniform_fan_in(std::size_t count, int fan_in, Rng& rng);

struct LinearLayer {
    int in_features = 0;
    int out_features = 0;
    Tensor weight;  // (out, in)
    Tensor bias;    // (out)

    LinearLayer() = default;
    LinearLayer(int in, int out, ParameterSet& params, const std::string& prefix, Rng& rng);

    // x: (B, in) -> (B, out)
    Tensor forward(const Tensor& x) const;
};

struct Conv1dLayer {
    int in_channels = 0;
    int out_channels = 0;
    int kernel_size = 1;
    int stride = 1;
    int padding = 0;
    Tensor weights;  // (out_channels, in_channels*kernel)
    Tensor bias;     // (out_channels)

    Conv1dLayer() = default;
    Conv1dLayer(int in_ch, int out_ch, int kernel, int stride, int padding,
                ParameterSet& params, const std::string& prefix, Rng& rng);

    int out_length(int length) const {
        return ag::conv1d_out_length(length, kernel_size, stride, padding);
    }

    // Time-major batched form: (B, L*in_channels) -> (B, L_out*out_channels).
    Tensor forward_batch(const Tensor& x, int length) const;
};

// Single-sequence channels-first form per the module contract:
// input (in_channels, L) -> output (out_channels, L_out).
Tensor conv1d_forward(const Conv1dLayer& layer, const Tensor& input);

struct LstmLayer {
    int input_size = 0;
    int hidden_size = 0;
    // Gate order: input, forget, cell, output; stacked along rows (4H, ...).
    Tensor w_input;   // (4H, input_size)
    Tensor w_hidden;  // (4H, hidden_size)
    Tensor bias;      // (4H); forget block initialized to 1

    LstmLayer() = default;
    LstmLayer(int input, int hidden, ParameterSet& params, const std::string& prefix, Rng& rng);

    // One step: x (B, input), h/c (B, hidden). Returns new h, c.
    std::pair<Tensor, Tensor> step(const Tensor& x, const Tensor& h, const Tensor& c) const;

    // Full recurrence from zero state over a batched sequence
    // (B, J*input_size), time outer. Returns hidden states per step.
    std::vector<Tensor> forward_batch(const Tensor& xs, int steps) const;
};

// Module-contract form: unbatched sequence of input vectors -> hidden states.
std::vector<std::vector<real>> lstm_forward(const LstmLayer& layer,
                                            const std::vector<std::vector<real>>& inputs);

}  // namespace tvnet::nn
