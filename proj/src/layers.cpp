#include "tvnet/layers.hpp"

#include <cmath>

namespace tvnet::nn {

std::vector<real> init_uniform_fan_in(std::size_t count, int fan_in, Rng& rng) {
    real bound = real(1) / std::sqrt(static_cast<real>(fan_in > 0 ? fan_in : 1));
    std::vector<real> v(count);
    for (auto& x : v) x = static_cast<real>(rng.uniform(-bound, bound));
    return v;
}

LinearLayer::LinearLayer(int in, int out, ParameterSet& params, const std::string& prefix,
                         Rng& rng)
    : in_features(in), out_features(out) {
    weight = params.add(prefix + ".weight",
                        Tensor::parameter({out, in},
                                          init_uniform_fan_in(static_cast<std::size_t>(out) * in, in, rng),
                                          prefix + ".weight"));
    bias = params.add(prefix + ".bias",
                      Tensor::parameter({out}, init_uniform_fan_in(out, in, rng), prefix + ".bias"));
}

Tensor LinearLayer::forward(const Tensor& x) const {
    require(x.cols() == in_features, "LinearLayer: input feature mismatch");
    return ag::add_rowvec(ag::matmul(x, ag::transpose2d(weight)), bias);
}

Conv1dLayer::Conv1dLayer(int in_ch, int out_ch, int kernel, int stride_, int padding_,
                         ParameterSet& params, const std::string& prefix, Rng& rng)
    : in_channels(in_ch), out_channels(out_ch), kernel_size(kernel), stride(stride_),
      padding(padding_) {
    require(kernel >= 1 && stride_ >= 1 && padding_ >= 0, "Conv1dLayer: bad geometry");
    int fan_in = in_ch * kernel;
    weights = params.add(prefix + ".weight",
                         Tensor::parameter({out_ch, fan_in},
                                           init_uniform_fan_in(static_cast<std::size_t>(out_ch) * fan_in,
                                                               fan_in, rng),
                                           prefix + ".weight"));
    bias = params.add(prefix + ".bias",
                      Tensor::parameter({out_ch}, init_uniform_fan_in(out_ch, fan_in, rng),
                                        prefix + ".bias"));
}

Tensor Conv1dLayer::forward_batch(const Tensor& x, int length) const {
    return ag::conv1d_batch(x, length, in_channels, weights, bias, kernel_size, stride, padding);
}

Tensor conv1d_forward(const Conv1dLayer& layer, const Tensor& input) {
    require(input.shape().size() == 2, "conv1d_forward: rank-2 input required");
    require(input.rows() == layer.in_channels,
            "conv1d_forward: input has " + std::to_string(input.rows()) +
                " channels, layer expects " + std::to_string(layer.in_channels));
    int length = input.cols();
    // (C,L) -> time-major (1, L*C) -> conv -> (L_out, C_out) -> (C_out, L_out).
    Tensor time_major = ag::reshape(ag::transpose2d(input), {1, length * layer.in_channels});
    Tensor out = layer.forward_batch(time_major, length);
    int out_len = layer.out_length(length);
    return ag::transpose2d(ag::reshape(out, {out_len, layer.out_channels}));
}

LstmLayer::LstmLayer(int input, int hidden, ParameterSet& params, const std::string& prefix,
                     Rng& rng)
    : input_size(input), hidden_size(hidden) {
    int fan_in = input + hidden;
    w_input = params.add(prefix + ".w_input",
                         Tensor::parameter({4 * hidden, input},
                                           init_uniform_fan_in(static_cast<std::size_t>(4 * hidden) * input,
                                                               fan_in, rng),
                                           prefix + ".w_input"));
    w_hidden = params.add(prefix + ".w_hidden",
                          Tensor::parameter({4 * hidden, hidden},
                                            init_uniform_fan_in(static_cast<std::size_t>(4 * hidden) * hidden,
                                                                fan_in, rng),
                                            prefix + ".w_hidden"));
    std::vector<real> b = init_uniform_fan_in(4 * hidden, fan_in, rng);
    for (int i = hidden; i < 2 * hidden; ++i) b[i] = real(1);  // forget gate bias
    bias = params.add(prefix + ".bias", Tensor::parameter({4 * hidden}, std::move(b), prefix + ".bias"));
}

std::pair<Tensor, Tensor> LstmLayer::step(const Tensor& x, const Tensor& h, const Tensor& c) const {
    using namespace ag;
    Tensor gates = add_rowvec(add(matmul(x, transpose2d(w_input)), matmul(h, transpose2d(w_hidden))),
                              bias);
    int H = hidden_size;
    Tensor i = sigmoid(slice_cols(gates, 0, H));
    Tensor f = sigmoid(slice_cols(gates, H, 2 * H));
    Tensor g = tanh_op(slice_cols(gates, 2 * H, 3 * H));
    Tensor o = sigmoid(slice_cols(gates, 3 * H, 4 * H));
    Tensor c_next = add(mul(f, c), mul(i, g));
    Tensor h_next = mul(o, tanh_op(c_next));
    return {h_next, c_next};
}

std::vector<Tensor> LstmLayer::forward_batch(const Tensor& xs, int steps) const {
    require(steps >= 1, "LstmLayer: empty sequence");
    require(xs.cols() == steps * input_size, "LstmLayer: input width mismatch");
    int batch = xs.rows();
    Tensor h = Tensor::zeros({batch, hidden_size});
    Tensor c = Tensor::zeros({batch, hidden_size});
    std::vector<Tensor> hs;
    hs.reserve(steps);
    for (int j = 0; j < steps; ++j) {
        Tensor x = ag::slice_cols(xs, j * input_size, (j + 1) * input_size);
        auto [h2, c2] = step(x, h, c);
        h = h2;
        c = c2;
        hs.push_back(h);
    }
    return hs;
}

std::vector<std::vector<real>> lstm_forward(const LstmLayer& layer,
                                            const std::vector<std::vector<real>>& inputs) {
    require(!inputs.empty(), "lstm_forward: empty sequence");
    int steps = static_cast<int>(inputs.size());
    std::vector<real> flat;
    flat.reserve(static_cast<std::size_t>(steps) * layer.input_size);
    for (const auto& x : inputs) {
        require(static_cast<int>(x.size()) == layer.input_size, "lstm_forward: input size mismatch");
        flat.insert(flat.end(), x.begin(), x.end());
    }
    Tensor xs = Tensor::constant({1, steps * layer.input_size}, std::move(flat));
    auto hs = layer.forward_batch(xs, steps);
    std::vector<std::vector<real>> out;
    out.reserve(hs.size());
    for (const auto& h : hs) out.push_back(h.values());
    return out;
}

}  // namespace tvnet::nn
