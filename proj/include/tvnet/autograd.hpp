#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tvnet/common.hpp"

namespace tvnet::ag {

// Reverse-mode tape over flat row-major tensors. Rank is 1 or 2; higher-rank
// data (batch x time x channel) is carried as 2-D with the trailing axes
// flattened, which keeps every op a matrix or elementwise kernel.
class Tensor;

struct Node {
    std::vector<int> shape;
    std::vector<real> value;
    std::vector<real> grad;       // same length as value once backward touches it
    bool requires_grad = false;
    bool backward_ran = false;    // set on the root after backward()
    std::string name;             // parameters only
    std::vector<std::shared_ptr<Node>> parents;
    // Accumulates this node's grad into its parents' grads.
    std::function<void(Node&)> backprop;

    std::size_t numel() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), real(0));
    }
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Tensor constant(std::vector<int> shape, std::vector<real> values);
    static Tensor zeros(std::vector<int> shape);
    // Trainable leaf; grad is allocated up front so unused parameters read back zero.
    static Tensor parameter(std::vector<int> shape, std::vector<real> values, std::string name);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    int rows() const { return node_->shape.at(0); }
    int cols() const { return node_->shape.size() > 1 ? node_->shape[1] : 1; }
    std::size_t numel() const { return node_->numel(); }
    std::vector<real>& values() { return node_->value; }
    const std::vector<real>& values() const { return node_->value; }
    std::vector<real>& grad() { node_->ensure_grad(); return node_->grad; }
    const std::string& name() const { return node_->name; }
    bool requires_grad() const { return node_->requires_grad; }
    std::shared_ptr<Node> node() const { return node_; }

    real scalar() const {
        require(numel() == 1, "Tensor::scalar: tensor is not a scalar");
        return node_->value[0];
    }

    void zero_grad() { node_->grad.assign(node_->value.size(), real(0)); }

private:
    std::shared_ptr<Node> node_;
};

// Runs reverse-mode accumulation from a scalar loss. Throws if the loss is not
// scalar, not finite, or if backward already ran on this node.
void backward(const Tensor& loss);

// ---- primitive ops ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k) x (k,n) -> (m,n)
Tensor transpose2d(const Tensor& a);                 // (m,n) -> (n,m)
Tensor add(const Tensor& a, const Tensor& b);        // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise
Tensor add_rowvec(const Tensor& a, const Tensor& v); // (m,n) + (n) broadcast over rows
Tensor scale(const Tensor& a, real s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor slice_cols(const Tensor& a, int c0, int c1);  // columns [c0, c1)
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor sum_all(const Tensor& a);                     // -> scalar
Tensor mean_all(const Tensor& a);                    // -> scalar

// Batched temporal cross-correlation. Input is (batch, length*in_channels)
// row-major with time outer, channels inner; output is (batch,
// out_length*out_channels) in the same layout. Implemented as im2col + matmul.
// weights: (out_channels, in_channels*kernel), bias: (out_channels).
Tensor conv1d_batch(const Tensor& input, int length, int in_channels,
                    const Tensor& weights, const Tensor& bias,
                    int kernel, int stride, int padding);

inline int conv1d_out_length(int length, int kernel, int stride, int padding) {
    return (length + 2 * padding - kernel) / stride + 1;
}

// ---- losses -----------------------------------------------------------------

// Mean of squared differences over all elements.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

// Per-row mean squared error weighted per row, normalized by sum of weights.
// pred/target: (B, J); row_weights: length B.
Tensor weighted_row_mse(const Tensor& pred, const Tensor& target,
                        const std::vector<real>& row_weights);

// Class-balanced binary cross-entropy. Predictions are clamped to
// [1e-7, 1-1e-7]; pos_weight multiplies the positive-label terms. Elementwise
// weights (optional) mask or rebalance individual entries before the mean.
Tensor weighted_bce_loss(const Tensor& pred, const Tensor& labels, real pos_weight);

bool all_finite(std::span<const real> v);

}  // namespace tvnet::ag
