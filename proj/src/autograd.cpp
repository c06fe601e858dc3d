#include "tvnet/autograd.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace tvnet::ag {

namespace {

using EMat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using MapC = Eigen::Map<const EMat>;

MapC as_mat(const Node& n) {
    int r = n.shape.at(0);
    int c = n.shape.size() > 1 ? n.shape[1] : 1;
    return MapC(n.value.data(), r, c);
}

MapM grad_mat(Node& n) {
    n.ensure_grad();
    int r = n.shape.at(0);
    int c = n.shape.size() > 1 ? n.shape[1] : 1;
    return MapM(n.grad.data(), r, c);
}

MapC grad_cmat(const Node& n) {
    int r = n.shape.at(0);
    int c = n.shape.size() > 1 ? n.shape[1] : 1;
    return MapC(n.grad.data(), r, c);
}

std::shared_ptr<Node> make_node(std::vector<int> shape, std::size_t n, bool req) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value.resize(n);
    node->requires_grad = req;
    return node;
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

void check_finite_output(const Node& n, const char* op) {
    for (real v : n.value) {
        if (!std::isfinite(v)) throw std::runtime_error(std::string(op) + ": non-finite output");
    }
}

}  // namespace

bool all_finite(std::span<const real> v) {
    return std::all_of(v.begin(), v.end(), [](real x) { return std::isfinite(x); });
}

Tensor Tensor::constant(std::vector<int> shape, std::vector<real> values) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    require(node->value.size() == node->numel(), "Tensor::constant: size/shape mismatch");
    return Tensor(node);
}

Tensor Tensor::zeros(std::vector<int> shape) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value.assign(node->numel(), real(0));
    return Tensor(node);
}

Tensor Tensor::parameter(std::vector<int> shape, std::vector<real> values, std::string name) {
    Tensor t = constant(std::move(shape), std::move(values));
    t.node()->requires_grad = true;
    t.node()->name = std::move(name);
    t.node()->ensure_grad();
    return t;
}

void backward(const Tensor& loss) {
    require(loss.defined() && loss.numel() == 1, "backward: loss must be a scalar");
    Node* root = loss.node().get();
    if (root->backward_ran)
        throw std::runtime_error("backward: already ran on this graph; re-run forward first");
    if (!std::isfinite(root->value[0]))
        throw std::runtime_error("backward: loss is not finite");
    root->backward_ran = true;

    // Topological order by iterative DFS.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (!visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node* n : order) n->ensure_grad();
    root->grad[0] = real(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

// ---- op helpers ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.shape().size() == 2 && b.shape().size() == 2 && a.cols() == b.rows(),
            "matmul: shape mismatch");
    auto node = make_node({a.rows(), b.cols()},
                          static_cast<std::size_t>(a.rows()) * b.cols(),
                          a.requires_grad() || b.requires_grad());
    MapM(node->value.data(), a.rows(), b.cols()).noalias() = as_mat(*a.node()) * as_mat(*b.node());
    node->parents = {a.node(), b.node()};
    node->backprop = [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        auto g = grad_cmat(n);
        grad_mat(pa).noalias() += g * as_mat(pb).transpose();
        grad_mat(pb).noalias() += as_mat(pa).transpose() * g;
    };
    return Tensor(node);
}

Tensor transpose2d(const Tensor& a) {
    require(a.shape().size() == 2, "transpose2d: rank-2 tensor required");
    auto node = make_node({a.cols(), a.rows()}, a.numel(), a.requires_grad());
    MapM(node->value.data(), a.cols(), a.rows()) = as_mat(*a.node()).transpose();
    node->parents = {a.node()};
    node->backprop = [](Node& n) {
        grad_mat(*n.parents[0]) += grad_cmat(n).transpose();
    };
    return Tensor(node);
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(same_shape(a, b), "add: shape mismatch");
    auto node = make_node(a.shape(), a.numel(), a.requires_grad() || b.requires_grad());
    for (std::size_t i = 0; i < node->value.size(); ++i)
        node->value[i] = a.values()[i] + b.values()[i];
    node->parents = {a.node(), b.node()};
    node->backprop = [](Node& n) {
        for (auto& p : n.parents) {
            p->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) p->grad[i] += n.grad[i];
        }
    };
    return Tensor(node);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require(same_shape(a, b), "sub: shape mismatch");
    auto node = make_node(a.shape(), a.numel(), a.requires_grad() || b.requires_grad());
    for (std::size_t i = 0; i < node->value.size(); ++i)
        node->value[i] = a.values()[i] - b.values()[i];
    node->parents = {a.node(), b.node()};
    node->backprop = [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        pa.ensure_grad();
        pb.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            pa.grad[i] += n.grad[i];
            pb.grad[i] -= n.grad[i];
        }
    };
    return Tensor(node);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require(same_shape(a, b), "mul: shape mismatch");
    auto node = make_node(a.shape(), a.numel(), a.requires_grad() || b.requires_grad());
    for (std::size_t i = 0; i < node->value.size(); ++i)
        node->value[i] = a.values()[i] * b.values()[i];
    node->parents = {a.node(), b.node()};
    node->backprop = [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        pa.ensure_grad();
        pb.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            pa.grad[i] += n.grad[i] * pb.value[i];
            pb.grad[i] += n.grad[i] * pa.value[i];
        }
    };
    return Tensor(node);
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
    require(a.shape().size() == 2 && static_cast<int>(v.numel()) == a.cols(),
            "add_rowvec: vector length must equal column count");
    auto node = make_node(a.shape(), a.numel(), a.requires_grad() || v.requires_grad());
    int rows = a.rows(), cols = a.cols();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            node->value[static_cast<std::size_t>(r) * cols + c] =
                a.values()[static_cast<std::size_t>(r) * cols + c] + v.values()[c];
    node->parents = {a.node(), v.node()};
    node->backprop = [rows, cols](Node& n) {
        Node& pa = *n.parents[0];
        Node& pv = *n.parents[1];
        pa.ensure_grad();
        pv.ensure_grad();
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                real g = n.grad[static_cast<std::size_t>(r) * cols + c];
                pa.grad[static_cast<std::size_t>(r) * cols + c] += g;
                pv.grad[c] += g;
            }
    };
    return Tensor(node);
}

Tensor scale(const Tensor& a, real s) {
    auto node = make_node(a.shape(), a.numel(), a.requires_grad());
    for (std::size_t i = 0; i < node->value.size(); ++i) node->value[i] = a.values()[i] * s;
    node->parents = {a.node()};
    node->backprop = [s](Node& n) {
        Node& pa = *n.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i] * s;
    };
    return Tensor(node);
}

Tensor relu(const Tensor& a) {
    auto node = make_node(a.shape(), a.numel(), a.requires_grad());
    for (std::size_t i = 0; i < node->value.size(); ++i)
        node->value[i] = a.values()[i] > real(0) ? a.values()[i] : real(0);
    node->parents = {a.node()};
    node->backprop = [](Node& n) {
        Node& pa = *n.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (pa.value[i] > real(0)) pa.grad[i] += n.grad[i];
    };
    return Tensor(node);
}

Tensor sigmoid(const Tensor& a) {
    auto node = make_node(a.shape(), a.numel(), a.requires_grad());
    for (std::size_t i = 0; i < node->value.size(); ++i) {
        real x = a.values()[i];
        // Stable in both tails.
        node->value[i] = x >= real(0) ? real(1) / (real(1) + std::exp(-x))
                                      : std::exp(x) / (real(1) + std::exp(x));
    }
    node->parents = {a.node()};
    node->backprop = [](Node& n) {
        Node& pa = *n.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            real y = n.value[i];
            pa.grad[i] += n.grad[i] * y * (real(1) - y);
        }
    };
    return Tensor(node);
}

Tensor tanh_op(const Tensor& a) {
    auto node = make_node(a.shape(), a.numel(), a.requires_grad());
    for (std::size_t i = 0; i < node->value.size(); ++i) node->value[i] = std::tanh(a.values()[i]);
    node->parents = {a.node()};
    node->backprop = [](Node& n) {
        Node& pa = *n.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            real y = n.value[i];
            pa.grad[i] += n.grad[i] * (real(1) - y * y);
        }
    };
    return Tensor(node);
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
    require(a.shape().size() == 2 && 0 <= c0 && c0 < c1 && c1 <= a.cols(),
            "slice_cols: bad column range");
    int rows = a.rows(), cols = a.cols(), w = c1 - c0;
    auto node = make_node({rows, w}, static_cast<std::size_t>(rows) * w, a.requires_grad());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < w; ++c)
            node->value[static_cast<std::size_t>(r) * w + c] =
                a.values()[static_cast<std::size_t>(r) * cols + c0 + c];
    node->parents = {a.node()};
    node->backprop = [rows, cols, c0, w](Node& n) {
        Node& pa = *n.parents[0];
        pa.ensure_grad();
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < w; ++c)
                pa.grad[static_cast<std::size_t>(r) * cols + c0 + c] +=
                    n.grad[static_cast<std::size_t>(r) * w + c];
    };
    return Tensor(node);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_cols: empty input");
    int rows = parts[0].rows();
    int total = 0;
    bool req = false;
    for (const auto& p : parts) {
        require(p.shape().size() == 2 && p.rows() == rows, "concat_cols: row mismatch");
        total += p.cols();
        req = req || p.requires_grad();
    }
    auto node = make_node({rows, total}, static_cast<std::size_t>(rows) * total, req);
    std::vector<int> offsets;
    int off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        int w = p.cols();
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < w; ++c)
                node->value[static_cast<std::size_t>(r) * total + off + c] =
                    p.values()[static_cast<std::size_t>(r) * w + c];
        off += w;
        node->parents.push_back(p.node());
    }
    node->backprop = [rows, total, offsets](Node& n) {
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
            Node& p = *n.parents[k];
            p.ensure_grad();
            int w = p.shape[1];
            int off = offsets[k];
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < w; ++c)
                    p.grad[static_cast<std::size_t>(r) * w + c] +=
                        n.grad[static_cast<std::size_t>(r) * total + off + c];
        }
    };
    return Tensor(node);
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
    auto node = make_node(std::move(shape), a.numel(), a.requires_grad());
    require(node->numel() == a.numel(), "reshape: element count mismatch");
    node->value = a.values();
    node->parents = {a.node()};
    node->backprop = [](Node& n) {
        Node& pa = *n.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i];
    };
    return Tensor(node);
}

Tensor sum_all(const Tensor& a) {
    auto node = make_node({1}, 1, a.requires_grad());
    real s = 0;
    for (real v : a.values()) s += v;
    node->value[0] = s;
    node->parents = {a.node()};
    node->backprop = [](Node& n) {
        Node& pa = *n.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += n.grad[0];
    };
    return Tensor(node);
}

Tensor mean_all(const Tensor& a) {
    return scale(sum_all(a), real(1) / static_cast<real>(a.numel()));
}

Tensor conv1d_batch(const Tensor& input, int length, int in_channels,
                    const Tensor& weights, const Tensor& bias,
                    int kernel, int stride, int padding) {
    require(input.shape().size() == 2 && input.cols() == length * in_channels,
            "conv1d_batch: input width must be length*in_channels");
    require(weights.rows() > 0 && weights.cols() == in_channels * kernel,
            "conv1d_batch: weight shape must be (out_channels, in_channels*kernel)");
    int out_channels = weights.rows();
    require(static_cast<int>(bias.numel()) == out_channels, "conv1d_batch: bias size mismatch");
    int out_len = conv1d_out_length(length, kernel, stride, padding);
    require(out_len > 0, "conv1d_batch: non-positive output length");

    int batch = input.rows();
    std::size_t im_rows = static_cast<std::size_t>(batch) * out_len;
    int im_cols = in_channels * kernel;

    // im2col gather, shared between forward (value) and backward (cached).
    auto cols = std::make_shared<std::vector<real>>(im_rows * im_cols, real(0));
    const auto& in = input.values();
    for (int b = 0; b < batch; ++b) {
        for (int t = 0; t < out_len; ++t) {
            real* dst = cols->data() + (static_cast<std::size_t>(b) * out_len + t) * im_cols;
            int t0 = t * stride - padding;
            for (int k = 0; k < kernel; ++k) {
                int src_t = t0 + k;
                if (src_t < 0 || src_t >= length) continue;
                const real* src = in.data() +
                                  static_cast<std::size_t>(b) * length * in_channels +
                                  static_cast<std::size_t>(src_t) * in_channels;
                for (int c = 0; c < in_channels; ++c) dst[c * kernel + k] = src[c];
            }
        }
    }

    auto node = make_node({batch, out_len * out_channels},
                          static_cast<std::size_t>(batch) * out_len * out_channels,
                          input.requires_grad() || weights.requires_grad() || bias.requires_grad());
    {
        MapC im(cols->data(), static_cast<Eigen::Index>(im_rows), im_cols);
        MapC w(weights.values().data(), out_channels, im_cols);
        MapM out(node->value.data(), static_cast<Eigen::Index>(im_rows), out_channels);
        out.noalias() = im * w.transpose();
        for (std::size_t r = 0; r < im_rows; ++r)
            for (int o = 0; o < out_channels; ++o)
                node->value[r * out_channels + o] += bias.values()[o];
    }

    node->parents = {input.node(), weights.node(), bias.node()};
    node->backprop = [cols, batch, length, in_channels, out_channels, out_len, kernel, stride,
                      padding, im_cols](Node& n) {
        Node& pin = *n.parents[0];
        Node& pw = *n.parents[1];
        Node& pb = *n.parents[2];
        std::size_t im_rows = static_cast<std::size_t>(batch) * out_len;
        MapC g(n.grad.data(), static_cast<Eigen::Index>(im_rows), out_channels);

        pb.ensure_grad();
        for (std::size_t r = 0; r < im_rows; ++r)
            for (int o = 0; o < out_channels; ++o) pb.grad[o] += n.grad[r * out_channels + o];
        {
            pw.ensure_grad();
            MapC im(cols->data(), static_cast<Eigen::Index>(im_rows), im_cols);
            MapM gw(pw.grad.data(), out_channels, im_cols);
            gw.noalias() += g.transpose() * im;
        }
        {
            pin.ensure_grad();
            // d(im2col) = g * W, then scatter-add back through the gather.
            EMat gcols(static_cast<Eigen::Index>(im_rows), im_cols);
            MapC w(pw.value.data(), out_channels, im_cols);
            gcols.noalias() = g * w;
            for (int b = 0; b < batch; ++b) {
                for (int t = 0; t < out_len; ++t) {
                    const real* src = gcols.data() +
                                      (static_cast<std::size_t>(b) * out_len + t) * im_cols;
                    int t0 = t * stride - padding;
                    for (int k = 0; k < kernel; ++k) {
                        int dst_t = t0 + k;
                        if (dst_t < 0 || dst_t >= length) continue;
                        real* dst = pin.grad.data() +
                                    static_cast<std::size_t>(b) * length * in_channels +
                                    static_cast<std::size_t>(dst_t) * in_channels;
                        for (int c = 0; c < in_channels; ++c) dst[c] += src[c * kernel + k];
                    }
                }
            }
        }
    };
    check_finite_output(*node, "conv1d_batch");
    return Tensor(node);
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    require(same_shape(pred, target), "mse_loss: shape mismatch");
    Tensor d = sub(pred, target);
    return mean_all(mul(d, d));
}

Tensor weighted_row_mse(const Tensor& pred, const Tensor& target,
                        const std::vector<real>& row_weights) {
    require(same_shape(pred, target), "weighted_row_mse: shape mismatch");
    require(static_cast<int>(row_weights.size()) == pred.rows(),
            "weighted_row_mse: weight count mismatch");
    real wsum = 0;
    for (real w : row_weights) wsum += w;
    require(wsum > 0, "weighted_row_mse: weights sum to zero");
    int cols = pred.cols();
    std::vector<real> w(pred.numel());
    for (int r = 0; r < pred.rows(); ++r)
        for (int c = 0; c < cols; ++c)
            w[static_cast<std::size_t>(r) * cols + c] =
                row_weights[r] / (wsum * static_cast<real>(cols));
    Tensor d = sub(pred, target);
    return sum_all(mul(mul(d, d), Tensor::constant(pred.shape(), std::move(w))));
}

Tensor weighted_bce_loss(const Tensor& pred, const Tensor& labels, real pos_weight) {
    require(same_shape(pred, labels), "weighted_bce_loss: shape mismatch");
    require(pos_weight > 0, "weighted_bce_loss: pos_weight must be positive");
    constexpr real eps = real(1e-7);
    std::size_t n = pred.numel();

    auto node = make_node({1}, 1, pred.requires_grad());
    real acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        real p = std::clamp(pred.values()[i], eps, real(1) - eps);
        real y = labels.values()[i];
        acc -= pos_weight * y * std::log(p) + (real(1) - y) * std::log(real(1) - p);
    }
    node->value[0] = acc / static_cast<real>(n);
    node->parents = {pred.node(), labels.node()};
    node->backprop = [pos_weight, n](Node& nd) {
        constexpr real eps = real(1e-7);
        Node& pp = *nd.parents[0];
        const Node& pl = *nd.parents[1];
        pp.ensure_grad();
        real g = nd.grad[0] / static_cast<real>(n);
        for (std::size_t i = 0; i < n; ++i) {
            real p = pp.value[i];
            if (p <= eps || p >= real(1) - eps) continue;  // clamped region: zero slope
            real y = pl.value[i];
            pp.grad[i] += g * (-pos_weight * y / p + (real(1) - y) / (real(1) - p));
        }
    };
    return Tensor(node);
}

}  // namespace tvnet::ag
