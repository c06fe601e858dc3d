#include "tvnet/vem.hpp"

#include <algorithm>
#include <cmath>

namespace tvnet::vem {

using ag::Tensor;

EncoderKind encoder_kind_from_string(const std::string& s) {
    if (s == "lstm") return EncoderKind::lstm;
    if (s == "srf") return EncoderKind::srf;
    if (s == "sll") return EncoderKind::sll;
    throw std::runtime_error("vem: unknown encoder kind '" + s + "' (lstm|srf|sll)");
}

std::string to_string(EncoderKind kind) {
    switch (kind) {
        case EncoderKind::lstm: return "lstm";
        case EncoderKind::srf: return "srf";
        default: return "sll";
    }
}

VemEncoder::VemEncoder(int in_channels, int window_length, EncoderKind kind, int conv_channels,
                       int lstm_hidden, std::uint64_t seed)
    : in_channels_(in_channels), window_length_(window_length), kind_(kind) {
    require(window_length >= 2, "vem: window length must be >= 2");
    Rng rng(seed);
    switch (kind) {
        case EncoderKind::lstm:
            conv1_ = nn::Conv1dLayer(in_channels, conv_channels, 3, 1, 1, params_, "vem.conv1", rng);
            conv2_ = nn::Conv1dLayer(conv_channels, conv_channels, 3, 1, 1, params_, "vem.conv2", rng);
            lstm_ = nn::LstmLayer(conv_channels, lstm_hidden, params_, "vem.lstm", rng);
            head_ = nn::LinearLayer(lstm_hidden, 1, params_, "vem.head", rng);
            break;
        case EncoderKind::srf:
            head_ = nn::LinearLayer(in_channels, 1, params_, "vem.srf_head", rng);
            break;
        case EncoderKind::sll:
            window_head_ = nn::LinearLayer(window_length * in_channels, window_length, params_,
                                           "vem.sll_head", rng);
            break;
    }
}

Tensor VemEncoder::forward_batch(const Tensor& windows) const {
    using namespace ag;
    int batch = windows.rows();
    int j_len = window_length_;
    require(windows.cols() == j_len * in_channels_, "vem: window width mismatch");

    switch (kind_) {
        case EncoderKind::lstm: {
            Tensor h = relu(conv1_.forward_batch(windows, j_len));
            h = relu(conv2_.forward_batch(h, j_len));
            auto states = lstm_.forward_batch(h, j_len);
            std::vector<Tensor> per_step;
            per_step.reserve(states.size());
            for (const auto& s : states) per_step.push_back(head_.forward(s));
            return tanh_op(concat_cols(per_step));
        }
        case EncoderKind::srf: {
            Tensor rows = reshape(windows, {batch * j_len, in_channels_});
            return tanh_op(reshape(head_.forward(rows), {batch, j_len}));
        }
        default:
            return tanh_op(window_head_.forward(windows));
    }
}

WindowPredictions vem_forward(const VemEncoder& encoder, const data::FeatureSequence& suppressed,
                              int stride) {
    require(stride >= 1, "vem_forward: stride must be >= 1");
    int t_frames = suppressed.T;
    int j_len = encoder.window_length();
    int c = suppressed.C;
    require(c == encoder.in_channels(), "vem_forward: channel mismatch");
    require(t_frames >= j_len,
            "vem_forward: sequence length " + std::to_string(t_frames) +
                " is shorter than window length " + std::to_string(j_len) +
                "; pad the sequence first");

    std::vector<int> offsets;
    for (int w = 0; w + j_len <= t_frames; w += stride) offsets.push_back(w);

    std::vector<real> slab(offsets.size() * static_cast<std::size_t>(j_len) * c);
    for (std::size_t i = 0; i < offsets.size(); ++i)
        std::copy(suppressed.values.begin() + static_cast<std::size_t>(offsets[i]) * c,
                  suppressed.values.begin() + static_cast<std::size_t>(offsets[i] + j_len) * c,
                  slab.begin() + i * static_cast<std::size_t>(j_len) * c);

    Tensor windows = Tensor::constant({static_cast<int>(offsets.size()), j_len * c},
                                      std::move(slab));
    Tensor preds = encoder.forward_batch(windows);

    WindowPredictions out;
    out.window_length = j_len;
    out.num_windows = static_cast<int>(offsets.size());
    out.values.resize(offsets.size());
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        out.values[i].assign(preds.values().begin() + i * j_len,
                             preds.values().begin() + (i + 1) * j_len);
    }
    return out;
}

VotingScores accumulate_votes(const WindowPredictions& start_preds,
                              const WindowPredictions& end_preds, int t_frames) {
    require(start_preds.window_length == end_preds.window_length &&
                start_preds.num_windows == end_preds.num_windows,
            "accumulate_votes: start/end prediction layout mismatch");
    int j_len = start_preds.window_length;
    int num_windows = start_preds.num_windows;
    require(num_windows == t_frames - j_len + 1,
            "accumulate_votes: expected stride-1 coverage of the sequence");

    VotingScores out;
    out.v_start.assign(t_frames, real(0));
    out.v_end.assign(t_frames, real(0));
    out.window_lengths_used = {j_len};

    // Window n covering location t at in-window position p (1-based) adds
    //   start: sum_{j<p}(-r_s[j]) + sum_{j>p}(r_s[j])  = S_total - S(p-1) - S(p)
    //   end:   sum_{j<p}(+r_e[j]) + sum_{j>p}(-r_e[j]) = E(p-1) + E(p) - E_total
    // The frame at p itself abstains: the split is symmetric about t, which is
    // what centers the accumulated score on the boundary (cf. the J=3 case
    // [-a,0,a] -> [a,2a,a] with its unique maximum at the zero crossing).
    std::vector<real> s_prefix(j_len + 1), e_prefix(j_len + 1);
    for (int n = 0; n < num_windows; ++n) {
        const auto& rs = start_preds.values[n];
        const auto& re = end_preds.values[n];
        s_prefix[0] = 0;
        e_prefix[0] = 0;
        for (int j = 0; j < j_len; ++j) {
            s_prefix[j + 1] = s_prefix[j] + rs[j];
            e_prefix[j + 1] = e_prefix[j] + re[j];
        }
        for (int p = 1; p <= j_len; ++p) {
            int t = n + p - 1;
            out.v_start[t] += s_prefix[j_len] - s_prefix[p - 1] - s_prefix[p];
            out.v_end[t] += e_prefix[p - 1] + e_prefix[p] - e_prefix[j_len];
        }
    }
    return out;
}

namespace {

std::vector<real> minmax_normalize(const std::vector<real>& v, const char* what) {
    auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
    real mn = *mn_it, mx = *mx_it;
    if (mx <= mn) {
        log_warn(std::string("normalize_scores: constant ") + what +
                 " sequence; normalizing to zeros");
        return std::vector<real>(v.size(), real(0));
    }
    std::vector<real> out(v.size());
    real inv = real(1) / (mx - mn);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mn) * inv;
    return out;
}

}  // namespace

VotingScores normalize_scores(const VotingScores& scores) {
    VotingScores out;
    out.v_start = minmax_normalize(scores.v_start, "v_start");
    out.v_end = minmax_normalize(scores.v_end, "v_end");
    out.window_lengths_used = scores.window_lengths_used;
    out.normalized = true;
    return out;
}

VotingScores fuse_window_scales(const std::vector<VotingScores>& scales, ScaleFusion mode) {
    require(!scales.empty(), "fuse_window_scales: no inputs");
    std::size_t t = scales[0].v_start.size();
    for (const auto& s : scales)
        require(s.v_start.size() == t && s.v_end.size() == t,
                "fuse_window_scales: length mismatch");

    VotingScores out;
    out.v_start.assign(t, real(0));
    out.v_end.assign(t, real(0));
    for (const auto& s : scales) {
        VotingScores term = mode == ScaleFusion::minmax_mean ? normalize_scores(s) : s;
        for (std::size_t i = 0; i < t; ++i) {
            out.v_start[i] += term.v_start[i];
            out.v_end[i] += term.v_end[i];
        }
        out.window_lengths_used.insert(out.window_lengths_used.end(),
                                       s.window_lengths_used.begin(),
                                       s.window_lengths_used.end());
    }
    if (mode == ScaleFusion::minmax_mean) {
        real inv = real(1) / static_cast<real>(scales.size());
        for (auto& v : out.v_start) v *= inv;
        for (auto& v : out.v_end) v *= inv;
        out.normalized = true;
    }
    return out;
}

VotingScores fuse_window_scales(const VotingScores& a, const VotingScores& b, ScaleFusion mode) {
    return fuse_window_scales(std::vector<VotingScores>{a, b}, mode);
}

TrainResult vem_train(VemEncoder& encoder, Side side, const std::vector<VideoWindows>& dataset,
                      const TrainOptions& opts) {
    require(!dataset.empty(), "vem_train: empty dataset");
    int j_len = encoder.window_length();
    int c = encoder.in_channels();

    // Flatten (video, window) pairs once; slabs are gathered per batch.
    struct Item {
        const data::FeatureSequence* feat;
        const labeling::WindowLabels* label;
    };
    std::vector<Item> items;
    for (const auto& vw : dataset) {
        require(vw.features->C == c, "vem_train: channel mismatch");
        for (const auto& wl : vw.labels) {
            require(wl.length == j_len, "vem_train: label window length mismatch");
            items.push_back({vw.features, &wl});
        }
    }
    require(!items.empty(), "vem_train: no windows");

    nn::Adam adam(encoder.params());
    Rng shuffle_rng(derive_seed(opts.seed, side == Side::start ? "vem.start" : "vem.end"));
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    int epochs = opts.schedule.total_epochs();
    for (int epoch = 0; epoch < epochs; ++epoch) {
        real lr = opts.schedule.at_epoch(epoch);
        shuffle_rng.shuffle(order);
        double epoch_loss = 0;
        int batches = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += opts.batch_windows) {
            std::size_t bn = std::min<std::size_t>(opts.batch_windows, order.size() - b0);
            std::vector<real> slab(bn * static_cast<std::size_t>(j_len) * c);
            std::vector<real> target(bn * static_cast<std::size_t>(j_len));
            std::vector<real> weights(bn);
            for (std::size_t i = 0; i < bn; ++i) {
                const Item& item = items[order[b0 + i]];
                int w = item.label->start_index;
                std::copy(item.feat->values.begin() + static_cast<std::size_t>(w) * c,
                          item.feat->values.begin() + static_cast<std::size_t>(w + j_len) * c,
                          slab.begin() + i * static_cast<std::size_t>(j_len) * c);
                const auto& r = side == Side::start ? item.label->r_start : item.label->r_end;
                std::copy(r.begin(), r.end(), target.begin() + i * j_len);
                weights[i] = item.label->weight;
            }
            Tensor windows = Tensor::constant({static_cast<int>(bn), j_len * c}, std::move(slab));
            Tensor preds = encoder.forward_batch(windows);
            Tensor loss = ag::weighted_row_mse(
                preds, Tensor::constant({static_cast<int>(bn), j_len}, std::move(target)), weights);

            encoder.params().zero_grad();
            ag::backward(loss);
            adam.step(lr);
            epoch_loss += loss.scalar();
            ++batches;
        }
        result.epoch_loss.push_back(static_cast<real>(epoch_loss / std::max(1, batches)));
        log_info("vem_train[" + std::string(side == Side::start ? "start" : "end") + ",J=" +
                 std::to_string(j_len) + "]: epoch " + std::to_string(epoch) + " loss " +
                 std::to_string(result.epoch_loss.back()) + " lr " + std::to_string(lr));
    }
    return result;
}

}  // namespace tvnet::vem
