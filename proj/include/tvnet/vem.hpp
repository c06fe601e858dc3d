#pragma once

#include <vector>

#include "tvnet/data.hpp"
#include "tvnet/labeling.hpp"
#include "tvnet/layers.hpp"
#include "tvnet/optim.hpp"

namespace tvnet::vem {

enum class EncoderKind {
    lstm,  // conv stack + LSTM + per-step head (the full model)
    srf,   // receptive field 1: shared per-frame linear head, no recurrence
    sll    // single linear layer over the whole window
};

EncoderKind encoder_kind_from_string(const std::string& s);
std::string to_string(EncoderKind kind);

// Per-frame accumulated boundary evidence.
struct VotingScores {
    std::vector<real> v_start;
    std::vector<real> v_end;
    std::vector<int> window_lengths_used;
    bool normalized = false;
};

// Relative-distance predictions, one row per stride-1 window position.
struct WindowPredictions {
    int window_length = 0;
    int num_windows = 0;
    std::vector<std::vector<real>> values;  // [window][J], in (-1,1)
};

// One boundary side's window encoder (start and end sides are separate full
// encoders trained independently).
class VemEncoder {
public:
    VemEncoder(int in_channels, int window_length, EncoderKind kind, int conv_channels,
               int lstm_hidden, std::uint64_t seed);

    // windows: (B, J*C) time-major; returns (B, J) predictions in (-1,1).
    ag::Tensor forward_batch(const ag::Tensor& windows) const;

    int window_length() const { return window_length_; }
    int in_channels() const { return in_channels_; }
    EncoderKind kind() const { return kind_; }
    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }

private:
    int in_channels_;
    int window_length_;
    EncoderKind kind_;
    nn::ParameterSet params_;
    nn::Conv1dLayer conv1_, conv2_;
    nn::LstmLayer lstm_;
    nn::LinearLayer head_;       // lstm: hidden->1 per step; srf: C->1 per frame
    nn::LinearLayer window_head_;  // sll: J*C -> J
};

// Slide the encoder over every window offset 0..T-J (stride 1 unless given).
WindowPredictions vem_forward(const VemEncoder& encoder, const data::FeatureSequence& suppressed,
                              int stride = 1);

// Eq.-style accumulation: each window casts, at every location it covers,
// the sum of negated predictions at-or-before that location plus predictions
// after it (mirrored for ends). Prefix-sum implementation, O(T*J).
VotingScores accumulate_votes(const WindowPredictions& start_preds,
                              const WindowPredictions& end_preds, int t_frames);

// Min-max normalize each side to [0,1]; constant side becomes all zeros with
// a warning.
VotingScores normalize_scores(const VotingScores& scores);

enum class ScaleFusion { minmax_mean, sum };

// Combine voting scores from different window lengths: normalize each, then
// average elementwise (or raw sum when configured).
VotingScores fuse_window_scales(const std::vector<VotingScores>& scales,
                                ScaleFusion mode = ScaleFusion::minmax_mean);
VotingScores fuse_window_scales(const VotingScores& a, const VotingScores& b,
                                ScaleFusion mode = ScaleFusion::minmax_mean);

struct TrainOptions {
    nn::LrSchedule schedule;
    int batch_windows = 512;
    std::uint64_t seed = 1;
};

struct TrainResult {
    std::vector<real> epoch_loss;
};

// Window-level MSE against relative-distance labels; windows are shuffled
// across videos every epoch. side selects r_start or r_end targets.
enum class Side { start, end };

struct VideoWindows {
    const data::FeatureSequence* features;  // suppressed features
    std::vector<labeling::WindowLabels> labels;
};

TrainResult vem_train(VemEncoder& encoder, Side side, const std::vector<VideoWindows>& dataset,
                      const TrainOptions& opts);

}  // namespace tvnet::vem
