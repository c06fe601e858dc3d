#pragma once

#include <vector>

#include "tvnet/data.hpp"
#include "tvnet/labeling.hpp"
#include "tvnet/layers.hpp"
#include "tvnet/optim.hpp"

namespace tvnet::tem {

struct BoundaryScores {
    std::vector<real> b_start;   // length T, in (0,1)
    std::vector<real> b_end;
    std::vector<real> b_action;
};

// Two 1D-conv branches over the feature sequence: boundary branch emitting
// (b_start, b_end), actionness branch emitting b_action. Same-length padding,
// receptive field 5 frames.
class TemModel {
public:
    TemModel(int in_channels, int hidden_channels, std::uint64_t seed);

    // Batched forward over stacked sequences, time-major (B, T*C); returns the
    // three score maps as graph tensors of shape (B, T) each.
    struct Heads {
        ag::Tensor start, end, action;
    };
    Heads forward_batch(const ag::Tensor& input, int t_frames) const;

    BoundaryScores forward(const data::FeatureSequence& features) const;

    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }
    int in_channels() const { return in_channels_; }

private:
    int in_channels_;
    nn::ParameterSet params_;
    nn::Conv1dLayer boundary_conv1_, boundary_conv2_, boundary_head_;
    nn::Conv1dLayer action_conv1_, action_conv2_, action_head_;
};

struct TrainOptions {
    nn::LrSchedule schedule;
    int batch_videos = 16;
    std::uint64_t seed = 1;
    real pos_weight_cap = real(100);
};

struct TrainResult {
    std::vector<real> epoch_loss;  // mean per epoch
};

// Class-balanced BCE on the three heads, labels from make_tem_labels.
TrainResult tem_train(TemModel& model,
                      const std::map<std::string, data::AnnotationSet>& annotations,
                      const std::map<std::string, data::FeatureSequence>& features,
                      const TrainOptions& opts);

// out[t][c] = features[t][c] * b_action[t].
data::FeatureSequence suppress_background(const data::FeatureSequence& features,
                                          const std::vector<real>& b_action);

// #neg/#pos clamped to [0.01, cap]; cap applies when a batch has no positives.
real balanced_pos_weight(const std::vector<real>& labels, real cap);

}  // namespace tvnet::tem
