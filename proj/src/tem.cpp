#include "tvnet/tem.hpp"

#include <algorithm>
#include <cmath>

namespace tvnet::tem {

using ag::Tensor;

TemModel::TemModel(int in_channels, int hidden_channels, std::uint64_t seed)
    : in_channels_(in_channels) {
    Rng rng(seed);
    boundary_conv1_ = nn::Conv1dLayer(in_channels, hidden_channels, 3, 1, 1, params_,
                                      "tem.boundary.conv1", rng);
    boundary_conv2_ = nn::Conv1dLayer(hidden_channels, hidden_channels, 3, 1, 1, params_,
                                      "tem.boundary.conv2", rng);
    boundary_head_ = nn::Conv1dLayer(hidden_channels, 2, 1, 1, 0, params_,
                                     "tem.boundary.head", rng);
    action_conv1_ = nn::Conv1dLayer(in_channels, hidden_channels, 3, 1, 1, params_,
                                    "tem.action.conv1", rng);
    action_conv2_ = nn::Conv1dLayer(hidden_channels, hidden_channels, 3, 1, 1, params_,
                                    "tem.action.conv2", rng);
    action_head_ = nn::Conv1dLayer(hidden_channels, 1, 1, 1, 0, params_, "tem.action.head", rng);
}

TemModel::Heads TemModel::forward_batch(const Tensor& input, int t_frames) const {
    using namespace ag;
    int batch = input.rows();

    Tensor hb = relu(boundary_conv1_.forward_batch(input, t_frames));
    hb = relu(boundary_conv2_.forward_batch(hb, t_frames));
    Tensor se = sigmoid(boundary_head_.forward_batch(hb, t_frames));  // (B, T*2)
    // Deinterleave the two channels: column j*2 is start, j*2+1 is end.
    Tensor se_rows = reshape(se, {batch * t_frames, 2});
    Tensor start = reshape(slice_cols(se_rows, 0, 1), {batch, t_frames});
    Tensor end = reshape(slice_cols(se_rows, 1, 2), {batch, t_frames});

    Tensor ha = relu(action_conv1_.forward_batch(input, t_frames));
    ha = relu(action_conv2_.forward_batch(ha, t_frames));
    Tensor action = reshape(sigmoid(action_head_.forward_batch(ha, t_frames)), {batch, t_frames});
    return {start, end, action};
}

BoundaryScores TemModel::forward(const data::FeatureSequence& features) const {
    require(features.C == in_channels_,
            "tem: feature sequence has C=" + std::to_string(features.C) + ", model expects " +
                std::to_string(in_channels_));
    Tensor input = Tensor::constant({1, features.T * features.C}, features.values);
    Heads heads = forward_batch(input, features.T);
    return {heads.start.values(), heads.end.values(), heads.action.values()};
}

real balanced_pos_weight(const std::vector<real>& labels, real cap) {
    double pos = 0;
    for (real v : labels) pos += static_cast<double>(v);
    double neg = static_cast<double>(labels.size()) - pos;
    if (pos <= 0) return cap;
    return std::clamp(static_cast<real>(neg / pos), real(0.01), cap);
}

TrainResult tem_train(TemModel& model,
                      const std::map<std::string, data::AnnotationSet>& annotations,
                      const std::map<std::string, data::FeatureSequence>& features,
                      const TrainOptions& opts) {
    require(!features.empty(), "tem_train: empty dataset");
    std::vector<const data::FeatureSequence*> seqs;
    std::vector<labeling::FrameLabels> labels;
    int t_frames = -1;
    for (const auto& [vid, feat] : features) {
        auto ait = annotations.find(vid);
        require(ait != annotations.end(), "tem_train: no annotations for " + vid);
        if (t_frames < 0) t_frames = feat.T;
        require(feat.T == t_frames, "tem_train: inconsistent sequence lengths");
        seqs.push_back(&feat);
        labels.push_back(labeling::make_tem_labels(ait->second, feat.T, feat.frame_rate_ratio));
    }

    nn::Adam adam(model.params());
    Rng shuffle_rng(derive_seed(opts.seed, "tem.shuffle"));
    TrainResult result;

    int n = static_cast<int>(seqs.size());
    int c = seqs[0]->C;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    int epochs = opts.schedule.total_epochs();
    for (int epoch = 0; epoch < epochs; ++epoch) {
        real lr = opts.schedule.at_epoch(epoch);
        shuffle_rng.shuffle(order);
        double epoch_loss = 0;
        int batches = 0;
        for (int b0 = 0; b0 < n; b0 += opts.batch_videos) {
            int bn = std::min(opts.batch_videos, n - b0);
            std::vector<real> input(static_cast<std::size_t>(bn) * t_frames * c);
            std::vector<real> y_start(static_cast<std::size_t>(bn) * t_frames);
            std::vector<real> y_end(y_start.size()), y_action(y_start.size());
            for (int i = 0; i < bn; ++i) {
                const auto& feat = *seqs[order[b0 + i]];
                std::copy(feat.values.begin(), feat.values.end(),
                          input.begin() + static_cast<std::size_t>(i) * t_frames * c);
                const auto& lab = labels[order[b0 + i]];
                std::copy(lab.start_label.begin(), lab.start_label.end(),
                          y_start.begin() + static_cast<std::size_t>(i) * t_frames);
                std::copy(lab.end_label.begin(), lab.end_label.end(),
                          y_end.begin() + static_cast<std::size_t>(i) * t_frames);
                std::copy(lab.action_label.begin(), lab.action_label.end(),
                          y_action.begin() + static_cast<std::size_t>(i) * t_frames);
            }

            Tensor x = Tensor::constant({bn, t_frames * c}, std::move(input));
            auto heads = model.forward_batch(x, t_frames);
            Tensor ls = ag::weighted_bce_loss(heads.start,
                                              Tensor::constant({bn, t_frames}, y_start),
                                              balanced_pos_weight(y_start, opts.pos_weight_cap));
            Tensor le = ag::weighted_bce_loss(heads.end,
                                              Tensor::constant({bn, t_frames}, y_end),
                                              balanced_pos_weight(y_end, opts.pos_weight_cap));
            Tensor la = ag::weighted_bce_loss(heads.action,
                                              Tensor::constant({bn, t_frames}, y_action),
                                              balanced_pos_weight(y_action, opts.pos_weight_cap));
            Tensor loss = ag::add(ag::add(ls, le), la);

            model.params().zero_grad();
            ag::backward(loss);
            adam.step(lr);
            epoch_loss += loss.scalar();
            ++batches;
        }
        result.epoch_loss.push_back(static_cast<real>(epoch_loss / std::max(1, batches)));
        log_info("tem_train: epoch " + std::to_string(epoch) + " loss " +
                 std::to_string(result.epoch_loss.back()) + " lr " + std::to_string(lr));
    }
    return result;
}

data::FeatureSequence suppress_background(const data::FeatureSequence& features,
                                          const std::vector<real>& b_action) {
    require(static_cast<int>(b_action.size()) == features.T,
            "suppress_background: length mismatch");
    data::FeatureSequence out = features;
    for (int t = 0; t < features.T; ++t)
        for (int c = 0; c < features.C; ++c) out.at(t, c) = features.at(t, c) * b_action[t];
    return out;
}

}  // namespace tvnet::tem
