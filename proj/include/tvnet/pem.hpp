#pragma once

#include <vector>

#include "tvnet/data.hpp"
#include "tvnet/layers.hpp"
#include "tvnet/optim.hpp"

namespace tvnet::pem {

// 32-sample actionness profile: 8 samples over the left flank, 16 inside the
// proposal, 8 over the right flank (each flank spans half the proposal
// length). Samples are linear interpolations, positions clamped to [0, T-1].
std::vector<real> proposal_feature(real start, real end, const std::vector<real>& b_action);

constexpr int kProposalFeatureSize = 32;

class PemModel {
public:
    PemModel(int hidden, std::uint64_t seed);

    // (B, 32) profiles -> (B, 1) confidences in (0,1).
    ag::Tensor forward_batch(const ag::Tensor& profiles) const;

    real score(real start, real end, const std::vector<real>& b_action) const;

    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }

private:
    nn::ParameterSet params_;
    nn::LinearLayer fc1_, fc2_;
};

struct TrainingProposal {
    real start, end;
    real iou_target;
    std::vector<real> profile;
};

struct TrainOptions {
    nn::LrSchedule schedule;
    int batch_size = 256;
    std::uint64_t seed = 1;
};

struct TrainResult {
    std::vector<real> epoch_loss;
};

// MSE regression of confidence to IoU targets. Requires at least 10 proposals.
TrainResult pem_train(PemModel& model, const std::vector<TrainingProposal>& proposals,
                      const TrainOptions& opts);

}  // namespace tvnet::pem
