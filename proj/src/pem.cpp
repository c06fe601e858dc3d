#include "tvnet/pem.hpp"

#include <algorithm>
#include <cmath>

namespace tvnet::pem {

using ag::Tensor;

namespace {

real sample_linear(const std::vector<real>& seq, real pos) {
    real clamped = std::clamp(pos, real(0), static_cast<real>(seq.size() - 1));
    int lo = static_cast<int>(clamped);
    if (lo >= static_cast<int>(seq.size()) - 1) lo = static_cast<int>(seq.size()) - 2;
    if (lo < 0) lo = 0;
    real frac = clamped - lo;
    if (seq.size() == 1) return seq[0];
    return (real(1) - frac) * seq[lo] + frac * seq[lo + 1];
}

void sample_span(const std::vector<real>& seq, real lo, real hi, int count,
                 std::vector<real>& out) {
    for (int i = 0; i < count; ++i) {
        real u = count == 1 ? real(0.5) : static_cast<real>(i) / (count - 1);
        out.push_back(sample_linear(seq, lo + u * (hi - lo)));
    }
}

}  // namespace

std::vector<real> proposal_feature(real start, real end, const std::vector<real>& b_action) {
    require(end > start, "proposal_feature: degenerate proposal");
    require(!b_action.empty(), "proposal_feature: empty actionness sequence");
    real half = (end - start) / 2;
    std::vector<real> out;
    out.reserve(kProposalFeatureSize);
    sample_span(b_action, start - half, start, 8, out);
    sample_span(b_action, start, end, 16, out);
    sample_span(b_action, end, end + half, 8, out);
    return out;
}

PemModel::PemModel(int hidden, std::uint64_t seed) {
    Rng rng(seed);
    fc1_ = nn::LinearLayer(kProposalFeatureSize, hidden, params_, "pem.fc1", rng);
    fc2_ = nn::LinearLayer(hidden, 1, params_, "pem.fc2", rng);
}

Tensor PemModel::forward_batch(const Tensor& profiles) const {
    return ag::sigmoid(fc2_.forward(ag::relu(fc1_.forward(profiles))));
}

real PemModel::score(real start, real end, const std::vector<real>& b_action) const {
    std::vector<real> profile = proposal_feature(start, end, b_action);
    Tensor x = Tensor::constant({1, kProposalFeatureSize}, std::move(profile));
    return forward_batch(x).values()[0];
}

TrainResult pem_train(PemModel& model, const std::vector<TrainingProposal>& proposals,
                      const TrainOptions& opts) {
    require(proposals.size() >= 10,
            "pem_train: need at least 10 training proposals, got " +
                std::to_string(proposals.size()));

    nn::Adam adam(model.params());
    Rng shuffle_rng(derive_seed(opts.seed, "pem.shuffle"));
    std::vector<std::size_t> order(proposals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    int epochs = opts.schedule.total_epochs();
    for (int epoch = 0; epoch < epochs; ++epoch) {
        real lr = opts.schedule.at_epoch(epoch);
        shuffle_rng.shuffle(order);
        double epoch_loss = 0;
        int batches = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += opts.batch_size) {
            std::size_t bn = std::min<std::size_t>(opts.batch_size, order.size() - b0);
            std::vector<real> profiles(bn * kProposalFeatureSize);
            std::vector<real> targets(bn);
            for (std::size_t i = 0; i < bn; ++i) {
                const auto& p = proposals[order[b0 + i]];
                require(p.profile.size() == kProposalFeatureSize, "pem_train: bad profile size");
                std::copy(p.profile.begin(), p.profile.end(),
                          profiles.begin() + i * kProposalFeatureSize);
                targets[i] = p.iou_target;
            }
            Tensor x = Tensor::constant({static_cast<int>(bn), kProposalFeatureSize},
                                        std::move(profiles));
            Tensor pred = model.forward_batch(x);
            Tensor loss = ag::mse_loss(pred, Tensor::constant({static_cast<int>(bn), 1},
                                                              std::move(targets)));
            model.params().zero_grad();
            ag::backward(loss);
            adam.step(lr);
            epoch_loss += loss.scalar();
            ++batches;
        }
        result.epoch_loss.push_back(static_cast<real>(epoch_loss / std::max(1, batches)));
        log_info("pem_train: epoch " + std::to_string(epoch) + " loss " +
                 std::to_string(result.epoch_loss.back()));
    }
    return result;
}

}  // namespace tvnet::pem
