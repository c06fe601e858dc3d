#include "tvnet/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "tvnet/eval.hpp"

namespace tvnet::proposals {

std::vector<int> local_maxima_above(const std::vector<real>& v, real xi) {
    std::vector<int> out;
    int n = static_cast<int>(v.size());
    for (int t = 0; t < n; ++t) {
        if (v[t] < xi) continue;
        bool left_ok = (t == 0) || v[t] > v[t - 1];       // strict: plateau keeps leftmost
        bool right_ok = (t == n - 1) || v[t] >= v[t + 1];
        if (left_ok && right_ok) out.push_back(t);
    }
    return out;
}

Candidates extract_candidates(const vem::VotingScores& scores, real xi) {
    require(xi >= 0 && xi < 1, "extract_candidates: xi must be in [0,1)");
    vem::VotingScores norm = vem::normalize_scores(scores);
    Candidates out;
    out.norm_start = norm.v_start;
    out.norm_end = norm.v_end;
    for (int t : local_maxima_above(norm.v_start, xi))
        out.starts.push_back({t, norm.v_start[t], real(0)});
    for (int t : local_maxima_above(norm.v_end, xi))
        out.ends.push_back({t, norm.v_end[t], real(0)});
    return out;
}

std::vector<std::pair<int, int>> pair_proposals(const std::vector<CandidateBoundary>& starts,
                                                const std::vector<CandidateBoundary>& ends,
                                                int tau) {
    std::vector<std::pair<int, int>> out;
    for (const auto& s : starts)
        for (const auto& e : ends) {
            if (s.t >= e.t) continue;
            if (e.t - s.t > tau) continue;
            out.emplace_back(s.t, e.t);
        }
    return out;
}

real fuse_confidence(real v_start, real v_end, real b_start, real b_end, real pem_score,
                     real alpha, FusionMode mode) {
    switch (mode) {
        case FusionMode::voting_only:
            return v_start * v_end * pem_score;
        case FusionMode::boundary_only:
            return b_start * b_end * pem_score;
        default:
            return (v_start + alpha * b_start) * (v_end + alpha * b_end) * pem_score;
    }
}

namespace {

double proposal_iou(const ScoredProposal& a, const ScoredProposal& b) {
    return eval::temporal_iou(a.start, a.end, b.start, b.end);
}

}  // namespace

std::vector<ScoredProposal> soft_nms(std::vector<ScoredProposal> proposals, real sigma, int top_k) {
    require(sigma > 0, "soft_nms: sigma must be positive");
    for (const auto& p : proposals)
        require(std::isfinite(p.score), "soft_nms: non-finite proposal score");

    std::vector<ScoredProposal> selected;
    selected.reserve(std::min<std::size_t>(proposals.size(), top_k));
    std::vector<bool> taken(proposals.size(), false);
    std::size_t remaining = proposals.size();
    while (remaining > 0 && static_cast<int>(selected.size()) < top_k) {
        std::size_t best = 0;
        real best_score = -std::numeric_limits<real>::infinity();
        for (std::size_t i = 0; i < proposals.size(); ++i) {
            if (taken[i]) continue;
            if (proposals[i].score > best_score) {
                best_score = proposals[i].score;
                best = i;
            }
        }
        taken[best] = true;
        --remaining;
        selected.push_back(proposals[best]);
        for (std::size_t i = 0; i < proposals.size(); ++i) {
            if (taken[i]) continue;
            double iou = proposal_iou(proposals[best], proposals[i]);
            if (iou > 0)
                proposals[i].score *= static_cast<real>(std::exp(-(iou * iou) / sigma));
        }
    }
    return selected;
}

std::vector<ScoredProposal> dedup_keep_best(std::vector<ScoredProposal> proposals) {
    std::map<std::pair<int, int>, ScoredProposal> best;
    for (const auto& p : proposals) {
        auto key = std::make_pair(p.start, p.end);
        auto it = best.find(key);
        if (it == best.end() || p.score > it->second.score) best[key] = p;
    }
    std::vector<ScoredProposal> out;
    out.reserve(best.size());
    for (auto& [k, p] : best) out.push_back(p);
    std::stable_sort(out.begin(), out.end(),
                     [](const ScoredProposal& a, const ScoredProposal& b) {
                         return a.score > b.score;
                     });
    return out;
}

data::PredictionSet assign_classes(const data::PredictionSet& preds,
                                   const data::AnnotationSet& ann, int top_c) {
    require(top_c >= 1, "assign_classes: top_c must be >= 1");
    data::PredictionSet out;
    out.video_id = preds.video_id;
    if (ann.video_level_classes.empty()) {
        log_warn("assign_classes: " + preds.video_id + " has no video-level classes");
        out.proposals = preds.proposals;
        for (auto& p : out.proposals) p.label = "unknown";
        return out;
    }
    int use = std::min<int>(top_c, static_cast<int>(ann.video_level_classes.size()));
    for (const auto& p : preds.proposals) {
        for (int c = 0; c < use; ++c) {
            data::Prediction q = p;
            q.label = ann.video_level_classes[c].label;
            q.score = p.score * ann.video_level_classes[c].score;
            out.proposals.push_back(std::move(q));
        }
    }
    std::stable_sort(out.proposals.begin(), out.proposals.end(),
                     [](const data::Prediction& a, const data::Prediction& b) {
                         return a.score > b.score;
                     });
    return out;
}

}  // namespace tvnet::proposals
