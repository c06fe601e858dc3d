#pragma once

#include <vector>

#include "tvnet/data.hpp"
#include "tvnet/vem.hpp"

namespace tvnet::proposals {

struct CandidateBoundary {
    int t = 0;
    real voting = 0;  // normalized voting score at t
    real naive = 0;   // TEM boundary score at t
};

struct Candidates {
    std::vector<CandidateBoundary> starts;
    std::vector<CandidateBoundary> ends;
    std::vector<real> norm_start;  // normalized voting sequences (for Eq. reuse)
    std::vector<real> norm_end;
};

// Local maxima of the min-max normalized voting sequences at or above xi.
// Sequence ends use a one-sided test; plateaus contribute their leftmost
// index. Normalization happens inside; candidates carry normalized scores.
Candidates extract_candidates(const vem::VotingScores& scores, real xi);

// Exposed for tests: indices t with v[t] >= xi that are (plateau-leftmost)
// local maxima of v.
std::vector<int> local_maxima_above(const std::vector<real>& v, real xi);

// All (start, end) combinations with start < end and end - start <= tau.
std::vector<std::pair<int, int>> pair_proposals(const std::vector<CandidateBoundary>& starts,
                                                const std::vector<CandidateBoundary>& ends,
                                                int tau);

enum class FusionMode { full, voting_only, boundary_only };

struct ScoredProposal {
    int start = 0;
    int end = 0;
    real score = 0;
    // Fusion components.
    real v_start = 0, v_end = 0;
    real b_start = 0, b_end = 0;
    real pem = 1;
};

// Confidence fusion: (v_s + alpha*b_s) * (v_e + alpha*b_e) * p. voting_only
// drops the boundary terms, boundary_only drops the voting terms.
real fuse_confidence(real v_start, real v_end, real b_start, real b_end, real pem_score,
                     real alpha, FusionMode mode = FusionMode::full);

// Gaussian Soft-NMS: repeatedly select the best remaining proposal and decay
// every other score by exp(-iou^2 / sigma); stop after top_k selections.
// Scores in the result are the decayed scores, sorted descending.
std::vector<ScoredProposal> soft_nms(std::vector<ScoredProposal> proposals, real sigma,
                                     int top_k);

// Duplicate (start,end) pairs keep the max score.
std::vector<ScoredProposal> dedup_keep_best(std::vector<ScoredProposal> proposals);

// Expand each proposal with the top-c video-level classes, multiplying the
// confidence by the class score. Empty class list labels "unknown".
data::PredictionSet assign_classes(const data::PredictionSet& preds,
                                   const data::AnnotationSet& ann, int top_c);

}  // namespace tvnet::proposals
