// Independent reference implementations used to cross-check the library.
// Everything here is written as literally as possible (plain loops, no shared
// code with the implementations under test).
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tvnet/common.hpp"
#include "tvnet/data.hpp"
#include "tvnet/eval.hpp"
#include "tvnet/proposals.hpp"

namespace oracles {

using tvnet::real;

// Five-loop 1D cross-correlation, channels-first in/out.
inline std::vector<std::vector<real>> naive_conv1d(
    const std::vector<std::vector<std::vector<real>>>& weights,  // [out][in][k]
    const std::vector<real>& bias, const std::vector<std::vector<real>>& input,  // [in][L]
    int stride, int padding) {
    int out_channels = static_cast<int>(weights.size());
    int in_channels = static_cast<int>(input.size());
    int kernel = static_cast<int>(weights[0][0].size());
    int length = static_cast<int>(input[0].size());
    int out_len = (length + 2 * padding - kernel) / stride + 1;

    std::vector<std::vector<real>> out(out_channels, std::vector<real>(out_len, real(0)));
    for (int o = 0; o < out_channels; ++o)
        for (int t = 0; t < out_len; ++t) {
            real acc = bias[o];
            for (int c = 0; c < in_channels; ++c)
                for (int k = 0; k < kernel; ++k) {
                    int src = t * stride - padding + k;
                    if (src < 0 || src >= length) continue;
                    acc += weights[o][c][k] * input[c][src];
                }
            out[o][t] = acc;
        }
    return out;
}

// Scalar LSTM recurrence, gate order input/forget/cell/output.
struct ScalarLstm {
    int input_size, hidden_size;
    std::vector<std::vector<real>> w_input;   // [4H][input]
    std::vector<std::vector<real>> w_hidden;  // [4H][hidden]
    std::vector<real> bias;                   // [4H]

    static real sig(real x) { return real(1) / (real(1) + std::exp(-x)); }

    std::vector<std::vector<real>> run(const std::vector<std::vector<real>>& inputs) const {
        int H = hidden_size;
        std::vector<real> h(H, real(0)), c(H, real(0));
        std::vector<std::vector<real>> out;
        for (const auto& x : inputs) {
            std::vector<real> pre(4 * H, real(0));
            for (int g = 0; g < 4 * H; ++g) {
                real acc = bias[g];
                for (int i = 0; i < input_size; ++i) acc += w_input[g][i] * x[i];
                for (int i = 0; i < H; ++i) acc += w_hidden[g][i] * h[i];
                pre[g] = acc;
            }
            std::vector<real> h_next(H), c_next(H);
            for (int i = 0; i < H; ++i) {
                real ig = sig(pre[i]);
                real fg = sig(pre[H + i]);
                real gg = std::tanh(pre[2 * H + i]);
                real og = sig(pre[3 * H + i]);
                c_next[i] = fg * c[i] + ig * gg;
                h_next[i] = og * std::tanh(c_next[i]);
            }
            h = h_next;
            c = c_next;
            out.push_back(h);
        }
        return out;
    }
};

// The voting accumulation, one term at a time: for every location t, loop over
// every window containing it and sum the signed relative distances directly.
// Frames strictly before t are negated (for starts), frames strictly after
// enter as-is, and the frame at t abstains.
inline void naive_votes(const std::vector<std::vector<real>>& start_preds,
                        const std::vector<std::vector<real>>& end_preds, int t_frames, int j_len,
                        std::vector<real>& v_start, std::vector<real>& v_end) {
    int num_windows = static_cast<int>(start_preds.size());
    v_start.assign(t_frames, real(0));
    v_end.assign(t_frames, real(0));
    for (int t = 0; t < t_frames; ++t) {
        for (int n = 0; n < num_windows; ++n) {
            int first = n, last = n + j_len - 1;
            if (t < first || t > last) continue;
            int t_n = t - n + 1;  // 1-based in-window position
            real vs = 0, ve = 0;
            for (int j = 1; j < t_n; ++j) {
                vs += -start_preds[n][j - 1];
                ve += end_preds[n][j - 1];
            }
            for (int j = t_n + 1; j <= j_len; ++j) {
                vs += start_preds[n][j - 1];
                ve += -end_preds[n][j - 1];
            }
            v_start[t] += vs;
            v_end[t] += ve;
        }
    }
}

// Literal restatement of the Gaussian Soft-NMS decay rule.
inline std::vector<tvnet::proposals::ScoredProposal> soft_nms_reference(
    std::vector<tvnet::proposals::ScoredProposal> proposals, real sigma, int top_k) {
    std::vector<tvnet::proposals::ScoredProposal> out;
    while (!proposals.empty() && static_cast<int>(out.size()) < top_k) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < proposals.size(); ++i)
            if (proposals[i].score > proposals[best].score) best = i;
        auto chosen = proposals[best];
        proposals.erase(proposals.begin() + static_cast<std::ptrdiff_t>(best));
        for (auto& p : proposals) {
            double iou = tvnet::eval::temporal_iou(chosen.start, chosen.end, p.start, p.end);
            p.score *= static_cast<real>(std::exp(-(iou * iou) / sigma));
        }
        out.push_back(chosen);
    }
    return out;
}

// Direct evaluation of detection AP for one class at one threshold: walk the
// predictions in score order, match greedily against the highest-IoU unmatched
// ground truth, then integrate max-precision-to-the-right over recall steps.
struct RefInstance {
    std::string video;
    double start, end;
};

inline double reference_class_ap(std::vector<std::pair<double, RefInstance>> preds,  // (score, p)
                                 const std::vector<RefInstance>& gts, double threshold) {
    std::stable_sort(preds.begin(), preds.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<bool> used(gts.size(), false);
    std::vector<bool> is_tp(preds.size(), false);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        double best_iou = 0;
        int best = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (used[g] || gts[g].video != preds[i].second.video) continue;
            double iou = tvnet::eval::temporal_iou(preds[i].second.start, preds[i].second.end,
                                                   gts[g].start, gts[g].end);
            if (iou >= threshold && iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) {
            used[best] = true;
            is_tp[i] = true;
        }
    }
    if (gts.empty()) return 0.0;

    double ap = 0.0;
    int tp = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!is_tp[i]) continue;
        ++tp;
        // Precision at this recall step is the best precision at any k' >= i
        // with the same or higher recall; with a monotone tp count that is the
        // max over suffix positions.
        double best_prec = 0.0;
        int tp2 = tp;
        for (std::size_t k = i + 1; k <= preds.size(); ++k) {
            best_prec = std::max(best_prec, static_cast<double>(tp2) / static_cast<double>(k));
            if (k < preds.size() && is_tp[k]) ++tp2;
        }
        ap += best_prec / static_cast<double>(gts.size());
    }
    return ap;
}

}  // namespace oracles
