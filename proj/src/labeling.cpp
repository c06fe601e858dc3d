#include "tvnet/labeling.hpp"

#include <algorithm>
#include <cmath>

namespace tvnet::labeling {

BoundaryIndices annotation_frame_indices(const data::AnnotationSet& ann, int t_frames,
                                         double frame_rate_ratio) {
    BoundaryIndices out;
    for (const auto& inst : ann.instances) {
        int s = static_cast<int>(std::lround(inst.start / frame_rate_ratio));
        int e = static_cast<int>(std::lround(inst.end / frame_rate_ratio));
        s = std::clamp(s, 0, t_frames - 1);
        e = std::clamp(e, 0, t_frames - 1);
        if (s >= e) continue;  // collapses below frame resolution
        out.starts.push_back(s);
        out.ends.push_back(e);
    }
    std::sort(out.starts.begin(), out.starts.end());
    std::sort(out.ends.begin(), out.ends.end());
    return out;
}

int closest_boundary_offset(int j, const std::vector<int>& boundaries) {
    require(!boundaries.empty(), "closest_boundary_offset: no boundaries");
    int best = boundaries[0];
    long best_dist = std::labs(static_cast<long>(j) - best);
    for (int b : boundaries) {
        long d = std::labs(static_cast<long>(j) - b);
        if (d < best_dist) {  // ties keep the earlier boundary (list is sorted)
            best_dist = d;
            best = b;
        }
    }
    return j - best;
}

std::vector<WindowLabels> make_window_labels(const data::AnnotationSet& ann, int t_frames,
                                             int j_len, int stride, double frame_rate_ratio) {
    require(t_frames >= j_len && j_len >= 2, "make_window_labels: need T >= J >= 2");
    require(stride >= 1, "make_window_labels: stride must be >= 1");

    BoundaryIndices bounds = annotation_frame_indices(ann, t_frames, frame_rate_ratio);
    bool empty = bounds.starts.empty();

    // Per-frame relative distances once, windows then slice them.
    std::vector<real> rs(t_frames), re(t_frames);
    for (int j = 0; j < t_frames; ++j) {
        if (empty) {
            rs[j] = real(1);  // "far future" sentinel
            re[j] = real(1);
        } else {
            real v_s = static_cast<real>(closest_boundary_offset(j, bounds.starts)) / j_len;
            real v_e = static_cast<real>(-closest_boundary_offset(j, bounds.ends)) / j_len;
            rs[j] = std::clamp(v_s, real(-1), real(1));
            re[j] = std::clamp(v_e, real(-1), real(1));
        }
    }

    std::vector<WindowLabels> out;
    for (int w = 0; w + j_len <= t_frames; w += stride) {
        WindowLabels wl;
        wl.start_index = w;
        wl.length = j_len;
        wl.r_start.assign(rs.begin() + w, rs.begin() + w + j_len);
        wl.r_end.assign(re.begin() + w, re.begin() + w + j_len);
        wl.weight = empty ? real(0.1) : real(1);
        out.push_back(std::move(wl));
    }
    return out;
}

FrameLabels make_tem_labels(const data::AnnotationSet& ann, int t_frames,
                            double frame_rate_ratio) {
    require(t_frames >= 2, "make_tem_labels: need T >= 2");
    FrameLabels labels;
    labels.start_label.assign(t_frames, real(0));
    labels.end_label.assign(t_frames, real(0));
    labels.action_label.assign(t_frames, real(0));

    for (const auto& inst : ann.instances) {
        int s = std::clamp(static_cast<int>(std::lround(inst.start / frame_rate_ratio)), 0,
                           t_frames - 1);
        int e = std::clamp(static_cast<int>(std::lround(inst.end / frame_rate_ratio)), 0,
                           t_frames - 1);
        if (s >= e) continue;
        for (int t = s; t <= e; ++t) labels.action_label[t] = real(1);
        int d = std::max(1, static_cast<int>(std::lround(0.05 * (e - s))));
        for (int t = std::max(0, s - d); t <= std::min(t_frames - 1, s + d); ++t)
            labels.start_label[t] = real(1);
        for (int t = std::max(0, e - d); t <= std::min(t_frames - 1, e + d); ++t)
            labels.end_label[t] = real(1);
    }
    return labels;
}

real pem_iou_target(real prop_start, real prop_end, const data::AnnotationSet& ann,
                    double frame_rate_ratio) {
    if (prop_end <= prop_start) return real(0);
    real best = 0;
    for (const auto& inst : ann.instances) {
        real gs = static_cast<real>(inst.start / frame_rate_ratio);
        real ge = static_cast<real>(inst.end / frame_rate_ratio);
        real inter = std::min(prop_end, ge) - std::max(prop_start, gs);
        if (inter <= 0) continue;
        real uni = std::max(prop_end, ge) - std::min(prop_start, gs);
        best = std::max(best, inter / uni);
    }
    return best;
}

std::vector<real> make_pem_labels(const std::vector<std::pair<real, real>>& proposals,
                                  const data::AnnotationSet& ann, double frame_rate_ratio) {
    std::vector<real> out;
    out.reserve(proposals.size());
    for (const auto& [s, e] : proposals) out.push_back(pem_iou_target(s, e, ann, frame_rate_ratio));
    return out;
}

}  // namespace tvnet::labeling
