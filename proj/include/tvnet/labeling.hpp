#pragma once

#include <vector>

#include "tvnet/data.hpp"

namespace tvnet::labeling {

// Relative-distance regression targets for one sliding window.
// r_start[j] = (j_abs - s*) / J and r_end[j] = (e* - j_abs) / J, both clamped
// to [-1, 1], where s*/e* are the globally closest ground-truth start/end
// indices (ties broken toward the earlier boundary).
struct WindowLabels {
    int start_index = 0;  // first frame covered by the window
    int length = 0;       // J
    std::vector<real> r_start;
    std::vector<real> r_end;
    real weight = real(1);  // down-weighted for videos without annotations
};

struct FrameLabels {
    std::vector<real> start_label;   // 1 on dilated start neighborhoods
    std::vector<real> end_label;     // 1 on dilated end neighborhoods
    std::vector<real> action_label;  // 1 inside any instance
};

// Ground-truth boundary indices for a video, rounded to feature frames.
struct BoundaryIndices {
    std::vector<int> starts;
    std::vector<int> ends;
};

BoundaryIndices annotation_frame_indices(const data::AnnotationSet& ann, int t_frames,
                                         double frame_rate_ratio);

// Signed distance from frame j to the closest boundary in `boundaries`,
// ties resolved toward the earlier boundary. Returns j - b* (so negative
// before the boundary). Requires a non-empty list.
int closest_boundary_offset(int j, const std::vector<int>& boundaries);

// One label record per stride-1 window position (or the given stride).
// Videos with no instances get sentinel labels (+1 everywhere) at low weight.
std::vector<WindowLabels> make_window_labels(const data::AnnotationSet& ann, int t_frames, int j_len,
                                             int stride, double frame_rate_ratio);

// BSN-style frame supervision: actionness inside instances, start/end on
// neighborhoods of radius max(1, round(0.05 * instance length)).
FrameLabels make_tem_labels(const data::AnnotationSet& ann, int t_frames, double frame_rate_ratio);

// Max temporal IoU against any ground-truth instance; 0 when there are none.
// Proposals and instances in frame coordinates.
real pem_iou_target(real prop_start, real prop_end, const data::AnnotationSet& ann,
                    double frame_rate_ratio);

std::vector<real> make_pem_labels(const std::vector<std::pair<real, real>>& proposals,
                                  const data::AnnotationSet& ann, double frame_rate_ratio);

}  // namespace tvnet::labeling
