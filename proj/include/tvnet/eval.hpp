#pragma once

#include <map>
#include <string>
#include <vector>

#include "tvnet/data.hpp"

namespace tvnet::eval {

// |a ∩ b| / |a ∪ b| for closed intervals; 0 for degenerate inputs.
double temporal_iou(double a_start, double a_end, double b_start, double b_end);

struct EvalReport {
    std::vector<double> thresholds;
    // ap[class][i] is the AP of that class at thresholds[i].
    std::map<std::string, std::vector<double>> ap;
    std::vector<double> map_per_threshold;
    double average_map = 0;  // mean of mAP at 0.5:0.05:0.95, always computed
    int num_predictions = 0;
    int num_ground_truth = 0;
    bool empty = false;  // no ground truth anywhere; mAP values are undefined

    std::string to_json() const;
    std::string to_csv(const std::string& row_name = "tvnet") const;
};

inline std::vector<double> average_map_thresholds() {
    return {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
}

// Detection mAP: per class and threshold, predictions sorted by score, each
// ground truth matched at most once (highest-IoU unmatched above threshold),
// AP by all-point interpolation. Classes with no ground truth are excluded
// from the mean. average_map is computed over 0.5:0.05:0.95 regardless of the
// requested thresholds.
EvalReport compute_map(const std::map<std::string, data::PredictionSet>& predictions,
                       const std::map<std::string, data::AnnotationSet>& annotations,
                       const std::vector<double>& thresholds);

}  // namespace tvnet::eval
