#pragma once

#include <map>
#include <string>
#include <vector>

#include "tvnet/common.hpp"

namespace tvnet::data {

struct ActionInstance {
    double start = 0;  // seconds
    double end = 0;    // seconds
    std::string label;
};

struct ClassScore {
    std::string label;
    double score = 0;
};

struct AnnotationSet {
    std::string video_id;
    double duration = 0;  // seconds
    std::vector<ActionInstance> instances;
    // Ranked video-level class list; stands in for an external classifier.
    std::vector<ClassScore> video_level_classes;
};

struct FeatureSequence {
    std::string video_id;
    int T = 0;
    int C = 0;
    std::vector<real> values;        // T x C row-major
    double frame_rate_ratio = 1.0;   // seconds per feature step (L/T)

    real at(int t, int c) const { return values[static_cast<std::size_t>(t) * C + c]; }
    real& at(int t, int c) { return values[static_cast<std::size_t>(t) * C + c]; }

    double index_to_seconds(int index) const { return index * frame_rate_ratio; }
    int seconds_to_index(double secs) const {
        int i = static_cast<int>(std::lround(secs / frame_rate_ratio));
        return std::min(std::max(i, 0), T - 1);
    }
};

struct Prediction {
    double start = 0;  // seconds
    double end = 0;    // seconds
    double score = 0;
    std::string label;
};

struct PredictionSet {
    std::string video_id;
    std::vector<Prediction> proposals;  // sorted by score descending
};

// JSON annotation file:
//   {video_id: {duration, annotations:[{segment:[s,e], label}],
//               video_classes:[{label, score}]}}
// Instances with s >= e are skipped with a warning; e > duration is clamped.
std::map<std::string, AnnotationSet> load_annotations(const std::string& path);
void save_annotations(const std::string& path, const std::map<std::string, AnnotationSet>& sets);

// TVNF binary features: magic "TVNF" | version u32 | T u32 | C u32 |
// float32 LE row-major. Rejects non-finite values. When expected_T differs and
// allow_rescale is set, the sequence is linearly rescaled to expected_T.
FeatureSequence load_features(const std::string& path, int expected_t, int expected_c,
                              bool allow_rescale = false);
void save_features(const std::string& path, const FeatureSequence& seq);

// CSV features (one row per time step, C comma-separated values).
FeatureSequence load_features_csv(const std::string& path);

// Linear interpolation over the time axis onto target_T uniformly spaced
// points, endpoints preserved. frame_rate_ratio is rescaled so index*ratio
// still maps onto the same [0, L] span.
FeatureSequence rescale_sequence(const FeatureSequence& seq, int target_t);

// Prediction JSON: {video_id:[{segment:[s,e], score, label}]}.
void save_predictions(const std::string& path,
                      const std::map<std::string, PredictionSet>& preds);
std::map<std::string, PredictionSet> load_predictions(const std::string& path);

std::string predictions_to_json(const std::map<std::string, PredictionSet>& preds);

}  // namespace tvnet::data
