#pragma once

#include <map>
#include <string>
#include <vector>

#include "tvnet/data.hpp"

namespace tvnet::synth {

// Synthetic untrimmed sequences: per action, a class-specific template on a
// dedicated channel plus short onset/offset transients on shared channels;
// Gaussian noise everywhere at amplitude/snr.
struct SynthConfig {
    int num_videos = 200;
    int T = 100;
    int C = 8;
    int num_classes = 4;
    int min_actions = 1;
    int max_actions = 3;
    int min_duration = 8;   // frames (end - start)
    int max_duration = 40;
    // Boundaries closer than the widest voting window to the sequence edge or
    // to the same-type neighbour sit in asymmetric vote coverage; the default
    // layout keeps them clear of the J=15 window.
    int edge_margin = 15;   // frames kept free at both sequence ends
    int min_gap = 10;       // frames between consecutive actions
    double snr = 10.0;      // template amplitude over noise sigma; <=0 disables noise
    double frame_rate_ratio = 1.0;  // seconds per frame
    std::uint64_t seed = 42;
    std::string id_prefix = "synth";
};

struct SynthDataset {
    std::map<std::string, data::AnnotationSet> annotations;
    std::map<std::string, data::FeatureSequence> features;
};

// Class labels are "class_0".."class_{K-1}". Throws if an action layout cannot
// be packed after 1000 attempts per video.
SynthDataset generate_synthetic(const SynthConfig& cfg);

// Template value for class k at relative position u in [0,1]. Amplitude 1.
double class_template(int k, double u);

constexpr double kTemplateAmplitude = 1.0;
constexpr double kTransientAmplitude = 1.5;
constexpr int kOnsetChannel = 4;   // requires C >= 6
constexpr int kOffsetChannel = 5;

}  // namespace tvnet::synth
