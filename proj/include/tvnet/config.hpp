#pragma once

#include <string>
#include <vector>

#include "tvnet/optim.hpp"
#include "tvnet/proposals.hpp"
#include "tvnet/synth.hpp"
#include "tvnet/vem.hpp"

namespace tvnet::config {

struct StageOptions {
    nn::LrSchedule schedule;
    int batch = 512;
};

// Every pipeline hyperparameter with its default operating point. T=100-style
// presets (window lengths 15+5, tau 100, top_k 200) are the defaults; the
// THUMOS-style preset (T=750, J=10+5, tau 70, top_k 400) is selectable via
// "preset": "thumos".
struct PipelineConfig {
    // Data.
    std::string dataset_dir = "data";
    int T = 100;
    int C = 8;
    int num_train_videos = 200;
    int num_test_videos = 50;
    synth::SynthConfig synth;  // T/C/seed fields are kept in sync on load

    // Proposal generation.
    std::vector<int> window_lengths = {15, 5};
    double xi = 0.3;
    int tau = 100;
    double alpha = 0.6;
    double soft_nms_sigma = 0.5;
    int top_k = 200;
    int top_c = 2;
    proposals::FusionMode fusion_mode = proposals::FusionMode::full;
    vem::ScaleFusion scale_fusion = vem::ScaleFusion::minmax_mean;
    bool use_actionness = true;  // background suppression + PEM input

    // Models.
    int tem_hidden = 128;
    int vem_conv_channels = 64;
    int vem_lstm_hidden = 128;
    vem::EncoderKind vem_encoder = vem::EncoderKind::lstm;
    int pem_hidden = 64;

    // Training.
    StageOptions tem_stage{{{{10, 1e-3}, {5, 1e-4}}}, 16};
    StageOptions vem_stage{{{{10, 1e-3}, {5, 1e-4}}}, 512};
    StageOptions pem_stage{{{{10, 1e-3}, {5, 1e-4}}}, 256};
    int pem_jitters_per_gt = 8;
    int pem_max_proposals_per_video = 500;

    // Evaluation.
    std::vector<double> eval_thresholds = {0.5, 0.75, 0.95};

    std::uint64_t seed = 42;
    int jobs = 1;
};

// JSON round trip with full defaulting: absent fields keep their defaults.
PipelineConfig load_config(const std::string& path);
PipelineConfig config_from_json_text(const std::string& text);
std::string config_to_json(const PipelineConfig& cfg);

// FNV-1a over the canonical JSON dump; stable across runs.
std::uint64_t config_hash(const PipelineConfig& cfg);

}  // namespace tvnet::config
