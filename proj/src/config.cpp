#include "tvnet/config.hpp"

#include <json.hpp>

#include <fstream>

namespace tvnet::config {

using nlohmann::json;

namespace {

nn::LrSchedule schedule_from_json(const json& j) {
    nn::LrSchedule s;
    for (const auto& seg : j) {
        require(seg.is_array() && seg.size() == 2, "config: schedule segments are [epochs, lr]");
        s.segments.emplace_back(seg.at(0).get<int>(), seg.at(1).get<real>());
    }
    require(!s.segments.empty(), "config: empty learning-rate schedule");
    return s;
}

json schedule_to_json(const nn::LrSchedule& s) {
    json j = json::array();
    for (const auto& [epochs, lr] : s.segments) j.push_back({epochs, lr});
    return j;
}

void stage_from_json(const json& j, StageOptions& stage) {
    if (j.contains("schedule")) stage.schedule = schedule_from_json(j.at("schedule"));
    stage.batch = j.value("batch", stage.batch);
}

json stage_to_json(const StageOptions& stage) {
    return {{"schedule", schedule_to_json(stage.schedule)}, {"batch", stage.batch}};
}

std::string fusion_mode_name(proposals::FusionMode m) {
    switch (m) {
        case proposals::FusionMode::voting_only: return "voting_only";
        case proposals::FusionMode::boundary_only: return "boundary_only";
        default: return "full";
    }
}

proposals::FusionMode fusion_mode_from(const std::string& s) {
    if (s == "full") return proposals::FusionMode::full;
    if (s == "voting_only") return proposals::FusionMode::voting_only;
    if (s == "boundary_only") return proposals::FusionMode::boundary_only;
    throw std::runtime_error("config: unknown fusion_mode '" + s + "'");
}

void apply_preset(PipelineConfig& cfg, const std::string& preset) {
    if (preset == "activitynet" || preset == "default" || preset.empty()) return;
    if (preset == "thumos") {
        cfg.T = 750;
        cfg.window_lengths = {10, 5};
        cfg.tau = 70;
        cfg.top_k = 400;
        cfg.vem_stage.batch = 256;
        return;
    }
    throw std::runtime_error("config: unknown preset '" + preset + "'");
}

}  // namespace

PipelineConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("config: malformed JSON: ") + e.what());
    }
    PipelineConfig cfg;
    apply_preset(cfg, j.value("preset", std::string()));

    cfg.dataset_dir = j.value("dataset_dir", cfg.dataset_dir);
    cfg.T = j.value("T", cfg.T);
    cfg.C = j.value("C", cfg.C);
    cfg.num_train_videos = j.value("num_train_videos", cfg.num_train_videos);
    cfg.num_test_videos = j.value("num_test_videos", cfg.num_test_videos);

    if (j.contains("synth")) {
        const json& s = j.at("synth");
        cfg.synth.num_classes = s.value("num_classes", cfg.synth.num_classes);
        cfg.synth.min_actions = s.value("min_actions", cfg.synth.min_actions);
        cfg.synth.max_actions = s.value("max_actions", cfg.synth.max_actions);
        cfg.synth.min_duration = s.value("min_duration", cfg.synth.min_duration);
        cfg.synth.max_duration = s.value("max_duration", cfg.synth.max_duration);
        cfg.synth.edge_margin = s.value("edge_margin", cfg.synth.edge_margin);
        cfg.synth.min_gap = s.value("min_gap", cfg.synth.min_gap);
        cfg.synth.snr = s.value("snr", cfg.synth.snr);
        cfg.synth.frame_rate_ratio = s.value("frame_rate_ratio", cfg.synth.frame_rate_ratio);
    }

    if (j.contains("window_lengths"))
        cfg.window_lengths = j.at("window_lengths").get<std::vector<int>>();
    cfg.xi = j.value("xi", cfg.xi);
    cfg.tau = j.value("tau", cfg.tau);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.soft_nms_sigma = j.value("soft_nms_sigma", cfg.soft_nms_sigma);
    cfg.top_k = j.value("top_k", cfg.top_k);
    cfg.top_c = j.value("top_c", cfg.top_c);
    if (j.contains("fusion_mode")) cfg.fusion_mode = fusion_mode_from(j.at("fusion_mode"));
    if (j.contains("scale_fusion")) {
        std::string s = j.at("scale_fusion");
        if (s == "minmax_mean") cfg.scale_fusion = vem::ScaleFusion::minmax_mean;
        else if (s == "sum") cfg.scale_fusion = vem::ScaleFusion::sum;
        else throw std::runtime_error("config: unknown scale_fusion '" + s + "'");
    }
    cfg.use_actionness = j.value("use_actionness", cfg.use_actionness);

    cfg.tem_hidden = j.value("tem_hidden", cfg.tem_hidden);
    cfg.vem_conv_channels = j.value("vem_conv_channels", cfg.vem_conv_channels);
    cfg.vem_lstm_hidden = j.value("vem_lstm_hidden", cfg.vem_lstm_hidden);
    if (j.contains("vem_encoder"))
        cfg.vem_encoder = vem::encoder_kind_from_string(j.at("vem_encoder"));
    cfg.pem_hidden = j.value("pem_hidden", cfg.pem_hidden);

    if (j.contains("tem_stage")) stage_from_json(j.at("tem_stage"), cfg.tem_stage);
    if (j.contains("vem_stage")) stage_from_json(j.at("vem_stage"), cfg.vem_stage);
    if (j.contains("pem_stage")) stage_from_json(j.at("pem_stage"), cfg.pem_stage);
    cfg.pem_jitters_per_gt = j.value("pem_jitters_per_gt", cfg.pem_jitters_per_gt);
    cfg.pem_max_proposals_per_video =
        j.value("pem_max_proposals_per_video", cfg.pem_max_proposals_per_video);

    if (j.contains("eval_thresholds"))
        cfg.eval_thresholds = j.at("eval_thresholds").get<std::vector<double>>();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.jobs = j.value("jobs", cfg.jobs);

    require(cfg.T >= 4 && cfg.C >= 1, "config: bad T/C");
    require(!cfg.window_lengths.empty(), "config: window_lengths must not be empty");
    for (int w : cfg.window_lengths)
        require(w >= 2 && w <= cfg.T, "config: window length out of range");
    require(cfg.xi >= 0 && cfg.xi < 1, "config: xi must be in [0,1)");
    require(cfg.tau >= 1, "config: tau must be positive");
    require(cfg.jobs >= 1, "config: jobs must be >= 1");

    cfg.synth.T = cfg.T;
    cfg.synth.C = cfg.C;
    cfg.synth.seed = cfg.seed;
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), "config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

std::string config_to_json(const PipelineConfig& cfg) {
    json j;
    j["dataset_dir"] = cfg.dataset_dir;
    j["T"] = cfg.T;
    j["C"] = cfg.C;
    j["num_train_videos"] = cfg.num_train_videos;
    j["num_test_videos"] = cfg.num_test_videos;
    j["synth"] = {{"num_classes", cfg.synth.num_classes},
                  {"min_actions", cfg.synth.min_actions},
                  {"max_actions", cfg.synth.max_actions},
                  {"min_duration", cfg.synth.min_duration},
                  {"max_duration", cfg.synth.max_duration},
                  {"edge_margin", cfg.synth.edge_margin},
                  {"min_gap", cfg.synth.min_gap},
                  {"snr", cfg.synth.snr},
                  {"frame_rate_ratio", cfg.synth.frame_rate_ratio}};
    j["window_lengths"] = cfg.window_lengths;
    j["xi"] = cfg.xi;
    j["tau"] = cfg.tau;
    j["alpha"] = cfg.alpha;
    j["soft_nms_sigma"] = cfg.soft_nms_sigma;
    j["top_k"] = cfg.top_k;
    j["top_c"] = cfg.top_c;
    j["fusion_mode"] = fusion_mode_name(cfg.fusion_mode);
    j["scale_fusion"] = cfg.scale_fusion == vem::ScaleFusion::minmax_mean ? "minmax_mean" : "sum";
    j["use_actionness"] = cfg.use_actionness;
    j["tem_hidden"] = cfg.tem_hidden;
    j["vem_conv_channels"] = cfg.vem_conv_channels;
    j["vem_lstm_hidden"] = cfg.vem_lstm_hidden;
    j["vem_encoder"] = vem::to_string(cfg.vem_encoder);
    j["pem_hidden"] = cfg.pem_hidden;
    j["tem_stage"] = stage_to_json(cfg.tem_stage);
    j["vem_stage"] = stage_to_json(cfg.vem_stage);
    j["pem_stage"] = stage_to_json(cfg.pem_stage);
    j["pem_jitters_per_gt"] = cfg.pem_jitters_per_gt;
    j["pem_max_proposals_per_video"] = cfg.pem_max_proposals_per_video;
    j["eval_thresholds"] = cfg.eval_thresholds;
    j["seed"] = cfg.seed;
    j["jobs"] = cfg.jobs;
    return j.dump(1);
}

std::uint64_t config_hash(const PipelineConfig& cfg) {
    std::string text = config_to_json(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace tvnet::config
