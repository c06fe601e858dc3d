#include "tvnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tvnet::synth {

double class_template(int k, double u) {
    switch (k % 4) {
        case 0: return kTemplateAmplitude;                                   // plateau
        case 1: return kTemplateAmplitude * (0.5 + u);                       // rising ramp
        case 2: return kTemplateAmplitude * (1.5 - u);                       // falling ramp
        default: return kTemplateAmplitude * (0.5 + std::sin(M_PI * u));     // arch
    }
}

namespace {

struct PlacedAction {
    int start, end;  // inclusive frames, end > start
    int cls;
};

// Lay out n non-overlapping actions with margins and gaps; empty on failure.
std::vector<PlacedAction> try_place(const SynthConfig& cfg, int n, Rng& rng) {
    std::vector<int> durations(n);
    for (auto& d : durations)
        d = static_cast<int>(rng.uniform_int(cfg.min_duration, cfg.max_duration));
    int occupied = std::accumulate(durations.begin(), durations.end(), 0) +
                   (n - 1) * cfg.min_gap + 2 * cfg.edge_margin;
    int slack = cfg.T - 1 - occupied;
    if (slack < 0) return {};

    // Split the slack across the n+1 inter-action gaps.
    std::vector<double> w(n + 1);
    double wsum = 0;
    for (auto& x : w) {
        x = rng.uniform();
        wsum += x;
    }
    std::vector<PlacedAction> placed;
    int pos = cfg.edge_margin;
    int used_slack = 0;
    for (int i = 0; i < n; ++i) {
        int extra = static_cast<int>(std::floor(slack * w[i] / wsum));
        extra = std::min(extra, slack - used_slack);
        used_slack += extra;
        pos += extra + (i > 0 ? cfg.min_gap : 0);
        PlacedAction a;
        a.start = pos;
        a.end = pos + durations[i];
        a.cls = static_cast<int>(rng.uniform_int(0, cfg.num_classes - 1));
        placed.push_back(a);
        pos = a.end;
    }
    if (placed.back().end > cfg.T - 1 - cfg.edge_margin) return {};
    return placed;
}

}  // namespace

SynthDataset generate_synthetic(const SynthConfig& cfg) {
    require(cfg.T >= 4 && cfg.C >= 1 && cfg.num_videos >= 1, "synth: bad dimensions");
    require(cfg.num_classes >= 1, "synth: need at least one class");
    require(cfg.C >= cfg.num_classes + 2,
            "synth: need C >= num_classes + 2 (class channels plus transients)");
    require(cfg.min_duration >= 2 && cfg.max_duration >= cfg.min_duration,
            "synth: bad duration range");
    require(cfg.min_actions >= 0 && cfg.max_actions >= cfg.min_actions, "synth: bad action range");

    Rng rng(cfg.seed);
    double sigma = cfg.snr > 0 ? kTemplateAmplitude / cfg.snr : 0.0;

    SynthDataset out;
    int digits = cfg.num_videos > 1000 ? 5 : 4;
    for (int v = 0; v < cfg.num_videos; ++v) {
        std::vector<PlacedAction> placed;
        for (int attempts = 0;; ++attempts) {
            if (attempts >= 1000)
                throw std::runtime_error("synth: cannot pack requested actions into T=" +
                                         std::to_string(cfg.T) + " after 1000 attempts");
            int n = static_cast<int>(rng.uniform_int(cfg.min_actions, cfg.max_actions));
            if (n == 0) break;
            placed = try_place(cfg, n, rng);
            if (!placed.empty()) break;
        }

        std::string num = std::to_string(v);
        std::string vid = cfg.id_prefix + "_" + std::string(digits - num.size(), '0') + num;

        data::AnnotationSet ann;
        ann.video_id = vid;
        ann.duration = cfg.T * cfg.frame_rate_ratio;
        std::map<std::string, double> class_durations;
        for (const auto& a : placed) {
            data::ActionInstance inst;
            inst.start = a.start * cfg.frame_rate_ratio;
            inst.end = a.end * cfg.frame_rate_ratio;
            inst.label = "class_" + std::to_string(a.cls);
            class_durations[inst.label] += inst.end - inst.start;
            ann.instances.push_back(std::move(inst));
        }
        double total_dur = 0;
        for (const auto& [lbl, d] : class_durations) total_dur += d;
        for (const auto& [lbl, d] : class_durations)
            ann.video_level_classes.push_back({lbl, d / total_dur});
        std::stable_sort(ann.video_level_classes.begin(), ann.video_level_classes.end(),
                         [](const data::ClassScore& a, const data::ClassScore& b) {
                             return a.score > b.score;
                         });

        data::FeatureSequence feat;
        feat.video_id = vid;
        feat.T = cfg.T;
        feat.C = cfg.C;
        feat.frame_rate_ratio = cfg.frame_rate_ratio;
        feat.values.assign(static_cast<std::size_t>(cfg.T) * cfg.C, real(0));
        if (sigma > 0)
            for (auto& x : feat.values) x = static_cast<real>(rng.normal(0.0, sigma));

        for (const auto& a : placed) {
            double span = a.end - a.start;
            for (int t = a.start; t <= a.end; ++t) {
                double u = (t - a.start) / span;
                feat.at(t, a.cls) += static_cast<real>(class_template(a.cls, u));
            }
            for (int t = a.start; t <= std::min(a.start + 1, a.end); ++t)
                feat.at(t, kOnsetChannel) += static_cast<real>(kTransientAmplitude);
            for (int t = std::max(a.end - 1, a.start); t <= a.end; ++t)
                feat.at(t, kOffsetChannel) += static_cast<real>(kTransientAmplitude);
        }

        out.annotations.emplace(vid, std::move(ann));
        out.features.emplace(vid, std::move(feat));
    }
    return out;
}

}  // namespace tvnet::synth
