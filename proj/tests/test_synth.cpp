#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tvnet/labeling.hpp"
#include "tvnet/synth.hpp"

using namespace tvnet;

TEST_CASE("fixed seed gives a bit-identical dataset") {
    synth::SynthConfig cfg;
    cfg.num_videos = 10;
    cfg.seed = 42;
    auto a = synth::generate_synthetic(cfg);
    auto b = synth::generate_synthetic(cfg);
    REQUIRE(a.annotations.size() == b.annotations.size());
    for (const auto& [vid, ann] : a.annotations) {
        const auto& other = b.annotations.at(vid);
        REQUIRE(ann.instances.size() == other.instances.size());
        for (std::size_t i = 0; i < ann.instances.size(); ++i) {
            CHECK(ann.instances[i].start == other.instances[i].start);
            CHECK(ann.instances[i].end == other.instances[i].end);
            CHECK(ann.instances[i].label == other.instances[i].label);
        }
        CHECK(a.features.at(vid).values == b.features.at(vid).values);
    }
}

TEST_CASE("noise-free features equal the class template inside the action") {
    synth::SynthConfig cfg;
    cfg.num_videos = 8;
    cfg.snr = 0;  // disables noise
    cfg.min_actions = 1;
    cfg.max_actions = 1;
    cfg.seed = 5;
    auto ds = synth::generate_synthetic(cfg);
    for (const auto& [vid, ann] : ds.annotations) {
        REQUIRE(ann.instances.size() == 1);
        const auto& feat = ds.features.at(vid);
        int s = static_cast<int>(std::lround(ann.instances[0].start));
        int e = static_cast<int>(std::lround(ann.instances[0].end));
        int cls = std::stoi(ann.instances[0].label.substr(std::string("class_").size()));
        for (int t = 0; t < cfg.T; ++t) {
            if (t >= s && t <= e) {
                double u = double(t - s) / (e - s);
                CHECK(feat.at(t, cls) == doctest::Approx(synth::class_template(cls, u)));
            } else {
                CHECK(feat.at(t, cls) == doctest::Approx(0.0));
            }
        }
        // transients sit on the boundary frames, inside the action
        CHECK(feat.at(s, synth::kOnsetChannel) == doctest::Approx(synth::kTransientAmplitude));
        CHECK(feat.at(e, synth::kOffsetChannel) == doctest::Approx(synth::kTransientAmplitude));
        CHECK(feat.at((s + e) / 2, synth::kOnsetChannel) == doctest::Approx(0.0));
    }
}

TEST_CASE("actions are non-overlapping, in range, and within duration bounds") {
    synth::SynthConfig cfg;
    cfg.num_videos = 50;
    cfg.seed = 11;
    auto ds = synth::generate_synthetic(cfg);
    int total_instances = 0;
    for (const auto& [vid, ann] : ds.annotations) {
        REQUIRE(ann.instances.size() >= 1);
        REQUIRE(ann.instances.size() <= 3);
        total_instances += static_cast<int>(ann.instances.size());
        double prev_end = -1;
        for (const auto& inst : ann.instances) {
            CHECK(inst.start > prev_end);
            prev_end = inst.end;
            CHECK(inst.start >= 0);
            CHECK(inst.end <= ann.duration);
            double d = inst.end - inst.start;
            CHECK(d >= cfg.min_duration);
            CHECK(d <= cfg.max_duration);
        }
        // ranked video classes cover every instance label up to top-2
        CHECK(!ann.video_level_classes.empty());
        for (std::size_t i = 1; i < ann.video_level_classes.size(); ++i)
            CHECK(ann.video_level_classes[i - 1].score >= ann.video_level_classes[i].score);
    }
    CHECK(total_instances > 50);
}

TEST_CASE("infeasible packing raises after bounded retries") {
    synth::SynthConfig cfg;
    cfg.num_videos = 1;
    cfg.T = 30;
    cfg.min_actions = 3;
    cfg.max_actions = 3;
    cfg.min_duration = 20;
    cfg.max_duration = 25;
    CHECK_THROWS_WITH_AS(synth::generate_synthetic(cfg), doctest::Contains("1000 attempts"),
                         std::runtime_error);
}

TEST_CASE("all feature values are finite at default noise") {
    synth::SynthConfig cfg;
    cfg.num_videos = 5;
    cfg.seed = 3;
    auto ds = synth::generate_synthetic(cfg);
    for (const auto& [vid, feat] : ds.features)
        for (real v : feat.values) CHECK(std::isfinite(v));
}
