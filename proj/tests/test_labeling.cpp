#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tvnet/labeling.hpp"
#include "tvnet/synth.hpp"

using namespace tvnet;

namespace {

data::AnnotationSet make_ann(std::vector<std::pair<double, double>> segments, double duration) {
    data::AnnotationSet ann;
    ann.video_id = "v";
    ann.duration = duration;
    for (auto [s, e] : segments) ann.instances.push_back({s, e, "class_0"});
    return ann;
}

// Brute force over all boundaries, no window machinery.
real brute_r_start(int j, const std::vector<int>& starts, int j_len) {
    long best = std::numeric_limits<long>::max();
    int chosen = 0;
    for (int s : starts) {
        long d = std::labs(long(j) - s);
        if (d < best) {
            best = d;
            chosen = s;
        }
    }
    real v = static_cast<real>(j - chosen) / j_len;
    return std::clamp(v, real(-1), real(1));
}

}  // namespace

TEST_CASE("relative distance is zero exactly at the boundary") {
    auto ann = make_ann({{10, 30}}, 100);
    auto labels = labeling::make_window_labels(ann, 100, 10, 1, 1.0);
    // window starting at 10 has j == s* at offset 0
    CHECK(labels[10].r_start[0] == doctest::Approx(0.0));
    // window starting at 2: frame 10 sits at offset 8
    CHECK(labels[2].r_start[8] == doctest::Approx(0.0));
}

TEST_CASE("relative distance follows (j - s*) / J") {
    // start at 10, j = 12, J = 10 -> +0.2 (positive after the start)
    auto ann = make_ann({{10, 50}}, 100);
    auto labels = labeling::make_window_labels(ann, 100, 10, 1, 1.0);
    CHECK(labels[12].r_start[0] == doctest::Approx(0.2));
    // two frames before: -0.2
    CHECK(labels[8].r_start[0] == doctest::Approx(-0.2));
}

TEST_CASE("relative distance clamps to +-1 far from boundaries") {
    auto ann = make_ann({{5, 15}}, 100);
    auto labels = labeling::make_window_labels(ann, 100, 10, 1, 1.0);
    // 30+ frames past the only start
    CHECK(labels[45].r_start[0] == doctest::Approx(1.0));
    for (const auto& wl : labels)
        for (int j = 0; j < wl.length; ++j) {
            CHECK(wl.r_start[j] >= -1.0);
            CHECK(wl.r_start[j] <= 1.0);
            CHECK(wl.r_end[j] >= -1.0);
            CHECK(wl.r_end[j] <= 1.0);
        }
}

TEST_CASE("sign convention matches the -5/+2 narrative on random annotations") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        synth::SynthConfig cfg;
        cfg.num_videos = 1;
        cfg.seed = 1000 + trial;
        auto ds = synth::generate_synthetic(cfg);
        const auto& ann = ds.annotations.begin()->second;
        auto bounds = labeling::annotation_frame_indices(ann, cfg.T, 1.0);
        auto labels = labeling::make_window_labels(ann, cfg.T, 15, 1, 1.0);
        for (const auto& wl : labels) {
            for (int j = 0; j < wl.length; ++j) {
                int frame = wl.start_index + j;
                int off = labeling::closest_boundary_offset(frame, bounds.starts);
                if (off < 0) CHECK(wl.r_start[j] <= 0);   // before the closest start
                if (off > 0) CHECK(wl.r_start[j] >= 0);   // after it
                if (off == 0) CHECK(wl.r_start[j] == doctest::Approx(0.0));
                int off_e = labeling::closest_boundary_offset(frame, bounds.ends);
                if (off_e < 0) CHECK(wl.r_end[j] >= 0);   // end still ahead
                if (off_e > 0) CHECK(wl.r_end[j] <= 0);
            }
        }
    }
}

TEST_CASE("window labels agree with a global per-frame brute force") {
    synth::SynthConfig cfg;
    cfg.num_videos = 5;
    cfg.seed = 7;
    auto ds = synth::generate_synthetic(cfg);
    for (const auto& [vid, ann] : ds.annotations) {
        auto bounds = labeling::annotation_frame_indices(ann, cfg.T, 1.0);
        auto labels = labeling::make_window_labels(ann, cfg.T, 12, 1, 1.0);
        REQUIRE(static_cast<int>(labels.size()) == cfg.T - 12 + 1);
        for (const auto& wl : labels)
            for (int j = 0; j < wl.length; ++j)
                CHECK(wl.r_start[j] ==
                      doctest::Approx(brute_r_start(wl.start_index + j, bounds.starts, 12)));
    }
}

TEST_CASE("equidistant boundaries resolve toward the earlier one") {
    // starts at 10 and 20; frame 15 is 5 from both -> choose 10 -> r = +5/J
    auto ann = make_ann({{10, 14}, {20, 30}}, 100);
    auto labels = labeling::make_window_labels(ann, 100, 10, 1, 1.0);
    CHECK(labels[15].r_start[0] == doctest::Approx(0.5));
}

TEST_CASE("empty annotation gets sentinel labels at low weight") {
    data::AnnotationSet ann;
    ann.video_id = "empty";
    ann.duration = 100;
    auto labels = labeling::make_window_labels(ann, 100, 10, 1, 1.0);
    for (const auto& wl : labels) {
        CHECK(wl.weight < 1.0);
        for (int j = 0; j < wl.length; ++j) {
            CHECK(wl.r_start[j] == doctest::Approx(1.0));
            CHECK(wl.r_end[j] == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("tem labels: empty annotation -> all zeros") {
    data::AnnotationSet ann;
    ann.duration = 100;
    auto labels = labeling::make_tem_labels(ann, 100, 1.0);
    for (int t = 0; t < 100; ++t) {
        CHECK(labels.action_label[t] == 0.0);
        CHECK(labels.start_label[t] == 0.0);
        CHECK(labels.end_label[t] == 0.0);
    }
}

TEST_CASE("tem labels: full-sequence instance -> all-ones actionness") {
    auto ann = make_ann({{0, 99}}, 100);
    auto labels = labeling::make_tem_labels(ann, 100, 1.0);
    for (int t = 0; t < 100; ++t) CHECK(labels.action_label[t] == 1.0);
}

TEST_CASE("tem labels: [20,60] dilates starts over [18,22]") {
    auto ann = make_ann({{20, 60}}, 100);
    auto labels = labeling::make_tem_labels(ann, 100, 1.0);
    for (int t = 0; t < 100; ++t) {
        bool in_start = t >= 18 && t <= 22;
        CHECK(labels.start_label[t] == (in_start ? 1.0 : 0.0));
        bool in_end = t >= 58 && t <= 62;
        CHECK(labels.end_label[t] == (in_end ? 1.0 : 0.0));
        bool in_action = t >= 20 && t <= 60;
        CHECK(labels.action_label[t] == (in_action ? 1.0 : 0.0));
    }
}

TEST_CASE("pem iou targets") {
    auto ann = make_ann({{5, 15}}, 100);
    CHECK(labeling::pem_iou_target(5, 15, ann, 1.0) == doctest::Approx(1.0));
    CHECK(labeling::pem_iou_target(50, 60, ann, 1.0) == doctest::Approx(0.0));
    CHECK(labeling::pem_iou_target(0, 10, ann, 1.0) == doctest::Approx(5.0 / 15.0));

    data::AnnotationSet empty;
    empty.duration = 100;
    CHECK(labeling::pem_iou_target(0, 10, empty, 1.0) == 0.0);

    auto targets = labeling::make_pem_labels({{5, 15}, {0, 10}}, ann, 1.0);
    REQUIRE(targets.size() == 2);
    CHECK(targets[0] == doctest::Approx(1.0));
    CHECK(targets[1] == doctest::Approx(1.0 / 3.0));
}
