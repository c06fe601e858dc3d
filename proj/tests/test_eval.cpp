#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tvnet/eval.hpp"
#include "tvnet/synth.hpp"

using namespace tvnet;

namespace {

data::AnnotationSet ann_with(std::vector<std::tuple<double, double, std::string>> insts,
                             double duration = 100) {
    data::AnnotationSet ann;
    ann.duration = duration;
    for (auto& [s, e, l] : insts) ann.instances.push_back({s, e, l});
    return ann;
}

data::PredictionSet preds_with(const std::string& vid,
                               std::vector<std::tuple<double, double, double, std::string>> ps) {
    data::PredictionSet out;
    out.video_id = vid;
    for (auto& [s, e, c, l] : ps) out.proposals.push_back({s, e, c, l});
    std::stable_sort(out.proposals.begin(), out.proposals.end(),
                     [](const data::Prediction& a, const data::Prediction& b) {
                         return a.score > b.score;
                     });
    return out;
}

}  // namespace

TEST_CASE("temporal iou basics") {
    CHECK(eval::temporal_iou(3, 9, 3, 9) == doctest::Approx(1.0));
    CHECK(eval::temporal_iou(0, 5, 6, 9) == doctest::Approx(0.0));
    CHECK(eval::temporal_iou(0, 10, 5, 15) == doctest::Approx(1.0 / 3.0));
    CHECK(eval::temporal_iou(5, 5, 0, 10) == 0.0);  // degenerate
}

TEST_CASE("perfect predictions give mAP 1.0 at every threshold") {
    std::map<std::string, data::AnnotationSet> anns;
    std::map<std::string, data::PredictionSet> preds;
    anns["v1"] = ann_with({{10, 30, "a"}, {50, 70, "b"}});
    anns["v2"] = ann_with({{5, 25, "a"}});
    preds["v1"] = preds_with("v1", {{10, 30, 0.7, "a"}, {50, 70, 0.3, "b"}});
    preds["v2"] = preds_with("v2", {{5, 25, 0.9, "a"}});
    auto report = eval::compute_map(preds, anns, {0.5, 0.75, 0.95});
    REQUIRE(!report.empty);
    for (double m : report.map_per_threshold) CHECK(m == doctest::Approx(1.0));
    CHECK(report.average_map == doctest::Approx(1.0));
}

TEST_CASE("hand-computed two-prediction PR curves") {
    std::map<std::string, data::AnnotationSet> anns;
    anns["v"] = ann_with({{10, 30, "a"}});

    SUBCASE("correct first -> AP 1.0") {
        std::map<std::string, data::PredictionSet> preds;
        preds["v"] = preds_with("v", {{10, 30, 0.9, "a"}, {60, 80, 0.5, "a"}});
        auto report = eval::compute_map(preds, anns, {0.5});
        CHECK(report.map_per_threshold[0] == doctest::Approx(1.0));
    }
    SUBCASE("wrong first -> AP 0.5") {
        std::map<std::string, data::PredictionSet> preds;
        preds["v"] = preds_with("v", {{60, 80, 0.9, "a"}, {10, 30, 0.5, "a"}});
        auto report = eval::compute_map(preds, anns, {0.5});
        CHECK(report.map_per_threshold[0] == doctest::Approx(0.5));
    }
}

TEST_CASE("no ground truth -> report flagged empty, not zero") {
    std::map<std::string, data::AnnotationSet> anns;
    anns["v"] = ann_with({});
    std::map<std::string, data::PredictionSet> preds;
    preds["v"] = preds_with("v", {{1, 2, 0.5, "a"}});
    auto report = eval::compute_map(preds, anns, {0.5});
    CHECK(report.empty);
    CHECK(std::isnan(report.average_map));
    CHECK(std::isnan(report.map_per_threshold[0]));
}

TEST_CASE("compute_map matches the brute-force evaluator on small random instances") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        int n_gt = static_cast<int>(rng.uniform_int(1, 3));
        int n_pred = static_cast<int>(rng.uniform_int(0, 5));

        std::map<std::string, data::AnnotationSet> anns;
        std::map<std::string, data::PredictionSet> preds;
        std::vector<oracles::RefInstance> ref_gts;
        std::vector<std::pair<double, oracles::RefInstance>> ref_preds;

        data::AnnotationSet ann;
        ann.duration = 100;
        for (int g = 0; g < n_gt; ++g) {
            double s = rng.uniform(0, 80);
            double e = s + rng.uniform(2, 20);
            ann.instances.push_back({s, e, "a"});
            ref_gts.push_back({"v", s, e});
        }
        anns["v"] = ann;

        data::PredictionSet ps;
        ps.video_id = "v";
        for (int p = 0; p < n_pred; ++p) {
            double s = rng.uniform(0, 80);
            double e = s + rng.uniform(2, 20);
            double score = rng.uniform(0.01, 1.0);
            ps.proposals.push_back({s, e, score, "a"});
            ref_preds.push_back({score, {"v", s, e}});
        }
        std::stable_sort(ps.proposals.begin(), ps.proposals.end(),
                         [](const data::Prediction& a, const data::Prediction& b) {
                             return a.score > b.score;
                         });
        preds["v"] = ps;

        for (double thr : {0.3, 0.5, 0.7}) {
            auto report = eval::compute_map(preds, anns, {thr});
            double expected = oracles::reference_class_ap(ref_preds, ref_gts, thr);
            CHECK(report.map_per_threshold[0] == doctest::Approx(expected).epsilon(1e-10));
        }
    }
}

TEST_CASE("appending a strictly lower-scored false positive never increases AP") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::map<std::string, data::AnnotationSet> anns;
        anns["v"] = ann_with({{10, 30, "a"}, {50, 60, "a"}});
        data::PredictionSet ps;
        ps.video_id = "v";
        int n = static_cast<int>(rng.uniform_int(1, 6));
        for (int i = 0; i < n; ++i) {
            double s = rng.uniform(0, 80);
            ps.proposals.push_back({s, s + rng.uniform(2, 25), rng.uniform(0.2, 1.0), "a"});
        }
        std::stable_sort(ps.proposals.begin(), ps.proposals.end(),
                         [](const data::Prediction& a, const data::Prediction& b) {
                             return a.score > b.score;
                         });
        std::map<std::string, data::PredictionSet> preds;
        preds["v"] = ps;
        double before = eval::compute_map(preds, anns, {0.5}).map_per_threshold[0];

        ps.proposals.push_back({90, 95, 0.01, "a"});  // disjoint from both gts
        preds["v"] = ps;
        double after = eval::compute_map(preds, anns, {0.5}).map_per_threshold[0];
        CHECK(after <= before + 1e-12);
    }
}

TEST_CASE("mAP is invariant under strictly monotone score transforms") {
    Rng rng(37);
    std::map<std::string, data::AnnotationSet> anns;
    anns["v"] = ann_with({{10, 30, "a"}, {40, 70, "b"}});
    data::PredictionSet ps;
    ps.video_id = "v";
    for (int i = 0; i < 8; ++i) {
        double s = rng.uniform(0, 70);
        ps.proposals.push_back(
            {s, s + rng.uniform(3, 30), rng.uniform(0.1, 1.0), i % 2 ? "a" : "b"});
    }
    std::stable_sort(ps.proposals.begin(), ps.proposals.end(),
                     [](const data::Prediction& a, const data::Prediction& b) {
                         return a.score > b.score;
                     });
    std::map<std::string, data::PredictionSet> preds;
    preds["v"] = ps;
    auto before = eval::compute_map(preds, anns, {0.5, 0.75});

    for (auto& p : ps.proposals) p.score = std::exp(3 * p.score) + 7;  // strictly monotone
    preds["v"] = ps;
    auto after = eval::compute_map(preds, anns, {0.5, 0.75});
    for (std::size_t i = 0; i < before.map_per_threshold.size(); ++i)
        CHECK(before.map_per_threshold[i] == doctest::Approx(after.map_per_threshold[i]));
    CHECK(before.average_map == doctest::Approx(after.average_map));
}

TEST_CASE("average mAP is the mean of the ten canonical thresholds") {
    std::map<std::string, data::AnnotationSet> anns;
    anns["v"] = ann_with({{10, 30, "a"}});
    std::map<std::string, data::PredictionSet> preds;
    preds["v"] = preds_with("v", {{11, 30, 0.9, "a"}});  // iou = 19/20 = 0.95
    auto report = eval::compute_map(preds, anns, eval::average_map_thresholds());
    double mean = 0;
    for (double m : report.map_per_threshold) mean += m;
    mean /= 10;
    CHECK(report.average_map == doctest::Approx(mean));
}

TEST_CASE("report serialization") {
    std::map<std::string, data::AnnotationSet> anns;
    anns["v"] = ann_with({{10, 30, "a"}});
    std::map<std::string, data::PredictionSet> preds;
    preds["v"] = preds_with("v", {{10, 30, 0.9, "a"}});
    auto report = eval::compute_map(preds, anns, {0.5});
    std::string json = report.to_json();
    CHECK(json.find("average_map") != std::string::npos);
    std::string csv = report.to_csv("run1");
    CHECK(csv.find("run1") != std::string::npos);
    CHECK(csv.find("mAP@0.5") != std::string::npos);
}
