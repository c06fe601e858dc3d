#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "oracles.hpp"
#include "tvnet/labeling.hpp"
#include "tvnet/proposals.hpp"
#include "tvnet/synth.hpp"
#include "tvnet/vem.hpp"

using namespace tvnet;

namespace {

data::FeatureSequence random_features(int t, int c, Rng& rng) {
    data::FeatureSequence f;
    f.video_id = "v";
    f.T = t;
    f.C = c;
    f.values.resize(static_cast<std::size_t>(t) * c);
    for (auto& v : f.values) v = static_cast<real>(rng.uniform(-1, 1));
    return f;
}

vem::WindowPredictions random_preds(int t, int j, Rng& rng) {
    vem::WindowPredictions p;
    p.window_length = j;
    p.num_windows = t - j + 1;
    p.values.resize(p.num_windows);
    for (auto& row : p.values) {
        row.resize(j);
        for (auto& v : row) v = static_cast<real>(rng.uniform(-1, 1));
    }
    return p;
}

// Window predictions copied straight from the ground-truth labels.
std::pair<vem::WindowPredictions, vem::WindowPredictions> oracle_predictions(
    const data::AnnotationSet& ann, int t, int j) {
    auto labels = labeling::make_window_labels(ann, t, j, 1, 1.0);
    vem::WindowPredictions sp, ep;
    sp.window_length = ep.window_length = j;
    sp.num_windows = ep.num_windows = static_cast<int>(labels.size());
    for (const auto& wl : labels) {
        sp.values.push_back(wl.r_start);
        ep.values.push_back(wl.r_end);
    }
    return {sp, ep};
}

}  // namespace

TEST_CASE("vem_forward: window count, boundedness, statelessness") {
    Rng rng(3);
    vem::VemEncoder enc(4, 15, vem::EncoderKind::lstm, 8, 16, 99);
    data::FeatureSequence f = random_features(100, 4, rng);
    auto preds = vem::vem_forward(enc, f);
    CHECK(preds.num_windows == 86);  // T - J + 1
    REQUIRE(static_cast<int>(preds.values.size()) == 86);
    for (const auto& row : preds.values)
        for (real v : row) {
            CHECK(v > -1);
            CHECK(v < 1);
        }

    // identical repeated content -> identical predictions
    data::FeatureSequence rep;
    rep.T = 40;
    rep.C = 4;
    rep.values.resize(160);
    for (int t = 0; t < 40; ++t)
        for (int c = 0; c < 4; ++c) rep.values[t * 4 + c] = static_cast<real>((t % 5) * 0.1 + c);
    vem::VemEncoder enc5(4, 5, vem::EncoderKind::lstm, 8, 16, 7);
    auto p = vem::vem_forward(enc5, rep);
    // windows at offsets 0 and 5 see identical content (period 5)
    for (int j = 0; j < 5; ++j) CHECK(p.values[0][j] == p.values[5][j]);
}

TEST_CASE("vem_forward rejects sequences shorter than the window") {
    Rng rng(4);
    vem::VemEncoder enc(4, 15, vem::EncoderKind::lstm, 8, 16, 99);
    data::FeatureSequence f = random_features(10, 4, rng);
    CHECK_THROWS_WITH_AS(vem::vem_forward(enc, f), doctest::Contains("pad"), std::runtime_error);
}

TEST_CASE("accumulate_votes: all-zero predictions vote zero") {
    vem::WindowPredictions z;
    z.window_length = 5;
    z.num_windows = 16;
    z.values.assign(16, std::vector<real>(5, real(0)));
    auto scores = vem::accumulate_votes(z, z, 20);
    for (real v : scores.v_start) CHECK(v == 0.0);
    for (real v : scores.v_end) CHECK(v == 0.0);
}

TEST_CASE("accumulate_votes: single window J=3 with [-a, 0, a]") {
    double a = 0.4;
    vem::WindowPredictions sp, ep;
    sp.window_length = ep.window_length = 3;
    sp.num_windows = ep.num_windows = 1;
    sp.values = {{-a, 0.0, a}};
    ep.values = {{a, 0.0, -a}};  // mirrored sign convention for ends

    std::vector<real> vs_ref, ve_ref;
    oracles::naive_votes(sp.values, ep.values, 3, 3, vs_ref, ve_ref);
    // hand arithmetic: middle location -(-a) + (+a) = 2a is the unique maximum
    // at the zero crossing; the flanks get a.
    CHECK(vs_ref[0] == doctest::Approx(a));
    CHECK(vs_ref[1] == doctest::Approx(2 * a));
    CHECK(vs_ref[2] == doctest::Approx(a));

    auto scores = vem::accumulate_votes(sp, ep, 3);
    for (int t = 0; t < 3; ++t) {
        CHECK(scores.v_start[t] == doctest::Approx(vs_ref[t]).epsilon(1e-12));
        CHECK(scores.v_end[t] == doctest::Approx(ve_ref[t]).epsilon(1e-12));
    }
}

TEST_CASE("optimized accumulation equals the naive triple loop on random inputs") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        int j = static_cast<int>(rng.uniform_int(2, 20));
        int t = static_cast<int>(rng.uniform_int(j, 200));
        auto sp = random_preds(t, j, rng);
        auto ep = random_preds(t, j, rng);
        auto fast = vem::accumulate_votes(sp, ep, t);
        std::vector<real> vs, ve;
        oracles::naive_votes(sp.values, ep.values, t, j, vs, ve);
        for (int i = 0; i < t; ++i) {
            CHECK(std::abs(fast.v_start[i] - vs[i]) < 1e-9);
            CHECK(std::abs(fast.v_end[i] - ve[i]) < 1e-9);
        }
    }
}

TEST_CASE("accumulation is linear in the predictions") {
    Rng rng(19);
    int t = 40, j = 7;
    auto sp = random_preds(t, j, rng);
    auto ep = random_preds(t, j, rng);
    auto base = vem::accumulate_votes(sp, ep, t);
    real k = real(3.5);
    auto scaled_sp = sp;
    auto scaled_ep = ep;
    for (auto& row : scaled_sp.values)
        for (auto& v : row) v *= k;
    for (auto& row : scaled_ep.values)
        for (auto& v : row) v *= k;
    auto scaled = vem::accumulate_votes(scaled_sp, scaled_ep, t);
    for (int i = 0; i < t; ++i) {
        CHECK(scaled.v_start[i] == doctest::Approx(k * base.v_start[i]));
        CHECK(scaled.v_end[i] == doctest::Approx(k * base.v_end[i]));
    }
}

TEST_CASE("votes at t only depend on windows containing t") {
    Rng rng(23);
    int t = 50, j = 9;
    auto sp = random_preds(t, j, rng);
    auto ep = random_preds(t, j, rng);
    auto base = vem::accumulate_votes(sp, ep, t);

    // perturb a window far from location 10: windows covering 10 are [2..10]
    auto sp2 = sp;
    for (auto& v : sp2.values[30]) v = static_cast<real>(rng.uniform(-1, 1));
    auto changed = vem::accumulate_votes(sp2, ep, t);
    CHECK(changed.v_start[10] == base.v_start[10]);
    CHECK(changed.v_start[35] != base.v_start[35]);
}

TEST_CASE("perfect predictions put a candidate within one frame of every boundary") {
    // The finest default window resolves boundaries at frame precision; wider
    // windows trade precision for context (their vote fields overlap when
    // boundaries sit closer than the window span).
    const int j_len = 5;
    int found = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        synth::SynthConfig cfg;
        cfg.num_videos = 1;
        cfg.seed = 9000 + trial;
        auto ds = synth::generate_synthetic(cfg);
        const auto& ann = ds.annotations.begin()->second;

        auto [sp, ep] = oracle_predictions(ann, cfg.T, j_len);
        auto scores = vem::accumulate_votes(sp, ep, cfg.T);
        auto cands = proposals::extract_candidates(scores, real(0.3));

        auto bounds = labeling::annotation_frame_indices(ann, cfg.T, 1.0);
        for (int s : bounds.starts) {
            ++total;
            for (const auto& c : cands.starts)
                if (std::abs(c.t - s) <= 1) {
                    ++found;
                    break;
                }
        }
        for (int e : bounds.ends) {
            ++total;
            for (const auto& c : cands.ends)
                if (std::abs(c.t - e) <= 1) {
                    ++found;
                    break;
                }
        }
    }
    CHECK(found == total);  // 100% recall
}

TEST_CASE("well-separated boundaries are local vote maxima at every default scale") {
    for (int trial = 0; trial < 40; ++trial) {
        synth::SynthConfig cfg;
        cfg.num_videos = 1;
        cfg.max_actions = 1;  // isolated boundaries
        cfg.seed = 5000 + trial;
        auto ds = synth::generate_synthetic(cfg);
        const auto& ann = ds.annotations.begin()->second;
        auto bounds = labeling::annotation_frame_indices(ann, cfg.T, 1.0);

        for (int j : {5, 15}) {
            auto [sp, ep] = oracle_predictions(ann, cfg.T, j);
            auto scores = vem::accumulate_votes(sp, ep, cfg.T);
            auto cands = proposals::extract_candidates(scores, real(0.3));
            for (int s : bounds.starts) {
                bool hit = false;
                for (const auto& c : cands.starts) hit = hit || std::abs(c.t - s) <= 1;
                CHECK(hit);
            }
            for (int e : bounds.ends) {
                bool hit = false;
                for (const auto& c : cands.ends) hit = hit || std::abs(c.t - e) <= 1;
                CHECK(hit);
            }
        }
    }
}

TEST_CASE("fusing a normalized sequence with itself is the identity") {
    Rng rng(29);
    int t = 60, j = 5;
    auto sp = random_preds(t, j, rng);
    auto ep = random_preds(t, j, rng);
    auto scores = vem::normalize_scores(vem::accumulate_votes(sp, ep, t));
    auto fused = vem::fuse_window_scales(scores, scores);
    for (int i = 0; i < t; ++i) {
        CHECK(fused.v_start[i] == doctest::Approx(scores.v_start[i]));
        CHECK(fused.v_end[i] == doctest::Approx(scores.v_end[i]));
    }
}

TEST_CASE("fusion preserves a shared argmax") {
    Rng rng(31);
    int t = 60, j1 = 9, j2 = 5;
    auto a = vem::accumulate_votes(random_preds(t, j1, rng), random_preds(t, j1, rng), t);
    auto b = a;
    // same peak location, different scaling
    for (auto& v : b.v_start) v = v * real(0.5) + real(2);
    for (auto& v : b.v_end) v = v * real(0.5) + real(2);
    (void)j2;
    auto fused = vem::fuse_window_scales(a, b);
    auto arg = [](const std::vector<real>& v) {
        return std::distance(v.begin(), std::max_element(v.begin(), v.end()));
    };
    CHECK(arg(fused.v_start) == arg(a.v_start));
    CHECK(arg(fused.v_end) == arg(a.v_end));
}

TEST_CASE("constant sequences normalize to zeros") {
    vem::VotingScores flat;
    flat.v_start.assign(10, real(4.2));
    flat.v_end.assign(10, real(-1.0));
    auto norm = vem::normalize_scores(flat);
    for (real v : norm.v_start) CHECK(v == 0.0);
}

TEST_CASE("training on all-zero targets drives predictions to zero") {
    // Tiny windows with zero labels; the encoder must regress to the constant.
    Rng rng(37);
    data::FeatureSequence f = random_features(60, 4, rng);
    labeling::WindowLabels proto;
    proto.length = 7;
    proto.r_start.assign(7, real(0));
    proto.r_end.assign(7, real(0));

    std::vector<vem::VideoWindows> dataset(1);
    dataset[0].features = &f;
    for (int w = 0; w + 7 <= 60; ++w) {
        auto wl = proto;
        wl.start_index = w;
        dataset[0].labels.push_back(wl);
    }

    vem::VemEncoder enc(4, 7, vem::EncoderKind::lstm, 8, 16, 11);
    vem::TrainOptions opts;
    opts.schedule.segments = {{60, real(1e-3)}};
    opts.batch_windows = 54;
    opts.seed = 5;
    auto result = vem::vem_train(enc, vem::Side::start, dataset, opts);
    CHECK(result.epoch_loss.back() < result.epoch_loss.front());

    auto preds = vem::vem_forward(enc, f);
    double mean_abs = 0;
    int count = 0;
    for (const auto& row : preds.values)
        for (real v : row) {
            mean_abs += std::abs(v);
            ++count;
        }
    mean_abs /= count;
    CHECK(mean_abs < 0.05);
}

TEST_CASE("vem training is deterministic and its loss decreases on synthetic data") {
    synth::SynthConfig scfg;
    scfg.num_videos = 6;
    scfg.seed = 21;
    auto ds = synth::generate_synthetic(scfg);

    std::vector<data::FeatureSequence> feats;
    for (auto& [vid, f] : ds.features) feats.push_back(f);
    auto build = [&] {
        std::vector<vem::VideoWindows> dataset;
        std::size_t i = 0;
        for (auto& [vid, ann] : ds.annotations) {
            vem::VideoWindows vw;
            vw.features = &feats[i++];
            vw.labels = labeling::make_window_labels(ann, scfg.T, 9, 1, 1.0);
            dataset.push_back(std::move(vw));
        }
        return dataset;
    };
    auto dataset = build();

    auto run = [&] {
        vem::VemEncoder enc(scfg.C, 9, vem::EncoderKind::lstm, 16, 24, 3);
        vem::TrainOptions opts;
        opts.schedule.segments = {{4, real(1e-3)}};
        opts.batch_windows = 256;
        opts.seed = 77;
        auto r = vem::vem_train(enc, vem::Side::start, dataset, opts);
        return std::make_pair(r.epoch_loss, enc.params().at("vem.conv1.weight").values());
    };
    auto [loss_a, w_a] = run();
    auto [loss_b, w_b] = run();
    CHECK(loss_a.back() < loss_a.front());
    CHECK(loss_a == loss_b);
    CHECK(std::memcmp(w_a.data(), w_b.data(), w_a.size() * sizeof(real)) == 0);
}

TEST_CASE("srf and sll variants run and stay bounded") {
    Rng rng(41);
    data::FeatureSequence f = random_features(50, 4, rng);
    for (auto kind : {vem::EncoderKind::srf, vem::EncoderKind::sll}) {
        vem::VemEncoder enc(4, 10, kind, 8, 16, 5);
        auto preds = vem::vem_forward(enc, f);
        CHECK(preds.num_windows == 41);
        for (const auto& row : preds.values)
            for (real v : row) {
                CHECK(v > -1);
                CHECK(v < 1);
            }
    }
    CHECK(vem::encoder_kind_from_string("srf") == vem::EncoderKind::srf);
    CHECK_THROWS(vem::encoder_kind_from_string("gru"));
}
