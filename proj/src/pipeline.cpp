#include "tvnet/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "tvnet/checkpoint.hpp"
#include "tvnet/labeling.hpp"

namespace tvnet::pipeline {

namespace fs = std::filesystem;

const char* kVersion = "1.0.0";

Dataset make_synth_split(const config::PipelineConfig& cfg, const std::string& split) {
    synth::SynthConfig sc = cfg.synth;
    sc.T = cfg.T;
    sc.C = cfg.C;
    sc.num_videos = split == "train" ? cfg.num_train_videos : cfg.num_test_videos;
    sc.seed = derive_seed(cfg.seed, "synth." + split);
    sc.id_prefix = split;
    synth::SynthDataset raw = synth::generate_synthetic(sc);
    return {std::move(raw.annotations), std::move(raw.features)};
}

void write_dataset(const Dataset& ds, const std::string& dir, const std::string& split) {
    fs::create_directories(dir);
    data::save_annotations(dir + "/annotations_" + split + ".json", ds.annotations);
    std::string feat_dir = dir + "/features_" + split;
    fs::create_directories(feat_dir);
    for (const auto& [vid, feat] : ds.features)
        data::save_features(feat_dir + "/" + vid + ".tvnf", feat);
}

Dataset load_dataset(const config::PipelineConfig& cfg, const std::string& dir,
                     const std::string& split) {
    Dataset ds;
    ds.annotations = data::load_annotations(dir + "/annotations_" + split + ".json");
    std::string feat_dir = dir + "/features_" + split;
    for (const auto& [vid, ann] : ds.annotations) {
        data::FeatureSequence feat =
            data::load_features(feat_dir + "/" + vid + ".tvnf", cfg.T, cfg.C, true);
        feat.video_id = vid;
        feat.frame_rate_ratio = ann.duration / cfg.T;
        ds.features.emplace(vid, std::move(feat));
    }
    return ds;
}

Models init_models(const config::PipelineConfig& cfg) {
    Models m;
    m.tem_model = std::make_unique<tem::TemModel>(cfg.C, cfg.tem_hidden,
                                                  derive_seed(cfg.seed, "tem.init"));
    m.pem_model = std::make_unique<pem::PemModel>(cfg.pem_hidden, derive_seed(cfg.seed, "pem.init"));
    for (int j_len : cfg.window_lengths) {
        std::string tag = "vem.init." + vem::to_string(cfg.vem_encoder) + ".J" +
                          std::to_string(j_len);
        m.vem_start.push_back(std::make_unique<vem::VemEncoder>(
            cfg.C, j_len, cfg.vem_encoder, cfg.vem_conv_channels, cfg.vem_lstm_hidden,
            derive_seed(cfg.seed, tag + ".start")));
        m.vem_end.push_back(std::make_unique<vem::VemEncoder>(
            cfg.C, j_len, cfg.vem_encoder, cfg.vem_conv_channels, cfg.vem_lstm_hidden,
            derive_seed(cfg.seed, tag + ".end")));
    }
    return m;
}

std::string tem_checkpoint_path(const std::string& dir) { return dir + "/tem.tvnc"; }
std::string pem_checkpoint_path(const std::string& dir) { return dir + "/pem.tvnc"; }

std::string vem_checkpoint_path(const std::string& dir, const config::PipelineConfig& cfg,
                                int window_length, vem::Side side) {
    return dir + "/vem_" + vem::to_string(cfg.vem_encoder) + "_" +
           (side == vem::Side::start ? "start" : "end") + "_J" + std::to_string(window_length) +
           ".tvnc";
}

namespace {

void write_loss_csv(const std::string& path, const std::vector<real>& losses) {
    std::ofstream os(path);
    require(bool(os), "cannot open " + path + " for writing");
    os << "epoch,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) os << i << "," << losses[i] << "\n";
}

// Actionness per training video (constant 1 when suppression is disabled).
std::vector<real> video_actionness(const config::PipelineConfig& cfg, const Models& models,
                                   const data::FeatureSequence& feat) {
    if (!cfg.use_actionness) return std::vector<real>(feat.T, real(1));
    return models.tem_model->forward(feat).b_action;
}

}  // namespace

tem::TrainResult train_tem(const config::PipelineConfig& cfg, const Dataset& train, Models& models,
                           const std::string& out_dir) {
    tem::TrainOptions opts;
    opts.schedule = cfg.tem_stage.schedule;
    opts.batch_videos = cfg.tem_stage.batch;
    opts.seed = derive_seed(cfg.seed, "tem.train");
    tem::TrainResult result = tem::tem_train(*models.tem_model, train.annotations, train.features,
                                             opts);
    fs::create_directories(out_dir);
    nn::save_checkpoint(tem_checkpoint_path(out_dir), models.tem_model->params());
    write_loss_csv(out_dir + "/loss_tem.csv", result.epoch_loss);
    return result;
}

pem::TrainResult train_pem(const config::PipelineConfig& cfg, const Dataset& train, Models& models,
                           const std::string& out_dir) {
    // Candidates from the pipeline with untrained voting encoders, plus
    // jittered ground truth, capped per video.
    config::PipelineConfig boot_cfg = cfg;
    Models boot = init_models(boot_cfg);  // untrained VEM with the same seeds

    Rng rng(derive_seed(cfg.seed, "pem.proposals"));
    std::vector<pem::TrainingProposal> training;
    for (const auto& [vid, feat] : train.features) {
        const auto& ann = train.annotations.at(vid);
        std::vector<real> b_action = video_actionness(cfg, models, feat);
        data::FeatureSequence suppressed = tem::suppress_background(feat, b_action);

        std::vector<std::pair<real, real>> candidates;
        // Jittered ground truth first (the informative positives).
        for (const auto& inst : ann.instances) {
            real gs = static_cast<real>(inst.start / feat.frame_rate_ratio);
            real ge = static_cast<real>(inst.end / feat.frame_rate_ratio);
            real dur = ge - gs;
            for (int k = 0; k < cfg.pem_jitters_per_gt; ++k) {
                real s = gs + static_cast<real>(rng.uniform(-0.1, 0.1)) * dur;
                real e = ge + static_cast<real>(rng.uniform(-0.1, 0.1)) * dur;
                s = std::clamp(s, real(0), static_cast<real>(feat.T - 2));
                e = std::clamp(e, s + 1, static_cast<real>(feat.T - 1));
                candidates.emplace_back(s, e);
            }
        }
        // Pipeline candidates from untrained encoders (spread of negatives).
        std::vector<vem::VotingScores> scales;
        for (std::size_t i = 0; i < boot.vem_start.size(); ++i) {
            auto sp = vem::vem_forward(*boot.vem_start[i], suppressed);
            auto ep = vem::vem_forward(*boot.vem_end[i], suppressed);
            scales.push_back(vem::accumulate_votes(sp, ep, feat.T));
        }
        auto fused = vem::fuse_window_scales(scales, cfg.scale_fusion);
        auto cands = proposals::extract_candidates(fused, static_cast<real>(cfg.xi));
        for (const auto& [s, e] : proposals::pair_proposals(cands.starts, cands.ends, cfg.tau)) {
            if (static_cast<int>(candidates.size()) >= cfg.pem_max_proposals_per_video) break;
            candidates.emplace_back(static_cast<real>(s), static_cast<real>(e));
        }

        for (const auto& [s, e] : candidates) {
            pem::TrainingProposal tp;
            tp.start = s;
            tp.end = e;
            tp.iou_target = labeling::pem_iou_target(s, e, ann, feat.frame_rate_ratio);
            tp.profile = pem::proposal_feature(s, e, b_action);
            training.push_back(std::move(tp));
        }
    }

    pem::TrainOptions opts;
    opts.schedule = cfg.pem_stage.schedule;
    opts.batch_size = cfg.pem_stage.batch;
    opts.seed = derive_seed(cfg.seed, "pem.train");
    pem::TrainResult result = pem::pem_train(*models.pem_model, training, opts);
    fs::create_directories(out_dir);
    nn::save_checkpoint(pem_checkpoint_path(out_dir), models.pem_model->params());
    write_loss_csv(out_dir + "/loss_pem.csv", result.epoch_loss);
    return result;
}

std::vector<vem::TrainResult> train_vem(const config::PipelineConfig& cfg, const Dataset& train,
                                        Models& models, const std::string& out_dir) {
    // Suppressed features and labels are shared by all window scales.
    std::vector<data::FeatureSequence> suppressed;
    suppressed.reserve(train.features.size());
    for (const auto& [vid, feat] : train.features)
        suppressed.push_back(
            tem::suppress_background(feat, video_actionness(cfg, models, feat)));

    std::vector<vem::TrainResult> results;
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < cfg.window_lengths.size(); ++i) {
        int j_len = cfg.window_lengths[i];
        std::vector<vem::VideoWindows> dataset;
        std::size_t k = 0;
        for (const auto& [vid, feat] : train.features) {
            vem::VideoWindows vw;
            vw.features = &suppressed[k++];
            vw.labels = labeling::make_window_labels(train.annotations.at(vid), feat.T, j_len, 1,
                                                     feat.frame_rate_ratio);
            dataset.push_back(std::move(vw));
        }

        vem::TrainOptions opts;
        opts.schedule = cfg.vem_stage.schedule;
        opts.batch_windows = cfg.vem_stage.batch;
        opts.seed = derive_seed(cfg.seed, "vem.train.J" + std::to_string(j_len));

        results.push_back(vem::vem_train(*models.vem_start[i], vem::Side::start, dataset, opts));
        nn::save_checkpoint(vem_checkpoint_path(out_dir, cfg, j_len, vem::Side::start),
                            models.vem_start[i]->params());
        write_loss_csv(out_dir + "/loss_vem_start_J" + std::to_string(j_len) + ".csv",
                       results.back().epoch_loss);

        results.push_back(vem::vem_train(*models.vem_end[i], vem::Side::end, dataset, opts));
        nn::save_checkpoint(vem_checkpoint_path(out_dir, cfg, j_len, vem::Side::end),
                            models.vem_end[i]->params());
        write_loss_csv(out_dir + "/loss_vem_end_J" + std::to_string(j_len) + ".csv",
                       results.back().epoch_loss);
    }
    return results;
}

void save_models(const Models& models, const config::PipelineConfig& cfg, const std::string& dir) {
    fs::create_directories(dir);
    nn::save_checkpoint(tem_checkpoint_path(dir), models.tem_model->params());
    nn::save_checkpoint(pem_checkpoint_path(dir), models.pem_model->params());
    for (std::size_t i = 0; i < models.vem_start.size(); ++i) {
        int j_len = cfg.window_lengths[i];
        nn::save_checkpoint(vem_checkpoint_path(dir, cfg, j_len, vem::Side::start),
                            models.vem_start[i]->params());
        nn::save_checkpoint(vem_checkpoint_path(dir, cfg, j_len, vem::Side::end),
                            models.vem_end[i]->params());
    }
}

void load_models(Models& models, const config::PipelineConfig& cfg, const std::string& dir) {
    auto check = [](const std::string& path, const char* stage) {
        require(fs::exists(path), std::string("missing ") + stage + " checkpoint " + path +
                                      "; train that stage first");
    };
    check(tem_checkpoint_path(dir), "tem");
    nn::load_checkpoint(tem_checkpoint_path(dir), models.tem_model->params());
    check(pem_checkpoint_path(dir), "pem");
    nn::load_checkpoint(pem_checkpoint_path(dir), models.pem_model->params());
    for (std::size_t i = 0; i < models.vem_start.size(); ++i) {
        int j_len = cfg.window_lengths[i];
        std::string sp = vem_checkpoint_path(dir, cfg, j_len, vem::Side::start);
        std::string ep = vem_checkpoint_path(dir, cfg, j_len, vem::Side::end);
        check(sp, "vem");
        check(ep, "vem");
        nn::load_checkpoint(sp, models.vem_start[i]->params());
        nn::load_checkpoint(ep, models.vem_end[i]->params());
    }
}

data::PredictionSet infer_video(const config::PipelineConfig& cfg, const Models& models,
                                const data::FeatureSequence& features,
                                const data::AnnotationSet& ann, const InferOptions& opts) {
    data::PredictionSet out;
    out.video_id = features.video_id;

    tem::BoundaryScores tem_scores;
    if (cfg.use_actionness || cfg.fusion_mode != proposals::FusionMode::voting_only) {
        tem_scores = models.tem_model->forward(features);
    } else {
        tem_scores.b_start.assign(features.T, real(0.5));
        tem_scores.b_end.assign(features.T, real(0.5));
    }
    std::vector<real> b_action = cfg.use_actionness ? tem_scores.b_action
                                                    : std::vector<real>(features.T, real(1));
    data::FeatureSequence suppressed = tem::suppress_background(features, b_action);

    std::vector<int> scale_idx = opts.scale_subset;
    if (scale_idx.empty())
        for (std::size_t i = 0; i < models.vem_start.size(); ++i)
            scale_idx.push_back(static_cast<int>(i));

    std::vector<vem::VotingScores> scales;
    for (int i : scale_idx) {
        auto sp = vem::vem_forward(*models.vem_start[i], suppressed);
        auto ep = vem::vem_forward(*models.vem_end[i], suppressed);
        scales.push_back(vem::accumulate_votes(sp, ep, features.T));
    }
    vem::VotingScores fused = vem::fuse_window_scales(scales, cfg.scale_fusion);
    proposals::Candidates cands = proposals::extract_candidates(fused, static_cast<real>(cfg.xi));
    for (auto& c : cands.starts) c.naive = tem_scores.b_start.empty() ? real(0) : tem_scores.b_start[c.t];
    for (auto& c : cands.ends) c.naive = tem_scores.b_end.empty() ? real(0) : tem_scores.b_end[c.t];

    if (!opts.dump_scores_dir.empty()) {
        fs::create_directories(opts.dump_scores_dir);
        std::ofstream os(opts.dump_scores_dir + "/" + features.video_id + "_scores.csv");
        os << "t,v_start,v_end,b_start,b_end,b_action\n";
        for (int t = 0; t < features.T; ++t)
            os << t << "," << cands.norm_start[t] << "," << cands.norm_end[t] << ","
               << (tem_scores.b_start.empty() ? real(0) : tem_scores.b_start[t]) << ","
               << (tem_scores.b_end.empty() ? real(0) : tem_scores.b_end[t]) << ","
               << b_action[t] << "\n";
    }

    std::vector<proposals::ScoredProposal> scored;
    for (const auto& s : cands.starts) {
        for (const auto& e : cands.ends) {
            if (s.t >= e.t || e.t - s.t > cfg.tau) continue;
            proposals::ScoredProposal p;
            p.start = s.t;
            p.end = e.t;
            p.v_start = s.voting;
            p.v_end = e.voting;
            p.b_start = s.naive;
            p.b_end = e.naive;
            p.pem = models.pem_model->score(static_cast<real>(s.t), static_cast<real>(e.t),
                                            b_action);
            p.score = proposals::fuse_confidence(p.v_start, p.v_end, p.b_start, p.b_end, p.pem,
                                                 static_cast<real>(cfg.alpha), cfg.fusion_mode);
            scored.push_back(p);
        }
    }
    scored = proposals::dedup_keep_best(std::move(scored));
    scored = proposals::soft_nms(std::move(scored), static_cast<real>(cfg.soft_nms_sigma),
                                 cfg.top_k);

    data::PredictionSet raw;
    raw.video_id = features.video_id;
    for (const auto& p : scored) {
        data::Prediction q;
        q.start = features.index_to_seconds(p.start);
        q.end = features.index_to_seconds(p.end);
        q.score = p.score;
        raw.proposals.push_back(std::move(q));
    }
    return proposals::assign_classes(raw, ann, cfg.top_c);
}

std::map<std::string, data::PredictionSet> infer_all(const config::PipelineConfig& cfg,
                                                     const Models& models, const Dataset& ds,
                                                     const InferOptions& opts) {
    std::vector<const data::FeatureSequence*> feats;
    std::vector<const data::AnnotationSet*> anns;
    for (const auto& [vid, feat] : ds.features) {
        feats.push_back(&feat);
        anns.push_back(&ds.annotations.at(vid));
    }

    std::vector<data::PredictionSet> results(feats.size());
    int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < feats.size(); ++i)
            results[i] = infer_video(cfg, models, *feats[i], *anns[i], opts);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        std::exception_ptr error;
        std::mutex error_mutex;
        for (int w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= feats.size()) break;
                    try {
                        results[i] = infer_video(cfg, models, *feats[i], *anns[i], opts);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : workers) t.join();
        if (error) std::rethrow_exception(error);
    }

    std::map<std::string, data::PredictionSet> out;
    for (auto& r : results) out.emplace(r.video_id, std::move(r));
    return out;
}

eval::EvalReport evaluate(const config::PipelineConfig& cfg,
                          const std::map<std::string, data::PredictionSet>& preds,
                          const Dataset& ds) {
    return eval::compute_map(preds, ds.annotations, cfg.eval_thresholds);
}

void write_manifest(const std::string& out_dir, const config::PipelineConfig& cfg,
                    const std::string& command) {
    fs::create_directories(out_dir);
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.seed;
    j["version"] = kVersion;
    std::ofstream os(out_dir + "/manifest.json");
    require(bool(os), "cannot write manifest in " + out_dir);
    os << j.dump(1) << "\n";
}

}  // namespace tvnet::pipeline
