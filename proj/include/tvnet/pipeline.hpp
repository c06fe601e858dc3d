#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tvnet/config.hpp"
#include "tvnet/data.hpp"
#include "tvnet/eval.hpp"
#include "tvnet/pem.hpp"
#include "tvnet/proposals.hpp"
#include "tvnet/synth.hpp"
#include "tvnet/tem.hpp"
#include "tvnet/vem.hpp"

namespace tvnet::pipeline {

struct Dataset {
    std::map<std::string, data::AnnotationSet> annotations;
    std::map<std::string, data::FeatureSequence> features;
};

// Synthetic splits derive their seeds from the config seed and split name.
Dataset make_synth_split(const config::PipelineConfig& cfg, const std::string& split);

// annotations_{split}.json + features_{split}/{video}.tvnf under dir.
void write_dataset(const Dataset& ds, const std::string& dir, const std::string& split);
Dataset load_dataset(const config::PipelineConfig& cfg, const std::string& dir,
                     const std::string& split);

struct Models {
    std::unique_ptr<tem::TemModel> tem_model;
    std::unique_ptr<pem::PemModel> pem_model;
    // Index-aligned with cfg.window_lengths.
    std::vector<std::unique_ptr<vem::VemEncoder>> vem_start;
    std::vector<std::unique_ptr<vem::VemEncoder>> vem_end;
};

// Fresh models with seeds derived per stage from cfg.seed.
Models init_models(const config::PipelineConfig& cfg);

std::string tem_checkpoint_path(const std::string& dir);
std::string pem_checkpoint_path(const std::string& dir);
std::string vem_checkpoint_path(const std::string& dir, const config::PipelineConfig& cfg,
                                int window_length, vem::Side side);

// Stage trainers; each writes its checkpoint(s) and a per-epoch loss CSV under
// out_dir. PEM and VEM expect the TEM checkpoint to be loaded already.
tem::TrainResult train_tem(const config::PipelineConfig& cfg, const Dataset& train, Models& models,
                           const std::string& out_dir);
pem::TrainResult train_pem(const config::PipelineConfig& cfg, const Dataset& train, Models& models,
                           const std::string& out_dir);
std::vector<vem::TrainResult> train_vem(const config::PipelineConfig& cfg, const Dataset& train,
                                        Models& models, const std::string& out_dir);

void save_models(const Models& models, const config::PipelineConfig& cfg, const std::string& dir);
void load_models(Models& models, const config::PipelineConfig& cfg, const std::string& dir);

struct InferOptions {
    // Restrict fusion to these indices of cfg.window_lengths (empty = all).
    std::vector<int> scale_subset;
    // Per-video score curve CSVs (t, v_start, v_end, b_start, b_end, b_action).
    std::string dump_scores_dir;
};

data::PredictionSet infer_video(const config::PipelineConfig& cfg, const Models& models,
                                const data::FeatureSequence& features,
                                const data::AnnotationSet& ann,
                                const InferOptions& opts = {});

// Parallel over videos (cfg.jobs); output independent of the job count.
std::map<std::string, data::PredictionSet> infer_all(const config::PipelineConfig& cfg,
                                                     const Models& models, const Dataset& ds,
                                                     const InferOptions& opts = {});

eval::EvalReport evaluate(const config::PipelineConfig& cfg,
                          const std::map<std::string, data::PredictionSet>& preds,
                          const Dataset& ds);

// Manifest (config hash + seed + version) accompanying every command output.
void write_manifest(const std::string& out_dir, const config::PipelineConfig& cfg,
                    const std::string& command);

extern const char* kVersion;

}  // namespace tvnet::pipeline
