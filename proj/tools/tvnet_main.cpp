#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tvnet/checkpoint.hpp"
#include "tvnet/pipeline.hpp"
#include "tvnet/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace tvnet;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
};

config::PipelineConfig resolve_config(const CommonArgs& args) {
    config::PipelineConfig cfg = args.config_path.empty()
                                     ? config::config_from_json_text("{}")
                                     : config::load_config(args.config_path);
    if (args.seed_set) {
        cfg.seed = args.seed;
        cfg.synth.seed = args.seed;
    }
    if (args.jobs > 0) cfg.jobs = args.jobs;
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "pipeline config JSON");
    cmd->add_option("--out-dir", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override config seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--jobs", args.jobs, "worker threads for per-video inference");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    require(bool(os), "cannot write " + path);
    os << text;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_gen_data(const CommonArgs& args) {
    config::PipelineConfig cfg = resolve_config(args);
    auto t0 = std::chrono::steady_clock::now();
    for (const std::string split : {"train", "test"}) {
        pipeline::Dataset ds = pipeline::make_synth_split(cfg, split);
        pipeline::write_dataset(ds, args.out_dir, split);
        std::cout << "wrote " << ds.annotations.size() << " " << split << " videos\n";
    }
    pipeline::write_manifest(args.out_dir, cfg, "gen-data");
    std::cout << "gen-data done in " << elapsed_s(t0) << "s -> " << args.out_dir << "\n";
    return 0;
}

int cmd_train(const CommonArgs& args, const std::string& stage, const std::string& data_dir_flag) {
    require(stage == "tem" || stage == "pem" || stage == "vem" || stage == "all",
            "unknown stage '" + stage + "' (tem|pem|vem|all)");
    config::PipelineConfig cfg = resolve_config(args);
    std::string data_dir = data_dir_flag.empty() ? cfg.dataset_dir : data_dir_flag;
    pipeline::Dataset train = pipeline::load_dataset(cfg, data_dir, "train");
    pipeline::Models models = pipeline::init_models(cfg);
    fs::create_directories(args.out_dir);

    auto need = [&](const std::string& path, const std::string& prereq) {
        require(fs::exists(path),
                "stage '" + stage + "' requires the " + prereq + " checkpoint (" + path +
                    "); run train --stage " + prereq + " first");
    };

    auto t0 = std::chrono::steady_clock::now();
    if (stage == "tem" || stage == "all") {
        pipeline::train_tem(cfg, train, models, args.out_dir);
        std::cout << "tem trained in " << elapsed_s(t0) << "s\n";
    }
    if (stage == "pem" || stage == "all") {
        if (stage == "pem") {
            need(pipeline::tem_checkpoint_path(args.out_dir), "tem");
            nn::load_checkpoint(pipeline::tem_checkpoint_path(args.out_dir),
                                models.tem_model->params());
        }
        pipeline::train_pem(cfg, train, models, args.out_dir);
        std::cout << "pem trained in " << elapsed_s(t0) << "s total\n";
    }
    if (stage == "vem" || stage == "all") {
        if (stage == "vem") {
            need(pipeline::tem_checkpoint_path(args.out_dir), "tem");
            need(pipeline::pem_checkpoint_path(args.out_dir), "pem");
            nn::load_checkpoint(pipeline::tem_checkpoint_path(args.out_dir),
                                models.tem_model->params());
        }
        pipeline::train_vem(cfg, train, models, args.out_dir);
        std::cout << "vem trained in " << elapsed_s(t0) << "s total\n";
    }
    pipeline::write_manifest(args.out_dir, cfg, "train:" + stage);
    return 0;
}

int cmd_infer(const CommonArgs& args, const std::string& checkpoints, const std::string& split,
              const std::string& data_dir_flag, bool dump_scores, bool svg) {
    config::PipelineConfig cfg = resolve_config(args);
    std::string data_dir = data_dir_flag.empty() ? cfg.dataset_dir : data_dir_flag;
    pipeline::Dataset ds = pipeline::load_dataset(cfg, data_dir, split);
    pipeline::Models models = pipeline::init_models(cfg);
    pipeline::load_models(models, cfg, checkpoints);

    pipeline::InferOptions opts;
    fs::create_directories(args.out_dir);
    if (dump_scores) opts.dump_scores_dir = args.out_dir + "/scores_" + split;

    auto t0 = std::chrono::steady_clock::now();
    auto preds = pipeline::infer_all(cfg, models, ds, opts);
    double secs = elapsed_s(t0);
    std::string path = args.out_dir + "/predictions_" + split + ".json";
    data::save_predictions(path, preds);
    pipeline::write_manifest(args.out_dir, cfg, "infer:" + split);
    std::cout << "inferred " << preds.size() << " videos in " << secs << "s ("
              << secs * 1000.0 / std::max<std::size_t>(1, preds.size()) << " ms/video) -> " << path
              << "\n";

    if (dump_scores && svg) {
        for (const auto& [vid, feat] : ds.features) {
            std::ifstream is(opts.dump_scores_dir + "/" + vid + "_scores.csv");
            if (!is) continue;
            std::string header;
            std::getline(is, header);
            std::vector<double> x;
            plot::Series vs{"v_start", {}}, ve{"v_end", {}}, ba{"b_action", {}};
            double t, a, b, c, d, e;
            char comma;
            while (is >> t >> comma >> a >> comma >> b >> comma >> c >> comma >> d >> comma >> e) {
                x.push_back(t);
                vs.y.push_back(a);
                ve.y.push_back(b);
                ba.y.push_back(e);
            }
            if (!x.empty())
                plot::write_svg_lines(opts.dump_scores_dir + "/" + vid + "_scores.svg",
                                      vid + " scores", x, {vs, ve, ba});
        }
    }
    return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& pred_path, const std::string& ann_path,
             const std::string& preset, std::vector<double> thresholds) {
    auto preds = data::load_predictions(pred_path);
    auto anns = data::load_annotations(ann_path);
    if (thresholds.empty()) {
        if (preset == "thumos") thresholds = {0.3, 0.4, 0.5, 0.6, 0.7};
        else thresholds = {0.5, 0.75, 0.95};
    }
    eval::EvalReport report = eval::compute_map(preds, anns, thresholds);
    fs::create_directories(args.out_dir);
    write_text(args.out_dir + "/eval_report.json", report.to_json() + "\n");
    write_text(args.out_dir + "/eval_report.csv", report.to_csv());
    if (report.empty) {
        std::cout << "no ground truth; mAP undefined\n";
    } else {
        for (std::size_t i = 0; i < thresholds.size(); ++i)
            std::cout << "mAP@" << thresholds[i] << " = " << report.map_per_threshold[i] << "\n";
        std::cout << "average mAP(0.5:0.05:0.95) = " << report.average_map << "\n";
    }
    config::PipelineConfig cfg = resolve_config(args);
    cfg.eval_thresholds = thresholds;
    pipeline::write_manifest(args.out_dir, cfg, "eval");
    return 0;
}

// One evaluation row for a sweep CSV.
std::string eval_row(const config::PipelineConfig& cfg, const pipeline::Models& models,
                     const pipeline::Dataset& test, const std::string& label,
                     std::vector<double>* avg_out = nullptr) {
    auto preds = pipeline::infer_all(cfg, models, test, {});
    eval::EvalReport rep = pipeline::evaluate(cfg, preds, test);
    std::ostringstream os;
    os << label;
    os.setf(std::ios::fixed);
    os.precision(4);
    for (double v : rep.map_per_threshold) os << "," << v;
    os << "," << rep.average_map;
    if (avg_out) avg_out->push_back(rep.average_map);
    return os.str();
}

std::string sweep_header(const config::PipelineConfig& cfg, const std::string& first_col) {
    std::ostringstream os;
    os << first_col;
    for (double t : cfg.eval_thresholds) os << ",mAP@" << t;
    os << ",average_mAP";
    return os.str();
}

int cmd_ablate(const CommonArgs& args, const std::string& checkpoints, const std::string& sweep,
               const std::string& data_dir_flag, bool svg) {
    config::PipelineConfig cfg = resolve_config(args);
    std::string data_dir = data_dir_flag.empty() ? cfg.dataset_dir : data_dir_flag;
    pipeline::Dataset test = pipeline::load_dataset(cfg, data_dir, "test");

    fs::create_directories(args.out_dir);
    std::vector<std::string> rows;
    std::vector<double> xs, avgs;
    std::string csv_path = args.out_dir + "/ablate_" + sweep + ".csv";

    auto load_base_models = [&] {
        pipeline::Models models = pipeline::init_models(cfg);
        pipeline::load_models(models, cfg, checkpoints);
        return models;
    };

    if (sweep == "alpha") {
        pipeline::Models models = load_base_models();
        rows.push_back(sweep_header(cfg, "alpha"));
        for (int i = 0; i <= 10; ++i) {
            config::PipelineConfig c = cfg;
            c.alpha = i / 10.0;
            rows.push_back(eval_row(c, models, test, std::to_string(c.alpha), &avgs));
            xs.push_back(c.alpha);
        }
    } else if (sweep == "xi") {
        pipeline::Models models = load_base_models();
        rows.push_back(sweep_header(cfg, "xi"));
        for (double xi : {0.1, 0.3, 0.5, 0.7}) {
            config::PipelineConfig c = cfg;
            c.xi = xi;
            rows.push_back(eval_row(c, models, test, std::to_string(xi), &avgs));
            xs.push_back(xi);
        }
    } else if (sweep == "tau") {
        pipeline::Models models = load_base_models();
        rows.push_back(sweep_header(cfg, "tau"));
        for (int tau : {10, 20, 30, 40, 60, 80, 100}) {
            config::PipelineConfig c = cfg;
            c.tau = tau;
            rows.push_back(eval_row(c, models, test, std::to_string(tau), &avgs));
            xs.push_back(tau);
        }
    } else if (sweep == "tem-parts") {
        pipeline::Models models = load_base_models();
        rows.push_back(sweep_header(cfg, "actionness,boundary_scores"));
        struct Row {
            bool ua;
            proposals::FusionMode mode;
            const char* label;
        };
        for (const Row& r : {Row{false, proposals::FusionMode::voting_only, "off,off"},
                             Row{true, proposals::FusionMode::voting_only, "on,off"},
                             Row{false, proposals::FusionMode::full, "off,on"},
                             Row{true, proposals::FusionMode::full, "on,on"}}) {
            config::PipelineConfig c = cfg;
            c.use_actionness = r.ua;
            c.fusion_mode = r.mode;
            rows.push_back(eval_row(c, models, test, r.label, &avgs));
        }
    } else if (sweep == "J") {
        pipeline::Dataset train = pipeline::load_dataset(cfg, data_dir, "train");
        rows.push_back(sweep_header(cfg, "J"));
        std::vector<std::vector<int>> variants = {{5}, {10}, {15}, {20}, {15, 5}};
        for (const auto& lengths : variants) {
            config::PipelineConfig c = cfg;
            c.window_lengths = lengths;
            pipeline::Models models = pipeline::init_models(c);
            nn::load_checkpoint(pipeline::tem_checkpoint_path(checkpoints),
                                models.tem_model->params());
            nn::load_checkpoint(pipeline::pem_checkpoint_path(checkpoints),
                                models.pem_model->params());
            pipeline::train_vem(c, train, models, args.out_dir + "/J_variants");
            std::string label;
            for (std::size_t i = 0; i < lengths.size(); ++i)
                label += (i ? "+" : "") + std::to_string(lengths[i]);
            rows.push_back(eval_row(c, models, test, label, &avgs));
        }
    } else if (sweep == "encoder") {
        pipeline::Dataset train = pipeline::load_dataset(cfg, data_dir, "train");
        rows.push_back(sweep_header(cfg, "encoder"));
        for (vem::EncoderKind kind :
             {vem::EncoderKind::lstm, vem::EncoderKind::srf, vem::EncoderKind::sll}) {
            config::PipelineConfig c = cfg;
            c.vem_encoder = kind;
            pipeline::Models models = pipeline::init_models(c);
            nn::load_checkpoint(pipeline::tem_checkpoint_path(checkpoints),
                                models.tem_model->params());
            nn::load_checkpoint(pipeline::pem_checkpoint_path(checkpoints),
                                models.pem_model->params());
            pipeline::train_vem(c, train, models, args.out_dir + "/encoder_variants");
            rows.push_back(eval_row(c, models, test, vem::to_string(kind), &avgs));
        }
    } else {
        std::cerr << "unknown sweep '" << sweep
                  << "'; options: tem-parts, alpha, J, tau, xi, encoder\n";
        return 2;
    }

    std::ostringstream csv;
    for (const auto& r : rows) csv << r << "\n";
    write_text(csv_path, csv.str());
    std::cout << csv.str();
    if (svg && !xs.empty())
        plot::write_svg_lines(args.out_dir + "/ablate_" + sweep + ".svg", sweep + " sweep", xs,
                              {{"average_mAP", avgs}});
    pipeline::write_manifest(args.out_dir, cfg, "ablate:" + sweep);
    std::cout << "wrote " << csv_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tvnet: temporal action localization by boundary voting"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, infer_args, eval_args, ablate_args;
    std::string stage = "all", split = "test", sweep;
    std::string data_dir, checkpoints = "out";
    std::string pred_path, ann_path, eval_preset;
    std::vector<double> thresholds;
    bool dump_scores = false, svg = false;

    CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
    add_common(gen, gen_args);

    CLI::App* train = app.add_subcommand("train", "staged training (tem -> pem -> vem)");
    add_common(train, train_args);
    train->add_option("--stage", stage, "tem|pem|vem|all");
    train->add_option("--data-dir", data_dir, "dataset directory (default: config dataset_dir)");

    CLI::App* infer = app.add_subcommand("infer", "run the proposal pipeline");
    add_common(infer, infer_args);
    infer->add_option("--checkpoints", checkpoints, "checkpoint directory");
    infer->add_option("--split", split, "train|test");
    infer->add_option("--data-dir", data_dir, "dataset directory");
    infer->add_flag("--dump-scores", dump_scores, "write per-video score curve CSVs");
    infer->add_flag("--svg", svg, "also render SVG charts");

    CLI::App* evalc = app.add_subcommand("eval", "evaluate predictions against annotations");
    add_common(evalc, eval_args);
    evalc->add_option("--predictions", pred_path, "prediction JSON")->required();
    evalc->add_option("--annotations", ann_path, "annotation JSON")->required();
    evalc->add_option("--thresholds", thresholds, "IoU thresholds");
    evalc->add_option("--preset", eval_preset, "activitynet|thumos threshold preset");

    CLI::App* ablate = app.add_subcommand("ablate", "reproduce the ablation sweeps");
    add_common(ablate, ablate_args);
    ablate->add_option("--checkpoints", checkpoints, "checkpoint directory");
    ablate->add_option("--sweep", sweep, "tem-parts|alpha|J|tau|xi|encoder")->required();
    ablate->add_option("--data-dir", data_dir, "dataset directory");
    ablate->add_flag("--svg", svg, "also render SVG charts");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen_data(gen_args);
        if (train->parsed()) return cmd_train(train_args, stage, data_dir);
        if (infer->parsed())
            return cmd_infer(infer_args, checkpoints, split, data_dir, dump_scores, svg);
        if (evalc->parsed())
            return cmd_eval(eval_args, pred_path, ann_path, eval_preset, thresholds);
        if (ablate->parsed()) return cmd_ablate(ablate_args, checkpoints, sweep, data_dir, svg);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
