// End-to-end checks of the command-line binary (spawned as a subprocess).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "tvnet/data.hpp"

using namespace tvnet;
namespace fs = std::filesystem;

#ifndef TVNET_CLI_PATH
#error "TVNET_CLI_PATH must point at the tvnet binary"
#endif

namespace {

std::string work_dir;

int run(const std::string& args) {
    std::string cmd = "cd " + work_dir + " && TVNET_LOG=0 " + TVNET_CLI_PATH + " " + args +
                      " >> cli.log 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

void write_config() {
    std::ofstream os(work_dir + "/cfg.json");
    os << R"({
        "num_train_videos": 8, "num_test_videos": 4,
        "window_lengths": [7],
        "tem_hidden": 12, "vem_conv_channels": 8, "vem_lstm_hidden": 8, "pem_hidden": 8,
        "tem_stage": {"schedule": [[1, 0.001]], "batch": 8},
        "vem_stage": {"schedule": [[1, 0.001]], "batch": 256},
        "pem_stage": {"schedule": [[1, 0.001]], "batch": 128},
        "dataset_dir": "data",
        "seed": 7
    })";
}

}  // namespace

TEST_CASE("cli end to end") {
    work_dir = fs::temp_directory_path() / "tvnet_cli_test";
    fs::remove_all(work_dir);
    fs::create_directories(work_dir);
    write_config();

    SUBCASE("full flow") {
        REQUIRE(run("gen-data --config cfg.json --out-dir data") == 0);
        CHECK(fs::exists(work_dir + "/data/annotations_train.json"));
        CHECK(fs::exists(work_dir + "/data/annotations_test.json"));
        CHECK(fs::exists(work_dir + "/data/manifest.json"));
        auto anns = data::load_annotations(work_dir + "/data/annotations_train.json");
        CHECK(anns.size() == 8);

        // stage ordering is enforced
        CHECK(run("train --config cfg.json --stage vem --out-dir run") != 0);
        CHECK(run("train --config cfg.json --stage pem --out-dir run") != 0);

        REQUIRE(run("train --config cfg.json --stage tem --out-dir run") == 0);
        REQUIRE(run("train --config cfg.json --stage pem --out-dir run") == 0);
        REQUIRE(run("train --config cfg.json --stage vem --out-dir run") == 0);
        CHECK(fs::exists(work_dir + "/run/tem.tvnc"));
        CHECK(fs::exists(work_dir + "/run/loss_vem_start_J7.csv"));

        REQUIRE(run("infer --config cfg.json --checkpoints run --split test --out-dir preds "
                    "--dump-scores --svg") == 0);
        CHECK(fs::exists(work_dir + "/preds/predictions_test.json"));
        auto preds = data::load_predictions(work_dir + "/preds/predictions_test.json");
        CHECK(preds.size() == 4);

        // deterministic re-run
        REQUIRE(run("infer --config cfg.json --checkpoints run --split test --out-dir preds2") ==
                0);
        std::ifstream a(work_dir + "/preds/predictions_test.json");
        std::ifstream b(work_dir + "/preds2/predictions_test.json");
        std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
        CHECK(sa == sb);

        REQUIRE(run("eval --predictions preds/predictions_test.json "
                    "--annotations data/annotations_test.json --out-dir eval_out") == 0);
        CHECK(fs::exists(work_dir + "/eval_out/eval_report.json"));
        CHECK(fs::exists(work_dir + "/eval_out/eval_report.csv"));

        REQUIRE(run("ablate --config cfg.json --checkpoints run --sweep xi --out-dir ab") == 0);
        CHECK(fs::exists(work_dir + "/ab/ablate_xi.csv"));
        std::ifstream csv(work_dir + "/ab/ablate_xi.csv");
        std::string header;
        std::getline(csv, header);
        CHECK(header.find("xi") == 0);
        int rows = 0;
        for (std::string line; std::getline(csv, line);)
            if (!line.empty()) ++rows;
        CHECK(rows == 4);  // 0.1 0.3 0.5 0.7
    }

    SUBCASE("bad inputs exit nonzero with messages") {
        CHECK(run("train --config does_not_exist.json") != 0);
        CHECK(run("ablate --sweep bogus --config cfg.json") != 0);
        CHECK(run("definitely-not-a-command") != 0);
        CHECK(run("train --config cfg.json --stage warp") != 0);
    }
}
