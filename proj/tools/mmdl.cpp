#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmdl/errors.hpp"
#include "mmdl/trainer.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mmdl::IoError("cannot open config " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw mmdl::ConfigError("bad JSON in " + path + ": " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-domain decorrelation embedding trainer"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    long long seed = -1;

    auto* gen = app.add_subcommand("gen-data", "Generate synthetic train/test datasets");
    gen->add_option("--config", config_path, "synth config JSON")->required();
    gen->add_option("--out", out_path, "output path prefix")->required();

    auto* train = app.add_subcommand("train", "Run the full training loop");
    train->add_option("--config", config_path, "train config JSON")->required();
    train->add_option("--seed", seed, "override config seed");
    train->add_option("--out", out_path, "override checkpoint path");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval->add_option("--config", config_path, "train config JSON")->required();
    eval->add_option("--out", out_path, "override report path");

    auto* ablate = app.add_subcommand("ablate", "Train and evaluate the 4 ablation variants");
    ablate->add_option("--config", config_path, "train config JSON")->required();
    ablate->add_option("--seed", seed, "override config seed");
    ablate->add_option("--out", out_path, "ablation CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto cfg = mmdl::parse_synth_config(load_json(config_path));
            mmdl::gen_data(cfg, out_path);
            std::cout << "wrote " << out_path << "_train.csv and " << out_path
                      << "_test.csv\n";
        } else if (train->parsed()) {
            auto cfg = mmdl::parse_train_config(load_json(config_path));
            if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
            if (!out_path.empty()) cfg.checkpoint_path = out_path;
            if (cfg.checkpoint_path.empty()) {
                throw mmdl::ConfigError("train: no checkpoint path (config or --out)");
            }
            const auto out = mmdl::run_training(cfg);
            std::cout << "wrote checkpoint " << cfg.checkpoint_path << " ("
                      << out.log.size() << " fine-tuning batches logged)\n";
        } else if (eval->parsed()) {
            auto cfg = mmdl::parse_train_config(load_json(config_path));
            if (!out_path.empty()) cfg.report_path = out_path;
            if (cfg.checkpoint_path.empty() || cfg.test_dataset.empty()) {
                throw mmdl::ConfigError("eval: config must name checkpoint and test_dataset");
            }
            const auto report = mmdl::run_eval(cfg.checkpoint_path, cfg.test_dataset,
                                               cfg.report_path, cfg.n, cfg.q);
            std::cout << report.to_json() << "\n";
        } else if (ablate->parsed()) {
            auto cfg = mmdl::parse_train_config(load_json(config_path));
            if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
            if (cfg.train_dataset.empty() || cfg.test_dataset.empty()) {
                throw mmdl::ConfigError("ablate: config must name train and test datasets");
            }
            const auto rows = mmdl::run_ablation(cfg, mmdl::read_dataset(cfg.train_dataset),
                                                 mmdl::read_dataset(cfg.test_dataset));
            mmdl::write_ablation_csv(rows, out_path);
            for (const auto& r : rows) {
                std::cout << r.name << ": rank1=" << r.rank1
                          << " vr@far=0.1%=" << r.vr_far_0_001 << "\n";
            }
            std::cout << "wrote " << out_path << "\n";
        }
    } catch (const mmdl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mmdl::ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return 2;
    } catch (const mmdl::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const mmdl::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const mmdl::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
