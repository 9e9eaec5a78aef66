#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmdl/checkpoint.hpp"
#include "mmdl/evalkit.hpp"
#include "mmdl/losses.hpp"
#include "mmdl/synthdata.hpp"

namespace mmdl {

struct TrainConfig {
    std::vector<std::size_t> layer_sizes;  // empty: [input_dim, 128, 128, n]
    std::size_t n = 64;
    std::size_t q = 64;
    std::size_t batch_size = 16;
    std::size_t epochs = 50;           // fine-tuning epochs T
    std::size_t pretrain_epochs = 20;  // VIS-only softmax phase
    double lr_initial = 1e-4;
    double lr_final = 1e-6;
    MmlConfig mml;
    double scale = 16.0;
    double margin_nir = 0.9;
    double margin_vis = 0.9;
    double weight_nir = 0.6;
    double weight_vis = 0.4;
    std::uint64_t seed = 1;
    bool use_decorr = true;
    bool use_qml = true;
    bool use_haml = true;
    std::string train_dataset;
    std::string test_dataset;
    std::string checkpoint_path;
    std::string report_path;
    std::string log_path;
};

// Unknown keys are an error; missing keys keep their defaults.
TrainConfig parse_train_config(const nlohmann::json& j);
void validate_config(const TrainConfig& cfg, std::size_t dataset_input_dim);

struct SynthGenConfig {
    SynthConfig base;
    std::size_t test_identities = 20;
};
SynthGenConfig parse_synth_config(const nlohmann::json& j);

struct LogEntry {
    std::size_t epoch;
    std::size_t batch;
    double l_qml;
    double l_haml;
    double l_mml;
    double lr;

    std::string to_json() const;
};

struct TrainOutput {
    Checkpoint checkpoint;
    std::vector<LogEntry> log;  // fine-tuning batches only
};

// Alternating optimization: VIS-only pretraining, decorrelation fit, then
// per-batch gradient steps on the multi-margin loss with a per-epoch refit of
// the decorrelation layer. Writes checkpoint and log when paths are set.
TrainOutput run_training(const TrainConfig& cfg, const Dataset& train);

// Path-driven variant used by the CLI.
TrainOutput run_training(const TrainConfig& cfg);

EvalReport run_eval(const std::string& checkpoint_path, const std::string& dataset_path,
                    const std::string& report_path, std::size_t expected_n = 0,
                    std::size_t expected_q = 0);

struct AblationRow {
    std::string name;
    bool decorr;
    bool qml;
    bool haml;
    double rank1;
    double vr_far_0_001;
    std::uint64_t test_fingerprint;
};

// Four variants on identical data and seed: baseline (plain softmax), +HAML,
// +HAML+QML, full MMDL.
std::vector<AblationRow> run_ablation(const TrainConfig& base, const Dataset& train,
                                      const Dataset& test);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

// Writes <out_prefix>_train.csv and <out_prefix>_test.csv with disjoint ids.
void gen_data(const SynthGenConfig& cfg, const std::string& out_prefix);

std::uint64_t dataset_fingerprint(const Dataset& ds);

}  // namespace mmdl
