#include "mmdl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "mmdl/errors.hpp"
#include "mmdl/gradcheck.hpp"

namespace mmdl {

namespace {

const std::set<std::string> kTrainKeys = {
    "layer_sizes",  "n",          "q",          "batch_size", "epochs",
    "pretrain_epochs", "lr_initial", "lr_final", "alpha1",     "alpha2",
    "lambda1",      "lambda2",    "scale",      "margin_nir", "margin_vis",
    "weight_nir",   "weight_vis", "seed",       "use_decorr", "use_qml",
    "use_haml",     "train_dataset", "test_dataset", "checkpoint", "report",
    "log"};

const std::set<std::string> kSynthKeys = {
    "identities",  "test_identities", "samples_per_identity_per_domain",
    "latent_dim",  "input_dim",       "domain_gap",
    "noise_sigma", "seed"};

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const char* what) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.contains(it.key())) {
            throw ConfigError(std::string(what) + ": unknown key \"" + it.key() + "\"");
        }
    }
}

// identity label -> contiguous class index, in sorted label order
std::map<std::size_t, std::size_t> class_map(const Dataset& ds) {
    std::map<std::size_t, std::size_t> m;
    for (std::size_t id : ds.identity_set()) {
        const std::size_t next = m.size();
        m[id] = next;
    }
    return m;
}

struct BatchView {
    Matrix features;
    std::vector<std::size_t> classes;
    std::vector<Domain> domains;
};

BatchView make_batch(const Dataset& ds, const std::vector<std::size_t>& rows,
                     const std::map<std::size_t, std::size_t>& classes) {
    BatchView b;
    b.features = ds.feature_matrix(rows);
    for (std::size_t r : rows) {
        b.classes.push_back(classes.at(ds.samples[r].identity));
        b.domains.push_back(ds.samples[r].domain);
    }
    return b;
}

std::vector<Matrix> grads_of(const std::vector<ad::NodePtr>& nodes) {
    std::vector<Matrix> g;
    g.reserve(nodes.size());
    for (const auto& n : nodes) g.push_back(n->grad);
    return g;
}

Matrix all_features(const Dataset& ds) {
    std::vector<std::size_t> rows(ds.samples.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return ds.feature_matrix(rows);
}

}  // namespace

TrainConfig parse_train_config(const nlohmann::json& j) {
    reject_unknown_keys(j, kTrainKeys, "train config");
    TrainConfig cfg;
    try {
        if (j.contains("layer_sizes"))
            cfg.layer_sizes = j["layer_sizes"].get<std::vector<std::size_t>>();
        cfg.n = j.value("n", cfg.n);
        cfg.q = j.value("q", cfg.q);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.epochs = j.value("epochs", cfg.epochs);
        cfg.pretrain_epochs = j.value("pretrain_epochs", cfg.pretrain_epochs);
        cfg.lr_initial = j.value("lr_initial", cfg.lr_initial);
        cfg.lr_final = j.value("lr_final", cfg.lr_final);
        cfg.mml.alpha1 = j.value("alpha1", cfg.mml.alpha1);
        cfg.mml.alpha2 = j.value("alpha2", cfg.mml.alpha2);
        cfg.mml.lambda1 = j.value("lambda1", cfg.mml.lambda1);
        cfg.mml.lambda2 = j.value("lambda2", cfg.mml.lambda2);
        cfg.scale = j.value("scale", cfg.scale);
        cfg.margin_nir = j.value("margin_nir", cfg.margin_nir);
        cfg.margin_vis = j.value("margin_vis", cfg.margin_vis);
        cfg.weight_nir = j.value("weight_nir", cfg.weight_nir);
        cfg.weight_vis = j.value("weight_vis", cfg.weight_vis);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.use_decorr = j.value("use_decorr", cfg.use_decorr);
        cfg.use_qml = j.value("use_qml", cfg.use_qml);
        cfg.use_haml = j.value("use_haml", cfg.use_haml);
        cfg.train_dataset = j.value("train_dataset", cfg.train_dataset);
        cfg.test_dataset = j.value("test_dataset", cfg.test_dataset);
        cfg.checkpoint_path = j.value("checkpoint", cfg.checkpoint_path);
        cfg.report_path = j.value("report", cfg.report_path);
        cfg.log_path = j.value("log", cfg.log_path);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    return cfg;
}

void validate_config(const TrainConfig& cfg, std::size_t dataset_input_dim) {
    if (std::fabs(cfg.weight_nir + cfg.weight_vis - 1.0) > 1e-12) {
        throw ConfigError("config: weight_nir + weight_vis must equal 1");
    }
    if (cfg.q > cfg.n || cfg.q == 0) {
        throw ConfigError("config: q must satisfy 1 <= q <= n");
    }
    if (cfg.batch_size < 4 || cfg.batch_size % 2 != 0) {
        throw ConfigError("config: batch_size must be even and >= 4");
    }
    if (!(cfg.lr_initial >= cfg.lr_final && cfg.lr_final > 0.0)) {
        throw ConfigError("config: need lr_initial >= lr_final > 0");
    }
    if (cfg.mml.alpha1 < 0 || cfg.mml.alpha2 < 0 || cfg.mml.lambda1 < 0 ||
        cfg.mml.lambda2 < 0) {
        throw ConfigError("config: loss weights must be non-negative");
    }
    if (!cfg.layer_sizes.empty()) {
        if (cfg.layer_sizes.size() < 2 || cfg.layer_sizes.back() != cfg.n) {
            throw ConfigError("config: layer_sizes must end in n");
        }
        if (dataset_input_dim != 0 && cfg.layer_sizes.front() != dataset_input_dim) {
            throw ConfigError("config: layer_sizes front " +
                              std::to_string(cfg.layer_sizes.front()) +
                              " does not match dataset input dim " +
                              std::to_string(dataset_input_dim));
        }
    }
}

SynthGenConfig parse_synth_config(const nlohmann::json& j) {
    reject_unknown_keys(j, kSynthKeys, "synth config");
    SynthGenConfig cfg;
    try {
        cfg.base.identities = j.value("identities", cfg.base.identities);
        cfg.test_identities = j.value("test_identities", cfg.test_identities);
        cfg.base.samples_per_identity_per_domain =
            j.value("samples_per_identity_per_domain",
                    cfg.base.samples_per_identity_per_domain);
        cfg.base.latent_dim = j.value("latent_dim", cfg.base.latent_dim);
        cfg.base.input_dim = j.value("input_dim", cfg.base.input_dim);
        cfg.base.domain_gap = j.value("domain_gap", cfg.base.domain_gap);
        cfg.base.noise_sigma = j.value("noise_sigma", cfg.base.noise_sigma);
        cfg.base.seed = j.value("seed", cfg.base.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synth config: ") + e.what());
    }
    return cfg;
}

std::string LogEntry::to_json() const {
    nlohmann::json j;
    j["epoch"] = epoch;
    j["batch"] = batch;
    j["l_qml"] = l_qml;
    j["l_haml"] = l_haml;
    j["l_mml"] = l_mml;
    j["lr"] = lr;
    return j.dump();
}

TrainOutput run_training(const TrainConfig& cfg, const Dataset& train) {
    validate_config(cfg, train.input_dim());

    std::vector<std::size_t> sizes = cfg.layer_sizes;
    if (sizes.empty()) sizes = {train.input_dim(), 128, 128, cfg.n};
    if (sizes.front() != train.input_dim()) {
        throw ConfigError("run_training: network input " + std::to_string(sizes.front()) +
                          " does not match dataset input dim " +
                          std::to_string(train.input_dim()));
    }

    const auto classes = class_map(train);
    const std::size_t num_classes = classes.size();

    NetworkParams params = init_network(sizes, cfg.seed);
    Rng batch_rng(cfg.seed + 1);

    // Phase 1: VIS-only pretraining with plain normalized softmax (margin 0).
    if (cfg.pretrain_epochs > 0) {
        std::vector<std::size_t> vis_rows;
        for (std::size_t i = 0; i < train.samples.size(); ++i) {
            if (train.samples[i].domain == Domain::VIS) vis_rows.push_back(i);
        }
        if (vis_rows.empty()) throw DataError("run_training: no VIS samples to pretrain on");

        HamlHead pre_head = init_haml_head(cfg.n, num_classes, cfg.seed + 2);
        pre_head.scale = cfg.scale;
        pre_head.margin_nir = 0.0;
        pre_head.margin_vis = 0.0;
        pre_head.weight_nir = 0.0;
        pre_head.weight_vis = 1.0;

        const LrSchedule pre_sched{cfg.lr_initial, cfg.lr_final, cfg.pretrain_epochs};
        const std::size_t steps =
            std::max<std::size_t>(1, vis_rows.size() / cfg.batch_size);
        for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
            const double lr = lr_at(pre_sched, epoch);
            for (std::size_t step = 0; step < steps; ++step) {
                const std::size_t take = std::min(cfg.batch_size, vis_rows.size());
                std::vector<std::size_t> rows;
                for (std::size_t c : batch_rng.sample_without_replacement(vis_rows.size(), take))
                    rows.push_back(vis_rows[c]);
                const BatchView batch = make_batch(train, rows, classes);

                EncodeGraph enc = encode(params, batch.features);
                HamlGraph hg = haml(enc.output, batch.classes, batch.domains, pre_head);
                if (!std::isfinite(hg.loss->value(0, 0))) {
                    throw NumericError("pretraining: non-finite loss at epoch " +
                                       std::to_string(epoch) + " batch " +
                                       std::to_string(step));
                }
                ad::backward(hg.loss);
                sgd_step(params, grads_of(enc.weight_nodes), grads_of(enc.bias_nodes), lr);
                for (std::size_t i = 0; i < pre_head.class_weights.size(); ++i)
                    pre_head.class_weights.raw()[i] -=
                        lr * hg.class_weight_node->grad.raw()[i];
                renormalize_columns(pre_head.class_weights);
            }
        }
    }

    // Phase 2: fit the decorrelation layer on frozen representations.
    DecorrLayer layer = cfg.use_decorr
                            ? fit_decorrelation(encode_values(params, all_features(train)), cfg.q)
                            : identity_decorr(cfg.n);

    // Phase 3: alternating fine-tuning with the multi-margin loss.
    HamlHead head = init_haml_head(layer.output_dim(), num_classes, cfg.seed + 3);
    head.scale = cfg.scale;
    head.margin_nir = cfg.margin_nir;
    head.margin_vis = cfg.margin_vis;
    head.weight_nir = cfg.weight_nir;
    head.weight_vis = cfg.weight_vis;

    TrainOutput out;
    const LrSchedule sched{cfg.lr_initial, cfg.lr_final, std::max<std::size_t>(1, cfg.epochs)};
    const std::size_t steps =
        std::max<std::size_t>(1, train.samples.size() / cfg.batch_size);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(sched, epoch);
        for (std::size_t step = 0; step < steps; ++step) {
            const auto rows = sample_batch(train, cfg.batch_size, batch_rng);
            const BatchView batch = make_batch(train, rows, classes);

            EncodeGraph enc = encode(params, batch.features);
            const ad::NodePtr z = project(layer, enc.output);

            ad::NodePtr qml_node;
            if (cfg.use_qml) {
                const MiningResult mined =
                    mine_quadruplets(z->value, batch.classes, batch.domains);
                qml_node = qml(z, mined.tuples, cfg.mml.alpha1, cfg.mml.alpha2);
            } else {
                qml_node = ad::constant(Matrix(1, 1, {0.0}));
            }

            HamlGraph hg;
            if (cfg.use_haml) {
                hg = haml(z, batch.classes, batch.domains, head);
            } else {
                hg.loss = ad::constant(Matrix(1, 1, {0.0}));
            }

            const ad::NodePtr loss = mml(qml_node, hg.loss, cfg.mml);
            if (!std::isfinite(loss->value(0, 0))) {
                throw NumericError("fine-tuning: non-finite loss at epoch " +
                                   std::to_string(epoch) + " batch " +
                                   std::to_string(step));
            }
            ad::backward(loss);
            sgd_step(params, grads_of(enc.weight_nodes), grads_of(enc.bias_nodes), lr);
            if (cfg.use_haml) {
                for (std::size_t i = 0; i < head.class_weights.size(); ++i)
                    head.class_weights.raw()[i] -= lr * hg.class_weight_node->grad.raw()[i];
                renormalize_columns(head.class_weights);
            }

            out.log.push_back({epoch, step, qml_node->value(0, 0), hg.loss->value(0, 0),
                               loss->value(0, 0), lr});
        }
        if (cfg.use_decorr) {
            const DecorrLayer refit =
                fit_decorrelation(encode_values(params, all_features(train)), cfg.q);
            // carry the class weights into the new projection basis so the
            // refit does not yank the logits out from under the head
            head.class_weights = matmul(
                matmul(transpose(refit.projection), layer.projection), head.class_weights);
            renormalize_columns(head.class_weights);
            layer = refit;
        }
    }

    out.checkpoint = {std::move(params), std::move(layer), std::move(head)};

    if (!cfg.checkpoint_path.empty()) save_checkpoint(out.checkpoint, cfg.checkpoint_path);
    if (!cfg.log_path.empty()) {
        std::ofstream log(cfg.log_path, std::ios::binary);
        if (!log) throw IoError("run_training: cannot open log " + cfg.log_path);
        for (const auto& e : out.log) log << e.to_json() << "\n";
    }
    return out;
}

TrainOutput run_training(const TrainConfig& cfg) {
    if (cfg.train_dataset.empty()) {
        throw ConfigError("run_training: train_dataset path missing");
    }
    return run_training(cfg, read_dataset(cfg.train_dataset));
}

EvalReport run_eval(const std::string& checkpoint_path, const std::string& dataset_path,
                    const std::string& report_path, std::size_t expected_n,
                    std::size_t expected_q) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path, expected_n, expected_q);
    const Dataset test = read_dataset(dataset_path);
    const EvalReport report = evaluate(ckpt.params, ckpt.decorr, test);
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::binary);
        if (!out) throw IoError("run_eval: cannot open " + report_path);
        out << report.to_json() << "\n";
    }
    return report;
}

std::uint64_t dataset_fingerprint(const Dataset& ds) {
    // FNV-1a over labels and feature bytes
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& s : ds.samples) {
        const std::uint64_t id = s.identity;
        const std::uint8_t dom = s.domain == Domain::NIR ? 0 : 1;
        mix(&id, sizeof id);
        mix(&dom, sizeof dom);
        mix(s.features.data(), s.features.size() * sizeof(double));
    }
    return h;
}

std::vector<AblationRow> run_ablation(const TrainConfig& base, const Dataset& train,
                                      const Dataset& test) {
    struct Variant {
        std::string name;
        bool decorr, qml, haml_margin;  // haml_margin: margins at configured value
    };
    const std::vector<Variant> variants = {
        {"baseline", false, false, false},
        {"haml", false, false, true},
        {"haml+qml", false, true, true},
        {"full", true, true, true},
    };

    const std::uint64_t fingerprint = dataset_fingerprint(test);
    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        TrainConfig cfg = base;
        cfg.use_decorr = v.decorr;
        cfg.use_qml = v.qml;
        cfg.use_haml = true;  // the baseline fine-tunes with plain softmax
        if (!v.haml_margin) {
            cfg.margin_nir = 0.0;
            cfg.margin_vis = 0.0;
        }
        cfg.checkpoint_path.clear();
        cfg.log_path.clear();
        const TrainOutput out = run_training(cfg, train);
        const EvalReport report = evaluate(out.checkpoint.params, out.checkpoint.decorr, test);

        double vr = 0.0;
        for (const auto& [far, value] : report.vr_at_far) {
            if (far == 0.001) vr = value;
        }
        rows.push_back({v.name, v.decorr, v.qml, v.haml_margin, report.rank1, vr,
                        fingerprint});
    }
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_ablation_csv: cannot open " + path);
    out << "variant,decorr,qml,haml,rank1,vr_far_0.001,test_fingerprint\n";
    for (const auto& r : rows) {
        out << r.name << "," << (r.decorr ? 1 : 0) << "," << (r.qml ? 1 : 0) << ","
            << (r.haml ? 1 : 0) << "," << r.rank1 << "," << r.vr_far_0_001 << ","
            << r.test_fingerprint << "\n";
    }
    if (!out) throw IoError("write_ablation_csv: write failure on " + path);
}

void gen_data(const SynthGenConfig& cfg, const std::string& out_prefix) {
    SynthConfig train_cfg = cfg.base;
    train_cfg.first_identity = 0;

    SynthConfig test_cfg = cfg.base;
    test_cfg.identities = cfg.test_identities;
    test_cfg.first_identity = cfg.base.identities;  // disjoint label range
    test_cfg.seed = cfg.base.seed + 0x9e3779b97f4a7c15ull;

    write_dataset(generate(train_cfg), out_prefix + "_train.csv");
    write_dataset(generate(test_cfg), out_prefix + "_test.csv");
}

}  // namespace mmdl
