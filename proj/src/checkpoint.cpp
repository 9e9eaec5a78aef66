#include "mmdl/checkpoint.hpp"

#include <fstream>
#include <vector>

#include <json.hpp>

#include "mmdl/errors.hpp"

namespace mmdl {

namespace {

void write_matrix(std::ofstream& out, const Matrix& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix read_matrix(std::ifstream& in, std::size_t rows, std::size_t cols,
                   const std::string& path) {
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(m.size() * sizeof(double))) {
        throw DataError("load_checkpoint: truncated file " + path);
    }
    return m;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::json header;
    header["format"] = "mmdl-checkpoint-v1";
    header["layer_sizes"] = ckpt.params.layer_sizes;
    header["n"] = ckpt.decorr.input_dim();
    header["q"] = ckpt.decorr.output_dim();
    header["num_classes"] = ckpt.head.num_classes();
    header["scale"] = ckpt.head.scale;
    header["margin_nir"] = ckpt.head.margin_nir;
    header["margin_vis"] = ckpt.head.margin_vis;
    header["weight_nir"] = ckpt.head.weight_nir;
    header["weight_vis"] = ckpt.head.weight_vis;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_checkpoint: cannot open " + path);
    out << header.dump() << "\n";
    for (std::size_t l = 0; l < ckpt.params.weights.size(); ++l) {
        write_matrix(out, ckpt.params.weights[l]);
        write_matrix(out, ckpt.params.biases[l]);
    }
    write_matrix(out, ckpt.decorr.projection);
    const Matrix eig(1, ckpt.decorr.eigenvalues.size(), ckpt.decorr.eigenvalues);
    write_matrix(out, eig);
    write_matrix(out, ckpt.head.class_weights);
    if (!out) throw IoError("save_checkpoint: write failure on " + path);
}

Checkpoint load_checkpoint(const std::string& path, std::size_t expected_n,
                           std::size_t expected_q) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) {
        throw DataError("load_checkpoint: missing header in " + path);
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::exception&) {
        throw DataError("load_checkpoint: malformed header in " + path);
    }
    if (header.value("format", "") != "mmdl-checkpoint-v1") {
        throw DataError("load_checkpoint: unknown format in " + path);
    }

    Checkpoint ckpt;
    try {
        ckpt.params.layer_sizes = header.at("layer_sizes").get<std::vector<std::size_t>>();
        ckpt.head.scale = header.at("scale").get<double>();
        ckpt.head.margin_nir = header.at("margin_nir").get<double>();
        ckpt.head.margin_vis = header.at("margin_vis").get<double>();
        ckpt.head.weight_nir = header.at("weight_nir").get<double>();
        ckpt.head.weight_vis = header.at("weight_vis").get<double>();
    } catch (const nlohmann::json::exception&) {
        throw DataError("load_checkpoint: incomplete header in " + path);
    }
    const auto n = header.at("n").get<std::size_t>();
    const auto q = header.at("q").get<std::size_t>();
    const auto classes = header.at("num_classes").get<std::size_t>();
    if (ckpt.params.layer_sizes.size() < 2) {
        throw DataError("load_checkpoint: bad layer sizes in " + path);
    }
    if (expected_n != 0 && n != expected_n) {
        throw ShapeError("load_checkpoint: checkpoint has n=" + std::to_string(n) +
                         " but n=" + std::to_string(expected_n) + " was expected");
    }
    if (expected_q != 0 && q != expected_q) {
        throw ShapeError("load_checkpoint: checkpoint has q=" + std::to_string(q) +
                         " but q=" + std::to_string(expected_q) + " was expected");
    }
    if (ckpt.params.layer_sizes.back() != n) {
        throw DataError("load_checkpoint: layer sizes inconsistent with n in " + path);
    }

    for (std::size_t l = 0; l + 1 < ckpt.params.layer_sizes.size(); ++l) {
        ckpt.params.weights.push_back(read_matrix(
            in, ckpt.params.layer_sizes[l], ckpt.params.layer_sizes[l + 1], path));
        ckpt.params.biases.push_back(read_matrix(in, 1, ckpt.params.layer_sizes[l + 1], path));
    }
    ckpt.decorr.projection = read_matrix(in, n, q, path);
    const Matrix eig = read_matrix(in, 1, q, path);
    ckpt.decorr.eigenvalues = eig.raw();
    ckpt.head.class_weights = read_matrix(in, q, classes, path);

    char extra;
    if (in.read(&extra, 1)) {
        throw DataError("load_checkpoint: trailing bytes in " + path);
    }
    return ckpt;
}

}  // namespace mmdl
