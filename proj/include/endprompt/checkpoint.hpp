#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "endprompt/model.hpp"

namespace eplab {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts are unsupported");

inline void to_json(nlohmann::json& j, const ModelConfig& config) {
    j = nlohmann::json{{"vocab_size", config.vocab_size},
                       {"model_dim", config.model_dim},
                       {"num_heads", config.num_heads},
                       {"num_layers", config.num_layers},
                       {"mlp_ratio", config.mlp_ratio},
                       {"rotary_base", config.rotary_base},
                       {"max_eval_positions", config.max_eval_positions},
                       {"tied_head", config.tied_head}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& config) {
    j.at("vocab_size").get_to(config.vocab_size);
    j.at("model_dim").get_to(config.model_dim);
    j.at("num_heads").get_to(config.num_heads);
    j.at("num_layers").get_to(config.num_layers);
    j.at("mlp_ratio").get_to(config.mlp_ratio);
    j.at("rotary_base").get_to(config.rotary_base);
    j.at("max_eval_positions").get_to(config.max_eval_positions);
    j.at("tied_head").get_to(config.tied_head);
}

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'E', 'P', 'L', 'A', 'B', 'C', 'K', '1'};

inline void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) {
        throw std::runtime_error("checkpoint: truncated file");
    }
    return v;
}

}  // namespace detail

// Layout: 8-byte magic, u32 header length, canonical-JSON config header,
// u32 tensor count, then per tensor: u32 name length, name bytes, u32 rows,
// u32 cols, rows*cols float64 values row-major little-endian.
inline void write_checkpoint(std::ostream& out, const TinyModelParams& params) {
    out.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
    const nlohmann::json header = params.config();
    const std::string header_text = header.dump();
    detail::write_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    detail::write_u32(out, static_cast<std::uint32_t>(params.tensors().size()));
    for (const TensorSpec& spec : params.tensors()) {
        detail::write_u32(out, static_cast<std::uint32_t>(spec.name.size()));
        out.write(spec.name.data(), static_cast<std::streamsize>(spec.name.size()));
        detail::write_u32(out, static_cast<std::uint32_t>(spec.rows));
        detail::write_u32(out, static_cast<std::uint32_t>(spec.cols));
        out.write(reinterpret_cast<const char*>(params.flat().data() + spec.offset),
                  static_cast<std::streamsize>(spec.count() * sizeof(double)));
    }
    if (!out) {
        throw std::runtime_error("checkpoint: write failed");
    }
}

inline TinyModelParams read_checkpoint(std::istream& in) {
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, detail::kCheckpointMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("checkpoint: bad magic (not a checkpoint file)");
    }
    const std::uint32_t header_len = detail::read_u32(in);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), header_len);
    if (!in) {
        throw std::runtime_error("checkpoint: truncated header");
    }
    const ModelConfig config = nlohmann::json::parse(header_text).get<ModelConfig>();
    TinyModelParams params(config);
    const std::uint32_t tensor_count = detail::read_u32(in);
    if (tensor_count != params.tensors().size()) {
        throw std::runtime_error("checkpoint: tensor count does not match config");
    }
    for (const TensorSpec& spec : params.tensors()) {
        const std::uint32_t name_len = detail::read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t rows = detail::read_u32(in);
        const std::uint32_t cols = detail::read_u32(in);
        if (!in || name != spec.name || rows != static_cast<std::uint32_t>(spec.rows) ||
            cols != static_cast<std::uint32_t>(spec.cols)) {
            throw std::runtime_error("checkpoint: tensor layout mismatch at " + spec.name);
        }
        in.read(reinterpret_cast<char*>(params.flat().data() + spec.offset),
                static_cast<std::streamsize>(spec.count() * sizeof(double)));
        if (!in) {
            throw std::runtime_error("checkpoint: truncated tensor data at " + spec.name);
        }
    }
    return params;
}

inline void save_checkpoint(const std::string& path, const TinyModelParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    }
    write_checkpoint(out, params);
}

inline TinyModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("checkpoint: cannot open " + path);
    }
    return read_checkpoint(in);
}

}  // namespace eplab
