#pragma once

// Head checkpoints: "FNCHEAD1" | u64 header length | JSON header | float32 blob.
// Tensor offsets in the header are byte offsets into the blob; matrices are
// stored column-major.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "fnclust/binary_io.hpp"
#include "fnclust/clusterhead/train.hpp"
#include "fnclust/error.hpp"

namespace fnclust {

inline constexpr const char* kCheckpointMagic = "FNCHEAD1";

inline const char* reduction_name(Reduction r) { return r == Reduction::mean ? "mean" : "sum"; }

inline Reduction parse_reduction(const std::string& s) {
    if (s == "mean") return Reduction::mean;
    if (s == "sum") return Reduction::sum;
    throw ParameterError("unknown loss reduction '" + s + "'");
}

inline nlohmann::json train_config_json(const TrainConfig& c) {
    return {{"alpha", c.alpha},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lr0", c.lr0},
            {"k", c.k},
            {"seed", c.seed},
            {"loss_reduction", reduction_name(c.loss_reduction)},
            {"symmetric_ce", c.symmetric_ce},
            {"use_consistency", c.use_consistency},
            {"use_confidence", c.use_confidence},
            {"hidden", c.hidden},
            {"augment",
             {{"crop_min", c.augment.crop_min},
              {"crop_max", c.augment.crop_max},
              {"sigma_min", c.augment.sigma_min},
              {"sigma_max", c.augment.sigma_max}}}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.alpha = j.at("alpha").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.lr0 = j.at("lr0").get<double>();
    c.k = j.at("k").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.loss_reduction = parse_reduction(j.at("loss_reduction").get<std::string>());
    c.symmetric_ce = j.at("symmetric_ce").get<bool>();
    c.use_consistency = j.value("use_consistency", true);
    c.use_confidence = j.value("use_confidence", true);
    c.hidden = j.at("hidden").get<std::vector<int>>();
    const auto& a = j.at("augment");
    c.augment = {a.at("crop_min").get<double>(), a.at("crop_max").get<double>(), a.at("sigma_min").get<double>(),
                 a.at("sigma_max").get<double>()};
    return c;
}

struct Checkpoint {
    HeadParams params;
    TrainConfig config;
    nlohmann::json extra = nlohmann::json::object();  // e.g. encoder description
};

inline io::Writer encode_checkpoint(const Checkpoint& ck) {
    nlohmann::json tensors = nlohmann::json::array();
    std::uint64_t offset = 0;
    auto add = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
        const auto count = static_cast<std::uint64_t>(rows * cols);
        tensors.push_back({{"name", name}, {"shape", {rows, cols}}, {"offset", offset}, {"count", count}});
        offset += count * sizeof(float);
    };
    const auto& p = ck.params;
    for (std::size_t l = 0; l < p.layers(); ++l) {
        add("layer" + std::to_string(l) + ".weight", p.weights[l].rows(), p.weights[l].cols());
        add("layer" + std::to_string(l) + ".bias", p.biases[l].rows(), 1);
    }
    const nlohmann::json header = {{"layer_dims", p.dims},
                                   {"seed", ck.config.seed},
                                   {"config", train_config_json(ck.config)},
                                   {"order", "column-major"},
                                   {"dtype", "float32"},
                                   {"tensors", tensors},
                                   {"extra", ck.extra}};
    const std::string text = header.dump();
    io::Writer w;
    w.magic(kCheckpointMagic, false);
    w.u64(text.size());
    w.bytes(text.data(), text.size());
    for (std::size_t l = 0; l < p.layers(); ++l) {
        for (Eigen::Index i = 0; i < p.weights[l].size(); ++i) w.f32(p.weights[l].data()[i]);
        for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) w.f32(p.biases[l].data()[i]);
    }
    return w;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) { encode_checkpoint(ck).save(path); }

inline Checkpoint decode_checkpoint(io::Reader r) {
    constexpr const char* fmt = "FNCHEAD1";
    r.expect_magic(kCheckpointMagic, false, fmt);
    const auto len = r.u64(fmt);
    if (r.remaining() < len) throw FormatError("FNCHEAD1: truncated header", r.offset());
    const auto header_at = r.offset();
    std::string text(len, '\0');
    for (auto& ch : text) ch = static_cast<char>(r.u8(fmt));
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("FNCHEAD1: malformed header: ") + e.what(), header_at);
    }
    Checkpoint ck;
    try {
        ck.config = train_config_from_json(h.at("config"));
        ck.params = HeadParams::zeros(h.at("layer_dims").get<std::vector<int>>());
        if (h.contains("extra")) ck.extra = h.at("extra");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("FNCHEAD1: incomplete header: ") + e.what(), header_at);
    }
    std::size_t expected = 0;
    for (std::size_t l = 0; l < ck.params.layers(); ++l)
        expected += static_cast<std::size_t>(ck.params.weights[l].size() + ck.params.biases[l].size()) * sizeof(float);
    r.expect_remaining(expected, fmt);
    for (std::size_t l = 0; l < ck.params.layers(); ++l) {
        for (Eigen::Index i = 0; i < ck.params.weights[l].size(); ++i) ck.params.weights[l].data()[i] = r.f32(fmt);
        for (Eigen::Index i = 0; i < ck.params.biases[l].size(); ++i) ck.params.biases[l].data()[i] = r.f32(fmt);
    }
    return ck;
}

inline Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::Reader::from_file(path)); }

}  // namespace fnclust
