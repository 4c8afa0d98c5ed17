#pragma once

// FNCDS1 dataset files.
//
//   "FNCDS1\0" | u32 N | u32 T | u32 C | N x (u64 seed, u32 class, u32 subclass, T f64 times, T f64 values)
//
// All little-endian. The JSON sidecar (<path>.json) carries the generator name,
// its arguments and per-trajectory id, split and parameters.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fnclust/binary_io.hpp"
#include "fnclust/dynsys/dataset.hpp"

namespace fnclust {

inline constexpr const char* kDatasetMagic = "FNCDS1";

inline std::string sidecar_path(const std::string& path) { return path + ".json"; }

inline io::Writer encode_dataset(const Dataset& ds) {
    io::Writer w;
    w.magic(kDatasetMagic, true);
    w.u32(static_cast<std::uint32_t>(ds.size()));
    w.u32(static_cast<std::uint32_t>(ds.grid_size));
    w.u32(static_cast<std::uint32_t>(ds.num_classes()));
    for (const auto& t : ds.trajectories) {
        if (static_cast<int>(t.size()) != ds.grid_size)
            throw ParameterError("encode_dataset: trajectory " + std::to_string(t.id) + " off the common grid");
        w.u64(t.seed);
        w.u32(static_cast<std::uint32_t>(t.class_label));
        w.u32(static_cast<std::uint32_t>(t.subclass_label));
        for (double x : t.times) w.f64(x);
        for (double x : t.values) w.f64(x);
    }
    return w;
}

inline nlohmann::json dataset_sidecar(const Dataset& ds) {
    nlohmann::json j;
    j["generator"] = ds.name;
    j["args"] = ds.args;
    auto& rows = j["trajectories"] = nlohmann::json::array();
    for (const auto& t : ds.trajectories) {
        rows.push_back({{"id", t.id},
                        {"split", t.split == Split::train ? "train" : "test"},
                        {"params", t.params}});
    }
    return j;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    encode_dataset(ds).save(path);
    std::ofstream side(sidecar_path(path), std::ios::trunc);
    if (!side) throw Error("cannot write sidecar for " + path);
    side << dataset_sidecar(ds).dump(1) << '\n';
}

inline Dataset load_dataset(const std::string& path) {
    constexpr const char* fmt = "FNCDS1";
    auto r = io::Reader::from_file(path);
    r.expect_magic(kDatasetMagic, true, fmt);
    const auto n = r.u32(fmt);
    const auto T = r.u32(fmt);
    const auto C = r.u32(fmt);
    const std::size_t record = 16 + 16 * static_cast<std::size_t>(T);
    r.expect_remaining(record * n, fmt);

    Dataset ds;
    ds.grid_size = static_cast<int>(T);
    ds.trajectories.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        auto& t = ds.trajectories[i];
        t.id = i;
        t.seed = r.u64(fmt);
        const auto offset = r.offset();
        t.class_label = static_cast<int>(r.u32(fmt));
        if (t.class_label >= static_cast<int>(C)) throw FormatError("FNCDS1: class label out of range", offset);
        t.subclass_label = static_cast<int>(r.u32(fmt));
        t.times.resize(T);
        t.values.resize(T);
        for (auto& x : t.times) x = r.f64(fmt);
        for (auto& x : t.values) x = r.f64(fmt);
    }

    if (std::filesystem::exists(sidecar_path(path))) {
        std::ifstream side(sidecar_path(path));
        const auto j = nlohmann::json::parse(side);
        ds.name = j.value("generator", "");
        if (j.contains("args")) ds.args = j["args"].get<std::map<std::string, std::string>>();
        const auto& rows = j.at("trajectories");
        if (rows.size() != n) throw FormatError("FNCDS1 sidecar: row count mismatch", 0);
        for (std::uint32_t i = 0; i < n; ++i) {
            auto& t = ds.trajectories[i];
            t.id = rows[i].at("id").get<std::uint64_t>();
            t.split = rows[i].at("split").get<std::string>() == "test" ? Split::test : Split::train;
            t.params = rows[i].at("params").get<std::map<std::string, double>>();
        }
    }
    return ds;
}

/// One row per trajectory: id,class,subclass,v_0..v_{T-1}.
inline void export_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << "id,class,subclass";
    for (int j = 0; j < ds.grid_size; ++j) out << ",v_" << j;
    out << '\n' << std::setprecision(17);
    for (const auto& t : ds.trajectories) {
        out << t.id << ',' << t.class_label << ',' << t.subclass_label;
        for (double v : t.values) out << ',' << v;
        out << '\n';
    }
}

}  // namespace fnclust
