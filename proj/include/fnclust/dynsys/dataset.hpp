#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fnclust/error.hpp"

namespace fnclust {

enum class Split : std::uint8_t { train, test };

/// A sampled scalar path u(t) with its generator provenance.
struct Trajectory {
    std::uint64_t id = 0;
    std::vector<double> times;
    std::vector<double> values;
    int class_label = 0;
    /// Parameter tertile for ODE-6, complexity level r for ODE-4.
    int subclass_label = 0;
    std::map<std::string, double> params;
    std::uint64_t seed = 0;
    Split split = Split::train;

    std::size_t size() const noexcept { return values.size(); }
};

inline void validate(const Trajectory& tr) {
    if (tr.times.size() != tr.values.size() || tr.times.size() < 2)
        throw ParameterError("trajectory " + std::to_string(tr.id) + ": need matching times/values of length >= 2");
    for (std::size_t j = 0; j < tr.times.size(); ++j) {
        if (!std::isfinite(tr.values[j]) || !std::isfinite(tr.times[j]))
            throw ParameterError("trajectory " + std::to_string(tr.id) + ": non-finite sample");
        if (j > 0 && !(tr.times[j] > tr.times[j - 1]))
            throw ParameterError("trajectory " + std::to_string(tr.id) + ": times not strictly increasing");
    }
}

struct Dataset {
    std::string name;
    std::vector<Trajectory> trajectories;
    int grid_size = 0;
    /// Generator arguments, recorded in the sidecar.
    std::map<std::string, std::string> args;

    std::size_t size() const noexcept { return trajectories.size(); }

    int num_classes() const {
        int c = 0;
        for (const auto& t : trajectories) c = std::max(c, t.class_label + 1);
        return c;
    }

    std::vector<int> labels() const {
        std::vector<int> out;
        out.reserve(trajectories.size());
        for (const auto& t : trajectories) out.push_back(t.class_label);
        return out;
    }

    /// Subset holding only trajectories tagged with `which`.
    Dataset subset(Split which) const {
        Dataset d{name, {}, grid_size, args};
        for (const auto& t : trajectories)
            if (t.split == which) d.trajectories.push_back(t);
        return d;
    }
};

/// Checks the shared-grid and contiguous-label invariants.
inline void validate(const Dataset& ds) {
    std::set<int> classes;
    for (const auto& t : ds.trajectories) {
        validate(t);
        if (static_cast<int>(t.size()) != ds.grid_size)
            throw ParameterError("dataset " + ds.name + ": trajectory " + std::to_string(t.id) + " off the common grid");
        if (t.class_label < 0) throw ParameterError("dataset " + ds.name + ": negative class label");
        classes.insert(t.class_label);
    }
    if (!classes.empty() && *classes.rbegin() + 1 != static_cast<int>(classes.size()))
        throw ParameterError("dataset " + ds.name + ": class labels are not contiguous");
}

}  // namespace fnclust
