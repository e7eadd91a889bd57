#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "haarwalk/aperiodicity.hpp"
#include "haarwalk/measure.hpp"
#include "haarwalk/walk.hpp"

namespace haarwalk {

/// A measure parsed from config: the numeric atoms plus, on the torus, the
/// declared arithmetic nature of each support coordinate (used by the
/// aperiodicity decision; never guessed from floats).
struct ParsedMeasure {
    AtomicMeasure measure;
    std::vector<DeclaredPoint> declared;  // torus only; aligned with parsed atoms
};

struct ExperimentConfig {
    explicit ExperimentConfig(GroupDescriptor g) : group(std::move(g)) {}

    GroupDescriptor group;
    std::vector<ParsedMeasure> family;
    std::optional<ParsedMeasure> start;  // default: Dirac at 0
    WalkSchedule::Rule rule = WalkSchedule::Rule::Cyclic;
    std::vector<std::size_t> schedule_indices = {0};
    std::uint64_t choice_seed = 0;
    std::optional<Observable> observable;
    std::optional<GroupElement> x0;  // default: 0

    std::int64_t n = 1000;
    std::vector<std::int64_t> n_grid;
    std::int64_t trials = 100;
    double epsilon = 0.1;
    int grid_n = 64;
    std::size_t atom_cap = kDefaultAtomCap;
    std::int64_t power_cap = 10000;
    std::size_t window_cap = 512;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;

    nlohmann::json resolved;  // the full config as applied, for manifests

    WalkSchedule make_schedule() const;
    AtomicMeasure start_measure() const;
    GroupElement start_point() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);

/// Built-in experiment presets; throws ConfigError for unknown names.
/// Available: z2-lazy, z4-lazy, z8-lazy, z2-sticky, torus-golden,
/// dirac-rotation, shrinking-support.
nlohmann::json preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// The golden mean (sqrt(5)-1)/2, the stock irrational rotation number.
double golden_mean();

}  // namespace haarwalk
