#include "haarwalk/config.hpp"

#include <cmath>

#include "haarwalk/errors.hpp"

namespace haarwalk {

using nlohmann::json;

double golden_mean() { return (std::sqrt(5.0) - 1.0) / 2.0; }

namespace {

GroupDescriptor parse_group(const json& j) {
    if (!j.is_object() || j.size() != 1)
        throw ConfigError("group must be one of {\"torus\": d}, {\"finite\": [m...]}, "
                          "{\"cantor\": depth}, {\"padic\": [p, depth]}");
    if (j.contains("torus")) return GroupDescriptor::torus(j.at("torus").get<int>());
    if (j.contains("finite"))
        return GroupDescriptor::finite_abelian(j.at("finite").get<std::vector<std::int64_t>>());
    if (j.contains("cantor")) return GroupDescriptor::dyadic_cantor(j.at("cantor").get<int>());
    if (j.contains("padic")) {
        const auto pd = j.at("padic").get<std::vector<std::int64_t>>();
        if (pd.size() != 2) throw ConfigError("padic needs [prime, depth]");
        return GroupDescriptor::padic_int(pd[0], static_cast<int>(pd[1]));
    }
    throw ConfigError("unknown group kind");
}

CoordinateNumber parse_torus_coordinate(const json& j) {
    if (j.is_number()) return CoordinateNumber::unspecified(j.get<double>());
    if (j.is_string()) {
        if (j.get<std::string>() == "golden")
            return CoordinateNumber::irrational(golden_mean());
        throw ConfigError("unknown coordinate keyword: " + j.get<std::string>());
    }
    if (j.is_object()) {
        if (j.contains("rat")) {
            const auto pq = j.at("rat").get<std::vector<std::int64_t>>();
            if (pq.size() != 2) throw ConfigError("rat needs [num, den]");
            return CoordinateNumber::rational(pq[0], pq[1]);
        }
        if (j.contains("irr")) return CoordinateNumber::irrational(j.at("irr").get<double>());
    }
    throw ConfigError("torus coordinate must be a number, \"golden\", {\"rat\":[p,q]} "
                      "or {\"irr\": value}");
}

GroupElement parse_point(const GroupDescriptor& g, const json& j,
                         DeclaredPoint* declared = nullptr) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(g.arity()))
        throw ConfigError("point must be an array of " + std::to_string(g.arity()) +
                          " coordinates");
    GroupElement e = g.zero();
    if (g.is_finite()) {
        for (int i = 0; i < g.arity(); ++i) {
            auto v = j.at(static_cast<std::size_t>(i)).get<std::int64_t>();
            const auto m = g.moduli()[i];
            e.digits[i] = ((v % m) + m) % m;
        }
        return e;
    }
    for (int i = 0; i < g.arity(); ++i) {
        const CoordinateNumber c = parse_torus_coordinate(j.at(static_cast<std::size_t>(i)));
        e.reals[i] = c.value();
        if (declared) declared->push_back(c);
    }
    return e;
}

ParsedMeasure parse_measure(const GroupDescriptor& g, const json& j) {
    ParsedMeasure out{AtomicMeasure::zero(g), {}};
    if (j.contains("atoms")) {
        std::vector<Atom> atoms;
        for (const auto& entry : j.at("atoms")) {
            if (!entry.is_array() || entry.size() != 2)
                throw ConfigError("each atom is [point, weight]");
            DeclaredPoint declared;
            GroupElement p = parse_point(g, entry.at(0), g.is_finite() ? nullptr : &declared);
            const double w = entry.at(1).get<double>();
            atoms.push_back({std::move(p), w});
            if (!g.is_finite()) out.declared.push_back(std::move(declared));
        }
        out.measure = AtomicMeasure::from_atoms(g, std::move(atoms));
        return out;
    }
    if (!j.contains("preset")) throw ConfigError("measure needs \"atoms\" or \"preset\"");
    const auto name = j.at("preset").get<std::string>();
    if (name == "uniform") {
        out.measure = AtomicMeasure::uniform(g);
        return out;
    }
    if (name == "dirac") {
        DeclaredPoint declared;
        GroupElement at = j.contains("at")
                              ? parse_point(g, j.at("at"), g.is_finite() ? nullptr : &declared)
                              : g.zero();
        if (!g.is_finite()) {
            if (declared.empty())
                declared.assign(static_cast<std::size_t>(g.arity()),
                                CoordinateNumber::rational(0, 1));
            out.declared.push_back(declared);
        }
        out.measure = AtomicMeasure::dirac(g, std::move(at));
        return out;
    }
    if (name == "lazy-step") {
        const double stay = j.value("stay", 0.5);
        if (!(stay > 0.0 && stay < 1.0)) throw ConfigError("lazy-step stay must be in (0,1)");
        DeclaredPoint declared;
        GroupElement step;
        if (j.contains("step")) {
            step = parse_point(g, j.at("step"), g.is_finite() ? nullptr : &declared);
        } else if (g.is_finite()) {
            step = g.zero();
            step.digits[0] = 1 % g.moduli()[0];
        } else {
            throw ConfigError("lazy-step on the torus needs an explicit \"step\"");
        }
        out.measure = AtomicMeasure::from_atoms(
            g, {{g.zero(), stay}, {std::move(step), 1.0 - stay}});
        if (!g.is_finite()) {
            out.declared.push_back(DeclaredPoint(static_cast<std::size_t>(g.arity()),
                                                 CoordinateNumber::rational(0, 1)));
            out.declared.push_back(declared);
        }
        return out;
    }
    if (name == "golden-step") {
        if (g.is_finite() || g.arity() != 1)
            throw ConfigError("golden-step lives on the 1-dimensional torus");
        const CoordinateNumber gm = CoordinateNumber::irrational(golden_mean());
        GroupElement step = g.zero();
        step.reals[0] = gm.value();
        out.measure =
            AtomicMeasure::from_atoms(g, {{g.zero(), 0.5}, {std::move(step), 0.5}});
        out.declared.push_back({CoordinateNumber::rational(0, 1)});
        out.declared.push_back({gm});
        return out;
    }
    throw ConfigError("unknown measure preset: " + name);
}

Observable parse_observable(const GroupDescriptor& g, const json& j) {
    if (j.contains("character"))
        return Observable::character(j.at("character").get<std::vector<std::int64_t>>());
    if (j.contains("table")) return Observable::custom_table(j.at("table").get<std::vector<double>>());
    if (j.contains("tent")) {
        if (g.is_finite()) throw ConfigError("tent observables live on the torus");
        const auto& t = j.at("tent");
        GroupElement center = parse_point(g, t.at("center"));
        const double width = t.at("width").get<double>();
        if (!(width > 0.0 && width <= 0.5)) throw ConfigError("tent width must be in (0, 0.5]");
        auto fn = [g, center, width](const GroupElement& x) {
            return std::max(0.0, 1.0 - g.metric(x, center) / width);
        };
        return Observable::lipschitz(fn, 1.0 / width);
    }
    throw ConfigError("observable needs \"character\", \"table\" or \"tent\"");
}

}  // namespace

WalkSchedule ExperimentConfig::make_schedule() const {
    std::vector<AtomicMeasure> members;
    members.reserve(family.size());
    for (const auto& pm : family) members.push_back(pm.measure);
    MeasureFamily fam(std::move(members));
    switch (rule) {
        case WalkSchedule::Rule::Explicit:
            return WalkSchedule::explicit_list(std::move(fam), schedule_indices);
        case WalkSchedule::Rule::Cyclic:
            return WalkSchedule::cyclic(std::move(fam), schedule_indices);
        case WalkSchedule::Rule::SeededChoice:
            return WalkSchedule::seeded(std::move(fam), choice_seed);
    }
    throw ConfigError("invalid schedule rule");
}

AtomicMeasure ExperimentConfig::start_measure() const {
    if (start) return start->measure;
    return AtomicMeasure::dirac(group, group.zero());
}

GroupElement ExperimentConfig::start_point() const { return x0 ? *x0 : group.zero(); }

ExperimentConfig parse_config(const json& j) {
    try {
        ExperimentConfig cfg(parse_group(j.at("group")));
        if (!j.contains("measures") || !j.at("measures").is_array() || j.at("measures").empty())
            throw ConfigError("config needs a nonempty \"measures\" family");
        for (const auto& m : j.at("measures")) cfg.family.push_back(parse_measure(cfg.group, m));
        for (const auto& pm : cfg.family)
            if (!pm.measure.is_probability())
                throw ConfigError("family members must be probability measures");

        if (j.contains("start")) cfg.start = parse_measure(cfg.group, j.at("start"));
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            if (s.contains("explicit")) {
                cfg.rule = WalkSchedule::Rule::Explicit;
                cfg.schedule_indices = s.at("explicit").get<std::vector<std::size_t>>();
            } else if (s.contains("cyclic")) {
                cfg.rule = WalkSchedule::Rule::Cyclic;
                cfg.schedule_indices = s.at("cyclic").get<std::vector<std::size_t>>();
            } else if (s.contains("seeded_choice")) {
                cfg.rule = WalkSchedule::Rule::SeededChoice;
                cfg.choice_seed = s.at("seeded_choice").get<std::uint64_t>();
            } else {
                throw ConfigError("schedule needs \"explicit\", \"cyclic\" or \"seeded_choice\"");
            }
            for (auto i : cfg.schedule_indices)
                if (i >= cfg.family.size()) throw ConfigError("schedule index out of range");
        }
        if (j.contains("observable"))
            cfg.observable = parse_observable(cfg.group, j.at("observable"));
        if (j.contains("x0")) cfg.x0 = parse_point(cfg.group, j.at("x0"));

        cfg.n = j.value("n", cfg.n);
        if (cfg.n < 0) throw ConfigError("n must be nonnegative");
        if (j.contains("n_grid")) cfg.n_grid = j.at("n_grid").get<std::vector<std::int64_t>>();
        cfg.trials = j.value("trials", cfg.trials);
        cfg.epsilon = j.value("epsilon", cfg.epsilon);
        cfg.grid_n = j.value("grid_n", cfg.grid_n);
        cfg.atom_cap = j.value("atom_cap", cfg.atom_cap);
        cfg.power_cap = j.value("power_cap", cfg.power_cap);
        cfg.window_cap = j.value("window_cap", cfg.window_cap);
        cfg.threads = j.value("threads", cfg.threads);
        if (j.contains("seed")) {
            cfg.seed = j.at("seed").get<std::uint64_t>();
            cfg.seed_set = true;
        }
        cfg.resolved = j;
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
}

json preset_config(const std::string& name) {
    if (name == "z2-lazy")
        return json{{"group", {{"finite", {2}}}},
                    {"measures", {{{"preset", "lazy-step"}}}},
                    {"schedule", {{"cyclic", {0}}}},
                    {"observable", {{"character", {1}}}},
                    {"n", 100000},
                    {"trials", 100},
                    {"epsilon", 0.2},
                    {"n_grid", {20, 40, 80, 160}},
                    {"seed", 20240601}};
    if (name == "z4-lazy")
        return json{{"group", {{"finite", {4}}}},
                    {"measures", {{{"preset", "lazy-step"}}}},
                    {"schedule", {{"cyclic", {0}}}},
                    {"observable", {{"character", {1}}}},
                    {"n", 100000},
                    {"trials", 100},
                    {"epsilon", 0.2},
                    {"seed", 20240601}};
    if (name == "z8-lazy")
        return json{{"group", {{"finite", {8}}}},
                    {"measures", {{{"preset", "lazy-step"}}}},
                    {"schedule", {{"cyclic", {0}}}},
                    {"observable", {{"character", {1}}}},
                    {"n", 100000},
                    {"trials", 100},
                    {"epsilon", 0.2},
                    {"seed", 20240601}};
    if (name == "z2-sticky")
        // stays with probability 3/4; mixes at rate 2^-n instead of in one step
        return json{{"group", {{"finite", {2}}}},
                    {"measures", {{{"preset", "lazy-step"}, {"stay", 0.75}}}},
                    {"schedule", {{"cyclic", {0}}}},
                    {"observable", {{"character", {1}}}},
                    {"n", 100000},
                    {"trials", 100},
                    {"epsilon", 0.2},
                    {"seed", 20240601}};
    if (name == "torus-golden")
        return json{{"group", {{"torus", 1}}},
                    {"measures", {{{"preset", "golden-step"}}}},
                    {"schedule", {{"cyclic", {0}}}},
                    {"observable", {{"character", {1}}}},
                    {"n", 100000},
                    {"trials", 100},
                    {"epsilon", 0.05},
                    {"grid_n", 64},
                    {"seed", 20240601}};
    if (name == "dirac-rotation")
        return json{{"group", {{"torus", 1}}},
                    {"measures", {{{"preset", "dirac"}, {"at", {"golden"}}}}},
                    {"schedule", {{"cyclic", {0}}}},
                    {"n", 100},
                    {"seed", 20240601}};
    if (name == "shrinking-support")
        return json{{"group", {{"torus", 1}}},
                    {"measures", {{{"preset", "golden-step"}}}},  // placeholder family
                    {"schedule", {{"cyclic", {0}}}},
                    {"n", 30},
                    {"seed", 20240601}};
    throw ConfigError("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
    return {"z2-lazy",      "z4-lazy",        "z8-lazy",           "z2-sticky",
            "torus-golden", "dirac-rotation", "shrinking-support"};
}

}  // namespace haarwalk
