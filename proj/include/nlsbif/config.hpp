#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "diagram.hpp"
#include "errors.hpp"
#include "evolution.hpp"
#include "suites.hpp"

namespace nlsbif {

using json = nlohmann::json;

struct SeedConfig {
    bool trivial = true;
    std::optional<std::string> file; // two-column x,phi profile
    double file_E = 1.0;
    std::optional<double> soliton_E;
    double soliton_center = 0.0;
    std::optional<double> variational_mu;

    bool has_explicit() const { return file.has_value() || soliton_E.has_value() || variational_mu.has_value(); }
};

struct EvolveConfig {
    std::string branch = "asymmetric"; // asymmetric | symmetric | <branch id>
    double E = 1.5;
    double horizon = 10.0;
    double dt = 1e-3;
    int sample_every = 100;
    double epsilon = 1e-3;
    PerturbationKind direction = PerturbationKind::random;
};

/// Everything a run needs. Defaults reproduce the double-well diagram.
struct RunConfig {
    double L = 30.0;
    int N = 3000;
    ModelSpec model{{PotentialKind::double_gaussian_well, 2.0, 2.0, 1.0}, -1.0, 2.0};
    ContinuationControls controls;
    double tol_residual = 1e-10;
    double event_tol = 1e-8;  // relative to ||L||_inf
    double slope_tol = 1e-6;  // relative to max(1, Q)
    double kernel_tol = 1e-8; // relative to ||L+||_inf
    SeedConfig seeds;
    int budget = 16;
    std::string out_dir = "nlsbif_out";
    int profile_stride = 10;
    std::uint64_t seed = 1;

    AsymptoticOptions asymptotics;
    ProbeSuiteOptions probes;
    double mu_min = 0.1;
    double mu_max = 10.0;
    int mu_count = 21;
    VarscanOptions varscan;
    EvolveConfig evolve;

    void validate() const
    {
        require(L > 0.0 && N >= 3, "grid: need L > 0 and N >= 3");
        model.validate();
        controls.validate();
        require(tol_residual > 0.0 && event_tol > 0.0 && slope_tol > 0.0 && kernel_tol > 0.0, "all tolerances must be positive");
        require(!(seeds.trivial && seeds.has_explicit()), "seeds: trivial and explicit seeds are exclusive; set trivial to false");
        require(seeds.trivial || seeds.has_explicit(), "seeds: no seed given");
        require(budget >= 1, "budget must be >= 1");
        require(profile_stride >= 1, "output.profile_stride must be >= 1");
        require(asymptotics.fine_L > 0.0 && asymptotics.fine_N >= 3 && asymptotics.ref_L > 0.0 && asymptotics.ref_N >= 3,
                "asymptotics grids invalid");
        require(probes.epsilon >= 0.0 && probes.horizon > 0.0 && probes.per_segment >= 1, "probes: invalid epsilon/horizon/per_segment");
        require(mu_min > 0.0 && mu_max > mu_min && mu_count >= 2, "varscan: need 0 < mu_min < mu_max and count >= 2");
        varscan.flow.validate();
        require(evolve.E > 0.0 && evolve.horizon > 0.0 && evolve.dt > 0.0 && evolve.sample_every >= 1 && evolve.epsilon >= 0.0,
                "evolve: invalid parameters");
    }

    Grid grid() const { return build_grid(L, N); }

    DiagramOptions diagram_options() const
    {
        DiagramOptions o;
        o.controls = controls;
        o.controls.newton.tol_residual = tol_residual;
        o.controls.spectral.kernel_rel_tol = kernel_tol;
        o.events.event_rel_tol = event_tol;
        o.events.ds_min = controls.ds_min;
        o.events.newton.tol_residual = tol_residual;
        o.events.spectral.kernel_rel_tol = kernel_tol;
        o.switching.newton.tol_residual = tol_residual;
        o.budget = budget;
        o.slope_rel_tol = slope_tol;
        return o;
    }

    VarscanOptions varscan_options() const
    {
        VarscanOptions v = varscan;
        v.mus = VarscanOptions::log_spaced(mu_min, mu_max, mu_count);
        return v;
    }

    ProbeSuiteOptions probe_options() const
    {
        ProbeSuiteOptions p = probes;
        p.seed = seed;
        return p;
    }
};

namespace detail {

// Rejects keys outside `allowed` so that typos do not silently fall back to defaults.
inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) fail(ErrorKind::invalid_argument, where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) fail(ErrorKind::invalid_argument, "unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key) || j[key].is_null()) return;
    try {
        out = j[key].get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_argument, where + "." + key + ": " + e.what());
    }
}

} // namespace detail

inline RunConfig config_from_json(const json& j)
{
    using detail::check_keys;
    using detail::read;
    RunConfig c;
    check_keys(j, {"grid", "model", "continuation", "tolerances", "seeds", "budget", "output", "seed", "suites"}, "config");
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        check_keys(g, {"L", "N"}, "grid");
        read(g, "L", c.L, "grid");
        read(g, "N", c.N, "grid");
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        check_keys(m, {"potential", "gamma", "p"}, "model");
        if (m.contains("potential")) {
            const auto& p = m["potential"];
            check_keys(p, {"kind", "a", "l", "sigma"}, "model.potential");
            std::string kind = to_string(c.model.potential.kind);
            read(p, "kind", kind, "model.potential");
            c.model.potential.kind = potential_kind_from_string(kind);
            read(p, "a", c.model.potential.depth, "model.potential");
            read(p, "l", c.model.potential.separation, "model.potential");
            read(p, "sigma", c.model.potential.width, "model.potential");
        }
        read(m, "gamma", c.model.gamma, "model");
        read(m, "p", c.model.power, "model");
    }
    if (j.contains("continuation")) {
        const auto& k = j["continuation"];
        check_keys(k, {"ds_init", "ds_min", "ds_max", "E_min", "E_max", "norm_max", "max_points"}, "continuation");
        read(k, "ds_init", c.controls.ds_init, "continuation");
        read(k, "ds_min", c.controls.ds_min, "continuation");
        read(k, "ds_max", c.controls.ds_max, "continuation");
        read(k, "E_min", c.controls.E_min, "continuation");
        read(k, "E_max", c.controls.E_max, "continuation");
        read(k, "norm_max", c.controls.norm_max, "continuation");
        read(k, "max_points", c.controls.max_points, "continuation");
    }
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        check_keys(t, {"tol_residual", "event_tol", "slope_tol", "kernel_tol"}, "tolerances");
        read(t, "tol_residual", c.tol_residual, "tolerances");
        read(t, "event_tol", c.event_tol, "tolerances");
        read(t, "slope_tol", c.slope_tol, "tolerances");
        read(t, "kernel_tol", c.kernel_tol, "tolerances");
    }
    if (j.contains("seeds")) {
        const auto& s = j["seeds"];
        check_keys(s, {"trivial", "file", "soliton", "variational"}, "seeds");
        read(s, "trivial", c.seeds.trivial, "seeds");
        if (s.contains("file") && !s["file"].is_null()) {
            check_keys(s["file"], {"path", "E"}, "seeds.file");
            std::string path;
            read(s["file"], "path", path, "seeds.file");
            require(!path.empty(), "seeds.file.path missing");
            c.seeds.file = path;
            read(s["file"], "E", c.seeds.file_E, "seeds.file");
        }
        if (s.contains("soliton") && !s["soliton"].is_null()) {
            check_keys(s["soliton"], {"E", "center"}, "seeds.soliton");
            double e = 1.0;
            read(s["soliton"], "E", e, "seeds.soliton");
            c.seeds.soliton_E = e;
            read(s["soliton"], "center", c.seeds.soliton_center, "seeds.soliton");
        }
        if (s.contains("variational") && !s["variational"].is_null()) {
            check_keys(s["variational"], {"mu"}, "seeds.variational");
            double mu = 1.0;
            read(s["variational"], "mu", mu, "seeds.variational");
            c.seeds.variational_mu = mu;
        }
    }
    read(j, "budget", c.budget, "config");
    read(j, "seed", c.seed, "config");
    if (j.contains("output")) {
        const auto& o = j["output"];
        check_keys(o, {"dir", "profile_stride"}, "output");
        read(o, "dir", c.out_dir, "output");
        read(o, "profile_stride", c.profile_stride, "output");
    }
    if (j.contains("suites")) {
        const auto& s = j["suites"];
        check_keys(s, {"scaling", "rescale", "probes", "varscan", "evolve"}, "suites");
        auto& a = c.asymptotics;
        if (s.contains("scaling")) {
            check_keys(s["scaling"], {"energies", "fine_L", "fine_N"}, "suites.scaling");
            read(s["scaling"], "energies", a.scaling_energies, "suites.scaling");
            read(s["scaling"], "fine_L", a.fine_L, "suites.scaling");
            read(s["scaling"], "fine_N", a.fine_N, "suites.scaling");
        }
        if (s.contains("rescale")) {
            check_keys(s["rescale"], {"energies", "ref_L", "ref_N", "placement_threshold"}, "suites.rescale");
            read(s["rescale"], "energies", a.rescale_energies, "suites.rescale");
            read(s["rescale"], "ref_L", a.ref_L, "suites.rescale");
            read(s["rescale"], "ref_N", a.ref_N, "suites.rescale");
            read(s["rescale"], "placement_threshold", a.placement_threshold, "suites.rescale");
        }
        if (s.contains("probes")) {
            const auto& p = s["probes"];
            check_keys(p, {"epsilon", "horizon", "per_segment", "E_cap", "directions", "symmetric_E"}, "suites.probes");
            read(p, "epsilon", c.probes.epsilon, "suites.probes");
            read(p, "horizon", c.probes.horizon, "suites.probes");
            read(p, "per_segment", c.probes.per_segment, "suites.probes");
            read(p, "E_cap", c.probes.E_cap, "suites.probes");
            read(p, "symmetric_E", c.probes.symmetric_E, "suites.probes");
            if (p.contains("directions")) {
                std::vector<std::string> names;
                read(p, "directions", names, "suites.probes");
                c.probes.directions.clear();
                for (const auto& n : names) c.probes.directions.push_back(perturbation_from_string(n));
                require(!c.probes.directions.empty(), "suites.probes.directions is empty");
            }
        }
        if (s.contains("varscan")) {
            const auto& v = s["varscan"];
            check_keys(v, {"mu_min", "mu_max", "count", "asym_center", "crosscheck", "dt", "dt_max", "grad_tol", "max_steps"}, "suites.varscan");
            read(v, "mu_min", c.mu_min, "suites.varscan");
            read(v, "mu_max", c.mu_max, "suites.varscan");
            read(v, "count", c.mu_count, "suites.varscan");
            read(v, "asym_center", c.varscan.asym_center, "suites.varscan");
            read(v, "crosscheck", c.varscan.crosscheck, "suites.varscan");
            read(v, "dt", c.varscan.flow.dt, "suites.varscan");
            read(v, "dt_max", c.varscan.flow.dt_max, "suites.varscan");
            read(v, "grad_tol", c.varscan.flow.grad_tol, "suites.varscan");
            read(v, "max_steps", c.varscan.flow.max_steps, "suites.varscan");
        }
        if (s.contains("evolve")) {
            const auto& e = s["evolve"];
            check_keys(e, {"branch", "E", "T", "dt", "sample_every", "epsilon", "direction"}, "suites.evolve");
            if (e.contains("branch")) {
                if (e["branch"].is_number_integer()) {
                    c.evolve.branch = std::to_string(e["branch"].get<int>());
                } else {
                    read(e, "branch", c.evolve.branch, "suites.evolve");
                }
            }
            read(e, "E", c.evolve.E, "suites.evolve");
            read(e, "T", c.evolve.horizon, "suites.evolve");
            read(e, "dt", c.evolve.dt, "suites.evolve");
            read(e, "sample_every", c.evolve.sample_every, "suites.evolve");
            read(e, "epsilon", c.evolve.epsilon, "suites.evolve");
            if (e.contains("direction")) {
                std::string d;
                read(e, "direction", d, "suites.evolve");
                c.evolve.direction = perturbation_from_string(d);
            }
        }
    }
    c.validate();
    return c;
}

inline json to_json(const RunConfig& c)
{
    json j;
    j["grid"] = {{"L", c.L}, {"N", c.N}};
    j["model"] = {{"potential",
                   {{"kind", to_string(c.model.potential.kind)},
                    {"a", c.model.potential.depth},
                    {"l", c.model.potential.separation},
                    {"sigma", c.model.potential.width}}},
                  {"gamma", c.model.gamma},
                  {"p", c.model.power}};
    j["continuation"] = {{"ds_init", c.controls.ds_init}, {"ds_min", c.controls.ds_min},   {"ds_max", c.controls.ds_max},
                         {"E_min", c.controls.E_min},     {"E_max", c.controls.E_max},     {"norm_max", c.controls.norm_max},
                         {"max_points", c.controls.max_points}};
    j["tolerances"] = {{"tol_residual", c.tol_residual}, {"event_tol", c.event_tol}, {"slope_tol", c.slope_tol}, {"kernel_tol", c.kernel_tol}};
    json seeds = {{"trivial", c.seeds.trivial}};
    if (c.seeds.file) seeds["file"] = {{"path", *c.seeds.file}, {"E", c.seeds.file_E}};
    if (c.seeds.soliton_E) seeds["soliton"] = {{"E", *c.seeds.soliton_E}, {"center", c.seeds.soliton_center}};
    if (c.seeds.variational_mu) seeds["variational"] = {{"mu", *c.seeds.variational_mu}};
    j["seeds"] = seeds;
    j["budget"] = c.budget;
    j["seed"] = c.seed;
    j["output"] = {{"dir", c.out_dir}, {"profile_stride", c.profile_stride}};
    std::vector<std::string> dirs;
    for (auto d : c.probes.directions) dirs.push_back(to_string(d));
    j["suites"] = {
        {"scaling", {{"energies", c.asymptotics.scaling_energies}, {"fine_L", c.asymptotics.fine_L}, {"fine_N", c.asymptotics.fine_N}}},
        {"rescale",
         {{"energies", c.asymptotics.rescale_energies},
          {"ref_L", c.asymptotics.ref_L},
          {"ref_N", c.asymptotics.ref_N},
          {"placement_threshold", c.asymptotics.placement_threshold}}},
        {"probes",
         {{"epsilon", c.probes.epsilon},
          {"horizon", c.probes.horizon},
          {"per_segment", c.probes.per_segment},
          {"E_cap", c.probes.E_cap},
          {"directions", dirs},
          {"symmetric_E", c.probes.symmetric_E}}},
        {"varscan",
         {{"mu_min", c.mu_min},
          {"mu_max", c.mu_max},
          {"count", c.mu_count},
          {"asym_center", c.varscan.asym_center},
          {"crosscheck", c.varscan.crosscheck},
          {"dt", c.varscan.flow.dt},
          {"dt_max", c.varscan.flow.dt_max},
          {"grad_tol", c.varscan.flow.grad_tol},
          {"max_steps", c.varscan.flow.max_steps}}},
        {"evolve",
         {{"branch", c.evolve.branch},
          {"E", c.evolve.E},
          {"T", c.evolve.horizon},
          {"dt", c.evolve.dt},
          {"sample_every", c.evolve.sample_every},
          {"epsilon", c.evolve.epsilon},
          {"direction", to_string(c.evolve.direction)}}}};
    return j;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorKind::invalid_argument, "cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_argument, "config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

} // namespace nlsbif
