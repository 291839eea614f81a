#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "diagram.hpp"
#include "suites.hpp"

namespace nlsbif {

namespace fs = std::filesystem;

/// Shortest text that reads back to the same double.
inline std::string fmt(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s)
{
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    // strtod rather than stod: subnormal results set ERANGE but are exact.
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || std::isinf(v)) fail(ErrorKind::io_error, "not a number: '" + s + "'");
    return v;
}

/// Write to a sibling temporary, then rename over the target.
inline void atomic_write(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::io_error, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) fail(ErrorKind::io_error, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorKind::io_error, "rename to '" + path.string() + "' failed: " + ec.message());
}

inline std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io_error, "cannot read '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

// ----------------------------------------------------------------- branch CSV

inline constexpr const char* kBranchHeader = "index,E,Q,energy,kinetic,potential,nonlinear,morse_plus,morse_minus,lambda_min_plus,"
                                             "lambda_min_minus,slope_dQdE,pohozaev,asymmetry,stability";

inline std::string branch_csv(const Branch& b)
{
    std::string s = kBranchHeader;
    s += '\n';
    for (std::size_t i = 0; i < b.points.size(); ++i) {
        const auto& p = b.points[i];
        const auto& f = p.functionals;
        s += std::to_string(i) + ',' + fmt(p.E) + ',' + fmt(f.charge) + ',' + fmt(f.energy) + ',' + fmt(f.kinetic) + ',' + fmt(f.potential) +
             ',' + fmt(f.nonlinear) + ',' + std::to_string(p.spectral.morse_plus) + ',' + std::to_string(p.spectral.morse_minus) + ',' +
             fmt(p.spectral.lambda_min_plus) + ',' + fmt(p.spectral.lambda_min_minus) + ',' + fmt(p.slope_dQdE) + ',' + fmt(p.pohozaev) + ',' +
             fmt(p.asymmetry) + ',' + to_string(p.stability.value) + '\n';
    }
    return s;
}

/// Rows of a branch CSV as BranchPoints without profiles.
inline std::vector<BranchPoint> parse_branch_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split(line, ',') != split(kBranchHeader, ',')) {
        fail(ErrorKind::io_error, "branch CSV header mismatch");
    }
    std::vector<BranchPoint> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = split(line, ',');
        if (c.size() != 15) fail(ErrorKind::io_error, "branch CSV row has " + std::to_string(c.size()) + " fields");
        BranchPoint p;
        if (std::stoi(c[0]) != static_cast<int>(out.size())) fail(ErrorKind::io_error, "branch CSV indices not consecutive");
        p.E = parse_double(c[1]);
        p.functionals.charge = parse_double(c[2]);
        p.functionals.energy = parse_double(c[3]);
        p.functionals.kinetic = parse_double(c[4]);
        p.functionals.potential = parse_double(c[5]);
        p.functionals.nonlinear = parse_double(c[6]);
        p.spectral.morse_plus = std::stoi(c[7]);
        p.spectral.morse_minus = std::stoi(c[8]);
        p.spectral.lambda_min_plus = parse_double(c[9]);
        p.spectral.lambda_min_minus = parse_double(c[10]);
        p.slope_dQdE = parse_double(c[11]);
        p.pohozaev = parse_double(c[12]);
        p.asymmetry = parse_double(c[13]);
        p.stability.value = stability_from_string(c[14]);
        out.push_back(std::move(p));
    }
    return out;
}

inline std::string profile_csv(const Grid& g, const Field& phi)
{
    detail::check_len(g, phi.size(), "profile_csv");
    std::string s = "x,phi\n";
    for (int i = 0; i < g.n; ++i) s += fmt(g.x[i]) + ',' + fmt(phi[i]) + '\n';
    return s;
}

struct Profile {
    std::vector<double> x;
    Field phi;
};

inline Profile parse_profile_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split(line, ',') != std::vector<std::string>{"x", "phi"}) {
        fail(ErrorKind::io_error, "profile CSV header must be x,phi");
    }
    Profile p;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = split(line, ',');
        if (c.size() != 2) fail(ErrorKind::io_error, "profile CSV rows need two fields");
        p.x.push_back(parse_double(c[0]));
        p.phi.push_back(parse_double(c[1]));
    }
    return p;
}

/// Profile values on grid g: taken as is when the nodes coincide, otherwise
/// linearly interpolated from the samples (zero outside their range).
inline Field profile_on_grid(const Profile& p, const Grid& g)
{
    if (p.x.size() == static_cast<std::size_t>(g.n)) {
        bool same = true;
        for (int i = 0; i < g.n && same; ++i) same = std::abs(p.x[i] - g.x[i]) <= 1e-12 * std::max(1.0, g.half_width);
        if (same) return p.phi;
    }
    require(p.x.size() >= 2, "profile needs at least two samples");
    Field out(g.n, 0.0);
    for (int i = 0; i < g.n; ++i) {
        const double x = g.x[i];
        if (x < p.x.front() || x > p.x.back()) continue;
        const auto it = std::upper_bound(p.x.begin(), p.x.end(), x);
        const std::size_t k = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - p.x.begin(), 1), p.x.size() - 1);
        const double t = (x - p.x[k - 1]) / (p.x[k] - p.x[k - 1]);
        out[i] = (1.0 - t) * p.phi[k - 1] + t * p.phi[k];
    }
    return out;
}

// --------------------------------------------------------------- diagram set

inline json event_json(const BifurcationEvent& e)
{
    return json{{"id", e.id},
                {"branch", e.branch_id},
                {"kind", to_string(e.kind)},
                {"E", e.refined.E},
                {"arclength_bracket", {e.arclength_lo, e.arclength_hi}},
                {"index_bracket", {e.index_lo, e.index_hi}},
                {"operator", to_string(e.crossing)},
                {"crossing_index", e.crossing_index},
                {"crossing_eigenvalue", e.crossing_eigenvalue},
                {"neighbor_gap", e.neighbor_gap},
                {"parity", to_string(e.kernel_parity)},
                {"tangent_flip", e.tangent_flip},
                {"seeds", static_cast<int>(e.seeds.size())},
                {"children", e.child_branches},
                {"note", e.note}};
}

inline EventKind event_kind_from_string(const std::string& s)
{
    for (auto k : {EventKind::fold, EventKind::pitchfork_symmetry_breaking, EventKind::trivial_branch_pitchfork, EventKind::unresolved}) {
        if (s == to_string(k)) return k;
    }
    fail(ErrorKind::io_error, "unknown event kind '" + s + "'");
}

inline std::string summary_csv(const Diagram& d)
{
    std::string s = "branch,parent_event,provenance,points,E_start,E_end,Q_start,Q_end,termination,termination_reverse,events,segments,morse\n";
    for (const auto& b : d.branches) {
        std::string evs, segs, morse;
        for (int e : b.events) evs += (evs.empty() ? "" : ";") + std::to_string(e);
        for (const auto& sg : d.segments[b.id]) {
            if (!segs.empty()) {
                segs += ';';
                morse += ';';
            }
            segs += fmt(sg.E_lo) + ".." + fmt(sg.E_hi) + ':' + to_string(sg.tag.value);
            morse += '(' + std::to_string(sg.morse_plus) + ' ' + std::to_string(sg.morse_minus) + ')';
        }
        const auto& f = b.points.front();
        const auto& l = b.points.back();
        s += std::to_string(b.id) + ',' + std::to_string(b.parent_event) + ",\"" + b.provenance + "\"," + std::to_string(b.points.size()) + ',' +
             fmt(f.E) + ',' + fmt(l.E) + ',' + fmt(f.Q()) + ',' + fmt(l.Q()) + ',' + to_string(b.termination) + ',' +
             to_string(b.termination_reverse) + ',' + evs + ',' + segs + ',' + morse + '\n';
    }
    return s;
}

inline std::string branch_file(int id) { return "branches/branch_" + std::to_string(id) + ".csv"; }

inline std::string profile_file(int id, int index)
{
    return "profiles/branch_" + std::to_string(id) + "/point_" + std::to_string(index) + ".csv";
}

/// Profiles are kept at every stride-th point, at both ends and on either side
/// of every stability change.
inline bool keeps_profile(const Branch& b, int index, int stride)
{
    const int n = static_cast<int>(b.points.size());
    if (index % stride == 0 || index == n - 1) return true;
    const auto tag = b.points[index].stability.value;
    return (index > 0 && b.points[index - 1].stability.value != tag) || (index + 1 < n && b.points[index + 1].stability.value != tag);
}

/// Writes branch CSVs, sampled profiles, events.json, diagram_summary.csv and
/// manifest.json (plus failure.json when the run stopped on a numerical error).
inline void write_diagram(const fs::path& dir, const Diagram& d, const RunConfig& cfg)
{
    json manifest;
    manifest["config"] = to_json(cfg);
    manifest["grid"] = {{"L", d.grid.half_width}, {"N", d.grid.n}};
    manifest["e0"] = std::isfinite(d.e0) ? json(d.e0) : json(nullptr);
    manifest["budget_exhausted"] = d.budget_exhausted;
    json branches = json::array();
    for (const auto& b : d.branches) {
        atomic_write(dir / branch_file(b.id), branch_csv(b));
        json profiles = json::array();
        const int n = static_cast<int>(b.points.size());
        for (int i = 0; i < n; ++i) {
            if (!keeps_profile(b, i, cfg.profile_stride)) continue;
            atomic_write(dir / profile_file(b.id, i), profile_csv(d.grid, b.points[i].phi));
            profiles.push_back({{"index", i}, {"file", profile_file(b.id, i)}});
        }
        branches.push_back({{"id", b.id},
                            {"csv", branch_file(b.id)},
                            {"parent_event", b.parent_event},
                            {"provenance", b.provenance},
                            {"termination", to_string(b.termination)},
                            {"events", b.events},
                            {"profiles", profiles}});
    }
    manifest["branches"] = branches;
    json events = json::array();
    for (const auto& e : d.events) events.push_back(event_json(e));
    atomic_write(dir / "events.json", events.dump(2) + "\n");
    atomic_write(dir / "diagram_summary.csv", summary_csv(d));
    manifest["events"] = "events.json";
    manifest["summary"] = "diagram_summary.csv";
    if (d.failure) {
        const json fj = {{"kind", to_string(d.failure->kind())}, {"message", d.failure->what()}, {"branches_written", d.branches.size()}};
        manifest["failure"] = fj;
        atomic_write(dir / "failure.json", fj.dump(2) + "\n");
    } else {
        manifest["failure"] = nullptr;
        std::error_code ec;
        fs::remove(dir / "failure.json", ec);
    }
    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

/// A diagram read back from disk. Points carry profiles only where one was
/// written; `has_profile[b][i]` tells which.
struct LoadedDiagram {
    RunConfig config;
    Grid grid;
    ModelSpec model;
    std::vector<Branch> branches;
    std::vector<BifurcationEvent> events;
    std::vector<std::vector<bool>> has_profile;
    double e0 = std::numeric_limits<double>::quiet_NaN();
};

/// Throws Error(invalid_argument) when the artifact set is missing, which the
/// CLI reports as a missing prerequisite.
inline LoadedDiagram load_diagram(const fs::path& dir)
{
    if (!fs::exists(dir / "manifest.json")) {
        fail(ErrorKind::invalid_argument, "no diagram artifacts in '" + dir.string() + "' (run the diagram subcommand first)");
    }
    json manifest;
    try {
        manifest = json::parse(read_text(dir / "manifest.json"));
    } catch (const json::exception& e) {
        fail(ErrorKind::io_error, std::string("manifest.json: ") + e.what());
    }
    LoadedDiagram ld;
    ld.config = config_from_json(manifest["config"]);
    ld.grid = ld.config.grid();
    ld.model = ld.config.model;
    if (manifest["e0"].is_number()) ld.e0 = manifest["e0"].get<double>();
    for (const auto& bj : manifest["branches"]) {
        Branch b;
        b.id = bj["id"].get<int>();
        b.parent_event = bj["parent_event"].get<int>();
        b.provenance = bj["provenance"].get<std::string>();
        b.events = bj["events"].get<std::vector<int>>();
        b.points = parse_branch_csv(read_text(dir / bj["csv"].get<std::string>()));
        std::vector<bool> has(b.points.size(), false);
        for (const auto& pj : bj["profiles"]) {
            const int i = pj["index"].get<int>();
            if (i < 0 || i >= static_cast<int>(b.points.size())) fail(ErrorKind::io_error, "profile index out of range");
            b.points[i].phi = profile_on_grid(parse_profile_csv(read_text(dir / pj["file"].get<std::string>())), ld.grid);
            has[i] = true;
        }
        if (b.id != static_cast<int>(ld.branches.size())) fail(ErrorKind::io_error, "branch ids not consecutive");
        ld.branches.push_back(std::move(b));
        ld.has_profile.push_back(std::move(has));
    }
    json events;
    try {
        events = json::parse(read_text(dir / manifest["events"].get<std::string>()));
    } catch (const json::exception& e) {
        fail(ErrorKind::io_error, std::string("events.json: ") + e.what());
    }
    for (const auto& ej : events) {
        BifurcationEvent e;
        e.id = ej["id"].get<int>();
        e.branch_id = ej["branch"].get<int>();
        e.kind = event_kind_from_string(ej["kind"].get<std::string>());
        e.refined.E = ej["E"].get<double>();
        e.child_branches = ej["children"].get<std::vector<int>>();
        ld.events.push_back(std::move(e));
    }
    return ld;
}

/// Branches reduced to the points whose profile was stored; ids are kept.
inline std::vector<Branch> profiled_branches(const LoadedDiagram& ld)
{
    std::vector<Branch> out;
    for (std::size_t b = 0; b < ld.branches.size(); ++b) {
        Branch r = ld.branches[b];
        r.points.clear();
        for (std::size_t i = 0; i < ld.branches[b].points.size(); ++i) {
            if (ld.has_profile[b][i]) r.points.push_back(ld.branches[b].points[i]);
        }
        out.push_back(std::move(r));
    }
    return out;
}

// ------------------------------------------------------------------- reports

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

inline json report_json(const std::string& suite, const std::vector<Check>& checks)
{
    json arr = json::array();
    bool all = true;
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        all = all && c.pass;
    }
    return json{{"suite", suite}, {"pass", all}, {"checks", arr}};
}

inline std::string scaling_csv(const ScalingReport& r)
{
    std::string s = "E,s_nl,s_Q,s_K,r_Q,r_K\n";
    for (const auto& row : r.rows) {
        s += fmt(row.E) + ',' + fmt(row.s_nl) + ',' + fmt(row.s_Q) + ',' + fmt(row.s_K) + ',' + fmt(row.r_Q) + ',' + fmt(row.r_K) + '\n';
    }
    return s;
}

inline std::string rescale_csv(const std::vector<RescaleRow>& rows)
{
    std::string s = "branch,E,x0,residual,h1_distance,coverage,morse_plus,predicted_morse,placement\n";
    for (const auto& r : rows) {
        s += std::to_string(r.branch) + ',' + fmt(r.E) + ',' + fmt(r.x0) + ',' + fmt(r.residual) + ',' + fmt(r.distance) + ',' + fmt(r.coverage) +
             ',' + std::to_string(r.morse_plus) + ',' + std::to_string(r.predicted_morse) + ',' + r.placement + '\n';
    }
    return s;
}

inline std::string probes_csv(const std::vector<ProbeRow>& rows)
{
    std::string s = "branch,index,E,tag,direction,expect,verdict,max_relative_distance,q_drift_per_time,dt,note\n";
    for (const auto& r : rows) {
        s += std::to_string(r.branch) + ',' + std::to_string(r.index) + ',' + fmt(r.E) + ',' + to_string(r.tag) + ',' + to_string(r.direction) +
             ',' + (r.expect_departure ? "departed" : "bounded") + ',' + to_string(r.verdict) + ',' + fmt(r.max_relative_distance) + ',' +
             fmt(r.q_drift_per_time) + ',' + fmt(r.dt) + ",\"" + r.note + "\"\n";
    }
    return s;
}

inline std::string varscan_csv(const std::vector<ScanRow>& rows)
{
    std::string s = "mu,E,energy,asymmetry,iterations\n";
    for (const auto& r : rows) {
        s += fmt(r.mu) + ',' + fmt(r.E) + ',' + fmt(r.energy) + ',' + fmt(r.asymmetry) + ',' + std::to_string(r.iterations) + '\n';
    }
    return s;
}

inline std::string crosscheck_csv(const std::vector<CrossCheckRow>& rows)
{
    std::string s = "mu,branch,E_flow,E_branch,h1_distance,energy_flow,energy_branch,note\n";
    for (const auto& r : rows) {
        s += fmt(r.mu) + ',' + std::to_string(r.branch) + ',' + fmt(r.E_flow) + ',' + fmt(r.E_branch) + ',' + fmt(r.h1_distance) + ',' +
             fmt(r.energy_flow) + ',' + fmt(r.energy_branch) + ",\"" + r.note + "\"\n";
    }
    return s;
}

inline std::string trajectory_csv(const Trajectory& tr)
{
    std::string s = "t,Q,energy,orbital_distance\n";
    for (const auto& p : tr.samples) s += fmt(p.t) + ',' + fmt(p.Q) + ',' + fmt(p.energy) + ',' + fmt(p.distance) + '\n';
    return s;
}

} // namespace nlsbif
