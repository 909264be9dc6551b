#include "bellscope/cli.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <variant>

#include "CLI11.hpp"
#include "bellscope/dataset.hpp"
#include "bellscope/errors.hpp"
#include "bellscope/io.hpp"
#include "bellscope/linprog.hpp"
#include "bellscope/moment.hpp"
#include "bellscope/parallel.hpp"
#include "bellscope/polytope.hpp"
#include "bellscope/quantum.hpp"
#include "bellscope/simulate.hpp"
#include "json.hpp"

namespace bellscope {

using json = nlohmann::ordered_json;

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string num(double v) {
    if (v == 0.0) return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

json input_entry(const std::string& role, const std::string& name, const std::string& bytes) {
    return json{{"role", role}, {"name", name}, {"fnv1a", hex(fnv1a(bytes))}};
}

// row:N, i3plus, or a functional file
BellFunctional load_functional(const std::string& arg, const std::string& role, json& inputs) {
    BellFunctional f;
    std::string bytes;
    if (arg.rfind("row:", 0) == 0) {
        int n = 0;
        try {
            n = std::stoi(arg.substr(4));
        } catch (const std::exception&) {
            throw ValidationError(role + ": bad row reference '" + arg + "'");
        }
        if (n < 1 || n > static_cast<int>(table1().size()))
            throw ValidationError(role + ": row must be in 1.." + std::to_string(table1().size()));
        f = table1_row(n).functional;
        bytes = serialize_functional(f);
    } else if (arg == "i3plus") {
        f = i3plus();
        bytes = serialize_functional(f);
    } else {
        bytes = read_file(arg);
        std::istringstream in(bytes);
        try {
            f = parse_functional(in);
        } catch (const ValidationError& e) {
            throw ValidationError(role + " '" + arg + "': " + e.what());
        }
    }
    inputs.push_back(input_entry(role, arg, bytes));
    return f;
}

std::variant<ProbabilityTable, CountsTable> load_table(const std::string& path, const std::string& role, json& inputs) {
    std::string bytes = read_file(path);
    inputs.push_back(input_entry(role, path, bytes));
    std::istringstream in(bytes);
    try {
        return parse_table(in);
    } catch (const ValidationError& e) {
        throw ValidationError(role + " '" + path + "': " + e.what());
    }
}

ProbabilityTable load_probabilities(const std::string& path, const std::string& role, json& inputs) {
    auto t = load_table(path, role, inputs);
    if (auto* c = std::get_if<CountsTable>(&t)) return frequencies_from_counts(*c);
    return std::get<ProbabilityTable>(t);
}

json face_json(const FaceAnalysis& fa) {
    return json{{"bound", fa.bound},
                {"affine_dimension", fa.affine_dimension},
                {"spanned_dimension", fa.spanned_dimension},
                {"is_facet", fa.is_facet},
                {"saturating", fa.saturating.size()}};
}

json solver_json(const SdpSummary& s) {
    return json{{"status", to_string(s.status)},
                {"relative_gap", s.gap},
                {"infeasibility", s.infeasibility},
                {"iterations", s.iterations},
                {"reduced_accuracy", s.reduced_accuracy}};
}

json sdp_tolerances(const SdpOptions& o) { return json{{"sdp_gap", o.gap_tol}, {"sdp_feasibility", o.feas_tol}}; }

Side parse_side(const std::string& s) {
    if (s == "max") return Side::Max;
    if (s == "min") return Side::Min;
    throw ValidationError("--side: expected max or min, got '" + s + "'");
}

// A:x:a:y:delta or B:y:b:x:delta, with * for every setting of the other party
MarginalBias parse_bias(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 5 || (parts[0] != "A" && parts[0] != "B"))
        throw ValidationError("--bias: expected A:x:a:y:delta or B:y:b:x:delta, got '" + spec + "'");
    MarginalBias b;
    try {
        b.party = parts[0] == "A" ? Party::Alice : Party::Bob;
        b.setting = std::stoi(parts[1]);
        b.outcome = std::stoi(parts[2]);
        b.other = parts[3] == "*" ? -1 : std::stoi(parts[3]);
        b.delta = std::stod(parts[4]);
    } catch (const std::exception&) {
        throw ValidationError("--bias: malformed number in '" + spec + "'");
    }
    return b;
}

std::pair<int, int> parse_rows(const std::string& spec) {
    int lo = 1, hi = static_cast<int>(table1().size());
    auto dots = spec.find("..");
    try {
        if (dots == std::string::npos) {
            lo = hi = std::stoi(spec);
        } else {
            lo = std::stoi(spec.substr(0, dots));
            hi = std::stoi(spec.substr(dots + 2));
        }
    } catch (const std::exception&) {
        throw ValidationError("--rows: expected a..b, got '" + spec + "'");
    }
    if (lo < 1 || hi > static_cast<int>(table1().size()) || lo > hi)
        throw ValidationError("--rows: range must lie in 1.." + std::to_string(table1().size()));
    return {lo, hi};
}

// ---------------------------------------------------------------- text views

std::string text_header(const json& r) {
    std::ostringstream os;
    os << "# bellscope " << r["version"].get<std::string>() << " " << r["command"].get<std::string>() << " schema "
       << r["schema"].get<int>() << "\n";
    for (const auto& in : r["inputs"])
        os << "# " << in["role"].get<std::string>() << " " << in["name"].get<std::string>() << " fnv1a "
           << in["fnv1a"].get<std::string>() << "\n";
    if (!r["seed"].is_null()) os << "# seed " << r["seed"].get<std::uint64_t>() << "\n";
    if (!r["tolerances"].empty()) {
        os << "# tolerances";
        for (const auto& [k, v] : r["tolerances"].items()) os << " " << k << "=" << num(v.get<double>());
        os << "\n";
    }
    return os.str();
}

std::string face_line(const std::string& side, const json& f) {
    std::ostringstream os;
    os << side << " " << num(f["bound"].get<double>()) << " facet " << (f["is_facet"].get<bool>() ? "yes" : "no")
       << " affine_dimension " << f["affine_dimension"].get<int>() << " spanned_dimension "
       << f["spanned_dimension"].get<int>() << " saturating " << f["saturating"].get<std::size_t>() << "\n";
    return os.str();
}

std::string table_text(const Scenario& s, const json& entries) {
    std::ostringstream os;
    std::vector<double> p = entries.get<std::vector<double>>();
    write_correlation(os, ProbabilityTable(s, p, 1e-6));
    return os.str();
}

std::string render_text(const json& r) {
    std::ostringstream os;
    os << text_header(r);
    const std::string cmd = r["command"];
    const json& x = r["result"];
    if (cmd == "local-bound") {
        os << "max " << num(x["max"]) << " min " << num(x["min"]) << "\n";
    } else if (cmd == "facet-check") {
        os << face_line("max", x["max"]) << face_line("min", x["min"]);
        if (x.contains("declared_bounds_match"))
            os << "declared bounds " << (x["declared_bounds_match"].get<bool>() ? "match" : "differ") << "\n";
    } else if (cmd == "visibility") {
        os << "visibility " << num(x["v_cr"]) << " nonlocal " << (x["nonlocal"].get<bool>() ? "yes" : "no") << "\n";
        if (x.contains("certificate"))
            os << "certificate value " << num(x["certificate"]["value"]) << " local_max "
               << num(x["certificate"]["local_max"]) << "\n";
        if (x.contains("inequality_visibility")) os << "inequality visibility " << num(x["inequality_visibility"]) << "\n";
    } else if (cmd == "facet-from") {
        os << "facet " << (x["face"]["is_facet"].get<bool>() ? "yes" : "no") << " affine_dimension "
           << x["face"]["affine_dimension"].get<int>() << " visibility " << num(x["visibility"]) << " violation "
           << num(x["violation"]) << "\n";
        os << x["functional"].get<std::string>();
    } else if (cmd == "seesaw") {
        os << "value " << num(x["value"]) << "\n";
        os << "side " << x["side"].get<std::string>() << " mode " << x["mode"].get<std::string>() << " dims "
           << x["dims"][0].get<int>() << " " << x["dims"][1].get<int>() << " restarts " << x["restarts"].get<int>()
           << " best_restart " << x["best_restart"].get<int>() << " converged "
           << (x["converged"].get<bool>() ? "yes" : "no") << "\n";
        os << x["realization"].get<std::string>();
    } else if (cmd == "upper-bound") {
        os << (x["side"] == "max" ? "upper bound " : "lower bound ") << num(x["value"]) << " level "
           << x["level"].get<std::string>() << " (" << x["solver"]["status"].get<std::string>() << ", gap "
           << num(x["solver"]["relative_gap"]) << ")\n";
    } else if (cmd == "nearest-quantum") {
        os << "distance " << num(x["distance"]) << " level " << x["level"].get<std::string>() << "\n";
        if (!x["pin"].is_null())
            os << "pinned value " << num(x["pin"]["target"]) << " achieved " << num(x["pin"]["achieved"]) << "\n";
        os << table_text(Scenario::flagship(), x["table"]);
    } else if (cmd == "negativity-bound") {
        os << "negativity >= " << num(x["value"]) << " level " << x["level"].get<std::string>();
        if (x["noise"].get<double>() > 0) os << " (white noise " << num(x["noise"]) << " mixed in)";
        os << "\n";
    } else if (cmd == "signaling-report") {
        double m = x["max_delta"];
        if (m < 1e-12) os << "max |Δ| < 1e-12";
        else os << "max |Δ| = " << num(m);
        if (x["kind"] == "counts") os << ", max z = " << num(x["max_z"]) << ", band " << num(x["band"]);
        os << "; " << (x["flagged"].get<bool>() ? "signaling detected" : "consistent with non-signaling") << "\n";
    } else if (cmd == "simulate") {
        std::vector<std::uint64_t> n = x["counts"].get<std::vector<std::uint64_t>>();
        write_counts(os, CountsTable(Scenario::flagship(), n));
    } else if (cmd == "table2") {
        os << "row,SL_max,SQ_max,SQ_max_reported,v_max,v_max_reported,NPA1AB_max,SL_min,SQ_min,SQ_min_reported,v_min,"
              "v_min_reported,d_min,d_min_reported\n";
        auto opt = [](const json& v) { return v.is_null() ? std::string() : num(v.get<double>()); };
        for (const auto& row : x["rows"]) {
            os << row["row"].get<int>() << "," << num(row["SL_max"]) << "," << num(row["SQ_max"]) << ","
               << num(row["SQ_max_reported"]) << "," << num(row["v_max"]) << "," << num(row["v_max_reported"]) << ","
               << num(row["NPA1AB_max"]) << "," << num(row["SL_min"]) << "," << opt(row["SQ_min"]) << ","
               << opt(row["SQ_min_reported"]) << "," << opt(row["v_min"]) << "," << opt(row["v_min_reported"]) << ","
               << row["d_min"].get<int>() << "," << row["d_min_reported"].get<int>() << "\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------- commands

struct Common {
    std::string format = "text";
    std::string output;
};

json skeleton(const std::string& cmd) {
    json r;
    r["schema"] = kSchema;
    r["command"] = cmd;
    r["version"] = kVersion;
    r["modules"] = {{"scenario", kVersion}, {"polytope", kVersion}, {"linprog", kVersion}, {"quantum", kVersion},
                    {"sdp", kVersion},      {"moment", kVersion},   {"dataset", kVersion}, {"simulate", kVersion},
                    {"cli", kVersion}};
    r["inputs"] = json::array();
    r["seed"] = nullptr;
    r["tolerances"] = json::object();
    r["result"] = json::object();
    return r;
}

json cmd_local_bound(const std::string& arg) {
    json r = skeleton("local-bound");
    auto f = load_functional(arg, "functional", r["inputs"]);
    auto mx = local_bound_max(f), mn = local_bound_min(f);
    r["result"] = {{"max", mx.value},
                   {"min", mn.value},
                   {"exact", mx.exact && mn.exact},
                   {"saturating_max", mx.saturating.size()},
                   {"saturating_min", mn.saturating.size()}};
    return r;
}

json cmd_facet_check(const std::string& arg) {
    json r = skeleton("facet-check");
    auto f = load_functional(arg, "functional", r["inputs"]);
    auto mx = face_analysis(f, Side::Max), mn = face_analysis(f, Side::Min);
    r["result"] = {{"max", face_json(mx)}, {"min", face_json(mn)}};
    if (f.local_max || f.local_min) {
        bool ok = (!f.local_max || std::abs(*f.local_max - mx.bound) < 1e-9) &&
                  (!f.local_min || std::abs(*f.local_min - mn.bound) < 1e-9);
        r["result"]["declared_bounds_match"] = ok;
    }
    return r;
}

json cmd_visibility(const std::string& arg, const std::string& ineq) {
    json r = skeleton("visibility");
    auto p = load_probabilities(arg, "correlation", r["inputs"]);
    r["tolerances"] = {{"lp", LpOptions{}.tol}};
    auto v = visibility_wrt_local_set(p);
    r["result"] = {{"v_cr", v.v_cr}, {"nonlocal", v.nonlocal}};
    if (v.nonlocal)
        r["result"]["certificate"] = {{"coefficients", v.certificate.coefficients},
                                      {"local_max", *v.certificate.local_max},
                                      {"value", v.certificate_value}};
    if (!ineq.empty()) {
        auto f = load_functional(ineq, "inequality", r["inputs"]);
        r["result"]["inequality_visibility"] = visibility_wrt_inequality(p, f);
    }
    return r;
}

json cmd_facet_from(const std::string& arg) {
    json r = skeleton("facet-from");
    auto p = load_probabilities(arg, "correlation", r["inputs"]);
    r["tolerances"] = {{"lp", LpOptions{}.tol}};
    auto fc = facet_from_correlation(p);
    r["result"] = {{"functional", serialize_functional(fc.functional)},
                   {"coefficients", fc.functional.coefficients},
                   {"local_max", *fc.functional.local_max},
                   {"face", face_json(fc.face)},
                   {"visibility", fc.visibility},
                   {"violation", fc.violation}};
    return r;
}

json cmd_seesaw(const std::string& arg, const std::vector<int>& dims, bool povm, int restarts, std::uint64_t seed,
                const std::string& side) {
    json r = skeleton("seesaw");
    auto f = load_functional(arg, "functional", r["inputs"]);
    if (dims.size() != 2 || dims[0] < 1 || dims[1] < 1) throw ValidationError("--dims: expected two positive integers");
    if (restarts < 1) throw ValidationError("--restarts: must be at least 1");
    SeesawOptions o;
    o.mode = povm ? MeasurementMode::Povm : MeasurementMode::Projective;
    o.side = parse_side(side);
    o.restarts = restarts;
    o.seed = seed;
    r["seed"] = seed;
    r["tolerances"] = {{"seesaw_stall", o.tol}, {"stall_sweeps", static_cast<double>(o.stall_sweeps)}};
    auto res = seesaw_maximize(f, dims[0], dims[1], o);
    r["result"] = {{"value", res.value},
                   {"side", side},
                   {"mode", povm ? "povm" : "projective"},
                   {"dims", dims},
                   {"restarts", restarts},
                   {"best_restart", res.best_restart},
                   {"converged", res.converged},
                   {"restart_values", res.restart_values},
                   {"trace", res.trace},
                   {"realization", serialize_realization(res.realization)}};
    return r;
}

json cmd_upper_bound(const std::string& arg, const std::string& level, const std::string& side) {
    json r = skeleton("upper-bound");
    auto f = load_functional(arg, "functional", r["inputs"]);
    SdpOptions so;
    r["tolerances"] = sdp_tolerances(so);
    auto lv = parse_level(level);
    auto q = quantum_bound(f, lv, parse_side(side), so);
    r["result"] = {{"value", q.value}, {"side", side}, {"level", to_string(lv)}, {"solver", solver_json(q.solver)}};
    return r;
}

json cmd_nearest(const std::string& arg, const std::string& level, const std::string& pin, const std::string& write) {
    json r = skeleton("nearest-quantum");
    auto p = load_probabilities(arg, "correlation", r["inputs"]);
    SdpOptions so;
    r["tolerances"] = sdp_tolerances(so);
    auto lv = parse_level(level);
    std::optional<std::pair<BellFunctional, double>> c;
    if (!pin.empty()) {
        auto f = load_functional(pin, "pin-bell", r["inputs"]);
        if (f.scenario != p.scenario()) throw ValidationError("--pin-bell: functional scenario does not match the table");
        c = std::make_pair(f, evaluate(f, p));
    }
    auto res = nearest_quantum_correlation(p, lv, c, so);
    r["result"] = {{"distance", res.l1_distance},
                   {"distance_stage_one", res.l1_stage_one},
                   {"l2_distance", res.l2_distance},
                   {"level", to_string(lv)},
                   {"pin", nullptr},
                   {"stage_one", solver_json(res.stage_one)},
                   {"stage_two", solver_json(res.stage_two)},
                   {"table", res.table.entries()}};
    if (c) r["result"]["pin"] = {{"target", c->second}, {"achieved", evaluate(c->first, res.table)}};
    if (!write.empty()) {
        std::ostringstream os;
        write_correlation(os, res.table);
        write_file(write, os.str());
        write_file(write + ".json", res.metadata_json() + "\n");
    }
    return r;
}

json cmd_negativity(const std::string& arg, const std::string& level) {
    json r = skeleton("negativity-bound");
    auto p = load_probabilities(arg, "correlation", r["inputs"]);
    SdpOptions so;
    r["tolerances"] = sdp_tolerances(so);
    r["tolerances"]["nonsignaling"] = 1e-7;
    auto lv = parse_level(level);
    if (!check_nonsignaling(p, 1e-7))
        throw ValidationError("correlation '" + arg + "' is signaling; run nearest-quantum on it first");
    auto b = di_negativity_bound(p, lv, so);
    r["result"] = {{"value", b.value}, {"level", to_string(lv)}, {"noise", b.noise}, {"solver", solver_json(b.solver)}};
    return r;
}

json cmd_signaling(const std::string& arg) {
    json r = skeleton("signaling-report");
    auto t = load_table(arg, "table", r["inputs"]);
    SignalingReport rep;
    bool counts = std::holds_alternative<CountsTable>(t);
    if (counts) rep = signaling_deltas(std::get<CountsTable>(t));
    else rep = signaling_deltas(std::get<ProbabilityTable>(t));
    const double k = 2.0, tol = 1e-9;
    r["tolerances"] = counts ? json{{"k_sigma", k}} : json{{"nonsignaling", tol}};
    json deltas = json::array();
    for (const auto& d : rep.deltas) {
        json e = {{"party", d.party == Party::Alice ? "A" : "B"},
                  {"setting", d.setting},
                  {"outcome", d.outcome},
                  {"other", {d.other_1, d.other_2}},
                  {"delta", d.delta}};
        if (counts) e["sigma"] = d.sigma;
        deltas.push_back(e);
    }
    r["result"] = {{"kind", counts ? "counts" : "probabilities"}, {"max_delta", rep.max_delta}};
    if (counts) {
        r["result"]["max_z"] = rep.max_z();
        r["result"]["band"] = bonferroni_band(k, rep.deltas.size());
        r["result"]["flagged"] = rep.flags(k);
    } else {
        r["result"]["flagged"] = rep.max_delta > tol;
    }
    r["result"]["deltas"] = deltas;
    return r;
}

json cmd_simulate(const std::string& arg, std::uint64_t shots, std::uint64_t seed, const std::vector<std::string>& biases) {
    json r = skeleton("simulate");
    std::string bytes = read_file(arg);
    r["inputs"].push_back(input_entry("realization", arg, bytes));
    Realization real;
    try {
        real = parse_realization(bytes);
    } catch (const ValidationError& e) {
        throw ValidationError("realization '" + arg + "': " + e.what());
    }
    if (real.scenario() != Scenario::flagship()) throw ValidationError("realization: only the 3-3-3 scenario is supported");
    ShotPlan plan;
    plan.shots = shots;
    plan.seed = seed;
    for (const auto& b : biases) plan.biases.push_back(parse_bias(b));
    r["seed"] = seed;
    auto c = simulate_counts(real, plan);
    json bj = json::array();
    for (const auto& b : biases) bj.push_back(b);
    r["result"] = {{"shots", shots}, {"biases", bj}, {"counts", c.counts()}};
    return r;
}

json cmd_table2(const std::string& rows, const std::vector<int>& dims, int restarts, std::uint64_t seed, bool povm) {
    json r = skeleton("table2");
    auto [lo, hi] = parse_rows(rows);
    if (dims.size() != 2 || dims[0] < 1 || dims[1] < 1) throw ValidationError("--dims: expected two positive integers");
    if (restarts < 1) throw ValidationError("--restarts: must be at least 1");
    r["seed"] = seed;
    SeesawOptions base;
    base.mode = povm ? MeasurementMode::Povm : MeasurementMode::Projective;
    base.restarts = restarts;
    base.seed = seed;
    base.threads = 1;
    r["tolerances"] = sdp_tolerances(SdpOptions{});
    r["tolerances"]["seesaw_stall"] = base.tol;
    for (int n = lo; n <= hi; ++n) r["inputs"].push_back(input_entry("functional", "row:" + std::to_string(n),
                                                                     serialize_functional(table1_row(n).functional)));
    std::vector<json> out(static_cast<std::size_t>(hi - lo + 1));
    parallel_for(out.size(), [&](std::size_t i) {
        const auto& rec = table1_row(lo + static_cast<int>(i));
        const auto& f = rec.functional;
        json row;
        row["row"] = rec.index;
        row["SL_max"] = local_bound_max(f).value;
        auto smax = seesaw_maximize(f, dims[0], dims[1], base);
        row["SQ_max"] = smax.value;
        row["SQ_max_reported"] = rec.reported_quantum_max;
        row["v_max"] = visibility_wrt_inequality(correlation(smax.realization), f);
        row["v_max_reported"] = rec.reported_visibility_max;
        row["NPA1AB_max"] = quantum_upper_bound(f, MomentLevel::Npa1AB);
        row["SL_min"] = local_bound_min(f).value;
        row["SQ_min"] = nullptr;
        row["v_min"] = nullptr;
        if (!rec.quantum_min_is_local) {
            SeesawOptions o = base;
            o.side = Side::Min;
            auto smin = seesaw_maximize(f, dims[0], dims[1], o);
            row["SQ_min"] = smin.value;
            row["v_min"] = visibility_wrt_inequality(correlation(smin.realization), f.negated());
        }
        row["SQ_min_reported"] = rec.reported_quantum_min ? json(*rec.reported_quantum_min) : json(nullptr);
        row["v_min_reported"] = rec.reported_visibility_min ? json(*rec.reported_visibility_min) : json(nullptr);
        row["d_min"] = face_analysis(f, Side::Min).spanned_dimension;
        row["d_min_reported"] = rec.reported_d_min;
        out[i] = row;
    });
    r["result"] = {{"dims", dims}, {"restarts", restarts}, {"mode", povm ? "povm" : "projective"}, {"rows", out}};
    return r;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bell scenario analysis for {[3 3 3][3 3 3]}", "bellscope"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.set_version_flag("--version", kVersion);
    Common common;
    app.add_option("--format", common.format, "report format")->check(CLI::IsMember({"text", "json"}));
    app.add_option("--output", common.output, "write the report to a file");

    std::string input, ineq, level, pin, write, side = "max", rows = "1..19";
    std::vector<int> dims;
    std::vector<std::string> biases;
    int restarts = 50;
    std::uint64_t seed = 1, shots = 0;
    bool povm = false, projective = false;

    auto* lb = app.add_subcommand("local-bound", "local bounds of a functional");
    lb->add_option("functional", input, "file, row:N or i3plus")->required();
    auto* fc = app.add_subcommand("facet-check", "face dimensions on both sides");
    fc->add_option("functional", input, "file, row:N or i3plus")->required();
    auto* vis = app.add_subcommand("visibility", "white-noise visibility of a correlation");
    vis->add_option("correlation", input)->required();
    vis->add_option("--inequality", ineq, "also the visibility for one inequality");
    auto* ff = app.add_subcommand("facet-from", "facet certificate from a nonlocal correlation");
    ff->add_option("correlation", input)->required();
    auto* ss = app.add_subcommand("seesaw", "fixed-dimension seesaw optimization");
    ss->add_option("functional", input)->required();
    ss->add_option("--dims", dims, "local dimensions dA dB")->expected(2)->required();
    auto* fp = ss->add_flag("--povm", povm, "general POVMs");
    auto* fj = ss->add_flag("--projective", projective, "projective measurements (default)");
    fp->excludes(fj);
    ss->add_option("--restarts", restarts);
    ss->add_option("--seed", seed);
    ss->add_option("--side", side)->check(CLI::IsMember({"max", "min"}));
    auto* ub = app.add_subcommand("upper-bound", "moment-matrix bound on the quantum value");
    ub->add_option("functional", input)->required();
    ub->add_option("--level", level)->required();
    ub->add_option("--side", side)->check(CLI::IsMember({"max", "min"}));
    auto* nq = app.add_subcommand("nearest-quantum", "l1-nearest correlation in a moment relaxation");
    nq->add_option("correlation", input)->required();
    nq->add_option("--level", level)->required();
    nq->add_option("--pin-bell", pin, "keep this functional's value");
    nq->add_option("--write", write, "write the correlation file and a JSON sidecar");
    auto* nb = app.add_subcommand("negativity-bound", "device-independent negativity lower bound");
    nb->add_option("correlation", input)->required();
    nb->add_option("--level", level)->required();
    auto* sr = app.add_subcommand("signaling-report", "marginal differences across the other party's settings");
    sr->add_option("table", input, "correlation or counts")->required();
    auto* sim = app.add_subcommand("simulate", "finite-shot counts from a realization");
    sim->add_option("realization", input)->required();
    sim->add_option("--shots", shots)->required();
    sim->add_option("--seed", seed)->required();
    sim->add_option("--bias", biases, "A:x:a:y:delta or B:y:b:x:delta (y or x may be *)");
    auto* t2 = app.add_subcommand("table2", "inequality table columns at desk scale");
    t2->add_option("--rows", rows, "a..b");
    t2->add_option("--dims", dims)->expected(2);
    t2->add_option("--restarts", restarts);
    t2->add_option("--seed", seed);
    t2->add_flag("--povm", povm);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return kExitValidation;
    }

    try {
        json report;
        if (lb->parsed()) report = cmd_local_bound(input);
        else if (fc->parsed()) report = cmd_facet_check(input);
        else if (vis->parsed()) report = cmd_visibility(input, ineq);
        else if (ff->parsed()) report = cmd_facet_from(input);
        else if (ss->parsed()) report = cmd_seesaw(input, dims, povm, restarts, seed, side);
        else if (ub->parsed()) report = cmd_upper_bound(input, level, side);
        else if (nq->parsed()) report = cmd_nearest(input, level, pin, write);
        else if (nb->parsed()) report = cmd_negativity(input, level);
        else if (sr->parsed()) report = cmd_signaling(input);
        else if (sim->parsed()) {
            if (shots < 1) throw ValidationError("--shots: must be at least 1");
            report = cmd_simulate(input, shots, seed, biases);
        } else if (t2->parsed()) {
            if (dims.empty()) dims = {2, 2};
            if (t2->count("--restarts") == 0) restarts = 20;
            report = cmd_table2(rows, dims, restarts, seed, povm);
        }
        std::string text = common.format == "json" ? report.dump(2) + "\n" : render_text(report);
        if (common.output.empty()) out << text;
        else write_file(common.output, text);
        return kExitOk;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace bellscope
