// lsim: simulate netlists, emit the built-in level shifters, bench and sweep them.

#include "lsim/bench.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace lsim;

namespace {

enum Exit { kOk = 0, kUsage = 1, kParse = 2, kSolver = 3, kMeasure = 4 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw UsageError("cannot write '" + path + "'");
    f << text;
}

ModelDefaults seed_models() {
    ModelDefaults d;
    const char* path = std::getenv("LS_SEED_MODEL");
    if (path && *path) {
        try {
            d.apply(parse_model_file(read_file(path)));
        } catch (const ParseError& e) {
            throw ParseError(e.line(), std::string("LS_SEED_MODEL: ") + e.what());
        }
    }
    return d;
}

// Numeric flags accept the netlist's engineering suffixes (10p, 5f, 0.3u).
template <typename T>
CLI::Option* eng_option(CLI::App* app, const std::string& name, T& target, const std::string& help) {
    return app
        ->add_option_function<std::string>(
            name,
            [&target](const std::string& text) {
                try {
                    target = parse_value(text);
                } catch (const std::exception&) {
                    throw CLI::ValidationError("'" + text + "' is not a number");
                }
            },
            help)
        ->type_name("VALUE");
}

std::string topology_list() {
    std::string s;
    for (TopologyId id : kAllTopologies) s += (s.empty() ? "" : ", ") + std::string(to_string(id));
    return s;
}

TopologyId topology_arg(const std::string& s) {
    const auto id = parse_topology(s);
    if (!id) throw UsageError("unknown topology '" + s + "'; valid ids: " + topology_list());
    return *id;
}

// Flags shared by gen and sweep for overriding default TopoParams.
struct ParamFlags {
    std::optional<double> vddh, vddl, vin_hi, cload, w_n_stacked;

    void add(CLI::App* app) {
        eng_option(app, "--vddh", vddh, "high supply (V)");
        eng_option(app, "--vddl", vddl, "low supply (V)");
        eng_option(app, "--vin-hi,--vin_hi", vin_hi, "input high level (V)");
        eng_option(app, "--cload", cload, "output load (F)");
        eng_option(app, "--w-n-stacked,--w_n_stacked", w_n_stacked, "stacked NMOS width (m)");
    }
    TopoParams params() const {
        TopoParams p;
        const ModelDefaults m = seed_models();
        p.nmos = m.nmos;
        p.pmos = m.pmos;
        if (vddh) p.vddh = *vddh;
        if (vddl) p.vddl = *vddl;
        if (vin_hi) p.vin_hi = *vin_hi;
        if (cload) p.cload = *cload;
        if (w_n_stacked) p.w_n_stacked = *w_n_stacked;
        return p;
    }
};

struct RunArgs {
    std::string netlist;
    std::optional<double> tstep, tstop;
    std::string out_csv;
    std::string report_json;
    std::string in_node = "in";
    std::string out_node = "out";
    std::string stimulus;
    std::string scheme = "tr";
};

int cmd_run(const RunArgs& a) {
    const NetlistDoc doc = parse_netlist(read_file(a.netlist));
    const auto tran = doc.tran();
    const double tstep = a.tstep ? *a.tstep : tran ? tran->tstep : 0.0;
    const double tstop = a.tstop ? *a.tstop : tran ? tran->tstop : 0.0;
    if (!(tstep > 0.0) || !(tstop > 0.0)) throw UsageError("no .tran directive; pass --tstep and --tstop");
    if (tstop < 10.0 * tstep) throw UsageError("tstop must be at least 10 * tstep");

    const Circuit c = elaborate(doc, seed_models());
    for (const auto& w : c.warnings) std::cerr << "warning: " << w << '\n';

    TransientOptions topts;
    topts.scheme = a.scheme == "be" ? Scheme::BackwardEuler : Scheme::Trapezoidal;
    const Waveforms w = transient(c, tstep, tstop, topts);

    const std::filesystem::path stem = std::filesystem::path(a.netlist).replace_extension();
    const std::string csv_path = a.out_csv.empty() ? stem.string() + ".csv" : a.out_csv;
    std::ostringstream csv;
    write_waveform_csv(csv, w);
    write_file(csv_path, csv.str());

    // A report needs a pulse source driving the input node and an output node.
    std::string stim = a.stimulus;
    if (stim.empty()) {
        const auto in = c.node_index.find(a.in_node);
        for (const auto& s : c.sources) {
            if (in != c.node_index.end() && s.pos == in->second && s.wave.kind == WaveKind::Pulse) stim = s.name;
        }
    }
    if (stim.empty() || !c.node_index.count(a.in_node) || !c.node_index.count(a.out_node)) {
        std::cerr << "note: no stimulus on '" << a.in_node << "' or no node '" << a.out_node
                  << "'; waveforms written, no report\n";
        return kOk;
    }
    CharacterizeSpec spec;
    spec.name = doc.title;
    spec.stimulus = stim;
    spec.in_node = a.in_node;
    spec.out_node = a.out_node;
    spec.tstep = tstep;
    spec.tstop = tstop;
    spec.scheme = topts.scheme;
    for (const auto& s : c.sources) {
        if (s.wave.kind == WaveKind::Dc) spec.out_hi = std::max(spec.out_hi, s.wave.v1);
    }
    const Report r = characterize(c, spec);
    const std::string json = report_json(r) + "\n";
    write_file(a.report_json.empty() ? stem.string() + ".json" : a.report_json, json);
    if (a.report_json != "-") std::cout << json;
    return kOk;
}

int cmd_gen(const std::string& topo, const ParamFlags& flags, const std::string& out) {
    const TopologyId id = topology_arg(topo);
    if (flags.vddl && !has_low_rail(id)) {
        std::cerr << "warning: " << to_string(id) << " has no VddL rail; --vddl ignored\n";
    }
    TopoParams p = flags.params();
    if (!has_low_rail(id) && flags.vddl) p.vddl = TopoParams{}.vddl;
    if (!has_low_rail(id) && p.vddl > p.vddh) p.vddl = p.vddh;
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    write_file(out, to_text(gen(id, p)));
    return kOk;
}

std::vector<TopologyId> topology_set(const std::vector<std::string>& names) {
    std::vector<TopologyId> ids;
    if (names.empty() || (names.size() == 1 && to_lower(names[0]) == "all")) {
        ids.assign(kAllTopologies.begin(), kAllTopologies.end());
        return ids;
    }
    for (TopologyId id : kAllTopologies) {
        for (const auto& n : names) {
            if (topology_arg(n) == id) {
                ids.push_back(id);
                break;
            }
        }
    }
    return ids;
}

int cmd_bench(const std::string& format, const std::vector<std::string>& topos, const std::string& out) {
    const std::vector<TopologyId> ids = topology_set(topos);
    TopoParams p;
    const ModelDefaults m = seed_models();
    p.nmos = m.nmos;
    p.pmos = m.pmos;
    const auto rows = run_bench(ids, p);
    std::string text;
    if (format == "json") {
        text = bench_json(rows);
    } else if (format == "csv") {
        text = bench_csv(rows);
    } else {
        text = bench_table(rows) + "\n" + pair_summary(rows);
    }
    write_file(out, text);
    for (const auto& r : rows) {
        if (!r.ok) return kSolver;
    }
    return kOk;
}

int cmd_sweep(const std::string& topo, const std::string& param, double from, double to, int steps,
              const ParamFlags& flags, const std::string& out) {
    const TopologyId id = topology_arg(topo);
    const auto sp = parse_sweep_param(param);
    if (!sp) throw UsageError("unknown sweep parameter '" + param + "'; valid: vddh, vddl, vin_hi, cload, w_n_stacked");
    std::vector<SweepRow> rows;
    try {
        rows = run_sweep(id, *sp, from, to, steps, flags.params());
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    // Points that fail to simulate or to switch are reported as rows, not as errors.
    write_file(out, sweep_csv(rows, *sp));
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Level-shifter simulation and characterization"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "transient-simulate a netlist, write waveforms and a report");
    run_cmd->add_option("netlist", run.netlist, "netlist file")->required();
    eng_option(run_cmd, "--tstep", run.tstep, "time step (s); overrides .tran");
    eng_option(run_cmd, "--tstop", run.tstop, "stop time (s); overrides .tran");
    run_cmd->add_option("-o,--out-csv,--out_csv", run.out_csv, "waveform CSV path ('-' for stdout)");
    run_cmd->add_option("--report-json,--report_json", run.report_json, "report JSON path ('-' for stdout)");
    run_cmd->add_option("--in", run.in_node, "input node")->capture_default_str();
    run_cmd->add_option("--out", run.out_node, "output node")->capture_default_str();
    run_cmd->add_option("--stimulus", run.stimulus, "stimulus source name");
    run_cmd->add_option("--scheme", run.scheme, "integration scheme")->check(CLI::IsMember({"tr", "be"}))->capture_default_str();

    std::string gen_topo;
    std::string gen_out = "-";
    ParamFlags gen_flags;
    auto* gen_cmd = app.add_subcommand("gen", "emit a built-in topology as a netlist");
    gen_cmd->add_option("topology", gen_topo, "one of: " + topology_list())->required();
    gen_cmd->add_option("-o,--out", gen_out, "output path ('-' for stdout)")->capture_default_str();
    gen_flags.add(gen_cmd);

    std::string bench_format = "table";
    std::vector<std::string> bench_topos;
    std::string bench_out = "-";
    auto* bench_cmd = app.add_subcommand("bench", "characterize the built-in topologies");
    bench_cmd->add_option("--format", bench_format, "table, json or csv")
        ->check(CLI::IsMember({"table", "json", "csv"}))
        ->capture_default_str();
    bench_cmd->add_option("--topologies,topologies", bench_topos, "'all' or a list of ids");
    bench_cmd->add_option("-o,--out", bench_out, "output path ('-' for stdout)")->capture_default_str();

    std::string sweep_topo, sweep_param, sweep_out = "-";
    double sweep_from = 0.0, sweep_to = 0.0;
    int sweep_steps = 0;
    ParamFlags sweep_flags;
    auto* sweep_cmd = app.add_subcommand("sweep", "bench one topology over a parameter grid");
    sweep_cmd->add_option("topology", sweep_topo, "topology id")->required();
    sweep_cmd->add_option("--param", sweep_param, "vddh, vddl, vin_hi, cload or w_n_stacked")->required();
    eng_option(sweep_cmd, "--from", sweep_from, "first value")->required();
    eng_option(sweep_cmd, "--to", sweep_to, "last value")->required();
    sweep_cmd->add_option("--steps", sweep_steps, "number of points")->required();
    sweep_cmd->add_option("-o,--out-csv,--out_csv", sweep_out, "CSV path ('-' for stdout)")->capture_default_str();
    sweep_flags.add(sweep_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*gen_cmd) return cmd_gen(gen_topo, gen_flags, gen_out);
        if (*bench_cmd) return cmd_bench(bench_format, bench_topos, bench_out);
        if (*sweep_cmd) return cmd_sweep(sweep_topo, sweep_param, sweep_from, sweep_to, sweep_steps, sweep_flags, sweep_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kParse;
    } catch (const ElaborationError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kParse;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    } catch (const MeasureError& e) {
        std::cerr << "measurement error: " << e.what() << '\n';
        return kMeasure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
