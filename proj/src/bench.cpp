#include "lsim/bench.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>
#include <stdexcept>

namespace lsim {

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

const BenchRow* find_row(const std::vector<BenchRow>& rows, TopologyId id) {
    for (const auto& r : rows) {
        if (r.topology == id) return &r;
    }
    return nullptr;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

nlohmann::ordered_json row_json(const BenchRow& r) {
    nlohmann::ordered_json j;
    j["topology"] = std::string(to_string(r.topology));
    j["ok"] = r.ok;
    if (!r.ok) {
        j["error"] = r.error;
        return j;
    }
    j["functional"] = r.functional;
    j["power_avg_w"] = r.report.power_avg;
    j["power_static_avg_w"] = r.report.power_static_avg();
    j["power_static_lo_w"] = r.report.power_static_lo;
    j["power_static_hi_w"] = r.report.power_static_hi;
    j["delay_rise_s"] = r.report.delay_rise;
    j["delay_fall_s"] = r.report.delay_fall;
    j["delay_max_s"] = r.report.delay_max;
    j["swing_hi_v"] = r.report.swing_hi;
    j["swing_lo_v"] = r.report.swing_lo;
    if (r.reduction_ratio) j["reduction_ratio"] = *r.reduction_ratio;
    return j;
}

const char* kRowHeader =
    "ok,functional,power_avg_w,power_static_avg_w,power_static_lo_w,power_static_hi_w,"
    "delay_rise_s,delay_fall_s,delay_max_s,swing_hi_v,swing_lo_v,reduction_ratio,error";

std::string row_fields(const BenchRow& r) {
    std::ostringstream os;
    os << (r.ok ? 1 : 0) << ',' << (r.functional ? 1 : 0);
    if (r.ok) {
        const Report& q = r.report;
        for (double v : {q.power_avg, q.power_static_avg(), q.power_static_lo, q.power_static_hi, q.delay_rise,
                         q.delay_fall, q.delay_max, q.swing_hi, q.swing_lo}) {
            os << ',' << sci(v);
        }
    } else {
        os << ",,,,,,,,,";
    }
    os << ',' << (r.reduction_ratio ? sci(*r.reduction_ratio) : "") << ',' << csv_escape(r.error);
    return os.str();
}

} // namespace

CharacterizeSpec characterize_spec_for(TopologyId id, const TopoParams& p) {
    CharacterizeSpec s;
    s.name = std::string(to_string(id));
    s.out_hi = p.vddh;
    s.tstep = p.tstep;
    s.tstop = p.tstop;
    return s;
}

BenchRow bench_one(TopologyId id, const TopoParams& p) {
    BenchRow row;
    row.topology = id;
    try {
        const Circuit c = elaborate(gen(id, p));
        row.report = characterize(c, characterize_spec_for(id, p));
        row.ok = true;
        row.functional = row.report.swing_hi >= 0.99 * p.vddh && row.report.swing_lo <= 0.01 * p.vddh;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

std::vector<BenchRow> run_bench(const std::vector<TopologyId>& ids, const TopoParams& p, bool parallel) {
    std::vector<BenchRow> rows;
    if (parallel) {
        std::vector<std::future<BenchRow>> jobs;
        for (TopologyId id : ids) jobs.push_back(std::async(std::launch::async, bench_one, id, p));
        for (auto& j : jobs) rows.push_back(j.get());
    } else {
        for (TopologyId id : ids) rows.push_back(bench_one(id, p));
    }
    for (auto& r : rows) {
        if (!is_stacked(r.topology) || !r.ok) continue;
        const BenchRow* base = find_row(rows, baseline_of(r.topology));
        if (base && base->ok && r.report.power_avg > 0.0 && base->report.power_avg > 0.0) {
            r.reduction_ratio = base->report.power_avg / r.report.power_avg;
        }
    }
    return rows;
}

std::optional<SweepParam> parse_sweep_param(std::string_view s) {
    const std::string k = to_lower(s);
    if (k == "vddh") return SweepParam::Vddh;
    if (k == "vddl") return SweepParam::Vddl;
    if (k == "vin_hi") return SweepParam::VinHi;
    if (k == "cload") return SweepParam::Cload;
    if (k == "w_n_stacked") return SweepParam::WnStacked;
    return std::nullopt;
}

std::string_view to_string(SweepParam p) {
    switch (p) {
    case SweepParam::Vddh: return "vddh";
    case SweepParam::Vddl: return "vddl";
    case SweepParam::VinHi: return "vin_hi";
    case SweepParam::Cload: return "cload";
    case SweepParam::WnStacked: return "w_n_stacked";
    }
    return "vddh";
}

std::vector<SweepRow> run_sweep(TopologyId id, SweepParam param, double from, double to, int steps,
                                const TopoParams& base) {
    if (!(from < to)) throw std::invalid_argument("sweep: 'from' must be less than 'to'");
    if (steps < 2) throw std::invalid_argument("sweep: steps must be >= 2");
    if (param == SweepParam::Vddl && !has_low_rail(id)) {
        throw std::invalid_argument("sweep: " + std::string(to_string(id)) + " has no VddL rail");
    }

    std::vector<SweepRow> rows(static_cast<std::size_t>(steps));
    std::vector<std::future<BenchRow>> jobs(rows.size());
    for (int i = 0; i < steps; ++i) {
        auto& row = rows[static_cast<std::size_t>(i)];
        row.value = from + (to - from) * i / (steps - 1);
        row.row.topology = id;
        TopoParams p = base;
        switch (param) {
        case SweepParam::Vddh: p.vddh = row.value; break;
        case SweepParam::Vddl: p.vddl = row.value; break;
        case SweepParam::VinHi: p.vin_hi = row.value; break;
        case SweepParam::Cload: p.cload = row.value; break;
        case SweepParam::WnStacked: p.w_n_stacked = row.value; break;
        }
        try {
            p.validate();
        } catch (const std::invalid_argument& e) {
            row.valid = false;
            row.row.error = e.what();
            continue;
        }
        jobs[static_cast<std::size_t>(i)] = std::async(std::launch::async, bench_one, id, p);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (jobs[i].valid()) rows[i].row = jobs[i].get();
    }
    return rows;
}

void write_waveform_csv(std::ostream& os, const Waveforms& w) {
    os << "time";
    for (const auto& n : w.node_names) os << ',' << n;
    for (const auto& s : w.sources) os << ",i(" << s.name << ')';
    os << '\n';
    for (std::size_t k = 0; k < w.t.size(); ++k) {
        os << sci(w.t[k]);
        for (const auto& v : w.node_v) os << ',' << sci(v[k]);
        for (const auto& s : w.sources) os << ',' << sci(s.current[k]);
        os << '\n';
    }
}

std::string report_json(const Report& r) {
    nlohmann::ordered_json j;
    j["circuit"] = r.circuit_name;
    j["power_avg_w"] = r.power_avg;
    j["power_static_lo_w"] = r.power_static_lo;
    j["power_static_hi_w"] = r.power_static_hi;
    j["delay_rise_s"] = r.delay_rise;
    j["delay_fall_s"] = r.delay_fall;
    j["delay_max_s"] = r.delay_max;
    j["swing_hi_v"] = r.swing_hi;
    j["swing_lo_v"] = r.swing_lo;
    return j.dump(2);
}

std::string format_eng(double v, const std::string& unit, int digits) {
    static const struct {
        double scale;
        const char* prefix;
    } kPrefixes[] = {{1e12, "T"}, {1e9, "G"}, {1e6, "M"}, {1e3, "k"}, {1.0, ""},  {1e-3, "m"},
                     {1e-6, "u"}, {1e-9, "n"}, {1e-12, "p"}, {1e-15, "f"}, {1e-18, "a"}};
    if (v == 0.0 || !std::isfinite(v)) {
        std::ostringstream os;
        os << v << ' ' << unit;
        return os.str();
    }
    const double mag = std::fabs(v);
    for (const auto& p : kPrefixes) {
        if (mag >= p.scale * (1.0 - 1e-12) || p.scale == 1e-18) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "%.*g %s%s", digits, v / p.scale, p.prefix, unit.c_str());
            return buf;
        }
    }
    return {};
}

std::string bench_table(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %12s %12s %11s %9s %9s %9s\n", "topology", "power", "static",
                  "delay", "swing_lo", "swing_hi", "ratio");
    os << line;
    for (const auto& r : rows) {
        const std::string name(to_string(r.topology));
        if (!r.ok) {
            os << name << std::string(name.size() < 15 ? 15 - name.size() : 1, ' ') << "FAILED: " << r.error << '\n';
            continue;
        }
        const std::string ratio = r.reduction_ratio ? format_eng(*r.reduction_ratio, "x", 3) : "-";
        std::snprintf(line, sizeof line, "%-14s %12s %12s %11s %9.4f %9.4f %9s%s\n", name.c_str(),
                      format_eng(r.report.power_avg, "W").c_str(),
                      format_eng(r.report.power_static_avg(), "W").c_str(),
                      format_eng(r.report.delay_max, "s").c_str(), r.report.swing_lo, r.report.swing_hi,
                      ratio.c_str(), r.functional ? "" : "  (no full swing)");
        os << line;
    }
    return os.str();
}

std::string bench_json(const std::vector<BenchRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) arr.push_back(row_json(r));
    return arr.dump(2) + "\n";
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "topology," << kRowHeader << '\n';
    for (const auto& r : rows) os << to_string(r.topology) << ',' << row_fields(r) << '\n';
    return os.str();
}

std::string pair_summary(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    for (TopologyId id : kAllTopologies) {
        if (!is_stacked(id)) continue;
        const BenchRow* s = find_row(rows, id);
        const BenchRow* b = find_row(rows, baseline_of(id));
        if (!s || !b) continue;
        os << to_string(id) << " vs " << to_string(baseline_of(id)) << ": ";
        if (!s->ok || !b->ok) {
            os << "not comparable (failed row)\n";
            continue;
        }
        const bool power = s->report.power_avg < b->report.power_avg;
        const bool stat = s->report.power_static_avg() < b->report.power_static_avg();
        const bool delay = s->report.delay_max >= b->report.delay_max;
        os << "power reduced " << (power ? "yes" : "no") << ", static power reduced " << (stat ? "yes" : "no")
           << ", delay increased " << (delay ? "yes" : "no") << '\n';
    }
    return os.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows, SweepParam param) {
    std::ostringstream os;
    os << to_string(param) << ",valid," << kRowHeader << '\n';
    for (const auto& r : rows) os << sci(r.value) << ',' << (r.valid ? 1 : 0) << ',' << row_fields(r.row) << '\n';
    return os.str();
}

} // namespace lsim
