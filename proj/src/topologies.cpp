#include "lsim/topologies.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace lsim {

std::string_view to_string(TopologyId id) {
    switch (id) {
    case TopologyId::Cls: return "cls";
    case TopologyId::ClsStacked: return "cls_stacked";
    case TopologyId::Ssls: return "ssls";
    case TopologyId::SslsStacked: return "ssls_stacked";
    case TopologyId::Cmls: return "cmls";
    case TopologyId::CmlsStacked: return "cmls_stacked";
    }
    return "cls";
}

std::optional<TopologyId> parse_topology(std::string_view s) {
    const std::string key = to_lower(s);
    for (TopologyId id : kAllTopologies) {
        if (to_string(id) == key) return id;
    }
    return std::nullopt;
}

bool is_stacked(TopologyId id) {
    return id == TopologyId::ClsStacked || id == TopologyId::SslsStacked || id == TopologyId::CmlsStacked;
}

TopologyId baseline_of(TopologyId id) {
    switch (id) {
    case TopologyId::ClsStacked: return TopologyId::Cls;
    case TopologyId::SslsStacked: return TopologyId::Ssls;
    case TopologyId::CmlsStacked: return TopologyId::Cmls;
    default: return id;
    }
}

bool has_low_rail(TopologyId id) { return baseline_of(id) != TopologyId::Ssls; }

void TopoParams::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("TopoParams: " + what); };
    if (!(vin_hi > 0.0)) fail("vin_hi must be > 0");
    if (!(vin_hi <= vddl)) fail("vin_hi must not exceed vddl");
    if (!(vddl <= vddh)) fail("vddl must not exceed vddh");
    if (!(l > 0.0 && w_p > 0.0 && w_n > 0.0 && w_n_stacked > 0.0)) fail("geometries must be > 0");
    if (!(cload > 0.0)) fail("cload must be > 0");
    if (!(tstep > 0.0) || tstop < 10.0 * tstep) fail("tstop must be >= 10 * tstep");
    stimulus().validate();
    nmos.validate();
    pmos.validate();
}

namespace {

class Builder {
public:
    explicit Builder(std::string title) { doc_.title = std::move(title); }

    void nmos(const std::string& name, const std::string& d, const std::string& g,
              const std::string& s, double w, double l) {
        mos(name, d, g, s, "0", "nmos", w, l);
    }
    // k series devices of w_total/k named name_s1..name_sk, through nodes name_n1..
    void nmos_stack(const std::string& name, const std::string& d, const std::string& g,
                    const std::string& s, double w_total, int k, double l) {
        std::string upper = d;
        for (int i = 1; i <= k; ++i) {
            const std::string lower = i == k ? s : name + "_n" + std::to_string(i);
            nmos(name + "_s" + std::to_string(i), upper, g, lower, w_total / k, l);
            upper = lower;
        }
    }
    void pmos(const std::string& name, const std::string& d, const std::string& g,
              const std::string& s, const std::string& b, double w, double l) {
        mos(name, d, g, s, b, "pmos", w, l);
    }
    void vsource(const std::string& name, const std::string& pos, const SourceWave& w) {
        DeviceCard c;
        c.kind = DeviceKind::VSource;
        c.name = name;
        c.nodes = {pos, "0"};
        c.wave = w;
        doc_.devices.push_back(std::move(c));
    }
    void cap(const std::string& name, const std::string& a, double value) {
        DeviceCard c;
        c.kind = DeviceKind::Capacitor;
        c.name = name;
        c.nodes = {a, "0"};
        c.value = value;
        doc_.devices.push_back(std::move(c));
    }
    NetlistDoc finish(const TopoParams& p) {
        doc_.models.push_back(model_card("nmos", p.nmos));
        doc_.models.push_back(model_card("pmos", p.pmos));
        doc_.directives.push_back({p.tstep, p.tstop, 0});
        return std::move(doc_);
    }

private:
    void mos(const std::string& name, const std::string& d, const std::string& g, const std::string& s,
             const std::string& b, const std::string& model, double w, double l) {
        DeviceCard c;
        c.kind = DeviceKind::Mosfet;
        c.name = name;
        c.nodes = {d, g, s, b};
        c.model = model;
        c.w = w;
        c.l = l;
        doc_.devices.push_back(std::move(c));
    }
    static ModelCard model_card(const std::string& name, const MosParams& p) {
        ModelCard m;
        m.name = name;
        m.polarity = p.polarity;
        for (const auto& [key, v] : p.entries()) m.params.emplace_back(key, v);
        return m;
    }

    NetlistDoc doc_;
};

NetlistDoc gen_cls(const TopoParams& p, bool stacked) {
    Builder b(stacked ? "cls_stacked: conventional level shifter, output pull-down stacked four high (inverting)"
                      : "cls: conventional level shifter, 10T dual supply (inverting)");
    const double l = p.l;
    b.vsource("vddh", "vddh", SourceWave::dc(p.vddh));
    b.vsource("vddl", "vddl", SourceWave::dc(p.vddl));
    b.vsource("vin", "in", p.stimulus());
    b.pmos("mpa", "inb", "in", "vddl", "vddl", p.w_p, l);
    b.nmos("mna", "inb", "in", "0", p.w_n, l);
    // Cross-coupled pair, each side headed by a diode-connected PMOS.
    b.pmos("mp4", "t1", "t1", "vddh", "vddh", p.w_p, l);
    b.pmos("mp1", "x1", "x2", "t1", "vddh", p.w_p, l);
    b.pmos("mp5", "t2", "t2", "vddh", "vddh", p.w_p, l);
    b.pmos("mp2", "x2", "x1", "t2", "vddh", p.w_p, l);
    b.nmos("mn1", "x1", "in", "0", p.w_n, l);
    b.nmos("mn2", "x2", "inb", "0", p.w_n, l);
    b.pmos("mp3", "out", "x2", "vddh", "vddh", p.w_p, l);
    if (stacked) {
        b.nmos_stack("mn3", "out", "x2", "0", 2.0 * p.w_n_stacked, 4, l);
    } else {
        b.nmos("mn3", "out", "x2", "0", p.w_n, l);
    }
    b.cap("cload", "out", p.cload);
    return b.finish(p);
}

NetlistDoc gen_ssls(const TopoParams& p, bool stacked) {
    Builder b(stacked ? "ssls_stacked: single supply level shifter, stack-forced N2-N5 (non-inverting)"
                      : "ssls: single supply level shifter, 6T (non-inverting)");
    const double l = p.l;
    b.vsource("vddh", "vddh", SourceWave::dc(p.vddh));
    b.vsource("vin", "in", p.stimulus());
    // The input stage runs from a rail one PMOS diode below VddH.
    b.pmos("mp3", "vr", "vr", "vddh", "vddh", p.w_p, l);
    b.pmos("mp1", "x", "in", "vr", "vddh", p.w_p, l);
    b.nmos("mn1", "x", "in", "m", stacked ? p.w_n_stacked : p.w_n, l);
    if (stacked) {
        b.nmos_stack("mn3", "m", "in", "0", 2.0 * p.w_n_stacked, 2, l);
    } else {
        b.nmos("mn3", "m", "in", "0", p.w_n, l);
    }
    b.pmos("mp2", "out", "x", "vddh", "vddh", p.w_p, l);
    if (stacked) {
        b.nmos_stack("mn2", "out", "x", "0", 2.0 * p.w_n_stacked, 2, l);
    } else {
        b.nmos("mn2", "out", "x", "0", p.w_n, l);
    }
    b.cap("cload", "out", p.cload);
    return b.finish(p);
}

NetlistDoc gen_cmls(const TopoParams& p, bool stacked) {
    Builder b(stacked ? "cmls_stacked: contention mitigated level shifter, stack-forced N3-N8 (inverting)"
                      : "cmls: contention mitigated level shifter, 12T dual supply (inverting)");
    const double l = p.l;
    b.vsource("vddh", "vddh", SourceWave::dc(p.vddh));
    b.vsource("vddl", "vddl", SourceWave::dc(p.vddl));
    b.vsource("vin", "in", p.stimulus());
    b.pmos("mp6", "inb", "in", "vddl", "vddl", p.w_p, l);
    b.nmos("mn1", "inb", "in", "0", p.w_n, l);
    b.pmos("mp7", "in2", "inb", "vddl", "vddl", p.w_p, l);
    b.nmos("mn2", "in2", "inb", "0", p.w_n, l);
    // Each series PMOS is gated by the same low-swing signal as the pull-down
    // it opposes, so it is only weakly on while that side is being discharged.
    b.pmos("mp3", "sp1", "in2", "vddh", "vddh", p.w_p, l);
    b.pmos("mp1", "x1", "x2", "sp1", "vddh", p.w_p, l);
    b.pmos("mp4", "sp2", "inb", "vddh", "vddh", p.w_p, l);
    b.pmos("mp2", "x2", "x1", "sp2", "vddh", p.w_p, l);
    auto pull_down = [&](const std::string& name, const std::string& d, const std::string& g) {
        if (stacked) {
            b.nmos_stack(name, d, g, "0", 2.0 * p.w_n_stacked, 2, l);
        } else {
            b.nmos(name, d, g, "0", p.w_n, l);
        }
    };
    pull_down("mn3", "x1", "in2");
    pull_down("mn4", "x2", "inb");
    b.pmos("mp5", "out", "x2", "vddh", "vddh", p.w_p, l);
    pull_down("mn5", "out", "x2");
    b.cap("cload", "out", p.cload);
    return b.finish(p);
}

bool matches(const std::string& card_name, const std::string& target) {
    const std::string t = to_lower(target);
    return card_name == t || card_name == "m" + t;
}

} // namespace

NetlistDoc gen(TopologyId topology, const TopoParams& p) {
    p.validate();
    switch (topology) {
    case TopologyId::Cls: return gen_cls(p, false);
    case TopologyId::ClsStacked: return gen_cls(p, true);
    case TopologyId::Ssls: return gen_ssls(p, false);
    case TopologyId::SslsStacked: return gen_ssls(p, true);
    case TopologyId::Cmls: return gen_cmls(p, false);
    case TopologyId::CmlsStacked: return gen_cmls(p, true);
    }
    throw std::invalid_argument("unknown topology");
}

NetlistDoc apply_stack(const NetlistDoc& doc, const StackSpec& spec) {
    if (spec.k < 1) throw std::invalid_argument("apply_stack: k must be >= 1");
    for (const auto& target : spec.targets) {
        bool found = false;
        for (const auto& d : doc.devices) {
            if (!matches(d.name, target)) continue;
            if (d.kind != DeviceKind::Mosfet) throw std::invalid_argument("apply_stack: '" + target + "' is not a MOSFET");
            found = true;
        }
        if (!found) throw std::invalid_argument("apply_stack: no device named '" + target + "'");
    }
    if (spec.k == 1) return doc;

    std::set<std::string> used_nodes;
    for (const auto& d : doc.devices) used_nodes.insert(d.nodes.begin(), d.nodes.end());
    auto fresh = [&](const std::string& base) {
        std::string name = base;
        for (int i = 2; used_nodes.count(name); ++i) name = base + "_" + std::to_string(i);
        used_nodes.insert(name);
        return name;
    };

    NetlistDoc out = doc;
    out.devices.clear();
    for (const auto& d : doc.devices) {
        const bool hit = std::any_of(spec.targets.begin(), spec.targets.end(),
                                     [&](const std::string& t) { return matches(d.name, t); });
        if (!hit) {
            out.devices.push_back(d);
            continue;
        }
        std::string upper = d.nodes[0];
        for (int i = 1; i <= spec.k; ++i) {
            DeviceCard c = d;
            c.name = d.name + "_s" + std::to_string(i);
            c.w = d.w / spec.k;
            const std::string lower = i == spec.k ? d.nodes[2] : fresh(d.name + "_n" + std::to_string(i));
            c.nodes = {upper, d.nodes[1], lower, d.nodes[3]};
            out.devices.push_back(std::move(c));
            upper = lower;
        }
    }
    return out;
}

NetlistDoc set_width(const NetlistDoc& doc, std::string_view device, double w) {
    NetlistDoc out = doc;
    for (auto& d : out.devices) {
        if (matches(d.name, std::string(device)) && d.kind == DeviceKind::Mosfet) {
            d.w = w;
            return out;
        }
    }
    throw std::invalid_argument("set_width: no MOSFET named '" + std::string(device) + "'");
}

StackSpec stack_spec_for(TopologyId stacked) {
    switch (baseline_of(stacked)) {
    case TopologyId::Cls: return {{"mn3"}, 4};
    case TopologyId::Ssls: return {{"mn2", "mn3"}, 2};
    case TopologyId::Cmls: return {{"mn3", "mn4", "mn5"}, 2};
    default: break;
    }
    throw std::invalid_argument("stack_spec_for: not a topology family");
}

NetlistDoc stack_leakage_fixture(int k, double w_total, const MosParams& p, double vdd, double l) {
    if (k < 1) throw std::invalid_argument("stack_leakage_fixture: k must be >= 1");
    NetlistDoc doc;
    doc.title = std::to_string(k) + "-high off-state NMOS stack";
    DeviceCard v;
    v.kind = DeviceKind::VSource;
    v.name = "vdd";
    v.nodes = {"top", "0"};
    v.wave = SourceWave::dc(vdd);
    doc.devices.push_back(v);
    std::string upper = "top";
    for (int i = 1; i <= k; ++i) {
        DeviceCard m;
        m.kind = DeviceKind::Mosfet;
        m.name = "m" + std::to_string(i);
        const std::string lower = i == k ? "0" : "n" + std::to_string(i);
        m.nodes = {upper, "0", lower, "0"};
        m.model = "nch";
        m.w = w_total / k;
        m.l = l;
        doc.devices.push_back(m);
        upper = lower;
    }
    ModelCard mc;
    mc.name = "nch";
    mc.polarity = Polarity::Nmos;
    for (const auto& [key, val] : p.entries()) mc.params.emplace_back(key, val);
    doc.models.push_back(mc);
    return doc;
}

} // namespace lsim
