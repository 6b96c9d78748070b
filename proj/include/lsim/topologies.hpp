#pragma once

// Netlist generators for the three level-shifter families, each in a
// baseline and a stack-forced variant, plus the generic stack transform.

#include "lsim/netlist.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lsim {

enum class TopologyId { Cls, ClsStacked, Ssls, SslsStacked, Cmls, CmlsStacked };

inline constexpr std::array<TopologyId, 6> kAllTopologies{
    TopologyId::Cls, TopologyId::ClsStacked, TopologyId::Ssls,
    TopologyId::SslsStacked, TopologyId::Cmls, TopologyId::CmlsStacked};

std::string_view to_string(TopologyId id);
std::optional<TopologyId> parse_topology(std::string_view s);
bool is_stacked(TopologyId id);
TopologyId baseline_of(TopologyId id);
bool has_low_rail(TopologyId id);

struct TopoParams {
    double vddh = 3.3;
    double vddl = 2.2;
    double vin_hi = 1.6;
    double l = 0.35e-6;
    double w_p = 2.5e-6;
    double w_n = 1.0e-6;
    double w_n_stacked = 0.5e-6;
    double cload = 10e-15;
    // Stimulus timing; the high level always follows vin_hi.
    double td = 1e-9;
    double tr = 1e-9;
    double tf = 1e-9;
    double pw = 48e-9;
    double per = 100e-9;
    double tstep = 10e-12;
    double tstop = 300e-9;
    MosParams nmos = MosParams::default_nmos();
    MosParams pmos = MosParams::default_pmos();

    SourceWave stimulus() const { return SourceWave::pulse(0.0, vin_hi, td, tr, tf, pw, per); }

    /// Throws std::invalid_argument on violated invariants.
    void validate() const;
};

NetlistDoc gen(TopologyId topology, const TopoParams& p = {});

struct StackSpec {
    std::vector<std::string> targets; // device names, with or without the leading 'M'
    int k = 2;
};

/// Replaces every target MOSFET by k series devices of width W/k sharing
/// its gate and body, chained drain to source through fresh internal nodes.
NetlistDoc apply_stack(const NetlistDoc& doc, const StackSpec& spec);

/// Sets the width of one MOSFET card.
NetlistDoc set_width(const NetlistDoc& doc, std::string_view device, double w);

/// The stack each stacked topology applies to its baseline.
StackSpec stack_spec_for(TopologyId stacked);

/// A k-high NMOS stack with every gate grounded, across a single supply.
/// The supply source is named "vdd"; the stack runs from node "top" to ground.
NetlistDoc stack_leakage_fixture(int k, double w_total, const MosParams& p, double vdd,
                                 double l = 0.35e-6);

} // namespace lsim
