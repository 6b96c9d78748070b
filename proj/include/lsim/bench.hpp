#pragma once

// Six-way characterization bench, parameter sweeps, and the text formats
// they are written in (waveform CSV, report JSON, bench table/json/csv).

#include "lsim/measure.hpp"
#include "lsim/topologies.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace lsim {

/// The measurement setup matching a generated topology.
CharacterizeSpec characterize_spec_for(TopologyId id, const TopoParams& p);

struct BenchRow {
    TopologyId topology = TopologyId::Cls;
    bool ok = false;
    std::string error;
    Report report;
    bool functional = false; // settled swing reaches 0.99*vddh and 0.01*vddh
    std::optional<double> reduction_ratio;
};

BenchRow bench_one(TopologyId id, const TopoParams& p = {});

/// Rows come back in the order requested regardless of completion order.
/// Reduction ratios are filled for stacked rows whose baseline is present.
std::vector<BenchRow> run_bench(const std::vector<TopologyId>& ids, const TopoParams& p = {},
                                bool parallel = true);

enum class SweepParam { Vddh, Vddl, VinHi, Cload, WnStacked };
std::optional<SweepParam> parse_sweep_param(std::string_view s);
std::string_view to_string(SweepParam p);

struct SweepRow {
    double value = 0.0;
    bool valid = true; // false when the point violates a parameter invariant
    BenchRow row;
};

/// Linear grid of `steps` points from `from` to `to` inclusive.
/// Throws std::invalid_argument on a malformed grid or on vddl for ssls.
std::vector<SweepRow> run_sweep(TopologyId id, SweepParam param, double from, double to, int steps,
                                const TopoParams& base = {});

void write_waveform_csv(std::ostream& os, const Waveforms& w);
std::string report_json(const Report& r);

std::string bench_table(const std::vector<BenchRow>& rows);
std::string bench_json(const std::vector<BenchRow>& rows);
std::string bench_csv(const std::vector<BenchRow>& rows);
/// One line per stacked/baseline pair present: power reduced? delay increased?
std::string pair_summary(const std::vector<BenchRow>& rows);
std::string sweep_csv(const std::vector<SweepRow>& rows, SweepParam param);

/// Engineering notation with an SI prefix, e.g. "12.7 uW".
std::string format_eng(double v, const std::string& unit, int digits = 4);

} // namespace lsim
