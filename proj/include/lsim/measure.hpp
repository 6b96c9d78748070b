#pragma once

// Figures of merit extracted from waveforms and operating points: 50%
// propagation delay, average and static power, settled output swing.

#include "lsim/engine.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsim {

class MeasureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Levels {
    double lo = 0.0;
    double hi = 0.0;
    double mid() const { return 0.5 * (lo + hi); }
};

struct Window {
    double t0 = 0.0;
    double t1 = 0.0;
};

/// Output-referenced delays: delay_rise averages the edges where the output
/// rises, delay_fall those where it falls.
struct DelayResult {
    double delay_rise = 0.0;
    double delay_fall = 0.0;
    int rise_edges = 0;
    int fall_edges = 0;
    double delay_max() const { return std::max(delay_rise, delay_fall); }
};

/// Input edges before `t_from` are ignored (startup exclusion).
DelayResult propagation_delay(std::span<const double> in_wave, std::span<const double> out_wave,
                              std::span<const double> t, Levels in_levels, Levels out_levels,
                              double t_from = 0.0);

/// Mean power delivered by the named sources over the window, with the
/// dissipation in the numerical gmin conductances removed. An empty supply
/// list means every source.
double average_power(const Waveforms& waves, const std::vector<std::string>& supplies, Window window);

/// Power delivered by all sources at the DC operating point with the
/// stimulus pinned at its low (v1) or high (v2) level.
enum class InputState { Lo, Hi };
double static_power(const Circuit& circuit, const std::string& stimulus, InputState state,
                    const SolverOptions& opts = {});

/// Power delivered by all sources at an operating point, gmin dissipation removed.
double operating_power(const Circuit& circuit, const SysState& state, double gmin, double t = 0.0);

struct Swing {
    double lo = 0.0;
    double hi = 0.0;
};

/// Median settled levels between output transitions; samples within
/// `settle` after a transition are skipped.
Swing output_swing(std::span<const double> out_wave, std::span<const double> t, double settle);

struct Report {
    std::string circuit_name;
    double power_avg = 0.0;
    double power_static_lo = 0.0;
    double power_static_hi = 0.0;
    double delay_rise = 0.0;
    double delay_fall = 0.0;
    double delay_max = 0.0;
    double swing_lo = 0.0;
    double swing_hi = 0.0;

    double power_static_avg() const { return 0.5 * (power_static_lo + power_static_hi); }
};

/// How to characterize a circuit: which source is the stimulus, which
/// nodes are input and output, and where to measure.
struct CharacterizeSpec {
    std::string name;
    std::string stimulus = "vin";
    std::string in_node = "in";
    std::string out_node = "out";
    double out_hi = 0.0;         // expected output high rail; 0 = use max of the waveform
    double tstep = 10e-12;
    double tstop = 300e-9;
    double settle = 5e-9;
    Scheme scheme = Scheme::Trapezoidal;
};

Report characterize(const Circuit& circuit, const CharacterizeSpec& spec, Waveforms* waves_out = nullptr);

} // namespace lsim
