#pragma once

// Device equations: a single continuous MOSFET drain-current expression that
// is valid from deep subthreshold to strong inversion, the lumped device
// capacitances, and the independent voltage source waveforms.

#include <array>
#include <string>
#include <string_view>

namespace lsim {

/// kT/q at 300 K.
inline constexpr double kThermalVoltage = 0.025852;

enum class Polarity { Nmos, Pmos };

/// Compact-model parameter set. PMOS devices store vth0 > 0; polarity is
/// applied by reflecting terminal voltages.
struct MosParams {
    Polarity polarity = Polarity::Nmos;
    double vth0 = 0.55;       // V
    double n_slope = 1.4;     // subthreshold slope factor
    double kp = 170e-6;       // A/V^2, mobility * Cox
    double lambda = 0.06;     // 1/V
    double eta_dibl = 0.03;   // V/V
    double gamma_body = 0.58; // sqrt(V)
    double phi_s = 0.8;       // V
    double cox_a = 4.6e-3;    // F/m^2
    double cov_w = 1.2e-10;   // F/m
    double cj_w = 9e-10;      // F/m

    static MosParams default_nmos();
    static MosParams default_pmos();

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;

    /// Sets a parameter by its `.model` key (VTH0, KP, N, LAMBDA, ETA, GAMMA,
    /// PHI, COXA, COVW, CJW; case-insensitive). Returns false for unknown keys.
    bool set(std::string_view key, double value);

    /// The `.model` keys in canonical order, paired with their values.
    std::array<std::pair<const char*, double>, 10> entries() const;

    friend bool operator==(const MosParams&, const MosParams&) = default;
};

/// Bias in the source-referenced, polarity-reflected frame.
struct MosBias {
    double vgs = 0.0;
    double vds = 0.0;
    double vsb = 0.0;
};

/// Drain-to-source current and its partial derivatives; gmb is the partial
/// with respect to -vsb.
struct MosEval {
    double id = 0.0;
    double gm = 0.0;
    double gds = 0.0;
    double gmb = 0.0;
};

/// Threshold with body effect and DIBL. vsb is clamped below at -phi_s/2.
double effective_vth(const MosParams& p, double vds, double vsb);

/// Evaluates the interpolated model in the reflected frame. Negative vds is
/// handled by swapping source and drain; the current sign follows vds.
MosEval mosfet_eval(const MosParams& p, const MosBias& bias, double w, double l);

/// Current into the drain terminal and its derivatives with respect to the
/// four terminal voltages (d, g, s, b), all in the circuit's own frame.
struct TerminalEval {
    double id = 0.0;
    std::array<double, 4> did{}; // d/dVd, d/dVg, d/dVs, d/dVb
};

TerminalEval mosfet_terminal_eval(const MosParams& p, double vd, double vg, double vs,
                                  double vb, double w, double l);

struct MosCaps {
    double cgs = 0.0;
    double cgd = 0.0;
    double cdb = 0.0;
    double csb = 0.0;
};

/// Bias-independent lumped capacitances.
MosCaps mosfet_caps(const MosParams& p, double w, double l);

enum class WaveKind { Dc, Pulse };

struct SourceWave {
    WaveKind kind = WaveKind::Dc;
    double v1 = 0.0;
    double v2 = 0.0;
    double td = 0.0;
    double tr = 0.0;
    double tf = 0.0;
    double pw = 0.0;
    double per = 0.0;

    static SourceWave dc(double v) { return {WaveKind::Dc, v}; }
    static SourceWave pulse(double v1, double v2, double td, double tr, double tf, double pw,
                            double per);

    void validate() const;

    friend bool operator==(const SourceWave&, const SourceWave&) = default;
};

/// Piecewise-linear, continuous source value at time t.
double source_value(const SourceWave& w, double t);

} // namespace lsim
