#pragma once

// Modified nodal analysis: equation assembly, Newton-Raphson DC operating
// point with gmin/source-stepping homotopies, and fixed-grid implicit
// transient analysis.
//
// Unknown vector layout: node voltages [0, n_nodes) followed by one branch
// current per voltage source. A branch current is positive when it flows
// into the source's + terminal.

#include "lsim/netlist.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lsim {

enum class Scheme { BackwardEuler, Trapezoidal };
enum class Homotopy { None, Gmin, Source };

std::string_view to_string(Homotopy h);

struct SysState {
    std::vector<double> v;        // per non-ground node
    std::vector<double> i_branch; // per voltage source

    static SysState zeros(const Circuit& c);
};

/// One linear capacitor as seen by the integrator. Explicit capacitors come
/// first, then cgs, cgd, cdb, csb of every MOSFET in instance order.
struct CapStamp {
    int a = kGround;
    int b = kGround;
    double c = 0.0;
};

std::vector<CapStamp> flatten_capacitors(const Circuit& c);

/// Discretization of the capacitors for one implicit step of length h.
struct Companion {
    double h = 0.0;
    const SysState* prev = nullptr;
    Scheme scheme = Scheme::BackwardEuler;
    std::span<const double> prev_cap_current{}; // trapezoidal only; zeros if empty
};

struct Linearized {
    Eigen::MatrixXd jacobian;
    Eigen::VectorXd residual;
};

/// KCL residual (sum of currents leaving each node) plus source constraint
/// rows, and their exact Jacobian. `companion == nullptr` means DC.
Linearized assemble(const Circuit& circuit, const SysState& state, const Companion* companion,
                    double t, double gmin, double source_scale = 1.0);

struct SolverOptions {
    double abstol = 1e-9; // A
    double reltol = 1e-3;
    double vntol = 1e-6;  // V
    int max_iter = 200;
    int tran_max_iter = 50;
    double gmin = 1e-12;  // S, retained in the final solve
    double max_step = 0.5; // V per node per Newton iteration
};

struct OpPoint {
    SysState state;
    double residual_max = 0.0; // A, over KCL rows
    int iterations = 0;
    Homotopy homotopy_used = Homotopy::None;
};

class SolverError : public std::runtime_error {
public:
    enum class Kind { NonConvergence, Singular, StepUnderflow, NonFinite };
    SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Sources are evaluated at time t (their initial value for t = 0).
OpPoint dc_operating_point(const Circuit& circuit, const SolverOptions& opts = {}, double t = 0.0);

struct TransientOptions {
    Scheme scheme = Scheme::Trapezoidal;
    std::optional<OpPoint> ic; // computed from the DC operating point when empty
    SolverOptions solver;
    int max_halvings = 8;
};

struct SourceTrace {
    std::string name;
    int pos = kGround;
    int neg = kGround;
    std::vector<double> current; // A, positive into the + terminal
};

struct Waveforms {
    std::vector<double> t;
    std::vector<std::string> node_names;
    std::vector<std::vector<double>> node_v;
    std::vector<SourceTrace> sources;
    std::vector<double> kcl_residual; // max |KCL| of the accepted solve per grid point
    double gmin = 0.0;
    long newton_iterations = 0;
    int halvings = 0;

    const std::vector<double>& node(std::string_view name) const;
    const SourceTrace& source(std::string_view name) const;
    /// Voltage across a source (v+ - v-) at grid point k.
    double source_voltage(const SourceTrace& s, std::size_t k) const;
};

Waveforms transient(const Circuit& circuit, double tstep, double tstop,
                    const TransientOptions& opts = {});

} // namespace lsim
