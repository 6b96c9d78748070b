#include "lsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lsim {

std::string_view to_string(Homotopy h) {
    switch (h) {
    case Homotopy::None: return "none";
    case Homotopy::Gmin: return "gmin";
    case Homotopy::Source: return "source";
    }
    return "none";
}

SysState SysState::zeros(const Circuit& c) {
    return {std::vector<double>(static_cast<std::size_t>(c.n_nodes()), 0.0),
            std::vector<double>(static_cast<std::size_t>(c.n_branches()), 0.0)};
}

std::vector<CapStamp> flatten_capacitors(const Circuit& c) {
    std::vector<CapStamp> out;
    out.reserve(c.caps.size() + 4 * c.mosfets.size());
    for (const auto& cap : c.caps) out.push_back({cap.a, cap.b, cap.value});
    for (const auto& m : c.mosfets) {
        const MosCaps mc = mosfet_caps(m.params, m.w, m.l);
        const auto [d, g, s, b] = m.nodes;
        out.push_back({g, s, mc.cgs});
        out.push_back({g, d, mc.cgd});
        out.push_back({d, b, mc.cdb});
        out.push_back({s, b, mc.csb});
    }
    return out;
}

namespace {

Eigen::VectorXd pack(const SysState& s) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(s.v.size() + s.i_branch.size()));
    Eigen::Index k = 0;
    for (double v : s.v) x[k++] = v;
    for (double i : s.i_branch) x[k++] = i;
    return x;
}

SysState unpack(const Eigen::VectorXd& x, int n_nodes) {
    SysState s;
    s.v.assign(x.data(), x.data() + n_nodes);
    s.i_branch.assign(x.data() + n_nodes, x.data() + x.size());
    return s;
}

struct StepCompanion {
    double h = 0.0;
    Scheme scheme = Scheme::BackwardEuler;
    const Eigen::VectorXd* prev = nullptr;
    const std::vector<double>* prev_cap_current = nullptr;
};

// Holds the flattened capacitor list so repeated assembly does not rebuild it.
class Assembler {
public:
    explicit Assembler(const Circuit& c)
        : c_(c), caps_(flatten_capacitors(c)), n_(c.size()), jac_(n_, n_), res_(n_) {}

    const Circuit& circuit() const { return c_; }
    const std::vector<CapStamp>& caps() const { return caps_; }
    int size() const { return n_; }

    void run(const Eigen::VectorXd& x, const StepCompanion* comp, double t, double gmin,
             double source_scale) {
        jac_.setZero();
        res_.setZero();
        auto volt = [&](int node) { return node == kGround ? 0.0 : x[node]; };
        auto add_f = [&](int row, double v) {
            if (row != kGround) res_[row] += v;
        };
        auto add_j = [&](int row, int col, double v) {
            if (row != kGround && col != kGround) jac_(row, col) += v;
        };
        auto conductance = [&](int a, int b, double g) {
            add_j(a, a, g);
            add_j(a, b, -g);
            add_j(b, a, -g);
            add_j(b, b, g);
        };

        for (const auto& r : c_.resistors) {
            const double g = 1.0 / r.value;
            const double i = g * (volt(r.a) - volt(r.b));
            add_f(r.a, i);
            add_f(r.b, -i);
            conductance(r.a, r.b, g);
        }

        for (const auto& m : c_.mosfets) {
            const auto& nd = m.nodes;
            const TerminalEval te = mosfet_terminal_eval(m.params, volt(nd[0]), volt(nd[1]),
                                                         volt(nd[2]), volt(nd[3]), m.w, m.l);
            add_f(nd[0], te.id);
            add_f(nd[2], -te.id);
            for (int k = 0; k < 4; ++k) {
                add_j(nd[0], nd[k], te.did[k]);
                add_j(nd[2], nd[k], -te.did[k]);
            }
        }

        if (comp) {
            const auto& prev = *comp->prev;
            auto vprev = [&](int node) { return node == kGround ? 0.0 : prev[node]; };
            const bool trap = comp->scheme == Scheme::Trapezoidal;
            for (std::size_t k = 0; k < caps_.size(); ++k) {
                const auto& cs = caps_[k];
                const double geq = (trap ? 2.0 : 1.0) * cs.c / comp->h;
                const double dv = (volt(cs.a) - volt(cs.b)) - (vprev(cs.a) - vprev(cs.b));
                double i = geq * dv;
                if (trap && comp->prev_cap_current && !comp->prev_cap_current->empty()) {
                    i -= (*comp->prev_cap_current)[k];
                }
                add_f(cs.a, i);
                add_f(cs.b, -i);
                conductance(cs.a, cs.b, geq);
            }
        }

        const int nn = c_.n_nodes();
        for (int k = 0; k < c_.n_branches(); ++k) {
            const auto& s = c_.sources[static_cast<std::size_t>(k)];
            const int row = nn + k;
            const double ib = x[row];
            add_f(s.pos, ib);
            add_f(s.neg, -ib);
            add_j(s.pos, row, 1.0);
            add_j(s.neg, row, -1.0);
            res_[row] = volt(s.pos) - volt(s.neg) - source_scale * source_value(s.wave, t);
            add_j(row, s.pos, 1.0);
            add_j(row, s.neg, -1.0);
        }

        for (int n = 0; n < nn; ++n) {
            res_[n] += gmin * x[n];
            jac_(n, n) += gmin;
        }
    }

    // Currents through every flattened capacitor for the accepted solution.
    std::vector<double> cap_currents(const Eigen::VectorXd& x, const StepCompanion& comp) const {
        std::vector<double> out(caps_.size());
        auto volt = [&](const Eigen::VectorXd& v, int node) { return node == kGround ? 0.0 : v[node]; };
        const bool trap = comp.scheme == Scheme::Trapezoidal;
        for (std::size_t k = 0; k < caps_.size(); ++k) {
            const auto& cs = caps_[k];
            const double dv = (volt(x, cs.a) - volt(x, cs.b)) - (volt(*comp.prev, cs.a) - volt(*comp.prev, cs.b));
            double i = (trap ? 2.0 : 1.0) * cs.c / comp.h * dv;
            if (trap && comp.prev_cap_current && !comp.prev_cap_current->empty()) i -= (*comp.prev_cap_current)[k];
            out[k] = i;
        }
        return out;
    }

    const Eigen::MatrixXd& jacobian() const { return jac_; }
    const Eigen::VectorXd& residual() const { return res_; }

    double kcl_max() const {
        const int nn = c_.n_nodes();
        return nn == 0 ? 0.0 : res_.head(nn).cwiseAbs().maxCoeff();
    }

    double constraint_max() const {
        const int nb = c_.n_branches();
        return nb == 0 ? 0.0 : res_.tail(nb).cwiseAbs().maxCoeff();
    }

private:
    const Circuit& c_;
    std::vector<CapStamp> caps_;
    int n_;
    Eigen::MatrixXd jac_;
    Eigen::VectorXd res_;
};

enum class NewtonStatus { Converged, MaxIter, Singular, NonFinite };

struct NewtonResult {
    NewtonStatus status = NewtonStatus::MaxIter;
    int iterations = 0;
    double kcl = 0.0;
};

NewtonResult newton(Assembler& as, Eigen::VectorXd& x, const StepCompanion* comp, double t,
                    double gmin, double source_scale, const SolverOptions& opts, int max_iter) {
    const int nn = as.circuit().n_nodes();
    const int n = as.size();
    NewtonResult r;
    if (n == 0) {
        r.status = NewtonStatus::Converged;
        return r;
    }
    double last_dv = std::numeric_limits<double>::infinity();
    bool currents_settled = false;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    for (int it = 0; it <= max_iter; ++it) {
        as.run(x, comp, t, gmin, source_scale);
        r.kcl = as.kcl_max();
        if (!std::isfinite(r.kcl) || !std::isfinite(as.constraint_max())) {
            r.status = NewtonStatus::NonFinite;
            return r;
        }
        if (it > 0 && last_dv < opts.vntol && currents_settled && r.kcl < opts.abstol &&
            as.constraint_max() < opts.vntol) {
            r.status = NewtonStatus::Converged;
            r.iterations = it;
            return r;
        }
        if (it == max_iter) break;

        lu.compute(as.jacobian());
        const auto& lu_mat = lu.matrixLU();
        for (int k = 0; k < n; ++k) {
            const double piv = std::abs(lu_mat(k, k));
            if (!(piv > 1e-30) || !std::isfinite(piv)) {
                r.status = NewtonStatus::Singular;
                r.iterations = it;
                return r;
            }
        }
        Eigen::VectorXd dx = lu.solve(-as.residual());
        last_dv = 0.0;
        for (int k = 0; k < nn; ++k) {
            dx[k] = std::clamp(dx[k], -opts.max_step, opts.max_step);
            last_dv = std::max(last_dv, std::abs(dx[k]));
        }
        currents_settled = true;
        for (int k = nn; k < n; ++k) {
            if (std::abs(dx[k]) > opts.reltol * std::abs(x[k]) + opts.abstol) currents_settled = false;
        }
        x += dx;
        if (!x.allFinite()) {
            r.status = NewtonStatus::NonFinite;
            return r;
        }
        r.iterations = it + 1;
    }
    r.status = NewtonStatus::MaxIter;
    return r;
}

std::string worst_node_message(Assembler& as, const Eigen::VectorXd& x, double gmin) {
    as.run(x, nullptr, 0.0, gmin, 1.0);
    const Circuit& c = as.circuit();
    std::ostringstream os;
    if (c.n_nodes() == 0) return "no nodes";
    Eigen::Index worst = 0;
    const double val = as.residual().head(c.n_nodes()).cwiseAbs().maxCoeff(&worst);
    os << "largest residual " << val << " A at node '" << c.node_names[static_cast<std::size_t>(worst)] << "'";
    return os.str();
}

} // namespace

Linearized assemble(const Circuit& circuit, const SysState& state, const Companion* companion,
                    double t, double gmin, double source_scale) {
    Assembler as(circuit);
    const Eigen::VectorXd x = pack(state);
    Eigen::VectorXd prev;
    std::vector<double> prev_i;
    StepCompanion sc;
    if (companion) {
        prev = pack(*companion->prev);
        prev_i.assign(companion->prev_cap_current.begin(), companion->prev_cap_current.end());
        sc = {companion->h, companion->scheme, &prev, &prev_i};
    }
    as.run(x, companion ? &sc : nullptr, t, gmin, source_scale);
    return {as.jacobian(), as.residual()};
}

OpPoint dc_operating_point(const Circuit& circuit, const SolverOptions& opts, double t) {
    Assembler as(circuit);
    const int n = circuit.size();
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    bool saw_singular = false;

    auto finish = [&](const Eigen::VectorXd& x, const NewtonResult& r, Homotopy h, int total) {
        OpPoint op;
        op.state = unpack(x, circuit.n_nodes());
        op.residual_max = r.kcl;
        op.iterations = total;
        op.homotopy_used = h;
        return op;
    };

    // Plain Newton from zero.
    {
        Eigen::VectorXd x = x0;
        const auto r = newton(as, x, nullptr, t, opts.gmin, 1.0, opts, opts.max_iter);
        if (r.status == NewtonStatus::Converged) return finish(x, r, Homotopy::None, r.iterations);
        saw_singular |= r.status == NewtonStatus::Singular;
    }

    // gmin stepping, 1e-3 S down to the floor in decades.
    {
        Eigen::VectorXd x = x0;
        int total = 0;
        bool ok = true;
        for (double g = 1e-3; g >= opts.gmin * 0.999; g /= 10.0) {
            const auto r = newton(as, x, nullptr, t, std::max(g, opts.gmin), 1.0, opts, opts.max_iter);
            total += r.iterations;
            if (r.status != NewtonStatus::Converged) {
                saw_singular |= r.status == NewtonStatus::Singular;
                ok = false;
                break;
            }
        }
        if (ok) {
            const auto r = newton(as, x, nullptr, t, opts.gmin, 1.0, opts, opts.max_iter);
            total += r.iterations;
            if (r.status == NewtonStatus::Converged) return finish(x, r, Homotopy::Gmin, total);
        }
    }

    // Source stepping, 0 -> 1 in 20 increments.
    Eigen::VectorXd x = x0;
    {
        int total = 0;
        bool ok = true;
        NewtonResult r;
        for (int k = 1; k <= 20; ++k) {
            r = newton(as, x, nullptr, t, opts.gmin, k / 20.0, opts, opts.max_iter);
            total += r.iterations;
            if (r.status != NewtonStatus::Converged) {
                saw_singular |= r.status == NewtonStatus::Singular;
                ok = false;
                break;
            }
        }
        if (ok) return finish(x, r, Homotopy::Source, total);
    }

    if (saw_singular) {
        throw SolverError(SolverError::Kind::Singular,
                          "DC operating point: singular Jacobian (floating node or voltage-source loop?)");
    }
    throw SolverError(SolverError::Kind::NonConvergence,
                      "DC operating point did not converge after gmin and source stepping; " +
                          worst_node_message(as, x, opts.gmin));
}

const std::vector<double>& Waveforms::node(std::string_view name) const {
    const std::string key = to_lower(name);
    for (std::size_t i = 0; i < node_names.size(); ++i) {
        if (node_names[i] == key) return node_v[i];
    }
    throw std::out_of_range("no waveform for node '" + std::string(name) + "'");
}

const SourceTrace& Waveforms::source(std::string_view name) const {
    const std::string key = to_lower(name);
    for (const auto& s : sources) {
        if (s.name == key) return s;
    }
    throw std::out_of_range("no current trace for source '" + std::string(name) + "'");
}

double Waveforms::source_voltage(const SourceTrace& s, std::size_t k) const {
    const double vp = s.pos == kGround ? 0.0 : node_v[static_cast<std::size_t>(s.pos)][k];
    const double vn = s.neg == kGround ? 0.0 : node_v[static_cast<std::size_t>(s.neg)][k];
    return vp - vn;
}

Waveforms transient(const Circuit& circuit, double tstep, double tstop, const TransientOptions& opts) {
    if (!(tstep > 0.0)) throw std::invalid_argument("transient: tstep must be > 0");
    if (tstop < 10.0 * tstep * (1.0 - 1e-12)) throw std::invalid_argument("transient: tstop must be >= 10 * tstep");

    const OpPoint ic = opts.ic ? *opts.ic : dc_operating_point(circuit, opts.solver, 0.0);
    Assembler as(circuit);
    const int nn = circuit.n_nodes();
    const auto steps = static_cast<std::size_t>(std::llround(tstop / tstep));

    Waveforms w;
    w.gmin = opts.solver.gmin;
    w.node_names = circuit.node_names;
    w.node_v.assign(static_cast<std::size_t>(nn), std::vector<double>(steps + 1));
    for (const auto& s : circuit.sources) w.sources.push_back({s.name, s.pos, s.neg, std::vector<double>(steps + 1)});
    w.t.resize(steps + 1);
    w.kcl_residual.assign(steps + 1, 0.0);

    Eigen::VectorXd x = pack(ic.state);
    std::vector<double> cap_i(as.caps().size(), 0.0);
    bool startup = true;

    auto record = [&](std::size_t k, double kcl) {
        w.t[k] = static_cast<double>(k) * tstep;
        for (int n = 0; n < nn; ++n) w.node_v[static_cast<std::size_t>(n)][k] = x[n];
        for (std::size_t s = 0; s < w.sources.size(); ++s) w.sources[s].current[k] = x[nn + static_cast<Eigen::Index>(s)];
        w.kcl_residual[k] = kcl;
    };
    record(0, ic.residual_max);

    // Advances x from t0 by h, splitting the interval on Newton failure.
    double kcl_acc = 0.0;
    auto advance = [&](auto&& self, double t0, double h, int depth) -> void {
        const Scheme scheme = startup ? Scheme::BackwardEuler : opts.scheme;
        const Eigen::VectorXd prev = x;
        StepCompanion comp{h, scheme, &prev, &cap_i};
        const auto r = newton(as, x, &comp, t0 + h, opts.solver.gmin, 1.0, opts.solver, opts.solver.tran_max_iter);
        w.newton_iterations += r.iterations;
        if (r.status == NewtonStatus::Converged) {
            cap_i = as.cap_currents(x, comp);
            startup = false;
            kcl_acc = std::max(kcl_acc, r.kcl);
            return;
        }
        x = prev;
        if (r.status == NewtonStatus::NonFinite && depth >= opts.max_halvings) {
            throw SolverError(SolverError::Kind::NonFinite, "transient: non-finite state at t=" + std::to_string(t0 + h));
        }
        if (depth >= opts.max_halvings) {
            std::ostringstream os;
            os << "transient: step size underflow at t=" << t0 << " s after " << opts.max_halvings << " halvings";
            throw SolverError(SolverError::Kind::StepUnderflow, os.str());
        }
        ++w.halvings;
        self(self, t0, h / 2.0, depth + 1);
        self(self, t0 + h / 2.0, h / 2.0, depth + 1);
    };

    for (std::size_t k = 1; k <= steps; ++k) {
        const double t0 = static_cast<double>(k - 1) * tstep;
        const double h = static_cast<double>(k) * tstep - t0;
        kcl_acc = 0.0;
        advance(advance, t0, h, 0);
        if (!x.allFinite()) {
            throw SolverError(SolverError::Kind::NonFinite, "transient: non-finite state at t=" + std::to_string(t0 + h));
        }
        record(k, kcl_acc);
    }
    return w;
}

} // namespace lsim
