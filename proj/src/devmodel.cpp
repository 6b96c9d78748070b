#include "lsim/devmodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lsim {

namespace {

constexpr double kExpClamp = 40.0;

struct Softplus {
    double q;
    double dq; // dq/dx
};

// q(x) = ln(1 + e^x), linear beyond the clamp.
Softplus softplus(double x) {
    if (x > kExpClamp) {
        return {x, 1.0};
    }
    const double e = std::exp(x);
    return {std::log1p(e), e / (1.0 + e)};
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

struct CoreEval {
    double id;
    double d_vgs;
    double d_vds;
    double d_vsb;
};

// Forward-frame evaluation; requires vds >= 0.
CoreEval eval_forward(const MosParams& p, double vgs, double vds, double vsb, double w,
                      double l) {
    const double vt = kThermalVoltage;
    const double ispec = 2.0 * p.n_slope * p.kp * (w / l) * vt * vt;

    const double vsb_min = -0.5 * p.phi_s;
    const bool clamped = vsb < vsb_min;
    const double root = std::sqrt(p.phi_s + (clamped ? vsb_min : vsb));
    const double vte = p.vth0 + p.gamma_body * (root - std::sqrt(p.phi_s)) - p.eta_dibl * vds;
    const double dvte_dvsb = clamped ? 0.0 : p.gamma_body / (2.0 * root);
    const double dvte_dvds = -p.eta_dibl;

    const double scale = 2.0 * p.n_slope * vt;
    const Softplus fwd = softplus((vgs - vte) / scale);
    const Softplus rev = softplus((vgs - vte - p.n_slope * vds) / scale);

    const double f = fwd.q * fwd.q - rev.q * rev.q;
    const double gf = 2.0 * fwd.q * fwd.dq / scale;
    const double gr = 2.0 * rev.q * rev.dq / scale;

    const double df_dvgs = gf - gr;
    const double df_dvds = gf * (-dvte_dvds) - gr * (-dvte_dvds - p.n_slope);
    const double df_dvsb = (gr - gf) * dvte_dvsb;

    const double clm = 1.0 + p.lambda * vds;
    return {ispec * f * clm, ispec * clm * df_dvgs, ispec * (clm * df_dvds + f * p.lambda),
            ispec * clm * df_dvsb};
}

} // namespace

MosParams MosParams::default_nmos() { return MosParams{}; }

MosParams MosParams::default_pmos() {
    MosParams p;
    p.polarity = Polarity::Pmos;
    p.vth0 = 0.75;
    p.kp = 58e-6;
    p.n_slope = 1.5;
    p.lambda = 0.08;
    p.eta_dibl = 0.03;
    p.gamma_body = 0.45;
    p.phi_s = 0.8;
    return p;
}

void MosParams::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("MosParams: " + what); };
    if (!(n_slope >= 1.0)) fail("N must be >= 1");
    if (!(kp > 0.0)) fail("KP must be > 0");
    if (!(eta_dibl >= 0.0)) fail("ETA must be >= 0");
    if (!(gamma_body >= 0.0)) fail("GAMMA must be >= 0");
    if (!(phi_s > 0.0)) fail("PHI must be > 0");
    if (!(vth0 > 0.0)) fail("VTH0 must be > 0 (PMOS stored as magnitude)");
    if (!(lambda >= 0.0)) fail("LAMBDA must be >= 0");
    if (!(cox_a >= 0.0 && cov_w >= 0.0 && cj_w >= 0.0)) fail("capacitance terms must be >= 0");
}

bool MosParams::set(std::string_view key, double value) {
    if (iequals(key, "VTH0")) vth0 = value;
    else if (iequals(key, "KP")) kp = value;
    else if (iequals(key, "N")) n_slope = value;
    else if (iequals(key, "LAMBDA")) lambda = value;
    else if (iequals(key, "ETA")) eta_dibl = value;
    else if (iequals(key, "GAMMA")) gamma_body = value;
    else if (iequals(key, "PHI")) phi_s = value;
    else if (iequals(key, "COXA")) cox_a = value;
    else if (iequals(key, "COVW")) cov_w = value;
    else if (iequals(key, "CJW")) cj_w = value;
    else return false;
    return true;
}

std::array<std::pair<const char*, double>, 10> MosParams::entries() const {
    return {{{"VTH0", vth0},
             {"KP", kp},
             {"N", n_slope},
             {"LAMBDA", lambda},
             {"ETA", eta_dibl},
             {"GAMMA", gamma_body},
             {"PHI", phi_s},
             {"COXA", cox_a},
             {"COVW", cov_w},
             {"CJW", cj_w}}};
}

double effective_vth(const MosParams& p, double vds, double vsb) {
    const double vsb_c = std::max(vsb, -0.5 * p.phi_s);
    return p.vth0 + p.gamma_body * (std::sqrt(p.phi_s + vsb_c) - std::sqrt(p.phi_s)) -
           p.eta_dibl * vds;
}

MosEval mosfet_eval(const MosParams& p, const MosBias& bias, double w, double l) {
    if (bias.vds >= 0.0) {
        const CoreEval c = eval_forward(p, bias.vgs, bias.vds, bias.vsb, w, l);
        return {c.id, c.d_vgs, c.d_vds, -c.d_vsb};
    }
    // Swap source and drain: the old drain becomes the reference terminal.
    const double vgs = bias.vgs - bias.vds;
    const double vds = -bias.vds;
    const double vsb = bias.vsb + bias.vds;
    const CoreEval c = eval_forward(p, vgs, vds, vsb, w, l);
    return {-c.id, -c.d_vgs, c.d_vgs + c.d_vds - c.d_vsb, c.d_vsb};
}

TerminalEval mosfet_terminal_eval(const MosParams& p, double vd, double vg, double vs, double vb,
                                  double w, double l) {
    const double s = p.polarity == Polarity::Nmos ? 1.0 : -1.0;
    const MosBias bias{s * (vg - vs), s * (vd - vs), s * (vs - vb)};
    const MosEval e = mosfet_eval(p, bias, w, l);
    TerminalEval t;
    t.id = s * e.id;
    t.did = {e.gds, e.gm, -e.gm - e.gds - e.gmb, e.gmb};
    return t;
}

MosCaps mosfet_caps(const MosParams& p, double w, double l) {
    const double cg = 0.5 * p.cox_a * w * l + p.cov_w * w;
    const double cj = p.cj_w * w;
    return {cg, cg, cj, cj};
}

SourceWave SourceWave::pulse(double v1, double v2, double td, double tr, double tf, double pw,
                             double per) {
    return {WaveKind::Pulse, v1, v2, td, tr, tf, pw, per};
}

void SourceWave::validate() const {
    if (kind == WaveKind::Dc) return;
    if (!(tr > 0.0) || !(tf > 0.0)) throw std::invalid_argument("PULSE: rise and fall times must be > 0");
    if (!(td >= 0.0) || !(pw >= 0.0)) throw std::invalid_argument("PULSE: delay and width must be >= 0");
    if (!(per > 0.0)) throw std::invalid_argument("PULSE: period must be > 0");
    if (tr + pw + tf > per) throw std::invalid_argument("PULSE: tr + pw + tf exceeds the period");
}

double source_value(const SourceWave& w, double t) {
    if (w.kind == WaveKind::Dc || t < w.td) return w.v1;
    const double local = std::fmod(t - w.td, w.per);
    if (local < w.tr) return w.v1 + (w.v2 - w.v1) * (local / w.tr);
    if (local < w.tr + w.pw) return w.v2;
    if (local < w.tr + w.pw + w.tf) return w.v2 + (w.v1 - w.v2) * ((local - w.tr - w.pw) / w.tf);
    return w.v1;
}

} // namespace lsim
