#include "lsim/measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lsim {

namespace {

struct Crossing {
    double t;
    bool rising;
};

std::vector<Crossing> crossings(std::span<const double> wave, std::span<const double> t, double level) {
    std::vector<Crossing> out;
    for (std::size_t k = 1; k < wave.size(); ++k) {
        const double a = wave[k - 1] - level;
        const double b = wave[k] - level;
        const bool up = a < 0.0 && b >= 0.0;
        const bool down = a >= 0.0 && b < 0.0;
        if (!up && !down) continue;
        const double frac = a / (a - b);
        out.push_back({t[k - 1] + frac * (t[k] - t[k - 1]), up});
    }
    return out;
}

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

std::string fmt_time(double t) {
    std::ostringstream os;
    os << t * 1e9 << " ns";
    return os.str();
}

} // namespace

DelayResult propagation_delay(std::span<const double> in_wave, std::span<const double> out_wave,
                              std::span<const double> t, Levels in_levels, Levels out_levels,
                              double t_from) {
    if (in_wave.size() != t.size() || out_wave.size() != t.size()) {
        throw MeasureError("propagation_delay: series lengths differ");
    }
    const auto in_x = crossings(in_wave, t, in_levels.mid());
    const auto out_x = crossings(out_wave, t, out_levels.mid());

    DelayResult r;
    double sum_rise = 0.0;
    double sum_fall = 0.0;
    std::size_t o = 0;
    for (std::size_t e = 0; e < in_x.size(); ++e) {
        const double t_in = in_x[e].t;
        if (t_in < t_from) continue;
        const double t_next = e + 1 < in_x.size() ? in_x[e + 1].t : t.back();
        while (o < out_x.size() && out_x[o].t < t_in) ++o;
        if (o >= out_x.size() || out_x[o].t > t_next) {
            throw MeasureError(std::string("no transition: output never crosses ") +
                               std::to_string(out_levels.mid()) + " V after the " +
                               (in_x[e].rising ? "rising" : "falling") + " input edge at " + fmt_time(t_in));
        }
        const double d = out_x[o].t - t_in;
        if (out_x[o].rising) {
            sum_rise += d;
            ++r.rise_edges;
        } else {
            sum_fall += d;
            ++r.fall_edges;
        }
        ++o;
    }
    if (r.rise_edges + r.fall_edges == 0) throw MeasureError("propagation_delay: no input edges after the startup window");
    if (r.rise_edges) r.delay_rise = sum_rise / r.rise_edges;
    if (r.fall_edges) r.delay_fall = sum_fall / r.fall_edges;
    return r;
}

double average_power(const Waveforms& waves, const std::vector<std::string>& supplies, Window window) {
    const auto& t = waves.t;
    if (t.size() < 2) throw MeasureError("average_power: waveform too short");
    const double eps = 1e-6 * (t[1] - t[0]);
    if (!(window.t1 > window.t0) || window.t0 < t.front() - eps || window.t1 > t.back() + eps) {
        throw MeasureError("average_power: window outside the simulated range");
    }

    std::vector<const SourceTrace*> used;
    if (supplies.empty()) {
        for (const auto& s : waves.sources) used.push_back(&s);
    } else {
        for (const auto& name : supplies) used.push_back(&waves.source(name));
    }

    auto power_at = [&](std::size_t k) {
        double p = 0.0;
        for (const auto* s : used) p -= waves.source_voltage(*s, k) * s->current[k];
        double g = 0.0;
        for (const auto& v : waves.node_v) g += v[k] * v[k];
        return p - waves.gmin * g;
    };

    double energy = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double a = std::max(t[k - 1], window.t0);
        const double b = std::min(t[k], window.t1);
        if (b <= a) continue;
        const double pa = power_at(k - 1);
        const double pb = power_at(k);
        const double span = t[k] - t[k - 1];
        const auto lerp = [&](double x) { return pa + (pb - pa) * (x - t[k - 1]) / span; };
        energy += 0.5 * (lerp(a) + lerp(b)) * (b - a);
    }
    return energy / (window.t1 - window.t0);
}

double operating_power(const Circuit& circuit, const SysState& state, double gmin, double t) {
    (void)t;
    auto volt = [&](int n) { return n == kGround ? 0.0 : state.v[static_cast<std::size_t>(n)]; };
    double p = 0.0;
    for (std::size_t k = 0; k < circuit.sources.size(); ++k) {
        const auto& s = circuit.sources[k];
        p -= (volt(s.pos) - volt(s.neg)) * state.i_branch[k];
    }
    for (double v : state.v) p -= gmin * v * v;
    return p;
}

double static_power(const Circuit& circuit, const std::string& stimulus, InputState state,
                    const SolverOptions& opts) {
    Circuit pinned = circuit;
    auto& src = pinned.sources[static_cast<std::size_t>(pinned.source(stimulus))];
    src.wave = SourceWave::dc(state == InputState::Lo ? src.wave.v1 : src.wave.v2);
    const OpPoint op = dc_operating_point(pinned, opts);
    return operating_power(pinned, op.state, opts.gmin);
}

Swing output_swing(std::span<const double> out_wave, std::span<const double> t, double settle) {
    if (out_wave.size() != t.size() || out_wave.empty()) throw MeasureError("output_swing: bad series");
    const auto [mn, mx] = std::minmax_element(out_wave.begin(), out_wave.end());
    const auto xs = crossings(out_wave, t, 0.5 * (*mn + *mx));

    std::vector<double> hi;
    std::vector<double> lo;
    std::size_t k = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double start = xs[i].t + settle;
        const double stop = i + 1 < xs.size() ? xs[i + 1].t : std::numeric_limits<double>::infinity();
        std::vector<double> window;
        while (k < t.size() && t[k] < start) ++k;
        for (std::size_t j = k; j < t.size() && t[j] < stop; ++j) window.push_back(out_wave[j]);
        if (window.size() < 10) continue;
        auto& dest = xs[i].rising ? hi : lo;
        dest.insert(dest.end(), window.begin(), window.end());
    }
    if (hi.empty()) throw MeasureError("output_swing: no settled window for the high state");
    if (lo.empty()) throw MeasureError("output_swing: no settled window for the low state");
    return {median(std::move(lo)), median(std::move(hi))};
}

Report characterize(const Circuit& circuit, const CharacterizeSpec& spec, Waveforms* waves_out) {
    const auto& stim = circuit.sources[static_cast<std::size_t>(circuit.source(spec.stimulus))].wave;
    if (stim.kind != WaveKind::Pulse) throw MeasureError("characterize: stimulus '" + spec.stimulus + "' is not a PULSE");

    TransientOptions topts;
    topts.scheme = spec.scheme;
    Waveforms w = transient(circuit, spec.tstep, spec.tstop, topts);

    Report r;
    r.circuit_name = spec.name;
    const auto periods = std::floor(spec.tstop / stim.per + 1e-9);
    if (periods < 2) throw MeasureError("characterize: simulation must cover at least two stimulus periods");
    r.power_avg = average_power(w, {}, {stim.per, periods * stim.per});
    r.power_static_lo = static_power(circuit, spec.stimulus, InputState::Lo, topts.solver);
    r.power_static_hi = static_power(circuit, spec.stimulus, InputState::Hi, topts.solver);

    const auto& in = w.node(spec.in_node);
    const auto& out = w.node(spec.out_node);
    const Swing sw = output_swing(out, w.t, spec.settle);
    r.swing_lo = sw.lo;
    r.swing_hi = sw.hi;

    const double out_hi = spec.out_hi > 0.0 ? spec.out_hi : *std::max_element(out.begin(), out.end());
    const DelayResult d = propagation_delay(in, out, w.t, {stim.v1, stim.v2}, {0.0, out_hi}, stim.per);
    r.delay_rise = d.delay_rise;
    r.delay_fall = d.delay_fall;
    r.delay_max = d.delay_max();
    if (waves_out) *waves_out = std::move(w);
    return r;
}

} // namespace lsim
