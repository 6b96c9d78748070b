#include "lsim/devmodel.hpp"
#include "oracle_values.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace lsim;

namespace {

constexpr double kL = 0.35e-6;

double rel_err(double a, double b, double floor) {
    const double scale = std::max({std::fabs(a), std::fabs(b), floor});
    return std::fabs(a - b) / scale;
}

} // namespace

TEST_CASE("effective threshold with DIBL and body effect") {
    const MosParams n = MosParams::default_nmos();
    CHECK(effective_vth(n, 3.3, 0.0) == doctest::Approx(oracle::kVteSat).epsilon(1e-12));
    CHECK(effective_vth(n, 0.0, 1.0) == doctest::Approx(oracle::kVteBody).epsilon(1e-12));
    CHECK(effective_vth(n, 0.0, 0.0) == doctest::Approx(n.vth0));

    // forward-biased body clamps at -phi/2
    CHECK(effective_vth(n, 0.0, -5.0) == doctest::Approx(effective_vth(n, 0.0, -0.4)));
}

TEST_CASE("zero current at vds = 0") {
    const MosParams n = MosParams::default_nmos();
    for (double vgs : {0.0, 0.3, 1.0, 3.3}) {
        CHECK(mosfet_eval(n, {vgs, 0.0, 0.0}, 1e-6, kL).id == doctest::Approx(0.0));
    }
}

TEST_CASE("off current of a single device") {
    const auto e = mosfet_eval(MosParams::default_nmos(), {0.0, 3.3, 0.0}, 1e-6, kL);
    CHECK(e.id == doctest::Approx(oracle::kOffCurrent1u).epsilon(1e-9));
}

TEST_CASE("saturation approaches the square-law asymptote") {
    MosParams n = MosParams::default_nmos();
    n.lambda = 0.0;
    n.eta_dibl = 0.0;
    const double w = 1e-6;
    const double vgs = 2.0;
    const double ov = vgs - n.vth0;
    const double asym = n.kp / (2.0 * n.n_slope) * (w / kL) * ov * ov;
    const double id = mosfet_eval(n, {vgs, 3.3, 0.0}, w, kL).id;
    CHECK(std::fabs(id - asym) / asym < 0.05);
}

TEST_CASE("analytic derivatives match central differences") {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> bias(0.0, 3.6);
    std::uniform_real_distribution<double> body(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double h = 1e-6;
    const double floor = 1e-15;
    int worst_count = 0;
    for (int i = 0; i < 1000; ++i) {
        MosParams p = unit(rng) < 0.5 ? MosParams::default_nmos() : MosParams::default_pmos();
        p.vth0 *= 0.8 + 0.4 * unit(rng);
        p.lambda *= 2.0 * unit(rng);
        p.eta_dibl *= 2.0 * unit(rng);
        p.gamma_body *= 0.5 + unit(rng);
        const double w = (0.5 + 4.5 * unit(rng)) * 1e-6;
        const MosBias b{bias(rng), bias(rng), body(rng)};
        const MosEval e = mosfet_eval(p, b, w, kL);
        auto id = [&](MosBias x) { return mosfet_eval(p, x, w, kL).id; };
        const double gm = (id({b.vgs + h, b.vds, b.vsb}) - id({b.vgs - h, b.vds, b.vsb})) / (2 * h);
        const double gds = (id({b.vgs, b.vds + h, b.vsb}) - id({b.vgs, b.vds - h, b.vsb})) / (2 * h);
        const double gmb = -(id({b.vgs, b.vds, b.vsb + h}) - id({b.vgs, b.vds, b.vsb - h})) / (2 * h);
        const bool ok = rel_err(e.gm, gm, floor) < 1e-4 && rel_err(e.gds, gds, floor) < 1e-4 &&
                        rel_err(e.gmb, gmb, floor) < 1e-4;
        if (!ok) {
            ++worst_count;
            INFO("vgs=" << b.vgs << " vds=" << b.vds << " vsb=" << b.vsb);
            CHECK(rel_err(e.gm, gm, floor) < 1e-4);
            CHECK(rel_err(e.gds, gds, floor) < 1e-4);
            CHECK(rel_err(e.gmb, gmb, floor) < 1e-4);
        }
    }
    CHECK(worst_count == 0);
}

TEST_CASE("current is monotone in vgs and vds") {
    const MosParams n = MosParams::default_nmos();
    for (double vds = 0.05; vds <= 3.6; vds += 0.35) {
        double prev = -1.0;
        for (double vgs = 0.0; vgs <= 3.6; vgs += 0.01) {
            const double id = mosfet_eval(n, {vgs, vds, 0.0}, 1e-6, kL).id;
            REQUIRE(id >= prev);
            prev = id;
        }
    }
    for (double vgs = 0.0; vgs <= 3.6; vgs += 0.3) {
        double prev = -1.0;
        for (double vds = 0.0; vds <= 3.6; vds += 0.01) {
            const double id = mosfet_eval(n, {vgs, vds, 0.0}, 1e-6, kL).id;
            REQUIRE(id >= prev);
            prev = id;
        }
    }
}

TEST_CASE("subthreshold slope") {
    for (const MosParams& p : {MosParams::default_nmos(), MosParams::default_pmos()}) {
        const double vds = 1.0;
        const double vte = effective_vth(p, vds, 0.0);
        const double v0 = vte - 0.4;
        const double v1 = vte - 0.2;
        const double i0 = mosfet_eval(p, {v0, vds, 0.0}, 1e-6, kL).id;
        const double i1 = mosfet_eval(p, {v1, vds, 0.0}, 1e-6, kL).id;
        const double slope = (std::log10(i1) - std::log10(i0)) / (v1 - v0);
        const double ideal = 1.0 / (p.n_slope * kThermalVoltage * std::log(10.0));
        CHECK(std::fabs(slope - ideal) / ideal < 0.05);
    }
}

TEST_CASE("source/drain swap reverses the current") {
    const MosParams n = MosParams::default_nmos();
    // device with d and s exchanged sees the mirrored bias
    const double vd = 0.4, vg = 2.0, vs = 1.5, vb = 0.0;
    const auto fwd = mosfet_terminal_eval(n, vd, vg, vs, vb, 1e-6, kL);
    const auto rev = mosfet_terminal_eval(n, vs, vg, vd, vb, 1e-6, kL);
    CHECK(fwd.id < 0.0);
    CHECK(fwd.id == doctest::Approx(-rev.id).epsilon(1e-12));
}

TEST_CASE("PMOS mirrors NMOS with equal parameters") {
    MosParams n = MosParams::default_nmos();
    MosParams p = n;
    p.polarity = Polarity::Pmos;
    for (double vg : {0.0, 0.7, 1.6, 3.0}) {
        for (double vd : {0.0, 0.9, 3.3}) {
            const auto en = mosfet_terminal_eval(n, vd, vg, 0.0, 0.0, 1e-6, kL);
            const auto ep = mosfet_terminal_eval(p, -vd, -vg, 0.0, 0.0, 1e-6, kL);
            CHECK(ep.id == doctest::Approx(-en.id).epsilon(1e-12));
            for (int k = 0; k < 4; ++k) CHECK(ep.did[k] == doctest::Approx(en.did[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("terminal derivatives sum to zero") {
    const auto e = mosfet_terminal_eval(MosParams::default_pmos(), 1.0, 0.5, 3.3, 3.3, 2.5e-6, kL);
    CHECK(e.did[0] + e.did[1] + e.did[2] + e.did[3] == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("lumped capacitances") {
    const MosCaps c = mosfet_caps(MosParams::default_nmos(), 1e-6, kL);
    CHECK(c.cgs == doctest::Approx(oracle::kCgs1u).epsilon(1e-12));
    CHECK(c.cgd == doctest::Approx(c.cgs));
    CHECK(c.cdb == doctest::Approx(9e-16));
    CHECK(c.csb == doctest::Approx(9e-16));
}

TEST_CASE("pulse source values") {
    const SourceWave w = SourceWave::pulse(0.0, 1.6, 1e-9, 1e-9, 1e-9, 48e-9, 100e-9);
    CHECK(source_value(w, 0.0) == 0.0);
    CHECK(source_value(w, 1.5e-9) == doctest::Approx(0.8));
    CHECK(source_value(w, 20e-9) == doctest::Approx(1.6));
    CHECK(source_value(w, 50.5e-9) == doctest::Approx(0.8));
    CHECK(source_value(w, 70e-9) == doctest::Approx(0.0));
    CHECK(source_value(w, 120e-9) == doctest::Approx(1.6));
    CHECK(source_value(SourceWave::dc(3.3), 5e-9) == 3.3);

    CHECK_THROWS_AS(SourceWave::pulse(0, 1, 0, 0, 1e-9, 1e-9, 1e-8).validate(), std::invalid_argument);
    CHECK_THROWS_AS(SourceWave::pulse(0, 1, 0, 1e-9, 1e-9, 1e-9, 2e-9).validate(), std::invalid_argument);
    CHECK_NOTHROW(w.validate());
}

TEST_CASE("parameter keys and validation") {
    MosParams p;
    CHECK(p.set("vth0", 0.4));
    CHECK(p.vth0 == 0.4);
    CHECK(p.set("CJW", 1e-9));
    CHECK_FALSE(p.set("TOX", 1.0));
    CHECK_NOTHROW(p.validate());
    p.n_slope = 0.9;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    MosParams q;
    q.kp = 0.0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}
