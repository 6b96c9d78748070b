#include "lsim/engine.hpp"
#include "lsim/netlist.hpp"
#include "lsim/topologies.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

using namespace lsim;

namespace {

int line_of(const std::string& text) {
    try {
        parse_netlist(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return -1;
}

} // namespace

TEST_CASE("engineering suffixes") {
    CHECK(parse_value("2.5u") == doctest::Approx(2.5e-6));
    CHECK(parse_value("10f") == doctest::Approx(1e-14));
    CHECK(parse_value("3meg") == doctest::Approx(3e6));
    CHECK(parse_value("3MEG") == doctest::Approx(3e6));
    CHECK(parse_value("3m") == doctest::Approx(3e-3));
    CHECK(parse_value("10pF") == doctest::Approx(1e-11));
    CHECK(parse_value("1e-9") == doctest::Approx(1e-9));
    CHECK(parse_value("-1.5k") == doctest::Approx(-1500.0));
    CHECK(parse_value("42") == 42.0);
    CHECK(parse_value(".5n") == doctest::Approx(0.5e-9));
    CHECK(parse_value("2g") == doctest::Approx(2e9));

    CHECK_THROWS_AS(parse_value(""), ParseError);
    CHECK_THROWS_AS(parse_value("u5"), ParseError);
    CHECK_THROWS_AS(parse_value("1.2.3"), ParseError);
    CHECK_THROWS_WITH_AS(parse_value("x1"), doctest::Contains("position 1"), ParseError);
}

TEST_CASE("random mantissa and suffix round trip") {
    const std::pair<const char*, double> suffixes[] = {{"f", 1e-15}, {"p", 1e-12}, {"n", 1e-9}, {"u", 1e-6},
                                                       {"m", 1e-3},  {"k", 1e3},   {"meg", 1e6}, {"g", 1e9},
                                                       {"", 1.0}};
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> mant(1, 999999);
    std::uniform_int_distribution<int> pick(0, 8);
    std::uniform_int_distribution<int> places(0, 4);
    for (int i = 0; i < 2000; ++i) {
        const auto& [sfx, scale] = suffixes[pick(rng)];
        const int m = mant(rng);
        const int dp = places(rng);
        std::string digits = std::to_string(m);
        while (static_cast<int>(digits.size()) <= dp) digits.insert(digits.begin(), '0');
        std::string text = digits;
        if (dp > 0) text.insert(text.size() - dp, ".");
        const double mantissa = m / std::pow(10.0, dp);
        const double got = parse_value(text + sfx);
        INFO(text << sfx);
        CHECK(got == doctest::Approx(mantissa * scale).epsilon(1e-14));
    }
}

TEST_CASE("format_value parses back exactly") {
    for (double v : {2.5e-6, 1e-14, 0.35e-6, 3.3, 48e-9, 1e-1, 170e-6, 1.234567e-13, 0.0, -2.2}) {
        CHECK(parse_value(format_value(v)) == v);
    }
}

TEST_CASE("comment-only netlist is empty") {
    const NetlistDoc d = parse_netlist("* comment\n.end\n");
    CHECK(d.devices.empty());
    CHECK(d.models.empty());
}

TEST_CASE("continuation lines and case folding") {
    const NetlistDoc d = parse_netlist("t\nM1 D G 0 0 NCH\n+ W=1u L=0.35u\n.MODEL nch nmos (VTH0=0.5)\n.END\n");
    REQUIRE(d.devices.size() == 1);
    CHECK(d.devices[0].name == "m1");
    CHECK(d.devices[0].nodes[0] == "d");
    CHECK(d.devices[0].w == doctest::Approx(1e-6));
    REQUIRE(d.models.size() == 1);
    CHECK(d.models[0].polarity == Polarity::Nmos);
}

TEST_CASE("errors carry the card's line number") {
    CHECK(line_of("t\nR1 a 0 1k\nQ1 a b c\n.end\n") == 3);
    CHECK(line_of("t\n* c\nR1 a 0 1k 2\n.end\n") == 3);
    CHECK(line_of("t\nM1 d g s nch W=1u L=1u\n.model nch nmos ()\n.end\n") == 2);
    CHECK(line_of("t\nM1 d g s b nch W=1u L=1u\n.end\n") == 2);
    CHECK(line_of("t\nR1 a 0 1k\n\nR1 b 0 1k\n.end\n") == 4);
    CHECK(line_of("t\nR1 a 0 1k\nC1 a 0 -1p\n.end\n") == 3);
    CHECK(line_of("t\nR1 a 0 1k\n") == 2);
    CHECK(line_of("t\nV1 a 0 PULSE(0 1 0 1n 1n)\n.end\n") == 2);
    CHECK(line_of("t\nR1 a 0 1k\n.model n nmos (TOX=1)\n.end\n") == 3);

    CHECK_THROWS_WITH_AS(parse_netlist("t\nR1 a 0 1k\nQ1 a b c\n.end\n"), "line 3: unknown card 'Q1'", ParseError);
    CHECK_THROWS_WITH_AS(parse_netlist("t\nM1 d g s b nmos W=1u L=1u\n.end\n"),
                         doctest::Contains("undeclared model"), ParseError);
}

TEST_CASE("elaboration assigns nodes in first-appearance order") {
    const Circuit c = elaborate(parse_netlist("t\nR1 in x 1k\nR2 x out 1k\nR3 out gnd 1k\n.end\n"));
    CHECK(c.node_index.at("in") == 0);
    CHECK(c.node_index.at("x") == 1);
    CHECK(c.node_index.at("out") == 2);
    CHECK(c.n_nodes() == 3);
}

TEST_CASE("elaboration errors and warnings") {
    CHECK_THROWS_AS(elaborate(parse_netlist("t\nR1 a a 1k\n.end\n")), ElaborationError);
    CHECK_THROWS_AS(elaborate(parse_netlist("t\nM1 d g 0 0 nch W=1u L=1u\n.model nch nmos (N=0.5)\n.end\n")),
                    ElaborationError);
    const Circuit c = elaborate(parse_netlist("t\nV1 a 0 DC 1\nR1 a b 1k\nR2 a 0 1k\n.end\n"));
    REQUIRE(c.warnings.size() == 1);
    CHECK(c.warnings[0].find("'b'") != std::string::npos);
}

TEST_CASE("model cards override defaults key by key") {
    const Circuit c = elaborate(parse_netlist("t\nM1 d g 0 0 nch W=1u L=1u\nV1 d 0 DC 1\nV2 g 0 DC 1\n"
                                              ".model nch nmos (VTH0=0.4)\n.end\n"));
    REQUIRE(c.mosfets.size() == 1);
    MosParams expect = MosParams::default_nmos();
    expect.vth0 = 0.4;
    CHECK(c.mosfets[0].params == expect);
}

TEST_CASE("generated conventional shifter card counts") {
    const NetlistDoc d = parse_netlist(to_text(gen(TopologyId::Cls)));
    const auto mos = std::count_if(d.devices.begin(), d.devices.end(),
                                   [](const DeviceCard& x) { return x.kind == DeviceKind::Mosfet; });
    CHECK(mos == 10);
    CHECK(d.models.size() == 2);
    CHECK(elaborate(gen(TopologyId::Cmls)).mosfets.size() == 12);
}

TEST_CASE("round trip through text for every topology") {
    for (TopologyId id : kAllTopologies) {
        const NetlistDoc direct = gen(id);
        const Circuit a = elaborate(direct);
        const Circuit b = elaborate(parse_netlist(to_text(direct)));
        INFO(to_string(id));
        CHECK(a.node_names == b.node_names);
        REQUIRE(a.mosfets.size() == b.mosfets.size());
        for (std::size_t i = 0; i < a.mosfets.size(); ++i) {
            CHECK(a.mosfets[i].name == b.mosfets[i].name);
            CHECK(a.mosfets[i].params == b.mosfets[i].params);
            CHECK(a.mosfets[i].w == b.mosfets[i].w);
            CHECK(a.mosfets[i].l == b.mosfets[i].l);
            CHECK(a.mosfets[i].nodes == b.mosfets[i].nodes);
        }
        REQUIRE(a.sources.size() == b.sources.size());
        for (std::size_t i = 0; i < a.sources.size(); ++i) CHECK(a.sources[i].wave == b.sources[i].wave);
        REQUIRE(a.caps.size() == b.caps.size());
        for (std::size_t i = 0; i < a.caps.size(); ++i) CHECK(a.caps[i].value == b.caps[i].value);
    }
}

TEST_CASE("card order does not change the simulated waveforms") {
    TopoParams p;
    p.tstop = 120e-9;
    NetlistDoc doc = gen(TopologyId::Cls, p);
    NetlistDoc shuffled = doc;
    std::mt19937 rng(3);
    std::shuffle(shuffled.devices.begin(), shuffled.devices.end(), rng);
    const Waveforms wa = transient(elaborate(doc), p.tstep, p.tstop);
    const Waveforms wb = transient(elaborate(shuffled), p.tstep, p.tstop);
    for (const auto& name : wa.node_names) {
        const auto& va = wa.node(name);
        const auto& vb = wb.node(name);
        double worst = 0.0;
        for (std::size_t k = 0; k < va.size(); ++k) worst = std::max(worst, std::fabs(va[k] - vb[k]));
        INFO(name);
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("model file parsing") {
    const auto cards = parse_model_file("* corner\n.model n nmos (VTH0=0.6)\n.model p pmos (KP=50u)\n");
    REQUIRE(cards.size() == 2);
    ModelDefaults d;
    d.apply(cards);
    CHECK(d.nmos.vth0 == doctest::Approx(0.6));
    CHECK(d.pmos.kp == doctest::Approx(50e-6));
    CHECK_THROWS_AS(parse_model_file("R1 a 0 1k\n"), ParseError);
}
