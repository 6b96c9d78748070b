#include "lsim/netlist.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace lsim {

ParseError::ParseError(int line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

namespace {

std::string to_upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

int suffix_exponent(std::string_view rest, bool& found) {
    found = true;
    if (rest.size() >= 3 && rest.substr(0, 3) == "meg") return 6;
    if (!rest.empty()) {
        switch (rest.front()) {
        case 'f': return -15;
        case 'p': return -12;
        case 'n': return -9;
        case 'u': return -6;
        case 'm': return -3;
        case 'k': return 3;
        case 'g': return 9;
        default: break;
        }
    }
    found = false;
    return 0;
}

double parse_value_at(std::string_view token, int line) {
    auto fail = [&](const std::string& why) {
        throw ParseError(line, "bad value '" + std::string(token) + "': " + why);
    };
    if (token.empty()) fail("empty token");

    // Mantissa: [+-] digits [. digits] [e [+-] digits]
    std::size_t i = 0;
    std::string core;
    if (token[i] == '+' || token[i] == '-') core += token[i++];
    std::size_t digits = 0;
    while (i < token.size() && is_digit(token[i])) { core += token[i++]; ++digits; }
    if (i < token.size() && token[i] == '.') {
        core += token[i++];
        while (i < token.size() && is_digit(token[i])) { core += token[i++]; ++digits; }
    }
    if (digits == 0) fail("malformed mantissa at position " + std::to_string(i + 1));

    long exponent = 0;
    if (i < token.size() && (token[i] == 'e' || token[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < token.size() && (token[j] == '+' || token[j] == '-')) ++j;
        if (j < token.size() && is_digit(token[j])) {
            const auto* first = token.data() + i + 1 + (token[i + 1] == '+' ? 1 : 0);
            const auto* last = token.data() + token.size();
            const auto res = std::from_chars(first, last, exponent);
            if (res.ec != std::errc{}) fail("malformed exponent");
            i = static_cast<std::size_t>(res.ptr - token.data());
        }
    }

    const std::string rest = to_lower(token.substr(i));
    bool has_suffix = false;
    exponent += suffix_exponent(rest, has_suffix);
    for (char c : rest) {
        if (!std::isalpha(static_cast<unsigned char>(c))) {
            fail("unexpected character '" + std::string(1, c) + "'");
        }
    }

    const std::string text = core + "e" + std::to_string(exponent);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || !std::isfinite(value)) fail("out of range");
    return value;
}

std::string shortest(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

struct Card {
    std::string text;
    int line;
};

std::vector<std::string> split_tokens(std::string s) {
    for (char& c : s) {
        if (c == '(' || c == ')' || c == ',') c = ' ';
    }
    // Glue "key = value" into "key=value".
    std::string glued;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '=') {
            while (!glued.empty() && std::isspace(static_cast<unsigned char>(glued.back()))) glued.pop_back();
            glued += '=';
            while (i + 1 < s.size() && std::isspace(static_cast<unsigned char>(s[i + 1]))) ++i;
        } else {
            glued += s[i];
        }
    }
    std::istringstream in(glued);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::vector<Card> logical_cards(std::string_view text, std::string* title) {
    std::vector<Card> cards;
    std::size_t pos = 0;
    int line_no = 0;
    bool first = true;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(pos, end - pos));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++line_no;
        pos = end + 1;

        if (first) {
            first = false;
            if (title) {
                *title = line;
                continue;
            }
        }
        const auto nb = line.find_first_not_of(" \t");
        if (nb == std::string::npos) continue;
        if (line[nb] == '*') continue;
        if (line[nb] == '+') {
            if (cards.empty()) throw ParseError(line_no, "continuation line without a card");
            cards.back().text += ' ' + line.substr(nb + 1);
            continue;
        }
        cards.push_back({line.substr(nb), line_no});
    }
    return cards;
}

ModelCard parse_model_card(const std::vector<std::string>& tok, int line) {
    if (tok.size() < 3) throw ParseError(line, ".model needs a name and a type");
    ModelCard m;
    m.name = to_lower(tok[1]);
    m.line = line;
    const std::string type = to_lower(tok[2]);
    if (type == "nmos") m.polarity = Polarity::Nmos;
    else if (type == "pmos") m.polarity = Polarity::Pmos;
    else throw ParseError(line, "model type must be NMOS or PMOS, got '" + tok[2] + "'");
    MosParams probe;
    for (std::size_t i = 3; i < tok.size(); ++i) {
        const auto eq = tok[i].find('=');
        if (eq == std::string::npos) throw ParseError(line, "expected key=value, got '" + tok[i] + "'");
        const std::string key = to_upper(tok[i].substr(0, eq));
        const double v = parse_value_at(tok[i].substr(eq + 1), line);
        if (!probe.set(key, v)) throw ParseError(line, "unknown model parameter '" + key + "'");
        m.params.emplace_back(key, v);
    }
    return m;
}

DeviceCard parse_device(const std::vector<std::string>& tok, int line) {
    DeviceCard d;
    d.line = line;
    d.name = to_lower(tok[0]);
    const char letter = d.name.front();

    std::vector<std::string> positional;
    std::vector<std::pair<std::string, std::string>> keyed;
    for (std::size_t i = 1; i < tok.size(); ++i) {
        const auto eq = tok[i].find('=');
        if (eq == std::string::npos) positional.push_back(tok[i]);
        else keyed.emplace_back(to_lower(tok[i].substr(0, eq)), tok[i].substr(eq + 1));
    }

    auto terminal_error = [&](std::size_t want) {
        throw ParseError(line, "wrong terminal count for '" + tok[0] + "': expected " +
                                   std::to_string(want) + " nodes");
    };

    switch (letter) {
    case 'm': {
        d.kind = DeviceKind::Mosfet;
        if (positional.size() != 5) terminal_error(4);
        for (int i = 0; i < 4; ++i) d.nodes.push_back(to_lower(positional[i]));
        d.model = to_lower(positional[4]);
        for (const auto& [key, val] : keyed) {
            if (key == "w") d.w = parse_value_at(val, line);
            else if (key == "l") d.l = parse_value_at(val, line);
            else throw ParseError(line, "unknown MOSFET parameter '" + key + "'");
        }
        if (!(d.w > 0.0) || !(d.l > 0.0)) throw ParseError(line, "MOSFET needs W > 0 and L > 0");
        break;
    }
    case 'c':
    case 'r': {
        d.kind = letter == 'c' ? DeviceKind::Capacitor : DeviceKind::Resistor;
        if (!keyed.empty()) throw ParseError(line, "unexpected parameter '" + keyed.front().first + "'");
        if (positional.size() != 3) terminal_error(2);
        d.nodes = {to_lower(positional[0]), to_lower(positional[1])};
        d.value = parse_value_at(positional[2], line);
        if (!(d.value > 0.0)) throw ParseError(line, "value must be > 0");
        break;
    }
    case 'v': {
        d.kind = DeviceKind::VSource;
        if (!keyed.empty()) throw ParseError(line, "unexpected parameter '" + keyed.front().first + "'");
        if (positional.size() < 3) terminal_error(2);
        d.nodes = {to_lower(positional[0]), to_lower(positional[1])};
        const std::string kw = to_lower(positional[2]);
        std::vector<double> args;
        const std::size_t first_arg = (kw == "dc" || kw == "pulse") ? 3 : 2;
        for (std::size_t i = first_arg; i < positional.size(); ++i) {
            args.push_back(parse_value_at(positional[i], line));
        }
        if (kw == "pulse") {
            if (args.size() != 7) throw ParseError(line, "PULSE needs 7 values (v1 v2 td tr tf pw per)");
            d.wave = SourceWave::pulse(args[0], args[1], args[2], args[3], args[4], args[5], args[6]);
            try {
                d.wave.validate();
            } catch (const std::invalid_argument& e) {
                throw ParseError(line, e.what());
            }
        } else {
            if (args.size() != 1) throw ParseError(line, "voltage source needs DC <value> or PULSE(...)");
            d.wave = SourceWave::dc(args[0]);
        }
        break;
    }
    default:
        throw ParseError(line, "unknown card '" + tok[0] + "'");
    }
    return d;
}

} // namespace

double parse_value(std::string_view token) { return parse_value_at(token, 0); }

std::string format_value(double v) {
    if (v == 0.0) return "0";
    static constexpr std::array<std::pair<const char*, int>, 9> kSuffixes{{
        {"", 0}, {"k", 3}, {"meg", 6}, {"g", 9}, {"m", -3}, {"u", -6}, {"n", -9}, {"p", -12}, {"f", -15}}};
    std::string best = shortest(v);
    for (const auto& [suffix, e] : kSuffixes) {
        const double m = v / std::pow(10.0, e);
        std::string text = shortest(m) + suffix;
        if (text.find('e') != std::string::npos) continue;
        if (parse_value(text) == v && text.size() < best.size()) best = std::move(text);
    }
    return best;
}

bool is_ground(std::string_view node) {
    const std::string n = to_lower(node);
    return n == "0" || n == "gnd";
}

const DeviceCard* NetlistDoc::find_device(std::string_view name) const {
    const std::string key = to_lower(name);
    for (const auto& d : devices) {
        if (d.name == key) return &d;
    }
    return nullptr;
}

const ModelCard* NetlistDoc::find_model(std::string_view name) const {
    const std::string key = to_lower(name);
    for (const auto& m : models) {
        if (m.name == key) return &m;
    }
    return nullptr;
}

std::optional<AnalysisDirective> NetlistDoc::tran() const {
    if (directives.empty()) return std::nullopt;
    return directives.back();
}

NetlistDoc parse_netlist(std::string_view text) {
    NetlistDoc doc;
    const auto cards = logical_cards(text, &doc.title);
    bool ended = false;
    int last_line = 1;
    for (const auto& card : cards) {
        last_line = card.line;
        const auto tok = split_tokens(card.text);
        if (tok.empty()) continue;
        const std::string head = to_lower(tok[0]);
        if (head.front() == '.') {
            if (head == ".end") {
                ended = true;
                break;
            }
            if (head == ".model") {
                doc.models.push_back(parse_model_card(tok, card.line));
            } else if (head == ".tran") {
                if (tok.size() != 3) throw ParseError(card.line, ".tran needs <tstep> <tstop>");
                AnalysisDirective a{parse_value_at(tok[1], card.line), parse_value_at(tok[2], card.line), card.line};
                if (!(a.tstep > 0.0) || !(a.tstop > 0.0)) throw ParseError(card.line, ".tran values must be > 0");
                doc.directives.push_back(a);
            } else {
                throw ParseError(card.line, "unknown directive '" + tok[0] + "'");
            }
            continue;
        }
        doc.devices.push_back(parse_device(tok, card.line));
    }
    if (!ended) throw ParseError(last_line, "missing .end");

    std::set<std::string> names;
    for (const auto& d : doc.devices) {
        if (!names.insert(d.name).second) throw ParseError(d.line, "duplicate device name '" + d.name + "'");
    }
    std::set<std::string> model_names;
    for (const auto& m : doc.models) {
        if (!model_names.insert(m.name).second) throw ParseError(m.line, "duplicate model '" + m.name + "'");
    }
    for (const auto& d : doc.devices) {
        if (d.kind == DeviceKind::Mosfet && !doc.find_model(d.model)) {
            throw ParseError(d.line, "undeclared model '" + d.model + "' on '" + d.name + "'");
        }
    }
    return doc;
}

std::vector<ModelCard> parse_model_file(std::string_view text) {
    std::vector<ModelCard> out;
    for (const auto& card : logical_cards(text, nullptr)) {
        const auto tok = split_tokens(card.text);
        if (tok.empty()) continue;
        const std::string head = to_lower(tok[0]);
        if (head == ".end") break;
        if (head != ".model") throw ParseError(card.line, "only .model cards are allowed here");
        out.push_back(parse_model_card(tok, card.line));
    }
    return out;
}

std::string to_text(const NetlistDoc& doc) {
    std::ostringstream os;
    os << doc.title << '\n';
    for (const auto& d : doc.devices) {
        os << to_upper(d.name);
        for (const auto& n : d.nodes) os << ' ' << n;
        switch (d.kind) {
        case DeviceKind::Mosfet:
            os << ' ' << d.model << " W=" << format_value(d.w) << " L=" << format_value(d.l);
            break;
        case DeviceKind::Capacitor:
        case DeviceKind::Resistor:
            os << ' ' << format_value(d.value);
            break;
        case DeviceKind::VSource:
            if (d.wave.kind == WaveKind::Dc) {
                os << " DC " << format_value(d.wave.v1);
            } else {
                const auto& w = d.wave;
                os << " PULSE(" << format_value(w.v1) << ' ' << format_value(w.v2) << ' '
                   << format_value(w.td) << ' ' << format_value(w.tr) << ' ' << format_value(w.tf)
                   << ' ' << format_value(w.pw) << ' ' << format_value(w.per) << ')';
            }
            break;
        }
        os << '\n';
    }
    for (const auto& m : doc.models) {
        os << ".model " << m.name << (m.polarity == Polarity::Nmos ? " NMOS" : " PMOS");
        if (!m.params.empty()) {
            os << " (";
            for (std::size_t i = 0; i < m.params.size(); ++i) {
                if (i) os << ' ';
                os << m.params[i].first << '=' << format_value(m.params[i].second);
            }
            os << ')';
        }
        os << '\n';
    }
    for (const auto& a : doc.directives) {
        os << ".tran " << format_value(a.tstep) << ' ' << format_value(a.tstop) << '\n';
    }
    os << ".end\n";
    return os.str();
}

// -- Elaboration ---------------------------------------------------------------

void ModelDefaults::apply(const std::vector<ModelCard>& cards) {
    for (const auto& c : cards) {
        MosParams& target = c.polarity == Polarity::Nmos ? nmos : pmos;
        for (const auto& [key, v] : c.params) target.set(key, v);
    }
}

MosParams resolve_model(const ModelCard& card, const ModelDefaults& defaults) {
    MosParams p = card.polarity == Polarity::Nmos ? defaults.nmos : defaults.pmos;
    p.polarity = card.polarity;
    for (const auto& [key, v] : card.params) p.set(key, v);
    p.validate();
    return p;
}

int Circuit::node(std::string_view name) const {
    if (is_ground(name)) return kGround;
    const auto it = node_index.find(to_lower(name));
    if (it == node_index.end()) throw std::out_of_range("unknown node '" + std::string(name) + "'");
    return it->second;
}

int Circuit::source(std::string_view name) const {
    const std::string key = to_lower(name);
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (sources[i].name == key) return static_cast<int>(i);
    }
    throw std::out_of_range("unknown source '" + std::string(name) + "'");
}

Circuit elaborate(const NetlistDoc& doc, const ModelDefaults& defaults) {
    Circuit c;
    std::vector<int> incidence;
    auto index_of = [&](const std::string& name) {
        if (is_ground(name)) return kGround;
        const auto [it, inserted] = c.node_index.emplace(name, c.n_nodes());
        if (inserted) {
            c.node_names.push_back(name);
            incidence.push_back(0);
        }
        ++incidence[static_cast<std::size_t>(it->second)];
        return it->second;
    };

    std::map<std::string, MosParams> models;
    for (const auto& m : doc.models) {
        try {
            models.emplace(m.name, resolve_model(m, defaults));
        } catch (const std::invalid_argument& e) {
            throw ElaborationError("model '" + m.name + "': " + e.what());
        }
    }

    for (const auto& d : doc.devices) {
        std::vector<int> idx;
        for (const auto& n : d.nodes) idx.push_back(index_of(n));
        switch (d.kind) {
        case DeviceKind::Mosfet: {
            const auto it = models.find(d.model);
            if (it == models.end()) throw ElaborationError("undeclared model '" + d.model + "'");
            c.mosfets.push_back({d.name, it->second, d.w, d.l, {idx[0], idx[1], idx[2], idx[3]}});
            break;
        }
        case DeviceKind::Capacitor:
        case DeviceKind::Resistor:
            if (idx[0] == idx[1]) {
                throw ElaborationError("device '" + d.name + "' has both terminals on node '" + d.nodes[0] + "'");
            }
            (d.kind == DeviceKind::Capacitor ? c.caps : c.resistors).push_back({d.name, idx[0], idx[1], d.value});
            break;
        case DeviceKind::VSource:
            c.sources.push_back({d.name, idx[0], idx[1], d.wave});
            break;
        }
    }

    std::vector<bool> on_source(static_cast<std::size_t>(c.n_nodes()), false);
    for (const auto& s : c.sources) {
        if (s.pos != kGround) on_source[static_cast<std::size_t>(s.pos)] = true;
        if (s.neg != kGround) on_source[static_cast<std::size_t>(s.neg)] = true;
    }
    for (int i = 0; i < c.n_nodes(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (incidence[k] == 1 && !on_source[k]) {
            c.warnings.push_back("node '" + c.node_names[k] + "' has a single device terminal (floating)");
        }
    }
    return c;
}

} // namespace lsim
