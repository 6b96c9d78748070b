#pragma once

// SPICE-subset netlist: parsing, serialization and elaboration.
//
// Grammar (line oriented, first line is the title):
//   * comment                      + continuation of the previous card
//   M<name> d g s b <model> W=<v> L=<v>
//   V<name> n+ n- DC <v>  |  V<name> n+ n- PULSE(v1 v2 td tr tf pw per)
//   C<name> n+ n- <v>      R<name> n+ n- <v>
//   .model <name> NMOS|PMOS (<key>=<v> ...)   .tran <tstep> <tstop>   .end
//
// Names and keywords are case-insensitive; they are stored lower-cased.

#include "lsim/devmodel.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lsim {

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what);
    /// 1-based line of the offending card; 0 when parsing a lone token.
    int line() const { return line_; }

private:
    int line_;
};

class ElaborationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Expands an engineering-notation token ("2.5u", "10pF", "3meg").
double parse_value(std::string_view token);

/// Shortest engineering-notation text that parses back to exactly `v`.
std::string format_value(double v);

enum class DeviceKind { Mosfet, VSource, Capacitor, Resistor };

struct DeviceCard {
    DeviceKind kind = DeviceKind::Resistor;
    std::string name;
    std::vector<std::string> nodes; // d g s b for M, n+ n- otherwise
    std::string model;              // M only
    double w = 0.0;                 // M only, meters
    double l = 0.0;                 // M only, meters
    double value = 0.0;             // farads or ohms
    SourceWave wave;                // V only
    int line = 0;
};

struct ModelCard {
    std::string name;
    Polarity polarity = Polarity::Nmos;
    std::vector<std::pair<std::string, double>> params; // upper-case keys
    int line = 0;
};

struct AnalysisDirective {
    double tstep = 0.0;
    double tstop = 0.0;
    int line = 0;
};

struct NetlistDoc {
    std::string title;
    std::vector<DeviceCard> devices;
    std::vector<ModelCard> models;
    std::vector<AnalysisDirective> directives;

    const DeviceCard* find_device(std::string_view name) const;
    const ModelCard* find_model(std::string_view name) const;
    std::optional<AnalysisDirective> tran() const;
};

NetlistDoc parse_netlist(std::string_view text);

/// Parses a file holding only `.model` cards (plus comments).
std::vector<ModelCard> parse_model_file(std::string_view text);

/// Renders a document in the grammar above; parse_netlist(to_text(d)) is
/// equivalent to d.
std::string to_text(const NetlistDoc& doc);

std::string to_lower(std::string_view s);
bool is_ground(std::string_view node);

// -- Elaborated circuit --------------------------------------------------------

inline constexpr int kGround = -1;

struct MosInstance {
    std::string name;
    MosParams params;
    double w = 0.0;
    double l = 0.0;
    std::array<int, 4> nodes{}; // d g s b
};

struct TwoTerminal {
    std::string name;
    int a = kGround;
    int b = kGround;
    double value = 0.0;
};

struct SourceInstance {
    std::string name;
    int pos = kGround;
    int neg = kGround;
    SourceWave wave;
};

/// Per-polarity defaults that `.model` cards override key by key.
struct ModelDefaults {
    MosParams nmos = MosParams::default_nmos();
    MosParams pmos = MosParams::default_pmos();

    /// Folds parsed model cards into the defaults of their polarity.
    void apply(const std::vector<ModelCard>& cards);
};

struct Circuit {
    std::vector<std::string> node_names; // dense index -> name
    std::map<std::string, int> node_index;
    std::vector<MosInstance> mosfets;
    std::vector<TwoTerminal> caps;
    std::vector<TwoTerminal> resistors;
    std::vector<SourceInstance> sources; // branch k belongs to sources[k]
    std::vector<std::string> warnings;

    int n_nodes() const { return static_cast<int>(node_names.size()); }
    int n_branches() const { return static_cast<int>(sources.size()); }
    int size() const { return n_nodes() + n_branches(); }

    /// Dense index of a node, kGround for ground; throws for unknown names.
    int node(std::string_view name) const;
    int source(std::string_view name) const;
};

Circuit elaborate(const NetlistDoc& doc, const ModelDefaults& defaults = {});

/// Resolves a model card's parameters on top of the defaults.
MosParams resolve_model(const ModelCard& card, const ModelDefaults& defaults = {});

} // namespace lsim
