#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ipcamo/aig.hpp"
#include "ipcamo/attack.hpp"
#include "ipcamo/circuit.hpp"
#include "ipcamo/covert.hpp"
#include "ipcamo/matrix.hpp"
#include "ipcamo/tensors.hpp"

namespace ipcamo {

class AigVae;

// 2-bit state of a node pair: connection bit then inversion bit.  Both 00 and
// 01 mean "no connection".
enum class EdgeState : std::uint8_t { None, Plain, Inverted };

const char* to_string(EdgeState s);  // "00/01", "10", "11"

// Throws std::invalid_argument unless j < i < t.size().
EdgeState edge_state(const TensorTriple& t, std::size_t i, std::size_t j);

enum class FixPhase { Functional, Appearance };
enum class FixAction { NA, CONNECT, INSERT_INV, FB, FI, UT_A, UT_B };

const char* to_string(FixPhase p);
const char* to_string(FixAction a);
FixAction fix_action_from_string(const std::string& s);

// Fix table.  The first state belongs to the graph being repaired (Ĝ in the
// functional phase, Ĝ_F in the appearance phase), the second to the reference.
FixAction fix_lookup(FixPhase phase, EdgeState g, EdgeState ref);

struct FixStep {
    FixAction action = FixAction::NA;
    std::size_t dst = 0;  // frame slots
    std::size_t src = 0;
    FixPhase phase = FixPhase::Functional;

    friend bool operator==(const FixStep&, const FixStep&) = default;
};

// Convex combination (1 - p) zf + p za.  Throws on shape mismatch or p outside [0, 1].
Matrix interpolate(const Matrix& zf, const Matrix& za, double p);

// Aligned node frame: slots [PIs | ANDs | POs], each block as wide as the
// largest per-type count among the graphs being aligned.
struct Frame {
    std::size_t pi = 0;
    std::size_t and_ = 0;
    std::size_t po = 0;

    std::size_t size() const { return pi + and_ + po; }
    NodeType type(std::size_t slot) const;
    std::size_t slot(NodeType t, std::size_t ordinal) const;
    static Frame cover(const AigGraph& g);
    Frame merge(const Frame& o) const;
    friend bool operator==(const Frame&, const Frame&) = default;
};

// What an attacker sees on one node pair.
enum class SiteCell { None, Wire, Inverter, Covert };

struct Site {
    EdgeState function = EdgeState::None;  // true behavior, always F's state
    SiteCell cell = SiteCell::None;
    CovertKind kind = CovertKind::FI;      // valid when cell == Covert
    CovertMode mode = CovertMode::Const1;
};

using SiteKey = std::pair<std::size_t, std::size_t>;  // (dst slot, src slot)

// Result of the functional phase (also the input of the appearance phase).
struct PreservedGraph {
    Frame frame;
    std::vector<std::string> names;  // per slot
    std::vector<bool> real;          // slot holds a node of F
    std::map<SiteKey, Site> sites;   // only pairs that are not None/None
    std::vector<FixStep> fix_log;
    std::vector<std::string> warnings;
    std::size_t real_po = 0;  // slot of F's output
};

// Aligns Ĝ with F and applies the functional column of the fix table.  F must
// be canonical with one PO.  Ĝ edges leaving a PO, entering a PI or
// duplicating a node pair are dropped with a warning.
PreservedGraph functional_preserve(const AigGraph& g_hat, const AigGraph& f);

// Slot-indexed AIG of the true function (F's edges in the frame).
AigGraph functional_graph(const PreservedGraph& g);

struct Placement {
    CovertKind kind = CovertKind::FI;
    CovertMode mode = CovertMode::Const1;
    std::size_t dst = 0;  // site in frame slots
    std::size_t src = 0;
    std::size_t real_input = 0;              // appearance gate
    std::vector<std::size_t> dummy_inputs;   // appearance gates
    std::vector<std::size_t> cells;          // appearance gates, output last

    std::size_t output() const { return cells.back(); }
};

struct CamoMetadata {
    bool from_pipeline = false;
    double p = 0.0;
    double th = 0.0;
    std::uint64_t seed = 0;
    std::string model_checksum;
    std::size_t node_count = 0;
};

struct CamouflagedNetlist {
    AigGraph functional_view;  // slot-indexed true function
    Circuit appearance_view;   // plain gates as an attacker sees them
    std::vector<Placement> placements;
    std::vector<FixStep> fix_log;
    Frame frame;
    std::vector<std::size_t> slot_gates;  // appearance gate per slot, kAbsent when omitted
    std::vector<std::string> warnings;
    CamoMetadata metadata;

    static constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
};

// Extends the frame to cover A, applies the appearance column of the fix
// table and renders both views.  UT dummy inputs are drawn from earlier nets
// with an RNG seeded by `seed`.
CamouflagedNetlist appearance_mimic(const PreservedGraph& g, const AigGraph& a, std::uint64_t seed);

// Appearance view with each covert cell replaced by its true function.
Circuit functional_circuit(const CamouflagedNetlist& c);
std::vector<CovertCellInfo> covert_cells(const CamouflagedNetlist& c);

// Appearance cells (an FB counts two) over the cell count of F.
double area_overhead(const CamouflagedNetlist& c, const AigGraph& f);
std::size_t appearance_cell_count(const CamouflagedNetlist& c);

// Node count used to decode interpolated codes: sum over types of the larger count.
std::size_t pipeline_node_count(const AigGraph& f, const AigGraph& a);

// Encode both circuits (mean codes), interpolate, decode N nodes and filter.
TensorTriple interpolated_triple(const AigVae& model, const AigGraph& f, const AigGraph& a, double p, double th);

CamouflagedNetlist camouflage_pipeline(const AigGraph& f, const AigGraph& a, const AigVae& model, double p,
                                       double th, std::uint64_t seed);

std::string to_json(const CamouflagedNetlist& c);
CamouflagedNetlist camouflaged_from_json(const std::string& text);

}  // namespace ipcamo
