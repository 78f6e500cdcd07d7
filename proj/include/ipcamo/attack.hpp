#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ipcamo/aig.hpp"
#include "ipcamo/circuit.hpp"
#include "ipcamo/covert.hpp"
#include "ipcamo/sat.hpp"

namespace ipcamo {

// ---- equivalence ----------------------------------------------------------

enum class EquivMode { Auto, TruthTable, Miter };

inline constexpr std::size_t kTruthTableLimit = 16;

struct EquivResult {
    bool decided = true;  // false when the miter ran out of budget
    bool equal = false;
    EquivMode used = EquivMode::Auto;
    std::vector<std::string> input_names;  // union of both interfaces
    std::vector<bool> counterexample;      // aligned with input_names
    std::string output;                    // first differing output
};

// Inputs are matched by name; an input present in only one circuit is a free
// variable.  Every output of `a` must exist in `b` by name and only those are
// compared.  Keyed circuits are rejected.  Auto uses truth tables up to
// kTruthTableLimit inputs and a SAT miter above.
EquivResult equivalence_check(const Circuit& a, const Circuit& b, EquivMode mode = EquivMode::Auto,
                              const SatBudget& budget = {});

// ---- keyed attack model ----------------------------------------------------

struct CovertCellInfo {
    std::size_t gate = 0;  // output gate of the rendered cell
    CovertKind kind = CovertKind::FI;
    CovertMode mode = CovertMode::Const1;
};

struct KeyedElement {
    KeyedClass cls = KeyedClass::Inv;
    std::vector<std::size_t> cells;  // appearance gates replaced by this element
    std::size_t pin_a = 0;           // appearance gate driving the element
    std::size_t key_bit = 0;         // k1 is key bit key_bit, k0 is key_bit + 1
    bool covert = false;
};

struct KeyedNetlist {
    Circuit circuit;  // appearance inputs plus one Key gate per key bit
    std::vector<KeyedElement> elements;
    std::vector<bool> correct_key;
    bool correct_key_known = true;  // false when a genuine NAND was keyed

    std::size_t key_count() const { return 2 * elements.size(); }
    std::size_t count(KeyedClass c) const;
};

// Truth table of a keyed element over inputs (a, k1, k0).
std::uint16_t keyed_lut(KeyedClass c);

// Every inverter, inverter pair and 2-input NAND of the appearance view is
// replaced by a keyed element.  `covert` identifies the covert cells so the
// correct key can be derived.
KeyedNetlist keyize_netlist(const Circuit& appearance, const std::vector<CovertCellInfo>& covert = {});

// ---- DIP attack --------------------------------------------------------------

using Oracle = std::function<std::vector<bool>(const std::vector<bool>&)>;

enum class DipOutcome { UniqueKey, Timeout, MemoryLimit };
const char* to_string(DipOutcome o);

struct DipIteration {
    std::vector<bool> input;
    std::vector<bool> output;
    std::size_t clauses_added = 0;
};

// Zero means unlimited.
struct DipBudget {
    double seconds = 60.0;
    std::uint64_t conflicts = 10'000'000;
    std::size_t memory_bytes = 0;
};

struct DipResult {
    DipOutcome outcome = DipOutcome::Timeout;
    std::vector<bool> key;
    std::vector<DipIteration> trace;
    double seconds = 0.0;
    SatStats stats;

    std::size_t iterations() const { return trace.size(); }
};

Oracle circuit_oracle(const Circuit& c);

// Oracle inputs/outputs follow the keyed circuit's input and output order.
DipResult dip_attack(const Circuit& keyed, const Oracle& oracle, const DipBudget& budget = {});

// Keyed circuit with the given inputs fixed, constants folded.
Circuit specialize_inputs(const Circuit& c, const std::vector<bool>& in);

// ---- logic-locking baseline ----------------------------------------------------

struct LockedBaseline {
    Circuit circuit;
    std::vector<bool> correct_key;
    std::vector<std::size_t> sites;  // locked gates of circuit_from_aig(f), sorted, repeated when stacked
    std::size_t base_cells = 0;

    double area_ratio() const;
};

// Smallest key-gate count whose area ratio reaches target_area.
std::size_t ll_key_count(std::size_t base_cells, double target_area);

// XOR/XNOR key gates on random internal nets, distinct while the nets last and
// then stacked evenly.  Throws std::invalid_argument when target_area < 1.
LockedBaseline make_ll_baseline(const AigGraph& f, double target_area, std::mt19937_64& rng);

}  // namespace ipcamo
