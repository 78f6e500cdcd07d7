#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipcamo/aig.hpp"

namespace ipcamo {

enum class GateOp : std::uint8_t {
    Input,
    Key,
    Const0,
    Const1,
    Buf,
    Not,
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Lut,  // up to 4 inputs; bit r of `lut` is the output for input row r (input k is bit k of r)
};

const char* to_string(GateOp op);
GateOp gate_op_from_string(const std::string& s);

struct Gate {
    GateOp op = GateOp::Input;
    std::vector<std::size_t> in;
    std::uint16_t lut = 0;
    std::string name;
};

struct CircuitOutput {
    std::size_t gate = 0;
    std::string name;
};

class CircuitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Combinational gate network.  Gates only read earlier gates, so the gate
// vector is a topological order.  And/Or/Nand/Nor/Xor/Xnor accept any
// positive arity; And with zero inputs is not allowed (use Const1).
class Circuit {
public:
    std::size_t add_input(std::string name);
    std::size_t add_key(std::string name);
    std::size_t add_gate(GateOp op, std::vector<std::size_t> in, std::string name = {});
    std::size_t add_lut(std::vector<std::size_t> in, std::uint16_t table, std::string name = {});
    void add_output(std::size_t gate, std::string name);

    std::size_t size() const { return gates_.size(); }
    const Gate& gate(std::size_t i) const { return gates_.at(i); }
    const std::vector<Gate>& gates() const { return gates_; }
    const std::vector<std::size_t>& inputs() const { return inputs_; }
    const std::vector<std::size_t>& keys() const { return keys_; }
    const std::vector<CircuitOutput>& outputs() const { return outputs_; }

    std::vector<std::string> input_names() const;
    std::vector<std::string> output_names() const;
    std::vector<std::size_t> fanout_counts() const;

    // Values indexed by input / key ordinal; result by output ordinal.
    std::vector<bool> simulate(const std::vector<bool>& in, const std::vector<bool>& key = {}) const;
    std::vector<std::uint64_t> simulate_words(const std::vector<std::uint64_t>& in,
                                              const std::vector<std::uint64_t>& key = {}) const;

private:
    std::vector<Gate> gates_;
    std::vector<std::size_t> inputs_;
    std::vector<std::size_t> keys_;
    std::vector<CircuitOutput> outputs_;
};

// Evaluates one gate on single-bit operands.
bool eval_gate(const Gate& g, const std::vector<bool>& operands);

// PIs become inputs, ANDs become And gates, each inverted edge gets its own
// Not gate, an AND without fanins becomes Const1 and a PO whose fanin count is
// not one is rendered as an And (or Const1) feeding the output.
Circuit circuit_from_aig(const AigGraph& g);

// Replaces every key input by the given constant; LUTs left with at most one
// live input are folded.
Circuit apply_key(const Circuit& c, const std::vector<bool>& key);

// Cells as counted for area: every gate except inputs, keys, constants and buffers.
std::size_t circuit_cell_count(const Circuit& c);

// Line format "ipcamo-gates 1": one gate per line as `<op> <name> <input names...>`,
// then `OUTPUT <name> <gate name>` lines.  Names must be unique and free of spaces.
std::string write_gates(const Circuit& c);
Circuit parse_gates(const std::string& text);

}  // namespace ipcamo
