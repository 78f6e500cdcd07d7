#include "ipcamo/circuit.hpp"

#include <sstream>
#include <unordered_map>

namespace ipcamo {

namespace {

struct OpName {
    GateOp op;
    const char* name;
};

constexpr OpName kOpNames[] = {
    {GateOp::Input, "INPUT"}, {GateOp::Key, "KEY"}, {GateOp::Const0, "CONST0"}, {GateOp::Const1, "CONST1"},
    {GateOp::Buf, "BUF"},     {GateOp::Not, "INV"}, {GateOp::And, "AND"},       {GateOp::Nand, "NAND"},
    {GateOp::Or, "OR"},       {GateOp::Nor, "NOR"}, {GateOp::Xor, "XOR"},       {GateOp::Xnor, "XNOR"},
    {GateOp::Lut, "LUT"},
};

void check_arity(GateOp op, std::size_t n) {
    switch (op) {
    case GateOp::Input:
    case GateOp::Key:
    case GateOp::Const0:
    case GateOp::Const1:
        if (n != 0) throw CircuitError(std::string(to_string(op)) + " takes no inputs");
        break;
    case GateOp::Buf:
    case GateOp::Not:
        if (n != 1) throw CircuitError(std::string(to_string(op)) + " takes one input");
        break;
    case GateOp::Lut:
        if (n == 0 || n > 4) throw CircuitError("LUT takes 1 to 4 inputs");
        break;
    default:
        if (n == 0) throw CircuitError(std::string(to_string(op)) + " needs at least one input");
    }
}

template <typename W>
W eval_word(const Gate& g, const std::vector<W>& v, W ones) {
    auto in = [&](std::size_t k) { return v[g.in[k]]; };
    W r{};
    switch (g.op) {
    case GateOp::Input:
    case GateOp::Key: return W{};  // supplied by caller
    case GateOp::Const0: return W{};
    case GateOp::Const1: return ones;
    case GateOp::Buf: return in(0);
    case GateOp::Not: return ~in(0) & ones;
    case GateOp::And:
    case GateOp::Nand:
        r = ones;
        for (std::size_t k = 0; k < g.in.size(); ++k) r &= in(k);
        return g.op == GateOp::And ? r : (~r & ones);
    case GateOp::Or:
    case GateOp::Nor:
        for (std::size_t k = 0; k < g.in.size(); ++k) r |= in(k);
        return g.op == GateOp::Or ? r : (~r & ones);
    case GateOp::Xor:
    case GateOp::Xnor:
        for (std::size_t k = 0; k < g.in.size(); ++k) r ^= in(k);
        return g.op == GateOp::Xor ? r : (~r & ones);
    case GateOp::Lut:
        for (unsigned row = 0; row < (1u << g.in.size()); ++row) {
            if (!((g.lut >> row) & 1u)) continue;
            W m = ones;
            for (std::size_t k = 0; k < g.in.size(); ++k) m &= ((row >> k) & 1u) ? in(k) : (~in(k) & ones);
            r |= m;
        }
        return r;
    }
    return r;
}

}  // namespace

const char* to_string(GateOp op) {
    for (const auto& e : kOpNames) {
        if (e.op == op) return e.name;
    }
    return "?";
}

GateOp gate_op_from_string(const std::string& s) {
    for (const auto& e : kOpNames) {
        if (s == e.name) return e.op;
    }
    throw CircuitError("unknown gate op '" + s + "'");
}

std::size_t Circuit::add_input(std::string name) {
    gates_.push_back(Gate{GateOp::Input, {}, 0, std::move(name)});
    inputs_.push_back(gates_.size() - 1);
    return gates_.size() - 1;
}

std::size_t Circuit::add_key(std::string name) {
    gates_.push_back(Gate{GateOp::Key, {}, 0, std::move(name)});
    keys_.push_back(gates_.size() - 1);
    return gates_.size() - 1;
}

std::size_t Circuit::add_gate(GateOp op, std::vector<std::size_t> in, std::string name) {
    if (op == GateOp::Input) return add_input(std::move(name));
    if (op == GateOp::Key) return add_key(std::move(name));
    if (op == GateOp::Lut) throw CircuitError("use add_lut for LUT gates");
    check_arity(op, in.size());
    for (std::size_t s : in) {
        if (s >= gates_.size()) throw CircuitError("gate input " + std::to_string(s) + " is not an earlier gate");
    }
    gates_.push_back(Gate{op, std::move(in), 0, std::move(name)});
    return gates_.size() - 1;
}

std::size_t Circuit::add_lut(std::vector<std::size_t> in, std::uint16_t table, std::string name) {
    check_arity(GateOp::Lut, in.size());
    for (std::size_t s : in) {
        if (s >= gates_.size()) throw CircuitError("gate input " + std::to_string(s) + " is not an earlier gate");
    }
    gates_.push_back(Gate{GateOp::Lut, std::move(in), table, std::move(name)});
    return gates_.size() - 1;
}

void Circuit::add_output(std::size_t gate, std::string name) {
    if (gate >= gates_.size()) throw CircuitError("output refers to unknown gate");
    outputs_.push_back(CircuitOutput{gate, std::move(name)});
}

std::vector<std::string> Circuit::input_names() const {
    std::vector<std::string> r;
    for (std::size_t i : inputs_) r.push_back(gates_[i].name);
    return r;
}

std::vector<std::string> Circuit::output_names() const {
    std::vector<std::string> r;
    for (const auto& o : outputs_) r.push_back(o.name);
    return r;
}

std::vector<std::size_t> Circuit::fanout_counts() const {
    std::vector<std::size_t> c(gates_.size(), 0);
    for (const auto& g : gates_) {
        for (std::size_t s : g.in) ++c[s];
    }
    return c;
}

std::vector<std::uint64_t> Circuit::simulate_words(const std::vector<std::uint64_t>& in,
                                                   const std::vector<std::uint64_t>& key) const {
    if (in.size() != inputs_.size()) throw CircuitError("expected " + std::to_string(inputs_.size()) + " inputs");
    if (key.size() != keys_.size()) throw CircuitError("expected " + std::to_string(keys_.size()) + " key bits");
    std::vector<std::uint64_t> v(gates_.size(), 0);
    std::size_t ni = 0, nk = 0;
    for (std::size_t i = 0; i < gates_.size(); ++i) {
        const Gate& g = gates_[i];
        if (g.op == GateOp::Input) {
            v[i] = in[ni++];
        } else if (g.op == GateOp::Key) {
            v[i] = key[nk++];
        } else {
            v[i] = eval_word<std::uint64_t>(g, v, ~std::uint64_t{0});
        }
    }
    std::vector<std::uint64_t> out;
    out.reserve(outputs_.size());
    for (const auto& o : outputs_) out.push_back(v[o.gate]);
    return out;
}

std::vector<bool> Circuit::simulate(const std::vector<bool>& in, const std::vector<bool>& key) const {
    std::vector<std::uint64_t> wi(in.size()), wk(key.size());
    for (std::size_t k = 0; k < in.size(); ++k) wi[k] = in[k] ? 1 : 0;
    for (std::size_t k = 0; k < key.size(); ++k) wk[k] = key[k] ? 1 : 0;
    const auto w = simulate_words(wi, wk);
    std::vector<bool> out(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) out[k] = w[k] & 1u;
    return out;
}

bool eval_gate(const Gate& g, const std::vector<bool>& operands) {
    if (g.in.size() != operands.size()) throw CircuitError("operand count mismatch");
    std::vector<std::uint8_t> v(operands.size());
    Gate local = g;
    for (std::size_t k = 0; k < operands.size(); ++k) {
        v[k] = operands[k];
        local.in[k] = k;
    }
    return eval_word<std::uint8_t>(local, v, std::uint8_t{1}) & 1u;
}

Circuit circuit_from_aig(const AigGraph& g) {
    Circuit c;
    std::vector<std::size_t> id(g.size());
    auto operand = [&](const Fanin& f) {
        if (!f.inverted) return id[f.src];
        return c.add_gate(GateOp::Not, {id[f.src]});
    };
    std::size_t po_ord = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Node& n = g.node(i);
        std::string name = n.name;
        switch (n.type) {
        case NodeType::PI:
            if (name.empty()) name = "pi" + std::to_string(c.inputs().size());
            id[i] = c.add_input(name);
            break;
        case NodeType::AND: {
            std::vector<std::size_t> ops;
            for (const Fanin& f : n.fanins) ops.push_back(operand(f));
            id[i] = ops.empty() ? c.add_gate(GateOp::Const1, {}, name) : c.add_gate(GateOp::And, ops, name);
            break;
        }
        case NodeType::PO: {
            if (name.empty()) name = "po" + std::to_string(po_ord);
            ++po_ord;
            std::vector<std::size_t> ops;
            for (const Fanin& f : n.fanins) ops.push_back(operand(f));
            std::size_t drv;
            if (ops.empty()) {
                drv = c.add_gate(GateOp::Const1, {});
            } else if (ops.size() == 1) {
                drv = ops[0];
            } else {
                drv = c.add_gate(GateOp::And, ops);
            }
            id[i] = drv;
            c.add_output(drv, name);
            break;
        }
        }
    }
    return c;
}

namespace {

// LUT with constant inputs substituted; a single live input becomes a buffer,
// an inverter or a constant.
std::size_t fold_lut(Circuit& r, const std::vector<std::size_t>& in, std::uint16_t lut, const std::string& name) {
    std::size_t fixed_row = 0, live = 0, n_live = 0;
    for (std::size_t k = 0; k < in.size(); ++k) {
        const GateOp op = r.gate(in[k]).op;
        if (op == GateOp::Const1) {
            fixed_row |= std::size_t{1} << k;
        } else if (op != GateOp::Const0) {
            live = k;
            ++n_live;
        }
    }
    if (n_live > 1) return r.add_lut(in, lut, name);
    const bool lo = (lut >> fixed_row) & 1u;
    if (n_live == 0) return r.add_gate(lo ? GateOp::Const1 : GateOp::Const0, {}, name);
    const bool hi = (lut >> (fixed_row | (std::size_t{1} << live))) & 1u;
    if (lo == hi) return r.add_gate(lo ? GateOp::Const1 : GateOp::Const0, {}, name);
    return r.add_gate(hi ? GateOp::Buf : GateOp::Not, {in[live]}, name);
}

}  // namespace

Circuit apply_key(const Circuit& c, const std::vector<bool>& key) {
    if (key.size() != c.keys().size()) throw CircuitError("expected " + std::to_string(c.keys().size()) + " key bits");
    Circuit r;
    std::vector<std::size_t> id(c.size());
    std::size_t nk = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Gate& g = c.gate(i);
        std::vector<std::size_t> in;
        for (std::size_t s : g.in) in.push_back(id[s]);
        if (g.op == GateOp::Key) {
            id[i] = r.add_gate(key[nk++] ? GateOp::Const1 : GateOp::Const0, {}, g.name);
        } else if (g.op == GateOp::Lut) {
            id[i] = fold_lut(r, in, g.lut, g.name);
        } else {
            id[i] = r.add_gate(g.op, in, g.name);
        }
    }
    for (const auto& o : c.outputs()) r.add_output(id[o.gate], o.name);
    return r;
}

std::size_t circuit_cell_count(const Circuit& c) {
    std::size_t n = 0;
    for (const auto& g : c.gates()) {
        switch (g.op) {
        case GateOp::Input:
        case GateOp::Key:
        case GateOp::Const0:
        case GateOp::Const1:
        case GateOp::Buf: break;
        default: ++n;
        }
    }
    return n;
}

std::string write_gates(const Circuit& c) {
    std::vector<std::string> names(c.size());
    std::unordered_map<std::string, std::size_t> used;
    for (std::size_t i = 0; i < c.size(); ++i) {
        std::string n = c.gate(i).name;
        if (n.empty() || n.find_first_of(" \t\n") != std::string::npos || used.count(n)) n = "g" + std::to_string(i);
        while (used.count(n)) n += "_";
        used[n] = i;
        names[i] = n;
    }
    std::ostringstream os;
    os << "ipcamo-gates 1\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Gate& g = c.gate(i);
        os << to_string(g.op);
        if (g.op == GateOp::Lut) os << ':' << g.lut;
        os << ' ' << names[i];
        for (std::size_t s : g.in) os << ' ' << names[s];
        os << '\n';
    }
    for (const auto& o : c.outputs()) os << "OUTPUT " << o.name << ' ' << names[o.gate] << '\n';
    return os.str();
}

Circuit parse_gates(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "ipcamo-gates 1") throw CircuitError("missing 'ipcamo-gates 1' header");
    Circuit c;
    std::unordered_map<std::string, std::size_t> id;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string op, name, tok;
        if (!(ls >> op)) continue;
        if (!(ls >> name)) throw CircuitError("line " + std::to_string(lineno) + ": missing name");
        std::vector<std::size_t> in;
        while (ls >> tok) {
            auto it = id.find(tok);
            if (it == id.end()) throw CircuitError("line " + std::to_string(lineno) + ": unknown net '" + tok + "'");
            in.push_back(it->second);
        }
        if (op == "OUTPUT") {
            if (in.size() != 1) throw CircuitError("line " + std::to_string(lineno) + ": OUTPUT needs one net");
            c.add_output(in[0], name);
            continue;
        }
        if (id.count(name)) throw CircuitError("line " + std::to_string(lineno) + ": duplicate name '" + name + "'");
        std::size_t g;
        if (op.rfind("LUT:", 0) == 0) {
            g = c.add_lut(in, static_cast<std::uint16_t>(std::stoul(op.substr(4))), name);
        } else {
            g = c.add_gate(gate_op_from_string(op), in, name);
        }
        id[name] = g;
    }
    return c;
}

}  // namespace ipcamo
