#include "ipcamo/aiger.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace ipcamo {

namespace {

struct AndDef {
    unsigned lhs, rhs0, rhs1;
    std::size_t line;
};

std::vector<unsigned> read_numbers(const std::string& line, std::size_t lineno, std::size_t want) {
    std::istringstream in(line);
    std::vector<unsigned> out;
    std::string tok;
    while (in >> tok) {
        if (tok.find_first_not_of("0123456789") != std::string::npos) {
            throw ParseError(lineno, "expected unsigned integer, got '" + tok + "'");
        }
        out.push_back(static_cast<unsigned>(std::stoul(tok)));
    }
    if (out.size() != want) {
        throw ParseError(lineno, "expected " + std::to_string(want) + " fields, got " + std::to_string(out.size()));
    }
    return out;
}

}  // namespace

AigGraph parse_aiger(const std::string& text) {
    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
    }
    if (lines.empty() || lines[0].rfind("aag", 0) != 0) {
        if (!lines.empty() && lines[0].rfind("aig", 0) == 0) throw ParseError(1, "binary AIGER is not supported");
        throw ParseError(1, "missing header");
    }
    const auto hdr = read_numbers(lines[0].substr(3), 1, 5);
    const unsigned M = hdr[0], I = hdr[1], L = hdr[2], O = hdr[3], A = hdr[4];
    if (L != 0) throw ParseError(1, "latch declarations present");
    if (lines.size() < 1 + std::size_t{I} + O + A) throw ParseError(lines.size(), "file truncated");

    std::size_t ln = 1;
    std::vector<unsigned> inputs(I), outputs(O);
    std::vector<std::size_t> output_lines(O);
    std::vector<AndDef> ands(A);
    for (unsigned k = 0; k < I; ++k, ++ln) {
        inputs[k] = read_numbers(lines[ln], ln + 1, 1)[0];
        if (inputs[k] < 2 || (inputs[k] & 1u) || inputs[k] / 2 > M) throw ParseError(ln + 1, "invalid input literal");
    }
    for (unsigned k = 0; k < O; ++k, ++ln) {
        outputs[k] = read_numbers(lines[ln], ln + 1, 1)[0];
        output_lines[k] = ln + 1;
    }
    for (unsigned k = 0; k < A; ++k, ++ln) {
        const auto v = read_numbers(lines[ln], ln + 1, 3);
        if (v[0] < 2 || (v[0] & 1u) || v[0] / 2 > M) throw ParseError(ln + 1, "invalid AND literal");
        ands[k] = AndDef{v[0], v[1], v[2], ln + 1};
    }

    std::unordered_map<std::string, std::string> in_names, out_names;
    for (; ln < lines.size(); ++ln) {
        const std::string& s = lines[ln];
        if (s.empty()) continue;
        if (s[0] == 'c') break;
        const auto sp = s.find(' ');
        if ((s[0] == 'i' || s[0] == 'o') && sp != std::string::npos) {
            (s[0] == 'i' ? in_names : out_names)[s.substr(1, sp - 1)] = s.substr(sp + 1);
        } else if (s[0] != 'l') {
            throw ParseError(ln + 1, "unexpected line '" + s + "'");
        }
    }

    // Variable definitions: 0 = undefined, otherwise index+1 into inputs/ands.
    std::vector<int> def_kind(M + 1, 0);  // 1 input, 2 and
    std::vector<std::size_t> def_index(M + 1, 0);
    for (unsigned k = 0; k < I; ++k) {
        const unsigned var = inputs[k] / 2;
        if (def_kind[var]) throw ParseError(2 + k, "variable defined twice");
        def_kind[var] = 1;
        def_index[var] = k;
    }
    for (unsigned k = 0; k < A; ++k) {
        const unsigned var = ands[k].lhs / 2;
        if (def_kind[var]) throw ParseError(ands[k].line, "variable defined twice");
        def_kind[var] = 2;
        def_index[var] = k;
    }

    bool uses_constant = false;
    const auto check_lit = [&](unsigned lit, std::size_t line) {
        const unsigned var = lit / 2;
        if (var == 0) {
            uses_constant = true;
            return;
        }
        if (var > M || !def_kind[var]) throw ParseError(line, "dangling literal " + std::to_string(lit));
    };
    for (const AndDef& a : ands) {
        check_lit(a.rhs0, a.line);
        check_lit(a.rhs1, a.line);
    }
    for (unsigned k = 0; k < O; ++k) check_lit(outputs[k], output_lines[k]);

    AigGraph g;
    std::vector<std::size_t> node_of(M + 1, 0);
    for (unsigned k = 0; k < I; ++k) {
        const auto it = in_names.find(std::to_string(k));
        node_of[inputs[k] / 2] = g.add_pi(it == in_names.end() ? std::string{} : it->second);
    }
    std::size_t const_node = 0;
    if (uses_constant) const_node = g.add_constant();

    const auto fanin = [&](unsigned lit) {
        const unsigned var = lit / 2;
        // Literal 0 is false; the constant node evaluates to true.
        if (var == 0) return Fanin{const_node, (lit & 1u) == 0};
        return Fanin{node_of[var], (lit & 1u) != 0};
    };

    // Stable topological emission of ANDs (iterative DFS in file order).
    std::vector<char> state(A, 0);  // 0 new, 1 on stack, 2 done
    for (unsigned root = 0; root < A; ++root) {
        if (state[root]) continue;
        std::vector<std::pair<unsigned, int>> stack{{root, 0}};
        state[root] = 1;
        while (!stack.empty()) {
            auto& [k, child] = stack.back();
            if (child < 2) {
                const unsigned lit = child == 0 ? ands[k].rhs0 : ands[k].rhs1;
                ++child;
                const unsigned var = lit / 2;
                if (var != 0 && def_kind[var] == 2) {
                    const auto dep = static_cast<unsigned>(def_index[var]);
                    if (state[dep] == 1) throw ParseError(ands[k].line, "combinational cycle");
                    if (state[dep] == 0) {
                        state[dep] = 1;
                        stack.emplace_back(dep, 0);
                    }
                }
                continue;
            }
            node_of[ands[k].lhs / 2] = g.add_and(fanin(ands[k].rhs0), fanin(ands[k].rhs1));
            state[k] = 2;
            stack.pop_back();
        }
    }
    for (unsigned k = 0; k < O; ++k) {
        const auto it = out_names.find(std::to_string(k));
        g.add_po(fanin(outputs[k]), it == out_names.end() ? std::string{} : it->second);
    }
    return g;
}

AigGraph read_aiger_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_aiger(ss.str());
}

std::string write_aiger(const AigGraph& g) {
    if (const std::string why = g.canonical_violation(); !why.empty()) {
        throw GraphError("cannot write non-canonical graph: " + why);
    }
    std::vector<unsigned> lit(g.size(), 0);
    unsigned var = 0;
    for (std::size_t i : g.pis()) lit[i] = 2 * ++var;
    std::size_t n_and = 0;
    for (std::size_t i : g.ands()) {
        if (g.node(i).fanins.empty()) {
            lit[i] = 1;
        } else {
            lit[i] = 2 * ++var;
            ++n_and;
        }
    }
    const auto ref = [&](const Fanin& f) { return lit[f.src] ^ (f.inverted ? 1u : 0u); };

    const auto pis = g.pis();
    const auto pos = g.pos();
    std::ostringstream out;
    out << "aag " << var << ' ' << pis.size() << " 0 " << pos.size() << ' ' << n_and << '\n';
    for (std::size_t i : pis) out << lit[i] << '\n';
    for (std::size_t i : pos) out << ref(g.node(i).fanins[0]) << '\n';
    for (std::size_t i : g.ands()) {
        const Node& n = g.node(i);
        if (n.fanins.empty()) continue;
        out << lit[i] << ' ' << ref(n.fanins[0]) << ' ' << ref(n.fanins[1]) << '\n';
    }
    for (std::size_t k = 0; k < pis.size(); ++k) {
        if (!g.node(pis[k]).name.empty()) out << 'i' << k << ' ' << g.node(pis[k]).name << '\n';
    }
    for (std::size_t k = 0; k < pos.size(); ++k) {
        if (!g.node(pos[k]).name.empty()) out << 'o' << k << ' ' << g.node(pos[k]).name << '\n';
    }
    out << "c\nipcamo-aag 1\n";
    return out.str();
}

}  // namespace ipcamo
