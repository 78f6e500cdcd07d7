#include "ipcamo/attack.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace ipcamo {

namespace {

// Word for PI bit position `pos` (0 = least significant bit of the pattern
// index) in block `block` of 64 consecutive patterns.
std::uint64_t pattern_word(std::size_t pos, std::uint64_t block) {
    static constexpr std::uint64_t kMasks[6] = {0xAAAAAAAAAAAAAAAAull, 0xCCCCCCCCCCCCCCCCull, 0xF0F0F0F0F0F0F0F0ull,
                                                0xFF00FF00FF00FF00ull, 0xFFFF0000FFFF0000ull, 0xFFFFFFFF00000000ull};
    if (pos < 6) return kMasks[pos];
    return ((block >> (pos - 6)) & 1u) ? ~std::uint64_t{0} : 0;
}

struct Interface {
    std::vector<std::string> names;
    std::vector<std::size_t> a_map, b_map;  // circuit input ordinal -> union index
    std::vector<std::pair<std::size_t, std::size_t>> outputs;  // (a ordinal, b ordinal)
};

Interface match_interface(const Circuit& a, const Circuit& b) {
    if (!a.keys().empty() || !b.keys().empty()) throw CircuitError("equivalence check needs key-free circuits");
    Interface f;
    std::unordered_map<std::string, std::size_t> idx;
    auto add = [&](const Circuit& c, std::vector<std::size_t>& m) {
        for (const auto& n : c.input_names()) {
            auto it = idx.find(n);
            if (it == idx.end()) {
                it = idx.emplace(n, f.names.size()).first;
                f.names.push_back(n);
            }
            m.push_back(it->second);
        }
    };
    add(a, f.a_map);
    add(b, f.b_map);
    const auto bo = b.output_names();
    const auto ao = a.output_names();
    for (std::size_t k = 0; k < ao.size(); ++k) {
        auto it = std::find(bo.begin(), bo.end(), ao[k]);
        if (it == bo.end()) throw CircuitError("interface mismatch: output '" + ao[k] + "' missing");
        f.outputs.emplace_back(k, static_cast<std::size_t>(it - bo.begin()));
    }
    return f;
}

EquivResult truth_table_check(const Circuit& a, const Circuit& b, const Interface& f) {
    const std::size_t n = f.names.size();
    if (n > kMaxTruthTableInputs) throw CircuitError("too many inputs for truth-table mode");
    EquivResult r;
    r.used = EquivMode::TruthTable;
    r.input_names = f.names;
    const std::uint64_t rows = std::uint64_t{1} << n;
    const std::uint64_t blocks = (rows + 63) / 64;
    const std::uint64_t valid = rows >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << rows) - 1);
    std::vector<std::uint64_t> u(n), wa(a.inputs().size()), wb(b.inputs().size());
    for (std::uint64_t blk = 0; blk < blocks; ++blk) {
        for (std::size_t i = 0; i < n; ++i) u[i] = pattern_word(n - 1 - i, blk);
        for (std::size_t i = 0; i < wa.size(); ++i) wa[i] = u[f.a_map[i]];
        for (std::size_t i = 0; i < wb.size(); ++i) wb[i] = u[f.b_map[i]];
        const auto oa = a.simulate_words(wa);
        const auto ob = b.simulate_words(wb);
        for (const auto& [ka, kb] : f.outputs) {
            const std::uint64_t diff = (oa[ka] ^ ob[kb]) & valid;
            if (!diff) continue;
            int t = 0;
            while (!((diff >> t) & 1u)) ++t;
            const std::uint64_t row = blk * 64 + static_cast<std::uint64_t>(t);
            r.counterexample.resize(n);
            for (std::size_t i = 0; i < n; ++i) r.counterexample[i] = (row >> (n - 1 - i)) & 1u;
            r.output = a.outputs()[ka].name;
            r.equal = false;
            return r;
        }
    }
    r.equal = true;
    return r;
}

EquivResult miter_check(const Circuit& a, const Circuit& b, const Interface& f, const SatBudget& budget) {
    EquivResult r;
    r.used = EquivMode::Miter;
    r.input_names = f.names;
    SatSolver s;
    std::vector<int> x(f.names.size());
    for (int& v : x) v = s.new_var();
    std::vector<int> la, lb;
    for (std::size_t m : f.a_map) la.push_back(x[m]);
    for (std::size_t m : f.b_map) lb.push_back(x[m]);
    const auto ga = tseitin_encode(a, s, la);
    const auto gb = tseitin_encode(b, s, lb);
    std::vector<int> any;
    for (const auto& [ka, kb] : f.outputs) {
        const int p = ga[a.outputs()[ka].gate], q = gb[b.outputs()[kb].gate];
        const int d = s.new_var();
        s.add_clause({-d, p, q});
        s.add_clause({-d, -p, -q});
        s.add_clause({d, -p, q});
        s.add_clause({d, p, -q});
        any.push_back(d);
    }
    if (any.empty()) {
        r.equal = true;
        return r;
    }
    s.add_clause(any);
    const SatResult res = s.solve({}, budget);
    if (res == SatResult::Unknown) {
        r.decided = false;
        return r;
    }
    if (res == SatResult::Unsat) {
        r.equal = true;
        return r;
    }
    r.equal = false;
    r.counterexample.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r.counterexample[i] = s.model_value(x[i]);
    std::vector<bool> ia, ib;
    for (std::size_t m : f.a_map) ia.push_back(r.counterexample[m]);
    for (std::size_t m : f.b_map) ib.push_back(r.counterexample[m]);
    const auto oa = a.simulate(ia), ob = b.simulate(ib);
    for (const auto& [ka, kb] : f.outputs) {
        if (oa[ka] != ob[kb]) {
            r.output = a.outputs()[ka].name;
            break;
        }
    }
    return r;
}

}  // namespace

EquivResult equivalence_check(const Circuit& a, const Circuit& b, EquivMode mode, const SatBudget& budget) {
    const Interface f = match_interface(a, b);
    if (mode == EquivMode::Auto) mode = f.names.size() <= kTruthTableLimit ? EquivMode::TruthTable : EquivMode::Miter;
    return mode == EquivMode::TruthTable ? truth_table_check(a, b, f) : miter_check(a, b, f, budget);
}

// ---------------------------------------------------------------------------

std::size_t KeyedNetlist::count(KeyedClass c) const {
    return static_cast<std::size_t>(
        std::count_if(elements.begin(), elements.end(), [&](const KeyedElement& e) { return e.cls == c; }));
}

std::uint16_t keyed_lut(KeyedClass c) {
    std::uint16_t t = 0;
    for (unsigned row = 0; row < 8; ++row) {
        const bool a = row & 1u, k1 = row & 2u, k0 = row & 4u;
        if (keyed_eval(c, k1, k0, a)) t = static_cast<std::uint16_t>(t | (1u << row));
    }
    return t;
}

KeyedNetlist keyize_netlist(const Circuit& app, const std::vector<CovertCellInfo>& covert) {
    std::unordered_map<std::size_t, const CovertCellInfo*> info;
    for (const auto& c : covert) info[c.gate] = &c;
    const auto fanout = app.fanout_counts();
    std::vector<bool> is_output(app.size(), false);
    for (const auto& o : app.outputs()) is_output[o.gate] = true;

    // inverter pairs: an inverter fed by a single-fanout inverter
    std::vector<bool> inner(app.size(), false);
    std::vector<bool> outer(app.size(), false);
    for (std::size_t i = 0; i < app.size(); ++i) {
        const Gate& g = app.gate(i);
        if (g.op != GateOp::Not) continue;
        const std::size_t x = g.in[0];
        if (app.gate(x).op == GateOp::Not && !inner[x] && !outer[x] && fanout[x] == 1 && !is_output[x]) {
            inner[x] = true;
            outer[i] = true;
        }
    }

    KeyedNetlist k;
    std::vector<std::size_t> id(app.size(), 0);
    auto add_element = [&](KeyedClass cls, std::vector<std::size_t> cells, std::size_t pin_a, std::size_t out) {
        KeyedElement e;
        e.cls = cls;
        e.cells = std::move(cells);
        e.pin_a = pin_a;
        e.key_bit = 2 * k.elements.size();
        const std::size_t k1 = k.circuit.add_key("k" + std::to_string(e.key_bit));
        const std::size_t k0 = k.circuit.add_key("k" + std::to_string(e.key_bit + 1));
        const std::size_t g = k.circuit.add_lut({id[pin_a], k1, k0}, keyed_lut(cls), app.gate(out).name);
        KeyCode key;
        auto it = info.find(out);
        if (it != info.end()) {
            e.covert = true;
            key = correct_key(it->second->kind, it->second->mode);
        } else if (cls == KeyedClass::Nand) {
            k.correct_key_known = false;
        } else {
            key = genuine_key(cls);
        }
        k.correct_key.push_back(key.k1);
        k.correct_key.push_back(key.k0);
        k.elements.push_back(std::move(e));
        return g;
    };

    for (std::size_t i = 0; i < app.size(); ++i) {
        const Gate& g = app.gate(i);
        if (inner[i]) continue;
        if (outer[i]) {
            const std::size_t x = g.in[0];
            id[i] = add_element(KeyedClass::Buf, {x, i}, app.gate(x).in[0], i);
        } else if (g.op == GateOp::Not) {
            id[i] = add_element(KeyedClass::Inv, {i}, g.in[0], i);
        } else if (g.op == GateOp::Nand && g.in.size() == 2) {
            id[i] = add_element(KeyedClass::Nand, {i}, g.in[0], i);
        } else if (g.op == GateOp::Input) {
            id[i] = k.circuit.add_input(g.name);
        } else if (g.op == GateOp::Key) {
            throw CircuitError("appearance view already carries key inputs");
        } else {
            std::vector<std::size_t> in;
            for (std::size_t s : g.in) in.push_back(id[s]);
            id[i] = g.op == GateOp::Lut ? k.circuit.add_lut(in, g.lut, g.name) : k.circuit.add_gate(g.op, in, g.name);
        }
    }
    for (const auto& o : app.outputs()) k.circuit.add_output(id[o.gate], o.name);
    return k;
}

// ---------------------------------------------------------------------------

const char* to_string(DipOutcome o) {
    switch (o) {
    case DipOutcome::UniqueKey: return "unique-key";
    case DipOutcome::Timeout: return "timeout";
    case DipOutcome::MemoryLimit: return "memory-limit";
    }
    return "?";
}

Oracle circuit_oracle(const Circuit& c) {
    return [c](const std::vector<bool>& in) { return c.simulate(in); };
}

Circuit specialize_inputs(const Circuit& c, const std::vector<bool>& in) {
    if (in.size() != c.inputs().size()) throw CircuitError("input count mismatch");
    struct V {
        int known = -1;
        std::size_t id = 0;
    };
    Circuit r;
    std::vector<V> v(c.size());
    std::size_t ni = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Gate& g = c.gate(i);
        std::vector<std::size_t> unknown;
        int parity = 0;
        switch (g.op) {
        case GateOp::Input: v[i].known = in[ni++] ? 1 : 0; break;
        case GateOp::Key: v[i].id = r.add_key(g.name); break;
        case GateOp::Const0: v[i].known = 0; break;
        case GateOp::Const1: v[i].known = 1; break;
        case GateOp::Buf: v[i] = v[g.in[0]]; break;
        case GateOp::Not:
            if (v[g.in[0]].known >= 0) {
                v[i].known = 1 - v[g.in[0]].known;
            } else {
                v[i].id = r.add_gate(GateOp::Not, {v[g.in[0]].id});
            }
            break;
        case GateOp::And:
        case GateOp::Nand:
        case GateOp::Or:
        case GateOp::Nor: {
            const bool conj = g.op == GateOp::And || g.op == GateOp::Nand;
            const bool neg = g.op == GateOp::Nand || g.op == GateOp::Nor;
            const int controlling = conj ? 0 : 1;
            bool decided = false;
            for (std::size_t s : g.in) {
                if (v[s].known == controlling) decided = true;
                if (v[s].known < 0) unknown.push_back(v[s].id);
            }
            if (decided || unknown.empty()) {
                const int base = decided ? controlling : 1 - controlling;
                v[i].known = neg ? 1 - base : base;
            } else if (unknown.size() == 1) {
                v[i].id = neg ? r.add_gate(GateOp::Not, {unknown[0]}) : unknown[0];
            } else {
                v[i].id = r.add_gate(g.op, unknown);
            }
            break;
        }
        case GateOp::Xor:
        case GateOp::Xnor: {
            parity = g.op == GateOp::Xnor ? 1 : 0;
            for (std::size_t s : g.in) {
                if (v[s].known >= 0) {
                    parity ^= v[s].known;
                } else {
                    unknown.push_back(v[s].id);
                }
            }
            if (unknown.empty()) {
                v[i].known = parity;
            } else {
                std::size_t x = unknown.size() == 1 ? unknown[0] : r.add_gate(GateOp::Xor, unknown);
                v[i].id = parity ? r.add_gate(GateOp::Not, {x}) : x;
            }
            break;
        }
        case GateOp::Lut: {
            std::vector<std::size_t> pos;
            unsigned fixed = 0;
            for (std::size_t k = 0; k < g.in.size(); ++k) {
                const V& o = v[g.in[k]];
                if (o.known >= 0) {
                    if (o.known) fixed |= 1u << k;
                } else {
                    pos.push_back(k);
                    unknown.push_back(o.id);
                }
            }
            std::uint16_t t = 0;
            for (unsigned row = 0; row < (1u << pos.size()); ++row) {
                unsigned full = fixed;
                for (std::size_t m = 0; m < pos.size(); ++m) {
                    if ((row >> m) & 1u) full |= 1u << pos[m];
                }
                if ((g.lut >> full) & 1u) t = static_cast<std::uint16_t>(t | (1u << row));
            }
            if (pos.empty()) {
                v[i].known = t & 1u;
            } else if (t == 0 || t == (1u << (1u << pos.size())) - 1) {
                v[i].known = t ? 1 : 0;
            } else {
                v[i].id = r.add_lut(unknown, t, g.name);
            }
            break;
        }
        }
    }
    for (const auto& o : c.outputs()) {
        const V& x = v[o.gate];
        r.add_output(x.known >= 0 ? r.add_gate(x.known ? GateOp::Const1 : GateOp::Const0, {}) : x.id, o.name);
    }
    return r;
}

namespace {

class CountingSink : public CnfSink {
public:
    explicit CountingSink(SatSolver& s) : s_(s) {}
    int new_var() override { return s_.new_var(); }
    void add_clause(std::vector<int> lits) override {
        ++count;
        s_.add_clause(std::move(lits));
    }
    std::size_t count = 0;

private:
    SatSolver& s_;
};

}  // namespace

DipResult dip_attack(const Circuit& keyed, const Oracle& oracle, const DipBudget& budget) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    DipResult res;
    SatSolver s;
    std::vector<int> x(keyed.inputs().size()), k1(keyed.keys().size()), k2(keyed.keys().size());
    for (int& v : x) v = s.new_var();
    for (int& v : k1) v = s.new_var();
    for (int& v : k2) v = s.new_var();
    const auto g1 = tseitin_encode(keyed, s, x, k1);
    const auto g2 = tseitin_encode(keyed, s, x, k2);
    const int act = s.new_var();
    std::vector<int> miter{-act};
    for (const auto& o : keyed.outputs()) {
        const int p = g1[o.gate], q = g2[o.gate];
        const int d = s.new_var();
        s.add_clause({-d, p, q});
        s.add_clause({-d, -p, -q});
        miter.push_back(d);
    }
    s.add_clause(miter);

    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };
    auto remaining = [&](SatBudget& b) {
        b = SatBudget{};
        if (budget.seconds > 0) {
            b.seconds = budget.seconds - elapsed();
            if (b.seconds <= 0) return false;
        }
        if (budget.conflicts) {
            if (s.stats().conflicts >= budget.conflicts) return false;
            b.conflicts = budget.conflicts - s.stats().conflicts;
        }
        b.memory_bytes = budget.memory_bytes;
        return true;
    };
    auto give_up = [&] {
        res.outcome = s.stop_reason() == StopReason::Memory ? DipOutcome::MemoryLimit : DipOutcome::Timeout;
        res.seconds = elapsed();
        res.stats = s.stats();
        return res;
    };

    for (;;) {
        SatBudget b;
        if (!remaining(b)) return give_up();
        const SatResult r = s.solve({act}, b);
        if (r == SatResult::Unknown) return give_up();
        if (r == SatResult::Unsat) break;
        DipIteration it;
        it.input.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) it.input[i] = s.model_value(x[i]);
        it.output = oracle(it.input);
        if (it.output.size() != keyed.outputs().size()) throw CircuitError("oracle output count mismatch");
        const Circuit spec = specialize_inputs(keyed, it.input);
        CountingSink sink(s);
        for (const auto* keys : {&k1, &k2}) {
            const auto lits = tseitin_encode(spec, sink, {}, *keys);
            for (std::size_t o = 0; o < spec.outputs().size(); ++o) {
                const int l = lits[spec.outputs()[o].gate];
                sink.add_clause({it.output[o] ? l : -l});
            }
        }
        it.clauses_added = sink.count;
        res.trace.push_back(std::move(it));
    }

    SatBudget b;
    if (!remaining(b)) return give_up();
    const SatResult r = s.solve({-act}, b);
    if (r == SatResult::Unknown) return give_up();
    if (r == SatResult::Unsat) throw std::runtime_error("no key reproduces the oracle responses");
    res.key.resize(k1.size());
    for (std::size_t i = 0; i < k1.size(); ++i) res.key[i] = s.model_value(k1[i]);
    res.outcome = DipOutcome::UniqueKey;
    res.seconds = elapsed();
    res.stats = s.stats();
    return res;
}

// ---------------------------------------------------------------------------

double LockedBaseline::area_ratio() const {
    if (base_cells == 0) return 1.0;
    return static_cast<double>(base_cells + correct_key.size()) / static_cast<double>(base_cells);
}

std::size_t ll_key_count(std::size_t base_cells, double target_area) {
    if (!(target_area >= 1.0)) throw std::invalid_argument("target area ratio must be at least 1");
    const double need = (target_area - 1.0) * static_cast<double>(base_cells);
    return static_cast<std::size_t>(std::max(0.0, std::ceil(need - 1e-9)));
}

LockedBaseline make_ll_baseline(const AigGraph& f, double target_area, std::mt19937_64& rng) {
    const Circuit base = circuit_from_aig(f);
    LockedBaseline lb;
    lb.base_cells = circuit_cell_count(base);
    const std::size_t k = ll_key_count(lb.base_cells, target_area);
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const GateOp op = base.gate(i).op;
        if (op == GateOp::And || op == GateOp::Not) cand.push_back(i);
    }
    if (k > 0 && cand.empty()) throw std::invalid_argument("circuit has no internal nets to lock");
    // every net gets k / n key gates, a random subset one more; repeats form a chain
    std::vector<std::size_t> per(base.size(), 0);
    if (!cand.empty()) {
        for (std::size_t s : cand) per[s] = k / cand.size();
        std::shuffle(cand.begin(), cand.end(), rng);
        for (std::size_t r = 0; r < k % cand.size(); ++r) ++per[cand[r]];
    }
    for (std::size_t i = 0; i < base.size(); ++i) {
        for (std::size_t r = 0; r < per[i]; ++r) lb.sites.push_back(i);
    }

    std::vector<std::size_t> id(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        const Gate& g = base.gate(i);
        std::vector<std::size_t> in;
        for (std::size_t s : g.in) in.push_back(id[s]);
        id[i] = g.op == GateOp::Input ? lb.circuit.add_input(g.name) : lb.circuit.add_gate(g.op, in, g.name);
        for (std::size_t r = 0; r < per[i]; ++r) {
            const std::size_t key = lb.circuit.add_key("k" + std::to_string(lb.correct_key.size()));
            const bool xnor = (rng() & 1u) != 0;
            id[i] = lb.circuit.add_gate(xnor ? GateOp::Xnor : GateOp::Xor, {id[i], key});
            lb.correct_key.push_back(xnor);
        }
    }
    for (const auto& o : base.outputs()) lb.circuit.add_output(id[o.gate], o.name);
    return lb;
}

}  // namespace ipcamo
