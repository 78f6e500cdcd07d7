#include "ipcamo/sat.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <sstream>

namespace ipcamo {

void CnfFormula::add_clause(std::vector<int> lits) {
    if (lits.empty()) throw CnfError("empty clause");
    for (int l : lits) {
        if (l == 0 || std::abs(l) > num_vars) throw CnfError("literal " + std::to_string(l) + " is not declared");
    }
    clauses.push_back(std::move(lits));
}

std::string CnfFormula::to_dimacs() const {
    std::ostringstream os;
    os << "p cnf " << num_vars << ' ' << clauses.size() << '\n';
    for (const auto& c : clauses) {
        for (int l : c) os << l << ' ';
        os << "0\n";
    }
    return os.str();
}

bool CnfFormula::satisfied_by(const std::vector<bool>& a) const {
    for (const auto& c : clauses) {
        bool sat = false;
        for (int l : c) {
            const bool v = a.at(static_cast<std::size_t>(std::abs(l) - 1));
            if ((l > 0) == v) {
                sat = true;
                break;
            }
        }
        if (!sat) return false;
    }
    return true;
}

CnfFormula parse_dimacs(const std::string& text) {
    std::istringstream is(text);
    std::string tok;
    CnfFormula f;
    bool header = false;
    std::vector<int> cur;
    while (is >> tok) {
        if (tok == "c") {
            std::string rest;
            std::getline(is, rest);
            continue;
        }
        if (tok == "p") {
            std::string fmt;
            int nv = 0, nc = 0;
            if (!(is >> fmt >> nv >> nc) || fmt != "cnf") throw CnfError("bad DIMACS header");
            f.num_vars = nv;
            header = true;
            continue;
        }
        if (!header) throw CnfError("clause before DIMACS header");
        const int l = std::stoi(tok);
        if (l == 0) {
            f.add_clause(cur);
            cur.clear();
        } else {
            cur.push_back(l);
        }
    }
    if (!cur.empty()) throw CnfError("unterminated clause");
    return f;
}

const char* to_string(SatResult r) {
    switch (r) {
    case SatResult::Sat: return "SAT";
    case SatResult::Unsat: return "UNSAT";
    case SatResult::Unknown: return "UNKNOWN";
    }
    return "?";
}

const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::None: return "none";
    case StopReason::Time: return "timeout";
    case StopReason::Conflicts: return "conflict-limit";
    case StopReason::Memory: return "memory-limit";
    }
    return "?";
}

// ---------------------------------------------------------------------------

namespace {

using Lit = std::uint32_t;
constexpr std::uint32_t kNoReason = 0xffffffffu;
constexpr std::uint8_t kFalse = 0, kTrue = 1, kUndef = 2;

inline Lit mk_lit(int dimacs) {
    const auto v = static_cast<Lit>(std::abs(dimacs) - 1);
    return 2 * v + (dimacs < 0 ? 1u : 0u);
}
inline std::uint32_t var_of(Lit l) { return l >> 1; }
inline bool sign_of(Lit l) { return l & 1u; }

struct Clause {
    std::vector<Lit> lits;
    double activity = 0.0;
    bool learnt = false;
    bool deleted = false;
};

struct Watcher {
    std::uint32_t cref;
    Lit blocker;
};

double luby(double y, int x) {
    int size = 1, seq = 0;
    while (size < x + 1) {
        ++seq;
        size = 2 * size + 1;
    }
    while (size - 1 != x) {
        size = (size - 1) >> 1;
        --seq;
        x = x % size;
    }
    double r = 1.0;
    for (int k = 0; k < seq; ++k) r *= y;
    return r;
}

}  // namespace

struct SatSolver::Impl {
    bool ok = true;
    std::vector<std::uint8_t> assigns;
    std::vector<int> level;
    std::vector<std::uint32_t> reason;
    std::vector<bool> polarity;  // saved phase: true means negative
    std::vector<char> seen;
    std::vector<double> activity;
    std::vector<Lit> trail;
    std::vector<std::size_t> trail_lim;
    std::size_t qhead = 0;
    std::vector<Clause> clauses;
    std::vector<std::vector<Watcher>> watches;
    std::vector<std::uint32_t> free_slots;
    std::size_t num_learnts = 0;
    double max_learnts = 0;
    double var_inc = 1.0, cla_inc = 1.0;
    std::size_t total_lits = 0;

    // binary max-heap on activity
    std::vector<std::uint32_t> heap;
    std::vector<int> heap_pos;

    std::vector<bool> model;
    SatStats stats;
    StopReason stop = StopReason::None;

    std::uint8_t value(Lit l) const {
        const std::uint8_t a = assigns[var_of(l)];
        return a == kUndef ? kUndef : static_cast<std::uint8_t>(a ^ (sign_of(l) ? 1 : 0));
    }
    int decision_level() const { return static_cast<int>(trail_lim.size()); }

    bool heap_less(std::uint32_t a, std::uint32_t b) const { return activity[a] > activity[b] || (activity[a] == activity[b] && a < b); }
    void heap_up(std::size_t i) {
        const std::uint32_t v = heap[i];
        while (i > 0) {
            const std::size_t p = (i - 1) / 2;
            if (!heap_less(v, heap[p])) break;
            heap[i] = heap[p];
            heap_pos[heap[i]] = static_cast<int>(i);
            i = p;
        }
        heap[i] = v;
        heap_pos[v] = static_cast<int>(i);
    }
    void heap_down(std::size_t i) {
        const std::uint32_t v = heap[i];
        for (;;) {
            std::size_t c = 2 * i + 1;
            if (c >= heap.size()) break;
            if (c + 1 < heap.size() && heap_less(heap[c + 1], heap[c])) ++c;
            if (!heap_less(heap[c], v)) break;
            heap[i] = heap[c];
            heap_pos[heap[i]] = static_cast<int>(i);
            i = c;
        }
        heap[i] = v;
        heap_pos[v] = static_cast<int>(i);
    }
    void heap_insert(std::uint32_t v) {
        if (heap_pos[v] >= 0) return;
        heap.push_back(v);
        heap_up(heap.size() - 1);
    }
    std::uint32_t heap_pop() {
        const std::uint32_t top = heap[0];
        heap_pos[top] = -1;
        const std::uint32_t last = heap.back();
        heap.pop_back();
        if (!heap.empty()) {
            heap[0] = last;
            heap_pos[last] = 0;
            heap_down(0);
        }
        return top;
    }

    void bump_var(std::uint32_t v) {
        activity[v] += var_inc;
        if (activity[v] > 1e100) {
            for (double& a : activity) a *= 1e-100;
            var_inc *= 1e-100;
        }
        if (heap_pos[v] >= 0) heap_up(static_cast<std::size_t>(heap_pos[v]));
    }
    void bump_clause(Clause& c) {
        c.activity += cla_inc;
        if (c.activity > 1e20) {
            for (Clause& d : clauses) {
                if (d.learnt) d.activity *= 1e-20;
            }
            cla_inc *= 1e-20;
        }
    }

    int new_var() {
        const auto v = static_cast<std::uint32_t>(assigns.size());
        assigns.push_back(kUndef);
        level.push_back(0);
        reason.push_back(kNoReason);
        polarity.push_back(true);
        seen.push_back(0);
        activity.push_back(0.0);
        heap_pos.push_back(-1);
        watches.emplace_back();
        watches.emplace_back();
        heap_insert(v);
        return static_cast<int>(v) + 1;
    }

    void enqueue(Lit l, std::uint32_t from) {
        const std::uint32_t v = var_of(l);
        assigns[v] = sign_of(l) ? kFalse : kTrue;
        level[v] = decision_level();
        reason[v] = from;
        trail.push_back(l);
    }

    std::uint32_t store(Clause c) {
        total_lits += c.lits.size();
        if (!free_slots.empty()) {
            const std::uint32_t r = free_slots.back();
            free_slots.pop_back();
            clauses[r] = std::move(c);
            return r;
        }
        clauses.push_back(std::move(c));
        return static_cast<std::uint32_t>(clauses.size() - 1);
    }

    void attach(std::uint32_t cref) {
        const Clause& c = clauses[cref];
        watches[c.lits[0]].push_back({cref, c.lits[1]});
        watches[c.lits[1]].push_back({cref, c.lits[0]});
    }

    void cancel_until(int lvl) {
        if (decision_level() <= lvl) return;
        for (std::size_t k = trail.size(); k-- > trail_lim[static_cast<std::size_t>(lvl)];) {
            const std::uint32_t v = var_of(trail[k]);
            assigns[v] = kUndef;
            reason[v] = kNoReason;
            polarity[v] = sign_of(trail[k]);
            heap_insert(v);
        }
        trail.resize(trail_lim[static_cast<std::size_t>(lvl)]);
        trail_lim.resize(static_cast<std::size_t>(lvl));
        qhead = trail.size();
    }

    std::uint32_t propagate() {
        std::uint32_t confl = kNoReason;
        while (qhead < trail.size()) {
            const Lit p = trail[qhead++];
            const Lit false_lit = p ^ 1u;
            std::vector<Watcher>& ws = watches[false_lit];
            ++stats.propagations;
            std::size_t i = 0, j = 0;
            const std::size_t n = ws.size();
            while (i < n) {
                const Watcher w = ws[i];
                if (value(w.blocker) == kTrue) {
                    ws[j++] = ws[i++];
                    continue;
                }
                Clause& c = clauses[w.cref];
                if (c.lits[0] == false_lit) std::swap(c.lits[0], c.lits[1]);
                ++i;
                const Lit first = c.lits[0];
                if (first != w.blocker && value(first) == kTrue) {
                    ws[j++] = {w.cref, first};
                    continue;
                }
                bool moved = false;
                for (std::size_t k = 2; k < c.lits.size(); ++k) {
                    if (value(c.lits[k]) != kFalse) {
                        std::swap(c.lits[1], c.lits[k]);
                        watches[c.lits[1]].push_back({w.cref, first});
                        moved = true;
                        break;
                    }
                }
                if (moved) continue;
                ws[j++] = {w.cref, first};
                if (value(first) == kFalse) {
                    confl = w.cref;
                    qhead = trail.size();
                    while (i < n) ws[j++] = ws[i++];
                } else {
                    enqueue(first, w.cref);
                }
            }
            ws.resize(j);
            if (confl != kNoReason) break;
        }
        return confl;
    }

    void analyze(std::uint32_t confl, std::vector<Lit>& learnt, int& bt_level) {
        int path = 0;
        Lit p = 0;
        bool have_p = false;
        learnt.assign(1, 0);
        std::size_t idx = trail.size();
        do {
            Clause& c = clauses[confl];
            if (c.learnt) bump_clause(c);
            for (std::size_t k = have_p ? 1 : 0; k < c.lits.size(); ++k) {
                const Lit q = c.lits[k];
                const std::uint32_t v = var_of(q);
                if (!seen[v] && level[v] > 0) {
                    bump_var(v);
                    seen[v] = 1;
                    if (level[v] >= decision_level()) {
                        ++path;
                    } else {
                        learnt.push_back(q);
                    }
                }
            }
            do {
                --idx;
            } while (!seen[var_of(trail[idx])]);
            p = trail[idx];
            have_p = true;
            confl = reason[var_of(p)];
            seen[var_of(p)] = 0;
            --path;
        } while (path > 0);
        learnt[0] = p ^ 1u;

        // local minimization: drop literals implied by other learnt literals
        std::vector<Lit> to_clear(learnt.begin(), learnt.end());
        std::size_t j = 1;
        for (std::size_t k = 1; k < learnt.size(); ++k) {
            const std::uint32_t r = reason[var_of(learnt[k])];
            bool keep = r == kNoReason;
            if (!keep) {
                const Clause& c = clauses[r];
                for (std::size_t m = 1; m < c.lits.size(); ++m) {
                    const std::uint32_t v = var_of(c.lits[m]);
                    if (!seen[v] && level[v] > 0) {
                        keep = true;
                        break;
                    }
                }
            }
            if (keep) learnt[j++] = learnt[k];
        }
        learnt.resize(j);
        for (Lit l : to_clear) seen[var_of(l)] = 0;

        bt_level = 0;
        if (learnt.size() > 1) {
            std::size_t best = 1;
            for (std::size_t k = 2; k < learnt.size(); ++k) {
                if (level[var_of(learnt[k])] > level[var_of(learnt[best])]) best = k;
            }
            std::swap(learnt[1], learnt[best]);
            bt_level = level[var_of(learnt[1])];
        }
    }

    bool locked(std::uint32_t cref) const {
        const Clause& c = clauses[cref];
        const std::uint32_t v = var_of(c.lits[0]);
        return reason[v] == cref && value(c.lits[0]) == kTrue;
    }

    void reduce_db() {
        std::vector<std::uint32_t> learnts;
        for (std::uint32_t k = 0; k < clauses.size(); ++k) {
            if (clauses[k].learnt && !clauses[k].deleted) learnts.push_back(k);
        }
        std::sort(learnts.begin(), learnts.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (clauses[a].activity != clauses[b].activity) return clauses[a].activity < clauses[b].activity;
            return a < b;
        });
        const std::size_t half = learnts.size() / 2;
        for (std::size_t k = 0; k < half; ++k) {
            const std::uint32_t r = learnts[k];
            Clause& c = clauses[r];
            if (c.lits.size() <= 2 || locked(r)) continue;
            total_lits -= c.lits.size();
            c.deleted = true;
            c.lits.clear();
            c.lits.shrink_to_fit();
            free_slots.push_back(r);
            --num_learnts;
        }
        for (auto& w : watches) w.clear();
        for (std::uint32_t k = 0; k < clauses.size(); ++k) {
            if (!clauses[k].deleted) attach(k);
        }
    }

    std::size_t memory() const {
        return total_lits * sizeof(Lit) + clauses.size() * sizeof(Clause) + 2 * total_lits * sizeof(Watcher) +
               assigns.size() * 64;
    }

    void add_clause(std::vector<int> dimacs) {
        if (!ok) return;
        std::vector<Lit> lits;
        lits.reserve(dimacs.size());
        for (int l : dimacs) {
            if (l == 0 || std::abs(l) > static_cast<int>(assigns.size())) {
                throw CnfError("literal " + std::to_string(l) + " is not declared");
            }
            lits.push_back(mk_lit(l));
        }
        std::sort(lits.begin(), lits.end());
        std::vector<Lit> out;
        for (std::size_t k = 0; k < lits.size(); ++k) {
            const Lit l = lits[k];
            if (k > 0 && l == lits[k - 1]) continue;
            if (k > 0 && l == (lits[k - 1] ^ 1u)) return;  // tautology
            const std::uint8_t v = value(l);
            if (v == kTrue) return;
            if (v == kFalse) continue;
            out.push_back(l);
        }
        if (out.empty()) {
            ok = false;
            return;
        }
        if (out.size() == 1) {
            enqueue(out[0], kNoReason);
            if (propagate() != kNoReason) ok = false;
            return;
        }
        Clause c;
        c.lits = std::move(out);
        attach(store(std::move(c)));
    }

    SatResult search(const std::vector<Lit>& assumptions, int conflict_limit, const SatBudget& budget,
                     std::chrono::steady_clock::time_point t0, std::uint64_t conflicts0) {
        int conflicts_here = 0;
        std::vector<Lit> learnt;
        for (;;) {
            const std::uint32_t confl = propagate();
            if (confl != kNoReason) {
                ++stats.conflicts;
                ++conflicts_here;
                if (decision_level() == 0) return SatResult::Unsat;
                int bt = 0;
                analyze(confl, learnt, bt);
                cancel_until(bt);
                if (learnt.size() == 1) {
                    enqueue(learnt[0], kNoReason);
                } else {
                    Clause c;
                    c.lits = learnt;
                    c.learnt = true;
                    const std::uint32_t r = store(std::move(c));
                    attach(r);
                    bump_clause(clauses[r]);
                    enqueue(learnt[0], r);
                    ++num_learnts;
                    ++stats.learnts;
                }
                var_inc /= 0.95;
                cla_inc /= 0.999;

                if (budget.conflicts && stats.conflicts - conflicts0 >= budget.conflicts) {
                    stop = StopReason::Conflicts;
                    return SatResult::Unknown;
                }
                if (budget.seconds > 0 && (stats.conflicts & 63u) == 0) {
                    const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    if (el > budget.seconds) {
                        stop = StopReason::Time;
                        return SatResult::Unknown;
                    }
                }
                if (budget.memory_bytes && memory() > budget.memory_bytes) {
                    stop = StopReason::Memory;
                    return SatResult::Unknown;
                }
                continue;
            }

            if (conflict_limit >= 0 && conflicts_here >= conflict_limit) {
                cancel_until(0);
                return SatResult::Unknown;  // restart
            }
            if (static_cast<double>(num_learnts) - static_cast<double>(trail.size()) >= max_learnts) reduce_db();

            Lit next = 0;
            bool have_next = false;
            while (static_cast<std::size_t>(decision_level()) < assumptions.size()) {
                const Lit a = assumptions[static_cast<std::size_t>(decision_level())];
                if (value(a) == kTrue) {
                    trail_lim.push_back(trail.size());
                } else if (value(a) == kFalse) {
                    return SatResult::Unsat;
                } else {
                    next = a;
                    have_next = true;
                    break;
                }
            }
            if (!have_next) {
                std::uint32_t v = 0;
                bool found = false;
                while (!heap.empty()) {
                    v = heap_pop();
                    if (assigns[v] == kUndef) {
                        found = true;
                        break;
                    }
                }
                if (!found) return SatResult::Sat;
                ++stats.decisions;
                if (budget.seconds > 0 && (stats.decisions & 1023u) == 0) {
                    const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    if (el > budget.seconds) {
                        stop = StopReason::Time;
                        return SatResult::Unknown;
                    }
                }
                next = 2 * v + (polarity[v] ? 1u : 0u);
            }
            trail_lim.push_back(trail.size());
            enqueue(next, kNoReason);
        }
    }

    SatResult solve(const std::vector<int>& assumps, const SatBudget& budget) {
        stop = StopReason::None;
        model.clear();
        if (!ok) return SatResult::Unsat;
        std::vector<Lit> assumptions;
        for (int a : assumps) {
            if (a == 0 || std::abs(a) > static_cast<int>(assigns.size())) {
                throw CnfError("assumption " + std::to_string(a) + " is not declared");
            }
            assumptions.push_back(mk_lit(a));
        }
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t c0 = stats.conflicts;
        max_learnts = std::max(1000.0, static_cast<double>(clauses.size() - num_learnts) / 3.0);
        SatResult r = SatResult::Unknown;
        for (int round = 0;; ++round) {
            const int limit = static_cast<int>(luby(2.0, round) * 100.0);
            r = search(assumptions, limit, budget, t0, c0);
            if (r != SatResult::Unknown || stop != StopReason::None) break;
            ++stats.restarts;
            max_learnts *= 1.05;
        }
        if (r == SatResult::Sat) {
            model.resize(assigns.size());
            for (std::size_t v = 0; v < assigns.size(); ++v) model[v] = assigns[v] == kTrue;
        }
        if (r == SatResult::Unsat && decision_level() == 0 && assumptions.empty()) ok = false;
        cancel_until(0);
        return r;
    }
};

SatSolver::SatSolver() : impl_(new Impl) {}
SatSolver::~SatSolver() { delete impl_; }

int SatSolver::new_var() { return impl_->new_var(); }
void SatSolver::add_clause(std::vector<int> lits) { impl_->add_clause(std::move(lits)); }
void SatSolver::add_formula(const CnfFormula& f) {
    while (num_vars() < f.num_vars) new_var();
    for (const auto& c : f.clauses) add_clause(c);
}
int SatSolver::num_vars() const { return static_cast<int>(impl_->assigns.size()); }

SatResult SatSolver::solve(const std::vector<int>& assumptions, const SatBudget& budget) {
    return impl_->solve(assumptions, budget);
}

bool SatSolver::model_value(int var) const {
    if (var < 1 || static_cast<std::size_t>(var) > impl_->model.size()) throw CnfError("no model value for variable");
    return impl_->model[static_cast<std::size_t>(var - 1)];
}
std::vector<bool> SatSolver::model() const { return impl_->model; }
StopReason SatSolver::stop_reason() const { return impl_->stop; }
const SatStats& SatSolver::stats() const { return impl_->stats; }
std::size_t SatSolver::memory_estimate() const { return impl_->memory(); }

// ---------------------------------------------------------------------------

std::vector<int> tseitin_encode(const Circuit& c, CnfSink& sink, const std::vector<int>& input_lits,
                                const std::vector<int>& key_lits) {
    if (!input_lits.empty() && input_lits.size() != c.inputs().size()) throw CnfError("input literal count mismatch");
    if (!key_lits.empty() && key_lits.size() != c.keys().size()) throw CnfError("key literal count mismatch");
    std::vector<int> lit(c.size(), 0);
    std::size_t ni = 0, nk = 0;
    int true_lit = 0;
    auto truth = [&] {
        if (!true_lit) {
            true_lit = sink.new_var();
            sink.add_clause({true_lit});
        }
        return true_lit;
    };
    auto and_of = [&](const std::vector<int>& ins) {
        const int o = sink.new_var();
        std::vector<int> big{o};
        for (int a : ins) {
            sink.add_clause({-o, a});
            big.push_back(-a);
        }
        sink.add_clause(big);
        return o;
    };
    auto xor2 = [&](int a, int b) {
        const int o = sink.new_var();
        sink.add_clause({-o, a, b});
        sink.add_clause({-o, -a, -b});
        sink.add_clause({o, -a, b});
        sink.add_clause({o, a, -b});
        return o;
    };
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Gate& g = c.gate(i);
        std::vector<int> in;
        for (std::size_t s : g.in) in.push_back(lit[s]);
        switch (g.op) {
        case GateOp::Input: lit[i] = input_lits.empty() ? sink.new_var() : input_lits[ni]; ++ni; break;
        case GateOp::Key: lit[i] = key_lits.empty() ? sink.new_var() : key_lits[nk]; ++nk; break;
        case GateOp::Const1: lit[i] = truth(); break;
        case GateOp::Const0: lit[i] = -truth(); break;
        case GateOp::Buf: lit[i] = in[0]; break;
        case GateOp::Not: lit[i] = -in[0]; break;
        case GateOp::And: lit[i] = in.size() == 1 ? in[0] : and_of(in); break;
        case GateOp::Nand: lit[i] = in.size() == 1 ? -in[0] : -and_of(in); break;
        case GateOp::Or:
        case GateOp::Nor: {
            if (in.size() == 1) {
                lit[i] = g.op == GateOp::Or ? in[0] : -in[0];
                break;
            }
            for (int& a : in) a = -a;
            const int nor = and_of(in);
            lit[i] = g.op == GateOp::Or ? -nor : nor;
            break;
        }
        case GateOp::Xor:
        case GateOp::Xnor: {
            int acc = in[0];
            for (std::size_t k = 1; k < in.size(); ++k) acc = xor2(acc, in[k]);
            lit[i] = g.op == GateOp::Xor ? acc : -acc;
            break;
        }
        case GateOp::Lut: {
            const int o = sink.new_var();
            for (unsigned row = 0; row < (1u << in.size()); ++row) {
                std::vector<int> cl;
                for (std::size_t k = 0; k < in.size(); ++k) cl.push_back(((row >> k) & 1u) ? -in[k] : in[k]);
                cl.push_back(((g.lut >> row) & 1u) ? o : -o);
                sink.add_clause(cl);
            }
            lit[i] = o;
            break;
        }
        }
    }
    return lit;
}

}  // namespace ipcamo
