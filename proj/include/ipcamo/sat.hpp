#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipcamo/circuit.hpp"

namespace ipcamo {

// Literals use DIMACS conventions: variable v >= 1, literal +v or -v.
class CnfSink {
public:
    virtual ~CnfSink() = default;
    virtual int new_var() = 0;
    virtual void add_clause(std::vector<int> lits) = 0;
};

class CnfError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct CnfFormula : CnfSink {
    int num_vars = 0;
    std::vector<std::vector<int>> clauses;

    int new_var() override { return ++num_vars; }
    // Throws CnfError for an empty clause or an undeclared variable.
    void add_clause(std::vector<int> lits) override;
    std::string to_dimacs() const;
    // Direct evaluation; `assignment[v-1]` is the value of variable v.
    bool satisfied_by(const std::vector<bool>& assignment) const;
};

CnfFormula parse_dimacs(const std::string& text);

enum class SatResult { Sat, Unsat, Unknown };
enum class StopReason { None, Time, Conflicts, Memory };

const char* to_string(SatResult r);
const char* to_string(StopReason r);

// Zero means unlimited.
struct SatBudget {
    double seconds = 0.0;
    std::uint64_t conflicts = 0;
    std::size_t memory_bytes = 0;
};

struct SatStats {
    std::uint64_t conflicts = 0;
    std::uint64_t decisions = 0;
    std::uint64_t propagations = 0;
    std::uint64_t restarts = 0;
    std::uint64_t learnts = 0;
};

// CDCL: two watched literals, first-UIP learning with local minimization,
// VSIDS with phase saving, Luby restarts, activity-based learnt-clause
// reduction.  No randomness, so runs are reproducible.  Incremental: clauses
// may be added between solve calls and each call takes assumptions.
class SatSolver : public CnfSink {
public:
    SatSolver();
    ~SatSolver() override;
    SatSolver(const SatSolver&) = delete;
    SatSolver& operator=(const SatSolver&) = delete;

    int new_var() override;
    void add_clause(std::vector<int> lits) override;
    void add_formula(const CnfFormula& f);
    int num_vars() const;

    // Budgets apply per call.
    SatResult solve(const std::vector<int>& assumptions = {}, const SatBudget& budget = {});

    // Model of the last Sat answer.
    bool model_value(int var) const;
    std::vector<bool> model() const;

    StopReason stop_reason() const;
    const SatStats& stats() const;
    std::size_t memory_estimate() const;

private:
    struct Impl;
    Impl* impl_;
};

// Adds clauses defining one literal per gate.  `input_lits` and `key_lits`
// bind the circuit's inputs and keys (by ordinal) to existing literals; an
// empty vector allocates fresh variables.  Buf and Not reuse or negate their
// operand's literal.
std::vector<int> tseitin_encode(const Circuit& c, CnfSink& sink, const std::vector<int>& input_lits = {},
                                const std::vector<int>& key_lits = {});

}  // namespace ipcamo
