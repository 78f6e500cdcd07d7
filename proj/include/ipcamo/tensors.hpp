#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ipcamo/aig.hpp"
#include "ipcamo/matrix.hpp"

namespace ipcamo {

// type: N x 3 one-hot rows in [PI, PO, AND] order.  conn/inv: N x N where
// entry (i, j), j < i, describes an edge from node j into node i.
struct TensorTriple {
    Matrix type;
    Matrix conn;
    Matrix inv;

    std::size_t size() const { return type.rows; }
    friend bool operator==(const TensorTriple&, const TensorTriple&) = default;
};

TensorTriple zero_triple(std::size_t n);

// Throws GraphError when two edges join the same ordered node pair.
TensorTriple to_tensors(const AigGraph& g);

// Builds the graph described by a binary triple.  The result may be
// non-canonical.  Inverter bits without a connection bit and edges into PIs
// are dropped; each drop appends a message to `warnings` when given.
// Throws GraphError when a type row is not one-hot or an entry is not 0/1.
AigGraph from_tensors(const TensorTriple& t, std::vector<std::string>* warnings = nullptr);

// conn/inv entries become 1 when strictly greater than th.  Type rows become
// one-hot at their argmax (lowest index wins ties).  An inverter bit whose
// connection bit is 0 is cleared.
TensorTriple threshold_filter(const TensorTriple& soft, double th);

// True when all lower-triangle rules hold: entries with j >= i are zero and
// every inverter bit has its connection bit set.
bool satisfies_triangle_invariants(const TensorTriple& t);

}  // namespace ipcamo
