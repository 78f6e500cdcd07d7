#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipcamo {

// One-hot order used by every tensor encoding: [PI, PO, AND].
enum class NodeType : std::uint8_t { PI = 0, PO = 1, AND = 2 };

inline constexpr std::size_t kNodeTypeCount = 3;

const char* to_string(NodeType t);
NodeType node_type_from_string(const std::string& s);

struct Fanin {
    std::size_t src = 0;
    bool inverted = false;

    friend bool operator==(const Fanin&, const Fanin&) = default;
    friend auto operator<=>(const Fanin&, const Fanin&) = default;
};

struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;
    bool inverted = false;

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct Node {
    NodeType type = NodeType::PI;
    std::string name;
    std::vector<Fanin> fanins;
};

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// And-Inverter Graph with nodes kept in topological order: every fanin refers
// to a node with a smaller index, so the graph is acyclic by construction.
//
// An AND with no fanins is the constant-1 node (empty conjunction).  A graph is
// canonical when PIs have no fanins, every PO has exactly one fanin and no
// fanout, and every AND has two fanins or none.
class AigGraph {
public:
    std::size_t add_pi(std::string name = {});
    std::size_t add_and(Fanin a, Fanin b, std::string name = {});
    std::size_t add_constant();
    std::size_t add_po(Fanin in, std::string name = {});
    // Unchecked arity; used for decoded or padded graphs.
    std::size_t add_node(NodeType type, std::vector<Fanin> fanins, std::string name = {});

    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    const Node& node(std::size_t i) const { return nodes_.at(i); }
    Node& node(std::size_t i) { return nodes_.at(i); }
    const std::vector<Node>& nodes() const { return nodes_; }

    std::vector<std::size_t> pis() const { return of_type(NodeType::PI); }
    std::vector<std::size_t> pos() const { return of_type(NodeType::PO); }
    std::vector<std::size_t> ands() const { return of_type(NodeType::AND); }
    std::vector<std::size_t> of_type(NodeType t) const;
    std::size_t count(NodeType t) const;

    std::vector<Edge> edges() const;
    std::size_t edge_count() const;
    std::vector<std::size_t> fanout_counts() const;

    std::optional<std::size_t> find_po(const std::string& name) const;
    std::optional<std::size_t> find_pi(const std::string& name) const;

    bool is_canonical() const;
    // Description of the first canonical-form violation, or empty.
    std::string canonical_violation() const;
    bool is_tree() const;

private:
    std::vector<Node> nodes_;
};

// Equality ignoring node names; fanins compared as multisets.
bool structurally_equal(const AigGraph& a, const AigGraph& b);

// Conjunctive evaluation: AND and PO nodes output the AND of their (possibly
// inverted) fanins; an empty fanin list evaluates to 1.  `assignment` is
// indexed by PI ordinal.
std::vector<bool> simulate(const AigGraph& g, const std::vector<bool>& assignment);

// 64 patterns at once; words indexed by PI ordinal, result by PO ordinal.
std::vector<std::uint64_t> simulate_words(const AigGraph& g, const std::vector<std::uint64_t>& pi_words);

inline constexpr std::size_t kMaxTruthTableInputs = 20;

// One vector of 2^|PI| bits per PO.  Row k assigns PI i the value of bit
// (|PI|-1-i) of k, so PI 0 is the most significant position.
std::vector<std::vector<bool>> truth_table(const AigGraph& g);

enum class ConeMode {
    Shared,  // fan-in cone with shared nodes kept shared
    Tree,    // multi-fanout nodes (PIs included) duplicated per use
};

// Fan-in cone of one PO as a single-PO graph ordered leaves-first
// (reversed breadth-first order from the PO).  Returns nullopt when the cone
// has more than `max_nodes` nodes.  Throws GraphError for an unknown output.
std::optional<AigGraph> extract_cone(const AigGraph& g, const std::string& output_name,
                                     std::size_t max_nodes, ConeMode mode = ConeMode::Shared);

inline constexpr std::size_t kDefaultMaxNodes = 200;

// Appends dummy PI/AND/PO nodes so that each per-type count reaches the
// maximum of `g` and `reference`.  Dummy nodes have no fanins.
AigGraph pad_to_match(const AigGraph& g, const AigGraph& reference);

// Reorders nodes into blocks [PIs, ANDs, POs], preserving relative order in
// each block.  Edges stay forward.  `old_to_new` receives the permutation.
AigGraph to_block_order(const AigGraph& g, std::vector<std::size_t>* old_to_new = nullptr);

// Number of cells the graph occupies as a gate netlist: AND gates with at
// least one fanin plus one inverter per inverted edge.
std::size_t cell_count(const AigGraph& g);

std::string to_json(const AigGraph& g);
AigGraph graph_from_json(const std::string& text);

}  // namespace ipcamo
