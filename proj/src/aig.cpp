#include "ipcamo/aig.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_map>

#include "json.hpp"

namespace ipcamo {

const char* to_string(NodeType t) {
    switch (t) {
    case NodeType::PI: return "PI";
    case NodeType::PO: return "PO";
    case NodeType::AND: return "AND";
    }
    return "?";
}

NodeType node_type_from_string(const std::string& s) {
    if (s == "PI") return NodeType::PI;
    if (s == "PO") return NodeType::PO;
    if (s == "AND") return NodeType::AND;
    throw GraphError("unknown node type '" + s + "'");
}

// ---------------------------------------------------------------------------
// AigGraph
// ---------------------------------------------------------------------------

std::size_t AigGraph::add_node(NodeType type, std::vector<Fanin> fanins, std::string name) {
    const std::size_t id = nodes_.size();
    for (const Fanin& f : fanins) {
        if (f.src >= id) {
            throw GraphError("fanin " + std::to_string(f.src) + " of node " + std::to_string(id) +
                             " is not topologically earlier");
        }
    }
    nodes_.push_back(Node{type, std::move(name), std::move(fanins)});
    return id;
}

std::size_t AigGraph::add_pi(std::string name) {
    return add_node(NodeType::PI, {}, std::move(name));
}

std::size_t AigGraph::add_and(Fanin a, Fanin b, std::string name) {
    return add_node(NodeType::AND, {a, b}, std::move(name));
}

std::size_t AigGraph::add_constant() {
    return add_node(NodeType::AND, {}, {});
}

std::size_t AigGraph::add_po(Fanin in, std::string name) {
    return add_node(NodeType::PO, {in}, std::move(name));
}

std::vector<std::size_t> AigGraph::of_type(NodeType t) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].type == t) out.push_back(i);
    }
    return out;
}

std::size_t AigGraph::count(NodeType t) const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [t](const Node& n) { return n.type == t; }));
}

std::vector<Edge> AigGraph::edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        for (const Fanin& f : nodes_[i].fanins) out.push_back(Edge{f.src, i, f.inverted});
    }
    return out;
}

std::size_t AigGraph::edge_count() const {
    std::size_t n = 0;
    for (const Node& node : nodes_) n += node.fanins.size();
    return n;
}

std::vector<std::size_t> AigGraph::fanout_counts() const {
    std::vector<std::size_t> out(nodes_.size(), 0);
    for (const Node& node : nodes_) {
        for (const Fanin& f : node.fanins) ++out[f.src];
    }
    return out;
}

std::optional<std::size_t> AigGraph::find_po(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].type == NodeType::PO && nodes_[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> AigGraph::find_pi(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].type == NodeType::PI && nodes_[i].name == name) return i;
    }
    return std::nullopt;
}

std::string AigGraph::canonical_violation() const {
    const auto fanout = fanout_counts();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        const std::size_t k = n.fanins.size();
        switch (n.type) {
        case NodeType::PI:
            if (k != 0) return "PI " + std::to_string(i) + " has fanins";
            break;
        case NodeType::PO:
            if (k != 1) return "PO " + std::to_string(i) + " has " + std::to_string(k) + " fanins";
            if (fanout[i] != 0) return "PO " + std::to_string(i) + " drives other nodes";
            break;
        case NodeType::AND:
            if (k != 0 && k != 2) return "AND " + std::to_string(i) + " has " + std::to_string(k) + " fanins";
            break;
        }
    }
    return {};
}

bool AigGraph::is_canonical() const {
    return canonical_violation().empty();
}

bool AigGraph::is_tree() const {
    if (count(NodeType::PO) != 1 || edge_count() + 1 != nodes_.size()) return false;
    const auto fanout = fanout_counts();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const std::size_t want = nodes_[i].type == NodeType::PO ? 0 : 1;
        if (fanout[i] != want) return false;
    }
    return true;
}

bool structurally_equal(const AigGraph& a, const AigGraph& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.node(i).type != b.node(i).type) return false;
        auto fa = a.node(i).fanins;
        auto fb = b.node(i).fanins;
        std::sort(fa.begin(), fa.end());
        std::sort(fb.begin(), fb.end());
        if (fa != fb) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

std::vector<std::uint64_t> simulate_words(const AigGraph& g, const std::vector<std::uint64_t>& pi_words) {
    const std::size_t n_pi = g.count(NodeType::PI);
    if (pi_words.size() != n_pi) {
        throw GraphError("missing PI assignment: expected " + std::to_string(n_pi) + " values, got " +
                         std::to_string(pi_words.size()));
    }
    std::vector<std::uint64_t> value(g.size(), 0);
    std::vector<std::uint64_t> out;
    std::size_t pi_ordinal = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Node& n = g.node(i);
        if (n.type == NodeType::PI) {
            value[i] = pi_words[pi_ordinal++];
            continue;
        }
        std::uint64_t v = ~std::uint64_t{0};
        for (const Fanin& f : n.fanins) v &= f.inverted ? ~value[f.src] : value[f.src];
        value[i] = v;
        if (n.type == NodeType::PO) out.push_back(v);
    }
    return out;
}

std::vector<bool> simulate(const AigGraph& g, const std::vector<bool>& assignment) {
    std::vector<std::uint64_t> words(assignment.size());
    for (std::size_t i = 0; i < assignment.size(); ++i) words[i] = assignment[i] ? ~std::uint64_t{0} : 0;
    const auto out_words = simulate_words(g, words);
    std::vector<bool> out(out_words.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out_words[i] & 1u) != 0;
    return out;
}

std::vector<std::vector<bool>> truth_table(const AigGraph& g) {
    const std::size_t n = g.count(NodeType::PI);
    if (n > kMaxTruthTableInputs) {
        throw GraphError("truth table requested for " + std::to_string(n) + " PIs (limit " +
                         std::to_string(kMaxTruthTableInputs) + ")");
    }
    const std::uint64_t rows = std::uint64_t{1} << n;
    std::vector<std::vector<bool>> table(g.count(NodeType::PO), std::vector<bool>(rows));
    std::vector<std::uint64_t> words(n);
    for (std::uint64_t base = 0; base < rows; base += 64) {
        const std::uint64_t span = std::min<std::uint64_t>(64, rows - base);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t w = 0;
            for (std::uint64_t b = 0; b < span; ++b) {
                if (((base + b) >> (n - 1 - i)) & 1u) w |= std::uint64_t{1} << b;
            }
            words[i] = w;
        }
        const auto out = simulate_words(g, words);
        for (std::size_t o = 0; o < out.size(); ++o) {
            for (std::uint64_t b = 0; b < span; ++b) table[o][base + b] = (out[o] >> b) & 1u;
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Cone extraction
// ---------------------------------------------------------------------------

namespace {

std::optional<AigGraph> shared_cone(const AigGraph& g, std::size_t po, std::size_t max_nodes) {
    std::vector<char> in_cone(g.size(), 0);
    std::vector<std::size_t> stack{po};
    std::size_t cone_size = 0;
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        if (in_cone[v]) continue;
        in_cone[v] = 1;
        if (++cone_size > max_nodes) return std::nullopt;
        for (const Fanin& f : g.node(v).fanins) stack.push_back(f.src);
    }

    // Longest distance from the PO; a fanin is always strictly deeper than
    // its consumer, so sorting by decreasing depth is topological.
    std::vector<std::size_t> depth(g.size(), 0);
    for (std::size_t v = po + 1; v-- > 0;) {
        if (!in_cone[v]) continue;
        for (const Fanin& f : g.node(v).fanins) depth[f.src] = std::max(depth[f.src], depth[v] + 1);
    }
    std::vector<std::size_t> bfs_rank(g.size(), 0);
    std::vector<char> seen(g.size(), 0);
    std::deque<std::size_t> queue{po};
    seen[po] = 1;
    std::vector<std::size_t> order;
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        bfs_rank[v] = order.size();
        order.push_back(v);
        for (const Fanin& f : g.node(v).fanins) {
            if (!seen[f.src]) {
                seen[f.src] = 1;
                queue.push_back(f.src);
            }
        }
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (depth[a] != depth[b]) return depth[a] > depth[b];
        return bfs_rank[a] > bfs_rank[b];
    });

    AigGraph out;
    std::unordered_map<std::size_t, std::size_t> remap;
    for (std::size_t v : order) {
        const Node& n = g.node(v);
        std::vector<Fanin> fanins;
        for (const Fanin& f : n.fanins) fanins.push_back(Fanin{remap.at(f.src), f.inverted});
        remap[v] = out.add_node(n.type, std::move(fanins), n.name);
    }
    return out;
}

std::optional<AigGraph> tree_cone(const AigGraph& g, std::size_t po, std::size_t max_nodes) {
    // Expanded subtree sizes, saturated just above the limit.
    const std::size_t cap = max_nodes + 1;
    std::vector<std::size_t> size(g.size(), 0);
    for (std::size_t v = 0; v <= po; ++v) {
        std::size_t s = 1;
        for (const Fanin& f : g.node(v).fanins) s = std::min(cap, s + size[f.src]);
        size[v] = s;
    }
    if (size[po] > max_nodes) return std::nullopt;

    struct TreeNode {
        std::size_t orig;
        std::vector<std::pair<std::size_t, bool>> children;  // BFS index, inverted
    };
    std::vector<TreeNode> bfs;
    bfs.push_back({po, {}});
    for (std::size_t head = 0; head < bfs.size(); ++head) {
        const Node& n = g.node(bfs[head].orig);
        for (const Fanin& f : n.fanins) {
            bfs[head].children.emplace_back(bfs.size(), f.inverted);
            bfs.push_back({f.src, {}});
        }
    }

    const std::size_t total = bfs.size();
    std::vector<std::size_t> new_index(total);
    for (std::size_t k = 0; k < total; ++k) new_index[k] = total - 1 - k;

    std::map<std::string, std::size_t> copies;
    AigGraph out;
    for (std::size_t k = total; k-- > 0;) {
        const Node& n = g.node(bfs[k].orig);
        std::vector<Fanin> fanins;
        for (const auto& [child, inv] : bfs[k].children) fanins.push_back(Fanin{new_index[child], inv});
        std::string name = n.name;
        if (n.type == NodeType::PI) {
            const std::size_t c = copies[n.name]++;
            if (c > 0) name += "#" + std::to_string(c);
        }
        out.add_node(n.type, std::move(fanins), std::move(name));
    }
    return out;
}

}  // namespace

std::optional<AigGraph> extract_cone(const AigGraph& g, const std::string& output_name, std::size_t max_nodes,
                                     ConeMode mode) {
    const auto po = g.find_po(output_name);
    if (!po) throw GraphError("unknown output '" + output_name + "'");
    return mode == ConeMode::Shared ? shared_cone(g, *po, max_nodes) : tree_cone(g, *po, max_nodes);
}

// ---------------------------------------------------------------------------
// Padding and reordering
// ---------------------------------------------------------------------------

AigGraph pad_to_match(const AigGraph& g, const AigGraph& reference) {
    AigGraph out = g;
    const auto pad = [&](NodeType t, const char* prefix) {
        const std::size_t have = g.count(t);
        const std::size_t want = std::max(have, reference.count(t));
        for (std::size_t k = have; k < want; ++k) {
            out.add_node(t, {}, std::string(prefix) + std::to_string(k - have));
        }
    };
    pad(NodeType::PI, "dummy_pi_");
    pad(NodeType::AND, "dummy_and_");
    pad(NodeType::PO, "dummy_po_");
    return out;
}

AigGraph to_block_order(const AigGraph& g, std::vector<std::size_t>* old_to_new) {
    std::vector<std::size_t> order;
    for (NodeType t : {NodeType::PI, NodeType::AND, NodeType::PO}) {
        for (std::size_t i : g.of_type(t)) order.push_back(i);
    }
    std::vector<std::size_t> remap(g.size());
    for (std::size_t k = 0; k < order.size(); ++k) remap[order[k]] = k;
    AigGraph out;
    for (std::size_t old : order) {
        const Node& n = g.node(old);
        std::vector<Fanin> fanins;
        for (const Fanin& f : n.fanins) fanins.push_back(Fanin{remap[f.src], f.inverted});
        out.add_node(n.type, std::move(fanins), n.name);
    }
    if (old_to_new) *old_to_new = std::move(remap);
    return out;
}

std::size_t cell_count(const AigGraph& g) {
    std::size_t cells = 0;
    for (const Node& n : g.nodes()) {
        if (n.type == NodeType::AND && !n.fanins.empty()) ++cells;
        for (const Fanin& f : n.fanins) cells += f.inverted ? 1 : 0;
    }
    return cells;
}

// ---------------------------------------------------------------------------
// JSON dump
// ---------------------------------------------------------------------------

std::string to_json(const AigGraph& g) {
    nlohmann::ordered_json j;
    j["format"] = "ipcamo-graph";
    j["version"] = 1;
    auto nodes = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < g.size(); ++i) {
        nodes.push_back({{"id", i}, {"type", to_string(g.node(i).type)}, {"name", g.node(i).name}});
    }
    j["nodes"] = std::move(nodes);
    auto edges = nlohmann::ordered_json::array();
    for (const Edge& e : g.edges()) edges.push_back({{"src", e.src}, {"dst", e.dst}, {"inverted", e.inverted}});
    j["edges"] = std::move(edges);
    return j.dump(1);
}

AigGraph graph_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "ipcamo-graph" || j.value("version", 0) != 1) {
        throw GraphError("not an ipcamo-graph v1 document");
    }
    const auto& nodes = j.at("nodes");
    std::vector<std::vector<Fanin>> fanins(nodes.size());
    for (const auto& e : j.at("edges")) {
        const std::size_t dst = e.at("dst").get<std::size_t>();
        if (dst >= nodes.size()) throw GraphError("edge destination out of range");
        fanins[dst].push_back(Fanin{e.at("src").get<std::size_t>(), e.at("inverted").get<bool>()});
    }
    AigGraph g;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        g.add_node(node_type_from_string(nodes[i].at("type").get<std::string>()), std::move(fanins[i]),
                   nodes[i].value("name", ""));
    }
    return g;
}

}  // namespace ipcamo
