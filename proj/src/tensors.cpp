#include "ipcamo/tensors.hpp"

namespace ipcamo {

TensorTriple zero_triple(std::size_t n) {
    return TensorTriple{Matrix(n, kNodeTypeCount), Matrix(n, n), Matrix(n, n)};
}

TensorTriple to_tensors(const AigGraph& g) {
    const std::size_t n = g.size();
    TensorTriple t = zero_triple(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Node& node = g.node(i);
        t.type(i, static_cast<std::size_t>(node.type)) = 1.0;
        for (const Fanin& f : node.fanins) {
            if (t.conn(i, f.src) != 0.0) {
                throw GraphError("parallel edges " + std::to_string(f.src) + " -> " + std::to_string(i) +
                                 " cannot be encoded");
            }
            t.conn(i, f.src) = 1.0;
            if (f.inverted) t.inv(i, f.src) = 1.0;
        }
    }
    return t;
}

AigGraph from_tensors(const TensorTriple& t, std::vector<std::string>* warnings) {
    const std::size_t n = t.size();
    const auto warn = [&](std::string msg) {
        if (warnings) warnings->push_back(std::move(msg));
    };
    const auto bit = [](double v, const char* what, std::size_t i, std::size_t j) {
        if (v != 0.0 && v != 1.0) {
            throw GraphError(std::string(what) + " entry (" + std::to_string(i) + "," + std::to_string(j) +
                             ") is not binary");
        }
        return v == 1.0;
    };

    AigGraph g;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t ones = 0, which = 0;
        for (std::size_t k = 0; k < kNodeTypeCount; ++k) {
            if (bit(t.type(i, k), "type", i, k)) {
                ++ones;
                which = k;
            }
        }
        if (ones != 1) throw GraphError("type row " + std::to_string(i) + " is not one-hot");
        const auto type = static_cast<NodeType>(which);

        std::vector<Fanin> fanins;
        for (std::size_t j = 0; j < n; ++j) {
            const bool c = bit(t.conn(i, j), "conn", i, j);
            const bool v = bit(t.inv(i, j), "inv", i, j);
            if (!c && !v) continue;
            if (j >= i) {
                warn("entry (" + std::to_string(i) + "," + std::to_string(j) + ") above the diagonal ignored");
                continue;
            }
            if (!c) {
                warn("inverter bit without connection at (" + std::to_string(i) + "," + std::to_string(j) +
                     ") dropped");
                continue;
            }
            if (type == NodeType::PI) {
                warn("edge " + std::to_string(j) + " -> PI " + std::to_string(i) + " dropped");
                continue;
            }
            fanins.push_back(Fanin{j, v});
        }
        g.add_node(type, std::move(fanins));
    }
    return g;
}

TensorTriple threshold_filter(const TensorTriple& soft, double th) {
    const std::size_t n = soft.size();
    TensorTriple out = zero_triple(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < kNodeTypeCount; ++k) {
            if (soft.type(i, k) > soft.type(i, best)) best = k;
        }
        out.type(i, best) = 1.0;
        for (std::size_t j = 0; j < i; ++j) {
            const bool c = soft.conn(i, j) > th;
            out.conn(i, j) = c ? 1.0 : 0.0;
            out.inv(i, j) = c && soft.inv(i, j) > th ? 1.0 : 0.0;
        }
    }
    return out;
}

bool satisfies_triangle_invariants(const TensorTriple& t) {
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j >= i && (t.conn(i, j) != 0.0 || t.inv(i, j) != 0.0)) return false;
            if (t.inv(i, j) > t.conn(i, j)) return false;
        }
    }
    return true;
}

}  // namespace ipcamo
