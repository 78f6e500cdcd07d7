#include "ipcamo/ged.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <vector>

namespace ipcamo {

namespace {

using Clock = std::chrono::steady_clock;
constexpr std::size_t kEps = std::numeric_limits<std::size_t>::max();

struct Labeled {
    std::size_t n = 0;
    std::vector<std::uint8_t> type;
    // Edge multiplicities for ordered pair (src, dst), split by inversion.
    std::vector<std::array<std::uint8_t, 2>> pair;
    std::array<std::size_t, 2> edges_by_label{0, 0};

    explicit Labeled(const AigGraph& g) : n(g.size()), type(n), pair(n * n, {0, 0}) {
        for (std::size_t i = 0; i < n; ++i) {
            type[i] = static_cast<std::uint8_t>(g.node(i).type);
            for (const Fanin& f : g.node(i).fanins) {
                ++pair[f.src * n + i][f.inverted ? 1 : 0];
                ++edges_by_label[f.inverted ? 1 : 0];
            }
        }
    }
    const std::array<std::uint8_t, 2>& at(std::size_t s, std::size_t d) const { return pair[s * n + d]; }
};

std::size_t match_cost(const std::array<std::uint8_t, 2>& a, const std::array<std::uint8_t, 2>& b) {
    const std::size_t same = std::min(a[0], b[0]) + std::min(a[1], b[1]);
    return std::max<std::size_t>(a[0] + a[1], b[0] + b[1]) - same;
}

std::size_t total(const std::array<std::uint8_t, 2>& a) { return std::size_t{a[0]} + a[1]; }
std::size_t total(const std::array<std::size_t, 2>& a) { return a[0] + a[1]; }

std::size_t label_bound(const std::array<std::size_t, 2>& a, const std::array<std::size_t, 2>& b) {
    const std::size_t same = std::min(a[0], b[0]) + std::min(a[1], b[1]);
    return std::max(a[0] + a[1], b[0] + b[1]) - same;
}

// Minimum-cost perfect matching on a square matrix (shortest augmenting path
// with potentials, O(n^3)).  Writes the column assigned to each row.
long long hungarian(const std::vector<long long>& c, std::size_t n, std::vector<std::size_t>& row_to_col) {
    constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> seen(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(seen.begin(), seen.end(), 0);
        do {
            seen[j0] = 1;
            const std::size_t i0 = p[j0];
            long long delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (seen[j]) continue;
                const long long cur = c[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (seen[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    row_to_col.assign(n, 0);
    long long total = 0;
    for (std::size_t j = 1; j <= n; ++j) {
        row_to_col[p[j] - 1] = j - 1;
        total += c[(p[j] - 1) * n + (j - 1)];
    }
    return total;
}

// Edit cost between two labeled edge multisets (labels: plain, inverted).
std::size_t multiset_cost(const std::array<std::size_t, 2>& a, const std::array<std::size_t, 2>& b) {
    return label_bound(a, b);
}

// Depth-first branch and bound over node mappings of g1 onto g2 nodes or
// deletion, branching on the unmapped g1 node with the largest regret.  The bound at each search node is a bipartite
// assignment over the unmapped nodes: exact costs for edges into the mapped
// part, half costs for edges among unmapped nodes.  The assignment itself is
// completed into a mapping to tighten the incumbent.
class Search {
public:
    Search(const AigGraph& a, const AigGraph& b, std::chrono::milliseconds timeout)
        : g1_(a), g2_(b), deadline_(Clock::now() + timeout), phi_(g1_.n, kEps), used_(g2_.n, 0),
          twin_(g2_.n) {
        // g2 nodes with identical type and neighborhoods are interchangeable
        for (std::size_t v = 0; v < g2_.n; ++v) {
            twin_[v] = v;
            for (std::size_t w = 0; w < v; ++w) {
                if (twin_[w] == w && twins(w, v)) {
                    twin_[v] = w;
                    break;
                }
            }
        }
        best_ = g1_.n + g2_.n + g1_.edges_by_label[0] + g1_.edges_by_label[1] + g2_.edges_by_label[0] +
                g2_.edges_by_label[1];
    }

    GedResult run() {
        dfs(0, root_boundary());
        return GedResult{timed_out_, best_};
    }

private:
    bool twins(std::size_t x, std::size_t y) const {
        if (g2_.type[x] != g2_.type[y]) return false;
        if (total(g2_.at(x, y)) || total(g2_.at(y, x))) return false;
        for (std::size_t z = 0; z < g2_.n; ++z) {
            if (z == x || z == y) continue;
            if (g2_.at(x, z) != g2_.at(y, z) || g2_.at(z, x) != g2_.at(z, y)) return false;
        }
        return true;
    }

    bool out_of_time() {
        if ((++ticks_ & 63u) == 0 && Clock::now() > deadline_) timed_out_ = true;
        return timed_out_;
    }

    // Exact cost of a complete mapping (g1 node -> g2 node or kEps).
    std::size_t full_cost(const std::vector<std::size_t>& map) const {
        std::size_t c = 0;
        std::vector<char> hit(g2_.n, 0);
        for (std::size_t u = 0; u < g1_.n; ++u) {
            if (map[u] == kEps) {
                ++c;
            } else {
                hit[map[u]] = 1;
                c += g1_.type[u] != g2_.type[map[u]];
            }
        }
        for (std::size_t v = 0; v < g2_.n; ++v) c += !hit[v];
        // g1 edges against their images
        for (std::size_t s = 0; s < g1_.n; ++s) {
            for (std::size_t d = 0; d < g1_.n; ++d) {
                const auto& e = g1_.at(s, d);
                if (map[s] == kEps || map[d] == kEps) {
                    c += total(e);
                } else {
                    c += match_cost(e, g2_.at(map[s], map[d]));
                }
            }
        }
        // g2 edges with an endpoint outside the image
        for (std::size_t s = 0; s < g2_.n; ++s) {
            for (std::size_t d = 0; d < g2_.n; ++d) {
                if (!hit[s] || !hit[d]) c += total(g2_.at(s, d));
            }
        }
        return c;
    }

    // Exact costs of the possible next placements relative to the placed
    // part: substitution u -> v, deletion of u, insertion of v.
    struct Boundary {
        std::vector<std::size_t> sub, del, ins;
    };

    Boundary root_boundary() const {
        Boundary bd{std::vector<std::size_t>(g1_.n * g2_.n), std::vector<std::size_t>(g1_.n, 1),
                    std::vector<std::size_t>(g2_.n, 1)};
        for (std::size_t u = 0; u < g1_.n; ++u) {
            for (std::size_t v = 0; v < g2_.n; ++v) bd.sub[u * g2_.n + v] = g1_.type[u] != g2_.type[v];
        }
        return bd;
    }

    // Boundary after placing u -> v (v == kEps for deletion).
    Boundary advance(const Boundary& bd, std::size_t u, std::size_t v) const {
        Boundary nb = bd;
        for (std::size_t a = 0; a < g1_.n; ++a) {
            if (phi_[a] != kEps || del_[a]) continue;
            const auto& out = g1_.at(a, u);
            const auto& in = g1_.at(u, a);
            const std::size_t all = total(out) + total(in);
            nb.del[a] += all;
            for (std::size_t b = 0; b < g2_.n; ++b) {
                if (used_[b]) continue;
                nb.sub[a * g2_.n + b] +=
                    v == kEps ? all : match_cost(out, g2_.at(b, v)) + match_cost(in, g2_.at(v, b));
            }
        }
        if (v != kEps) {
            for (std::size_t b = 0; b < g2_.n; ++b) {
                if (!used_[b]) nb.ins[b] += total(g2_.at(b, v)) + total(g2_.at(v, b));
            }
        }
        return nb;
    }

    void dfs(std::size_t cost, const Boundary& bd) {
        if (out_of_time()) return;
        if (unmapped_count() == 0) {
            std::size_t c = cost;
            for (std::size_t v = 0; v < g2_.n; ++v) {
                if (!used_[v]) c += bd.ins[v];
            }
            // edges among inserted nodes
            for (std::size_t s = 0; s < g2_.n; ++s) {
                for (std::size_t d = 0; d < g2_.n; ++d) {
                    if (!used_[s] && !used_[d]) c += total(g2_.at(s, d));
                }
            }
            best_ = std::min(best_, c);
            return;
        }

        // unmapped nodes on both sides
        std::vector<std::size_t> U1, U2;
        for (std::size_t u = 0; u < g1_.n; ++u) {
            if (phi_[u] == kEps && !deleted(u)) U1.push_back(u);
        }
        for (std::size_t v = 0; v < g2_.n; ++v) {
            if (!used_[v]) U2.push_back(v);
        }
        const std::size_t n1 = U1.size(), n2 = U2.size();

        // labeled degrees towards other unmapped nodes: [out plain, out inv], [in plain, in inv]
        auto degrees = [](const Labeled& g, const std::vector<std::size_t>& set, std::size_t x) {
            std::array<std::array<std::size_t, 2>, 2> d{};
            for (std::size_t y : set) {
                if (y == x) continue;
                for (int l = 0; l < 2; ++l) {
                    d[0][l] += g.at(x, y)[l];
                    d[1][l] += g.at(y, x)[l];
                }
            }
            return d;
        };
        std::vector<std::array<std::array<std::size_t, 2>, 2>> d1(n1), d2(n2);
        for (std::size_t a = 0; a < n1; ++a) d1[a] = degrees(g1_, U1, U1[a]);
        for (std::size_t b = 0; b < n2; ++b) d2[b] = degrees(g2_, U2, U2[b]);

        // Doubled costs so half edge costs stay integral: substitution,
        // deletion of a g1 node, insertion of a g2 node.
        std::vector<long long> cs(n1 * n2), cd(n1), ci(n2);
        std::vector<std::size_t> exact(n1 * (n2 + 1));
        for (std::size_t a = 0; a < n1; ++a) {
            const std::size_t u = U1[a];
            for (std::size_t b = 0; b < n2; ++b) {
                const std::size_t e = bd.sub[u * g2_.n + U2[b]];
                exact[a * (n2 + 1) + b] = e;
                const std::size_t half = multiset_cost(d1[a][0], d2[b][0]) + multiset_cost(d1[a][1], d2[b][1]);
                cs[a * n2 + b] = static_cast<long long>(2 * e + half);
            }
            const std::size_t del = bd.del[u];
            exact[a * (n2 + 1) + n2] = del;
            cd[a] = static_cast<long long>(2 * del + total(d1[a][0]) + total(d1[a][1]));
        }
        for (std::size_t b = 0; b < n2; ++b) {
            ci[b] = static_cast<long long>(2 * bd.ins[U2[b]] + total(d2[b][0]) + total(d2[b][1]));
        }
        // Square matrix of side max(n1, n2); surplus rows/columns stand for
        // insertions/deletions, and a real pair may also be a deletion plus
        // an insertion.
        const std::size_t m = std::max(n1, n2);
        std::vector<long long> S(m * m, 0);
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < m; ++c) {
                long long x = 0;
                if (r < n1 && c < n2) {
                    x = std::min(cs[r * n2 + c], cd[r] + ci[c]);
                } else if (r < n1) {
                    x = cd[r];
                } else if (c < n2) {
                    x = ci[c];
                }
                S[r * m + c] = x;
            }
        }
        std::vector<std::size_t> assign;
        const long long lb2 = m ? hungarian(S, m, assign) : 0;
        const std::size_t lb = static_cast<std::size_t>((lb2 + 1) / 2);
        if (cost + lb >= best_) return;

        // image of row a under the assignment, n2 meaning deletion
        auto image = [&](std::size_t a) {
            const std::size_t c = assign[a];
            return c < n2 && cs[a * n2 + c] <= cd[a] + ci[c] ? c : n2;
        };
        {
            std::vector<std::size_t> map = phi_;
            for (std::size_t a = 0; a < n1; ++a) map[U1[a]] = image(a) < n2 ? U2[image(a)] : kEps;
            best_ = std::min(best_, full_cost(map));
            if (cost + lb >= best_) return;
        }

        // branch on the last unmapped node (outputs first for leaves-first graphs)
        const std::size_t pick = n1 - 1;
        const std::size_t u = U1[pick];
        std::vector<std::pair<long long, std::size_t>> options;  // (key, column in U2 or n2 for deletion)
        for (std::size_t b = 0; b <= n2; ++b) {
            const long long key = b < n2 ? cs[pick * n2 + b] : cd[pick];
            const bool chosen = image(pick) == b;
            options.push_back({chosen ? -1 : key, b});
        }
        std::stable_sort(options.begin(), options.end());
        std::vector<char> tried(g2_.n, 0);
        for (const auto& [key, b] : options) {
            const std::size_t v = b < n2 ? U2[b] : kEps;
            if (v != kEps) {
                if (tried[twin_[v]]) continue;
                tried[twin_[v]] = 1;
            }
            const std::size_t step = exact[pick * (n2 + 1) + b];
            if (cost + step >= best_) continue;
            phi_[u] = v;
            if (v != kEps) {
                used_[v] = 1;
            } else {
                del_[u] = 1;
            }
            dfs(cost + step, advance(bd, u, v));
            if (v != kEps) used_[v] = 0;
            del_[u] = 0;
            phi_[u] = kEps;
            if (timed_out_) break;
        }
    }

    bool deleted(std::size_t u) const { return del_[u] != 0; }

    std::size_t unmapped_count() const {
        std::size_t n = 0;
        for (std::size_t u = 0; u < g1_.n; ++u) n += phi_[u] == kEps && !del_[u];
        return n;
    }

    Labeled g1_, g2_;
    Clock::time_point deadline_;
    std::vector<std::size_t> phi_;
    std::vector<char> used_;
    std::vector<std::size_t> twin_;  // class representative per g2 node
    std::vector<char> del_ = std::vector<char>(g1_.n, 0);
    std::size_t best_ = 0;
    std::size_t ticks_ = 0;
    bool timed_out_ = false;
};

}  // namespace

GedResult graph_edit_distance(const AigGraph& g1, const AigGraph& g2, std::chrono::milliseconds timeout) {
    return Search(g1, g2, timeout).run();
}

}  // namespace ipcamo
