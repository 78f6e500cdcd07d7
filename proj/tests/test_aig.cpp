#include <algorithm>
#include <array>
#include <functional>
#include <random>

#include "doctest.h"
#include "ipcamo/aig.hpp"
#include "ipcamo/aiger.hpp"
#include "ipcamo/ged.hpp"
#include "ipcamo/tensors.hpp"
#include "test_util.hpp"

using namespace ipcamo;

namespace {

// Exhaustive GED: every injective partial map g1 -> g2, costed from scratch.
std::size_t brute_ged(const AigGraph& g1, const AigGraph& g2) {
    const std::size_t n1 = g1.size(), n2 = g2.size();
    const std::size_t none = n2;
    std::vector<std::size_t> phi(n1, none);
    std::size_t best = ~std::size_t{0};

    // edge multiplicity per ordered pair and label
    const auto counts = [](const AigGraph& g) {
        std::vector<std::array<int, 2>> c(g.size() * g.size(), {0, 0});
        for (const Edge& e : g.edges()) ++c[e.src * g.size() + e.dst][e.inverted];
        return c;
    };
    const auto c1 = counts(g1), c2 = counts(g2);

    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k < n1) {
            for (std::size_t v = 0; v <= n2; ++v) {
                if (v != none && std::find(phi.begin(), phi.begin() + k, v) != phi.begin() + k) continue;
                phi[k] = v;
                rec(k + 1);
            }
            phi[k] = none;
            return;
        }
        std::size_t cost = 0;
        std::vector<char> hit(n2, 0);
        for (std::size_t u = 0; u < n1; ++u) {
            if (phi[u] == none) {
                ++cost;
            } else {
                hit[phi[u]] = 1;
                cost += g1.node(u).type != g2.node(phi[u]).type;
            }
        }
        for (std::size_t v = 0; v < n2; ++v) cost += !hit[v];
        // Image of g1's edges, then compare pair by pair against g2.
        std::vector<std::array<int, 2>> img(n2 * n2, {0, 0});
        for (std::size_t a = 0; a < n1; ++a) {
            for (std::size_t b = 0; b < n1; ++b) {
                const auto& e = c1[a * n1 + b];
                if (phi[a] == none || phi[b] == none) {
                    cost += e[0] + e[1];
                } else {
                    img[phi[a] * n2 + phi[b]][0] += e[0];
                    img[phi[a] * n2 + phi[b]][1] += e[1];
                }
            }
        }
        for (std::size_t p = 0; p < n2 * n2; ++p) {
            const auto& x = img[p];
            const auto& y = c2[p];
            // pair off equal labels; the rest are substitutions then ins/del
            const int same = std::min(x[0], y[0]) + std::min(x[1], y[1]);
            cost += std::max(x[0] + x[1], y[0] + y[1]) - same;
        }
        best = std::min(best, cost);
    };
    rec(0);
    return best;
}

AigGraph random_small(std::mt19937_64& rng, std::size_t nodes) {
    // nodes = PIs + ANDs + 1 PO
    std::uniform_int_distribution<std::size_t> pis(1, std::max<std::size_t>(1, nodes - 2));
    const std::size_t p = std::min(pis(rng), nodes - 1);
    return testutil::random_aig(rng, p, nodes - 1 - p);
}

}  // namespace

TEST_CASE("aiger: parse a two-input AND") {
    const auto g = parse_aiger("aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n");
    CHECK(g.count(NodeType::PI) == 2);
    CHECK(g.count(NodeType::AND) == 1);
    CHECK(g.count(NodeType::PO) == 1);
    CHECK(g.is_canonical());
    CHECK(simulate(g, {true, true}) == std::vector<bool>{true});
    CHECK(simulate(g, {true, false}) == std::vector<bool>{false});
}

TEST_CASE("aiger: parse errors carry line numbers") {
    const auto line_of = [](const std::string& text) {
        try {
            parse_aiger(text);
        } catch (const ParseError& e) {
            return std::make_pair(e.line(), std::string(e.what()));
        }
        return std::make_pair(std::size_t{0}, std::string{});
    };
    auto [l0, m0] = line_of("");
    CHECK(l0 == 1);
    CHECK(m0.find("missing header") != std::string::npos);
    auto [l1, m1] = line_of("aag 3 1 1 1 0\n2\n4 2\n4\n");
    CHECK(l1 == 1);
    CHECK(m1.find("latch") != std::string::npos);
    auto [l2, m2] = line_of("aag 3 2 0 1 1\n2\n4\n6\n6 2 8\n");
    CHECK(l2 == 5);
    CHECK(m2.find("dangling") != std::string::npos);
    auto [l3, m3] = line_of("aag 3 2 0 1 1\n2\n4\n10\n6 2 4\n");
    CHECK(l3 == 4);
    CHECK(m3.find("dangling") != std::string::npos);
}

TEST_CASE("aiger: PI wired to PO writes a two-line body") {
    AigGraph g;
    const auto a = g.add_pi();
    g.add_po({a, false});
    const std::string text = write_aiger(g);
    CHECK(text.rfind("aag 1 1 0 1 0\n2\n2\n", 0) == 0);
}

TEST_CASE("aiger: non-canonical graphs are rejected by the writer") {
    AigGraph g;
    const auto a = g.add_pi(), b = g.add_pi(), c = g.add_pi();
    const auto x = g.add_node(NodeType::AND, {{a, false}, {b, false}, {c, false}});
    g.add_po({x, false});
    CHECK_THROWS_AS(write_aiger(g), GraphError);
}

TEST_CASE("aiger: write/parse roundtrip on random graphs") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto g = testutil::random_aig(rng, 1 + trial % 5, trial % 12);
        const auto back = parse_aiger(write_aiger(g));
        CHECK(structurally_equal(g, back));
        CHECK(write_aiger(back) == write_aiger(g));
    }
}

TEST_CASE("aiger: constants and out-of-order ANDs") {
    // output = AND(x, true); second AND defined before its fanin
    const auto g = parse_aiger("aag 3 1 0 2 2\n2\n6\n0\n6 4 2\n4 2 1\n");
    CHECK(g.count(NodeType::AND) == 3);  // constant node plus two ANDs
    CHECK(g.is_canonical());
    CHECK(truth_table(g)[0] == std::vector<bool>{false, true});
    CHECK(truth_table(g)[1] == std::vector<bool>{false, false});
    const auto again = parse_aiger(write_aiger(g));
    CHECK(truth_table(again) == truth_table(g));
}

TEST_CASE("simulation and truth tables") {
    AigGraph g;
    const auto a = g.add_pi(), b = g.add_pi();
    const auto x = g.add_and({a, false}, {b, true});
    g.add_po({x, false});
    CHECK(simulate(g, {true, true}) == std::vector<bool>{false});
    CHECK(simulate(g, {true, false}) == std::vector<bool>{true});
    CHECK_THROWS_AS(simulate(g, {true}), GraphError);

    AigGraph one;
    const auto c = one.add_constant();
    one.add_po({c, false});
    CHECK(truth_table(one)[0] == std::vector<bool>{true});

    AigGraph buf;
    buf.add_po({buf.add_pi(), false});
    CHECK(truth_table(buf)[0] == std::vector<bool>{false, true});

    const auto h = testutil::xor2();
    CHECK(truth_table(h)[0] == std::vector<bool>{false, true, true, false});
    const auto f = testutil::xor3();
    const auto tf = truth_table(f)[0];
    for (std::size_t r = 0; r < 8; ++r) CHECK(tf[r] == (__builtin_popcount(r) % 2 == 1));

    AigGraph wide;
    for (int i = 0; i < 21; ++i) wide.add_pi();
    wide.add_po({0, false});
    CHECK_THROWS_AS(truth_table(wide), GraphError);
}

TEST_CASE("simulate_words agrees with scalar simulation") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = testutil::random_aig(rng, 4, 10);
        const auto table = truth_table(g)[0];
        for (std::size_t r = 0; r < 16; ++r) {
            std::vector<bool> in(4);
            for (int i = 0; i < 4; ++i) in[i] = (r >> (3 - i)) & 1u;
            CHECK(simulate(g, in)[0] == table[r]);
        }
    }
}

TEST_CASE("pad_to_match adds dummy nodes without changing function") {
    std::mt19937_64 rng(11);
    const auto g = testutil::random_aig(rng, 3, 6);
    const auto ref = testutil::random_aig(rng, 5, 9);
    const auto padded = pad_to_match(g, ref);
    CHECK(padded.count(NodeType::PI) == 5);
    CHECK(padded.count(NodeType::AND) == 9);
    CHECK(padded.count(NodeType::PO) == 1);
    CHECK(structurally_equal(pad_to_match(g, g), g));

    // Every assignment of the dummy PIs leaves the real PO unchanged.
    const auto base = truth_table(g)[0];
    const auto wide = truth_table(padded);
    for (std::size_t r = 0; r < 32; ++r) CHECK(wide[0][r] == base[r >> 2]);
}

TEST_CASE("cone extraction") {
    AigGraph g;
    const auto a = g.add_pi("a");
    const auto b = g.add_pi("b");
    const auto x = g.add_and({a, false}, {b, false});
    const auto y = g.add_and({x, false}, {a, true});
    g.add_po({a, false}, "direct");
    g.add_po({y, true}, "deep");

    const auto direct = extract_cone(g, "direct", 200);
    REQUIRE(direct);
    CHECK(direct->size() == 2);
    CHECK(direct->is_tree());

    const auto shared = extract_cone(g, "deep", 200);
    REQUIRE(shared);
    CHECK(shared->size() == 5);
    CHECK(truth_table(*shared)[0] == std::vector<bool>{true, true, true, true});

    const auto tree = extract_cone(g, "deep", 200, ConeMode::Tree);
    REQUIRE(tree);
    CHECK(tree->size() == 6);
    CHECK(tree->is_tree());
    CHECK(tree->edge_count() + 1 == tree->size());
    CHECK(tree->count(NodeType::PI) == 3);

    CHECK_FALSE(extract_cone(g, "deep", 4));
    CHECK_THROWS_AS(extract_cone(g, "nope", 200), GraphError);
}

TEST_CASE("tree cones are always trees") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto g = testutil::random_aig(rng, 3, 8);
        const auto t = extract_cone(g, "y", 100000, ConeMode::Tree);
        REQUIRE(t);
        CHECK(t->is_tree());
        CHECK(t->is_canonical());
    }
}

TEST_CASE("benchmark cone sizes") {
    const auto i2c = read_aiger_file(testutil::source_path("benchmarks/i2c.aag"));
    const auto c1 = extract_cone(i2c, "po061", kDefaultMaxNodes);
    REQUIRE(c1);
    CHECK(c1->size() == 53);
    CHECK(c1->is_canonical());

    const auto banyan = read_aiger_file(testutil::source_path("benchmarks/banyan_8.aag"));
    const auto c2 = extract_cone(banyan, "out_5", kDefaultMaxNodes);
    REQUIRE(c2);
    CHECK(c2->size() == 125);

    CHECK(c1->count(NodeType::PO) == 1);
}

TEST_CASE("tensors: encoding of a small graph") {
    AigGraph g;
    const auto a = g.add_pi(), b = g.add_pi();
    const auto x = g.add_and({a, false}, {b, true});
    g.add_po({x, false});
    const auto t = to_tensors(g);
    CHECK(t.type.rows == 4);
    CHECK(t.type.cols == 3);
    CHECK(t.type(0, 0) == 1.0);
    CHECK(t.type(1, 0) == 1.0);
    CHECK(t.type(2, 2) == 1.0);
    CHECK(t.type(3, 1) == 1.0);
    CHECK(std::count(t.conn.data.begin(), t.conn.data.end(), 1.0) == 3);
    CHECK(std::count(t.inv.data.begin(), t.inv.data.end(), 1.0) == 1);
    CHECK(satisfies_triangle_invariants(t));
}

TEST_CASE("tensors: roundtrip and invariants on random graphs") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const auto g = testutil::random_aig(rng, 2 + trial % 6, trial % 15);
        const auto t = to_tensors(g);
        CHECK(satisfies_triangle_invariants(t));
        std::vector<std::string> warnings;
        CHECK(structurally_equal(from_tensors(t, &warnings), g));
        CHECK(warnings.empty());
    }
}

TEST_CASE("tensors: normalization in from_tensors") {
    auto t = zero_triple(5);
    for (std::size_t i = 0; i < 3; ++i) t.type(i, 0) = 1.0;
    t.type(3, 2) = 1.0;
    t.type(4, 1) = 1.0;
    t.conn(3, 0) = t.conn(3, 1) = t.conn(3, 2) = 1.0;  // 3-input AND
    t.conn(4, 3) = 1.0;
    t.inv(4, 1) = 1.0;  // inverter without connection
    t.conn(1, 0) = 1.0;  // edge into a PI
    std::vector<std::string> warnings;
    const auto g = from_tensors(t, &warnings);
    CHECK_FALSE(g.is_canonical());
    CHECK(g.node(3).fanins.size() == 3);
    CHECK(g.node(4).fanins.size() == 1);
    CHECK(g.node(1).fanins.empty());
    CHECK(warnings.size() == 2);

    auto bad = zero_triple(2);
    bad.type(0, 0) = 1.0;
    bad.type(1, 0) = bad.type(1, 1) = 1.0;
    CHECK_THROWS_AS(from_tensors(bad), GraphError);
}

TEST_CASE("threshold filter") {
    auto soft = zero_triple(3);
    soft.type(0, 0) = 0.7;
    soft.type(1, 1) = 0.4;
    soft.type(1, 2) = 0.4;
    soft.type(2, 1) = 0.9;
    soft.conn(1, 0) = 0.2;
    soft.conn(2, 0) = 0.9;
    soft.inv(2, 0) = 0.6;
    soft.conn(2, 1) = 0.3;
    soft.inv(2, 1) = 0.8;
    const auto t = threshold_filter(soft, 0.2);
    CHECK(t.conn(1, 0) == 0.0);  // boundary value stays 0
    CHECK(t.conn(2, 0) == 1.0);
    CHECK(t.inv(2, 0) == 1.0);
    CHECK(t.type(1, 1) == 1.0);  // tie goes to the lower index
    CHECK(t.type(1, 2) == 0.0);
    const auto t5 = threshold_filter(soft, 0.5);
    CHECK(t5.conn(2, 1) == 0.0);
    CHECK(t5.inv(2, 1) == 0.0);  // inverter needs its connection
    CHECK(satisfies_triangle_invariants(t5));

    const auto empty = threshold_filter(zero_triple(4), 0.5);
    CHECK(std::count(empty.conn.data.begin(), empty.conn.data.end(), 1.0) == 0);

    // Raising the threshold never adds an edge.
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto r = zero_triple(8);
    for (auto& v : r.type.data) v = u(rng);
    for (auto& v : r.conn.data) v = u(rng);
    for (auto& v : r.inv.data) v = u(rng);
    for (double th = 0.05; th < 0.95; th += 0.1) {
        const auto lo = threshold_filter(r, th), hi = threshold_filter(r, th + 0.1);
        for (std::size_t k = 0; k < lo.conn.data.size(); ++k) CHECK(hi.conn.data[k] <= lo.conn.data[k]);
    }
}

TEST_CASE("GED: identity and single substitution") {
    const auto g = testutil::xor2();
    CHECK(graph_edit_distance(g, g).distance == 0);
    auto h = g;
    h.node(2).type = NodeType::PO;
    const auto r = graph_edit_distance(g, h);
    CHECK_FALSE(r.timed_out);
    CHECK(r.distance == 1);
}

TEST_CASE("GED: matches exhaustive search on small random pairs") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::size_t> size(2, 6);
    for (int trial = 0; trial < 40; ++trial) {
        const auto a = random_small(rng, size(rng));
        const auto b = random_small(rng, size(rng));
        const auto r = graph_edit_distance(a, b);
        REQUIRE_FALSE(r.timed_out);
        CHECK(r.distance == brute_ged(a, b));
    }
}

TEST_CASE("GED: metric properties on small graphs") {
    std::mt19937_64 rng(22);
    std::vector<AigGraph> gs;
    for (int k = 0; k < 7; ++k) gs.push_back(random_small(rng, 3 + k % 4));
    // Node-order isomorph: same graph with independent fanin order swaps.
    auto iso = gs[0];
    for (std::size_t i = 0; i < iso.size(); ++i) std::reverse(iso.node(i).fanins.begin(), iso.node(i).fanins.end());
    CHECK(graph_edit_distance(gs[0], iso).distance == 0);
    for (std::size_t i = 0; i < gs.size(); ++i) {
        for (std::size_t j = 0; j < gs.size(); ++j) {
            const auto dij = graph_edit_distance(gs[i], gs[j]).distance;
            CHECK(dij == graph_edit_distance(gs[j], gs[i]).distance);
            if (i != j && !structurally_equal(gs[i], gs[j])) CHECK(dij > 0);
            for (std::size_t k = 0; k < gs.size(); ++k) {
                CHECK(dij <= graph_edit_distance(gs[i], gs[k]).distance + graph_edit_distance(gs[k], gs[j]).distance);
            }
        }
    }
}

TEST_CASE("GED: timeout is reported as a value") {
    std::mt19937_64 rng(9);
    const auto a = testutil::random_aig(rng, 8, 40);
    const auto b = testutil::random_aig(rng, 9, 40);
    const auto r = graph_edit_distance(a, b, std::chrono::milliseconds(1));
    CHECK(r.timed_out);
}

TEST_CASE("JSON graph dump roundtrip") {
    const auto g = testutil::xor3();
    const auto back = graph_from_json(to_json(g));
    CHECK(structurally_equal(g, back));
    CHECK(back.node(2).name == "cin");
}
