#include <random>

#include "doctest.h"
#include "ipcamo/attack.hpp"
#include "ipcamo/camouflage.hpp"
#include "ipcamo/vae.hpp"
#include "fix_table.hpp"
#include "test_util.hpp"

using namespace ipcamo;

namespace {

VaeConfig tiny() {
    VaeConfig c;
    c.hidden = c.latent = c.mlp_hidden = 8;
    c.pi_cap = 8;
    return c;
}

// Apparent polarity of operand `op` relative to gate `src`: 0 plain, 1
// inverted, 2 through a NAND, -1 not derived from src.
int apparent_link(const Circuit& c, std::size_t op, std::size_t src) {
    if (op == src) return 0;
    const Gate& g = c.gate(op);
    if (g.op == GateOp::Nand && g.in[0] == src) return 2;
    if (g.op != GateOp::Not) return -1;
    if (g.in[0] == src) return 1;
    const Gate& h = c.gate(g.in[0]);
    if (h.op == GateOp::Not && h.in[0] == src) return 0;
    return -1;
}

// Every edge of A is visible in the appearance view with a matching polarity
// or behind a NAND-looking cell.
bool covers_appearance(const CamouflagedNetlist& c, const AigGraph& a) {
    std::vector<std::size_t> slot(a.size());
    std::size_t ord[3] = {0, 0, 0};
    for (std::size_t i = 0; i < a.size(); ++i) {
        const NodeType t = a.node(i).type;
        slot[i] = c.frame.slot(t, ord[static_cast<int>(t)]++);
    }
    const Circuit& app = c.appearance_view;
    for (const Edge& e : a.edges()) {
        const std::size_t gs = c.slot_gates[slot[e.src]], gd = c.slot_gates[slot[e.dst]];
        if (gs == CamouflagedNetlist::kAbsent || gd == CamouflagedNetlist::kAbsent) return false;
        std::vector<std::size_t> ops;
        if (a.node(e.dst).type == NodeType::PO && app.gate(gd).op != GateOp::And) {
            ops.push_back(gd);  // single-operand output
        } else {
            ops = app.gate(gd).in;
        }
        bool ok = false;
        for (std::size_t op : ops) {
            const int l = apparent_link(app, op, gs);
            if (l == 2 || (l >= 0 && l == static_cast<int>(e.inverted))) ok = true;
        }
        if (!ok) return false;
    }
    return true;
}

bool equivalent_to(const CamouflagedNetlist& c, const AigGraph& f) {
    return equivalence_check(circuit_from_aig(f), functional_circuit(c)).equal;
}

}  // namespace

TEST_CASE("fix table: all 18 cells") {
    int cells = 0;
    for (const auto& r : testutil::kFixTable) {
        const EdgeState g = testutil::parse_edge_state(r.g), ref = testutil::parse_edge_state(r.ref);
        CHECK(to_string(fix_lookup(FixPhase::Functional, g, ref)) == std::string(r.functional));
        CHECK(to_string(fix_lookup(FixPhase::Appearance, g, ref)) == std::string(r.appearance));
        cells += 2;
    }
    CHECK(cells == 18);
}

TEST_CASE("edge_state and interpolation") {
    TensorTriple t = zero_triple(3);
    t.conn(2, 0) = 1;
    t.conn(2, 1) = 1;
    t.inv(2, 1) = 1;
    t.inv(1, 0) = 1;  // inverter bit without connection still reads as no edge
    CHECK(edge_state(t, 2, 0) == EdgeState::Plain);
    CHECK(edge_state(t, 2, 1) == EdgeState::Inverted);
    CHECK(edge_state(t, 1, 0) == EdgeState::None);
    CHECK_THROWS(edge_state(t, 1, 1));
    CHECK_THROWS(edge_state(t, 3, 0));

    const Matrix a = Matrix::column({1.0, -2.0, 0.5}), b = Matrix::column({3.0, 2.0, -0.5});
    CHECK(interpolate(a, b, 0.0) == a);
    CHECK(interpolate(a, b, 1.0) == b);
    CHECK(interpolate(a, b, 0.5) == Matrix::column({2.0, 0.0, 0.0}));
    CHECK_THROWS(interpolate(a, Matrix::column({1.0}), 0.5));
    CHECK_THROWS(interpolate(a, b, 1.5));
}

TEST_CASE("functional preservation: identity and a single missing edge") {
    const AigGraph f = testutil::xor3();
    const PreservedGraph same = functional_preserve(f, f);
    CHECK(same.fix_log.empty());
    CHECK(structurally_equal(functional_graph(same), to_block_order(f)));

    // drop the plain edge a -> n1 from a copy of f
    AigGraph g;
    const auto a = g.add_pi("a"), b = g.add_pi("b"), c = g.add_pi("cin");
    (void)a;
    const auto n1 = g.add_node(NodeType::AND, {{b, true}});
    const auto n2 = g.add_and({0, true}, {b, false});
    const auto x = g.add_and({n1, true}, {n2, true});
    const auto m1 = g.add_and({x, true}, {c, true});
    const auto m2 = g.add_and({x, false}, {c, false});
    g.add_po({g.add_and({m1, true}, {m2, true}), true}, "s");
    const PreservedGraph one = functional_preserve(g, f);
    REQUIRE(one.fix_log.size() == 1);
    CHECK(one.fix_log[0].action == FixAction::CONNECT);
    CHECK(one.fix_log[0].src == 0);
    CHECK(one.fix_log[0].dst == 3);

    AigGraph two_po = f;
    two_po.add_po({0, false});
    CHECK_THROWS_AS(functional_preserve(f, two_po), GraphError);
}

TEST_CASE("functional preservation: random pairs keep F's truth table") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 60; ++trial) {
        const AigGraph f = testutil::random_aig(rng, 2 + trial % 4, 3 + trial % 5);
        AigGraph g = testutil::random_aig(rng, 1 + trial % 5, 2 + trial % 7);
        if (trial % 3 == 0) g.add_node(NodeType::AND, {{g.size() - 1, false}});  // edge out of the PO
        const PreservedGraph pg = functional_preserve(g, f);
        const AigGraph fg = functional_graph(pg);
        CHECK(equivalence_check(circuit_from_aig(f), circuit_from_aig(fg)).equal);
        if (trial % 3 == 0) CHECK_FALSE(pg.warnings.empty());
    }
}

TEST_CASE("appearance mimicking: identity and a single FI") {
    const AigGraph f = testutil::xor2();
    const CamouflagedNetlist same = appearance_mimic(functional_preserve(f, f), f, 1);
    CHECK(same.placements.empty());
    CHECK(same.fix_log.empty());
    CHECK(area_overhead(same, f) == 1.0);
    CHECK(equivalent_to(same, f));

    // A = F plus an inverted edge b -> n1 is impossible in a canonical AND,
    // so add it to the output AND instead: o gets a third fanin.
    AigGraph a = f;
    a.node(4).fanins.push_back({1, true});
    const CamouflagedNetlist one = appearance_mimic(functional_preserve(f, f), a, 1);
    REQUIRE(one.placements.size() == 1);
    CHECK(one.placements[0].kind == CovertKind::FI);
    CHECK(one.placements[0].mode == CovertMode::Const1);
    REQUIRE(one.fix_log.size() == 1);
    CHECK(one.fix_log[0].phase == FixPhase::Appearance);
    CHECK(equivalent_to(one, f));
    CHECK(area_overhead(one, f) > area_overhead(same, f));
}

TEST_CASE("appearance mimicking: half adder that looks like a full adder") {
    const AigGraph ha = testutil::xor2(), fa = testutil::xor3();
    const CamouflagedNetlist c = appearance_mimic(functional_preserve(ha, ha), fa, 5);
    const Circuit app = c.appearance_view;
    CHECK(app.inputs().size() == 3);  // dummy carry-in surfaces as an input
    CHECK(equivalent_to(c, ha));
    CHECK(covers_appearance(c, fa));
    // the dummy input has no functional influence
    const Circuit fc = functional_circuit(c);
    for (unsigned row = 0; row < 4; ++row) {
        const bool x = row & 1, y = row & 2;
        CHECK(fc.simulate({x, y, false}) == fc.simulate({x, y, true}));
    }
    const KeyedNetlist k = keyize_netlist(app, covert_cells(c));
    CHECK(k.correct_key_known);
    CHECK(equivalence_check(fc, apply_key(k.circuit, k.correct_key)).equal);
}

TEST_CASE("camouflage pipeline: equivalence, coverage, determinism, JSON") {
    const AigVae model(tiny(), 21);
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const AigGraph f = testutil::random_aig(rng, 2 + trial % 4, 3 + trial % 6);
        const AigGraph a = testutil::random_aig(rng, 2 + trial % 5, 2 + trial % 8);
        const double p = 0.1 + 0.2 * (trial % 5);
        const double th = 0.01 * (1 + trial % 9);
        const CamouflagedNetlist c = camouflage_pipeline(f, a, model, p, th, 7);
        CHECK(equivalent_to(c, f));
        CHECK(covers_appearance(c, a));
        CHECK(c.metadata.node_count == pipeline_node_count(f, a));
        const std::string js = to_json(c);
        CHECK(js == to_json(camouflage_pipeline(f, a, model, p, th, 7)));
        const CamouflagedNetlist back = camouflaged_from_json(js);
        CHECK(to_json(back) == js);
        CHECK(area_overhead(c, f) ==
              doctest::Approx(static_cast<double>(appearance_cell_count(c)) / static_cast<double>(cell_count(f))));
        const KeyedNetlist k = keyize_netlist(c.appearance_view, covert_cells(c));
        CHECK(k.key_count() == 2 * k.elements.size());
        REQUIRE(k.correct_key_known);
        CHECK(equivalence_check(functional_circuit(c), apply_key(k.circuit, k.correct_key)).equal);
    }
    CHECK_THROWS(camouflage_pipeline(testutil::xor2(), testutil::xor3(), model, 0.5, 1.0, 1));
}

TEST_CASE("interpolation endpoints decode the pure codes") {
    const AigVae model(tiny(), 22);
    const AigGraph f = testutil::xor3(), a = testutil::xor2();
    const std::size_t n = pipeline_node_count(f, a);
    for (double th : {0.01, 0.05, 0.5}) {
        CHECK(interpolated_triple(model, f, a, 0.0, th) == threshold_filter(model.decode(model.encode(f).mu, n), th));
        CHECK(interpolated_triple(model, f, a, 1.0, th) == threshold_filter(model.decode(model.encode(a).mu, n), th));
    }
}
