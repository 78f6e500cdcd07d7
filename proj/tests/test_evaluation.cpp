#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "ipcamo/aiger.hpp"
#include "ipcamo/attack.hpp"
#include "ipcamo/dataset.hpp"
#include "ipcamo/evaluation.hpp"
#include "ipcamo/vae.hpp"
#include "test_util.hpp"

using namespace ipcamo;
namespace fs = std::filesystem;

namespace {

VaeConfig tiny() {
    VaeConfig c;
    c.hidden = c.latent = c.mlp_hidden = 8;
    c.pi_cap = 8;
    return c;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ipcamo_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// AND chain over n+1 inputs: n cells, one output.
AigGraph and_chain(std::size_t n) {
    AigGraph g;
    std::size_t acc = g.add_pi("x0");
    for (std::size_t k = 1; k <= n; ++k) acc = g.add_and({acc, false}, {g.add_pi("x" + std::to_string(k)), false});
    g.add_po({acc, false}, "y");
    return g;
}

bool same_circuit(const Circuit& a, const Circuit& b) {
    if (a.size() != b.size() || a.outputs().size() != b.outputs().size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Gate &x = a.gate(i), &y = b.gate(i);
        if (x.op != y.op || x.in != y.in || x.name != y.name) return false;
        if (x.op == GateOp::Lut && x.lut != y.lut) return false;
    }
    for (std::size_t k = 0; k < a.outputs().size(); ++k) {
        if (a.outputs()[k].gate != b.outputs()[k].gate || a.outputs()[k].name != b.outputs()[k].name) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("latent distance") {
    const Matrix e1 = Matrix::column({1, 0, 0}), e2 = Matrix::column({0, 1, 0});
    CHECK(latent_distance(e1, e1) == 0.0);
    CHECK(latent_distance(e1, e2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    const Matrix a = Matrix::column({0.3, -1.2, 4.0}), b = Matrix::column({-2.0, 0.5, 1.0});
    CHECK(latent_distance(a, b) == latent_distance(b, a));
    CHECK_THROWS_AS(latent_distance(a, Matrix::column({1.0})), std::invalid_argument);
}

TEST_CASE("pearson r") {
    const std::vector<double> xs = {1, 2, 3, 4, 5}, ys = {2, 4, 5, 4, 5};
    // sxy = 6, sxx = 10, syy = 6
    CHECK(std::abs(*pearson_r(xs, ys) - 6.0 / std::sqrt(60.0)) < 1e-12);
    CHECK(*pearson_r(xs, xs) == doctest::Approx(1.0).epsilon(1e-15));
    std::vector<double> neg;
    for (double x : xs) neg.push_back(-x);
    CHECK(*pearson_r(xs, neg) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_FALSE(pearson_r({1, 1, 1}, {1, 2, 3}).has_value());
    CHECK_FALSE(pearson_r({1}, {2}).has_value());
    CHECK_THROWS(pearson_r({1, 2}, {1}));

    // against E[xy] - E[x]E[y] in long double
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 20; ++t) {
        std::vector<double> x(40), y(40);
        long double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = nd(rng);
            y[i] = 0.5 * x[i] + nd(rng);
            sx += x[i];
            sy += y[i];
            sxy += static_cast<long double>(x[i]) * y[i];
            sxx += static_cast<long double>(x[i]) * x[i];
            syy += static_cast<long double>(y[i]) * y[i];
        }
        const long double n = x.size();
        const long double cov = sxy / n - sx / n * sy / n;
        const long double vx = sxx / n - sx / n * sx / n, vy = syy / n - sy / n * sy / n;
        CHECK(std::abs(*pearson_r(x, y) - static_cast<double>(cov / std::sqrt(vx * vy))) < 1e-12);
    }
}

TEST_CASE("binning partitions valid pairs and synthetic linear data gives r = 1") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 7.0);
    std::vector<PairRecord> pairs;
    for (std::size_t k = 0; k < 500; ++k) {
        const double lsd = u(rng);
        pairs.push_back({k, k + 1, lsd, k % 10 == 3 ? std::nullopt : std::optional<double>(2.0 * lsd)});
    }
    const CorrelationReport r = summarize_pairs(pairs, 20);
    CHECK(r.valid == 450);
    CHECK(r.discarded == 50);
    REQUIRE(r.r.has_value());
    CHECK(std::abs(*r.r - 1.0) < 1e-9);
    REQUIRE(r.r_binned.has_value());
    CHECK(std::abs(*r.r_binned - 1.0) < 1e-9);
    REQUIRE(r.bins.size() == 20);
    std::size_t total = 0;
    for (std::size_t b = 0; b < r.bins.size(); ++b) {
        total += r.bins[b].count;
        if (b > 0) CHECK(r.bins[b].lo == r.bins[b - 1].hi);
    }
    CHECK(total == r.valid);
    // each valid pair lies inside its bin's interval
    for (const PairRecord& p : pairs) {
        if (!p.ged) continue;
        int hits = 0;
        for (std::size_t b = 0; b < r.bins.size(); ++b) {
            const bool last = b + 1 == r.bins.size();
            if (p.lsd >= r.bins[b].lo && (p.lsd < r.bins[b].hi || (last && p.lsd <= r.bins[b].hi))) ++hits;
        }
        CHECK(hits == 1);
    }
    const std::string csv = pairs_csv(r);
    CHECK(csv.rfind("id1,id2,lsd,ged\n", 0) == 0);
    CHECK(csv.find("TIMEOUT") != std::string::npos);
}

TEST_CASE("ged/lsd study on small graphs") {
    const AigVae model(tiny(), 4);
    const AigGraph g = testutil::xor2();
    const CorrelationReport same = ged_lsd_study({g, g}, model);
    REQUIRE(same.pairs.size() == 1);
    CHECK(same.pairs[0].lsd == 0.0);
    CHECK(same.pairs[0].ged == 0.0);
    CHECK_FALSE(same.r.has_value());
    CHECK(summary_json(same).find("\"pearson_r\": null") != std::string::npos);

    std::mt19937_64 rng(5);
    std::vector<AigGraph> gs;
    for (int k = 0; k < 7; ++k) gs.push_back(testutil::random_aig(rng, 2 + k % 3, 2 + k % 4));
    StudyConfig cfg;
    cfg.threads = 3;
    const CorrelationReport r = ged_lsd_study(gs, model, cfg);
    CHECK(r.pairs.size() == 21);
    CHECK(r.valid + r.discarded == 21);
    std::size_t total = 0;
    for (const auto& b : r.bins) total += b.count;
    CHECK(total == r.valid);
    CHECK_THROWS_AS(ged_lsd_study({g}, model), std::invalid_argument);
}

TEST_CASE("random covert insertion") {
    std::mt19937_64 rng(12);
    const AigGraph chain = and_chain(100);
    REQUIRE(cell_count(chain) == 100);
    const CamouflagedNetlist r5 = random_covert_insertion(chain, RandomInsertion::fraction(0.05), rng);
    CHECK(r5.placements.size() == 5);
    CHECK(equivalence_check(circuit_from_aig(chain), functional_circuit(r5)).equal);

    const CamouflagedNetlist none = random_covert_insertion(chain, RandomInsertion::fraction(0.0), rng);
    CHECK(none.placements.empty());
    CHECK(appearance_cell_count(none) == cell_count(chain));
    CHECK(none.appearance_view.gates().size() == circuit_from_aig(chain).gates().size());

    CHECK(rand_fraction_count(100, 0.05) == 5);
    CHECK(rand_fraction_count(3, 0.05) == 1);
    CHECK(rand_fraction_count(30, 0.05) == 2);  // 1.5 rounds away from zero
    CHECK(rand_fraction_count(0, 0.05) == 0);

    for (int t = 0; t < 15; ++t) {
        const AigGraph f = testutil::random_aig(rng, 3 + t % 4, 6 + t % 9);
        const CamouflagedNetlist a = random_covert_insertion(f, RandomInsertion::fraction(0.05), rng);
        CHECK(a.placements.size() == rand_fraction_count(cell_count(f), 0.05));
        CHECK(equivalence_check(circuit_from_aig(f), functional_circuit(a)).equal);
        const CamouflagedNetlist m = random_covert_insertion(f, RandomInsertion::match_area(1.5), rng);
        CHECK(area_overhead(m, f) >= 1.5 - 1e-12);
        CHECK(equivalence_check(circuit_from_aig(f), functional_circuit(m)).equal);
        const KeyedNetlist k = keyize_netlist(m.appearance_view, covert_cells(m));
        REQUIRE(k.correct_key_known);
        CHECK(equivalence_check(circuit_from_aig(f), apply_key(k.circuit, k.correct_key)).equal);
    }
    // a single PI wired to its output has nowhere to grow
    AigGraph wire;
    wire.add_po({wire.add_pi("a"), false}, "y");
    CHECK_THROWS_AS(random_covert_insertion(wire, RandomInsertion::match_area(2.0), rng), std::invalid_argument);
}

TEST_CASE("GNN export and re-import") {
    Circuit four;
    const auto a = four.add_input("a"), b = four.add_input("b");
    const auto n = four.add_gate(GateOp::And, {a, b}, "n");
    four.add_output(four.add_gate(GateOp::Not, {n}, "o"), "y");
    const fs::path d1 = scratch("gnn4");
    export_gnn_dataset({{"toy", four, {}}}, d1.string());
    std::ifstream nodes(d1 / "nodes.csv"), edges(d1 / "edges.csv");
    std::string line;
    int node_rows = -1, edge_rows = -1;
    while (std::getline(nodes, line)) ++node_rows;
    while (std::getline(edges, line)) ++edge_rows;
    CHECK(node_rows == 4);
    CHECK(edge_rows == 3);
    CHECK(fs::exists(d1 / "README.txt"));
    CHECK(fs::exists(d1 / "labels.csv"));

    const CamouflagedNetlist c = appearance_mimic(functional_preserve(testutil::xor2(), testutil::xor2()),
                                                  testutil::xor3(), 3);
    const LabeledNetlist ln = labeled_appearance(c, "adder");
    std::size_t covert = 0;
    for (const auto& l : ln.node_labels) covert += l == "covert";
    CHECK(covert > 0);
    const fs::path d2 = scratch("gnn_camo");
    export_gnn_dataset({ln, {"chain", circuit_from_aig(and_chain(4)), {}}}, d2.string());
    const auto back = import_gnn_dataset(d2.string());
    REQUIRE(back.size() == 2);
    CHECK(back[0].label == "adder");
    CHECK(back[1].label == "chain");
    CHECK(same_circuit(back[0].netlist, c.appearance_view));
    CHECK(back[0].node_labels == ln.node_labels);
    CHECK(same_circuit(back[1].netlist, circuit_from_aig(and_chain(4))));

    CHECK_THROWS_AS(export_gnn_dataset({{"", four, {}}}, d1.string()), std::invalid_argument);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("dataset builder: cones, split, manifest") {
    const fs::path dir = scratch("dataset");
    std::mt19937_64 rng(2);
    std::size_t expected_cones = 0;
    for (int f = 0; f < 3; ++f) {
        // three small two-output files
        AigGraph g;
        for (int i = 0; i < 4; ++i) g.add_pi("i" + std::to_string(i));
        std::size_t last = 0;
        for (int k = 0; k < 5 + f; ++k) last = g.add_and({static_cast<std::size_t>(k % 4), k % 2 == 0}, {g.size() - 1, f == 1});
        g.add_po({last, false}, "o0");
        g.add_po({4, true}, "o1");
        std::ofstream(dir / ("b" + std::to_string(f) + ".aag")) << write_aiger(g);
        expected_cones += 2;
    }
    const auto files = list_aag_files(dir.string());
    REQUIRE(files.size() == 3);
    DatasetConfig cfg;
    cfg.dedupe = false;
    cfg.seed = 9;
    const Dataset d = build_dataset(files, cfg);
    CHECK(d.entries.size() + d.rejected_size == expected_cones);
    std::size_t n_train = 0;
    for (const auto& e : d.entries) {
        CHECK(e.graph.is_canonical());
        CHECK(e.graph.size() <= cfg.max_nodes);
        n_train += e.train;
    }
    CHECK(n_train == static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(d.entries.size()))));
    const Dataset again = build_dataset(files, cfg);
    for (std::size_t k = 0; k < d.entries.size(); ++k) CHECK(again.entries[k].train == d.entries[k].train);

    const auto js = nlohmann::json::parse(dataset_manifest_json(d, cfg));
    std::size_t listed_nodes = 0;
    for (const auto& e : js["graphs"]) listed_nodes += e["nodes"].get<std::size_t>();
    CHECK(js["totals"]["nodes"].get<std::size_t>() == listed_nodes);
    CHECK(js["graphs"].size() == d.entries.size());

    cfg.max_nodes = 4;
    const Dataset small = build_dataset(files, cfg);
    for (const auto& e : small.entries) CHECK(e.graph.size() <= 4);
    CHECK_THROWS(list_aag_files((dir / "missing").string()));
    fs::remove_all(dir);
}
