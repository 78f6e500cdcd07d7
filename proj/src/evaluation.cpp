#include "ipcamo/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ipcamo/ged.hpp"
#include "ipcamo/vae.hpp"
#include "json.hpp"

namespace ipcamo {

double latent_distance(const Matrix& z1, const Matrix& z2) {
    if (!z1.same_shape(z2)) throw std::invalid_argument("latent codes differ in shape");
    double s = 0.0;
    for (std::size_t k = 0; k < z1.size(); ++k) {
        const double d = z1[k] - z2[k];
        s += d * d;
    }
    return std::sqrt(s);
}

std::optional<double> pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson_r: length mismatch");
    const std::size_t n = xs.size();
    if (n < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<BinStat> bin_pairs(const std::vector<PairRecord>& pairs, std::size_t bins) {
    if (bins == 0) throw std::invalid_argument("bin count must be positive");
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const PairRecord& p : pairs) {
        if (!p.ged) continue;
        lo = any ? std::min(lo, p.lsd) : p.lsd;
        hi = any ? std::max(hi, p.lsd) : p.lsd;
        any = true;
    }
    std::vector<BinStat> out(bins);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].index = b;
        out[b].lo = lo + width * static_cast<double>(b);
        out[b].hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    }
    if (!any) return out;

    std::vector<double> sum_l(bins, 0.0), sum_g(bins, 0.0), sum_g2(bins, 0.0);
    for (const PairRecord& p : pairs) {
        if (!p.ged) continue;
        std::size_t b = 0;
        if (width > 0.0) {
            b = static_cast<std::size_t>((p.lsd - lo) / width);
            b = std::min(b, bins - 1);
            // floating-point edges: keep membership consistent with [lo, hi)
            while (b > 0 && p.lsd < out[b].lo) --b;
            while (b + 1 < bins && p.lsd >= out[b + 1].lo) ++b;
        }
        ++out[b].count;
        sum_l[b] += p.lsd;
        sum_g[b] += *p.ged;
        sum_g2[b] += *p.ged * *p.ged;
    }
    for (std::size_t b = 0; b < bins; ++b) {
        if (out[b].count == 0) continue;
        const double n = static_cast<double>(out[b].count);
        out[b].mean_lsd = sum_l[b] / n;
        out[b].mean_ged = sum_g[b] / n;
        out[b].std_ged = std::sqrt(std::max(0.0, sum_g2[b] / n - out[b].mean_ged * out[b].mean_ged));
    }
    return out;
}

CorrelationReport summarize_pairs(std::vector<PairRecord> pairs, std::size_t bins) {
    CorrelationReport r;
    std::vector<double> xs, ys;
    for (const PairRecord& p : pairs) {
        if (!p.ged) {
            ++r.discarded;
            continue;
        }
        ++r.valid;
        xs.push_back(p.lsd);
        ys.push_back(*p.ged);
    }
    r.r = pearson_r(xs, ys);
    r.bins = bin_pairs(pairs, bins);
    std::vector<double> bx, by;
    for (const BinStat& b : r.bins) {
        if (b.count == 0) continue;
        bx.push_back(b.mean_lsd);
        by.push_back(b.mean_ged);
    }
    r.r_binned = pearson_r(bx, by);
    r.pairs = std::move(pairs);
    return r;
}

CorrelationReport ged_lsd_study(const std::vector<AigGraph>& graphs, const AigVae& model, const StudyConfig& cfg) {
    if (graphs.size() < 2) throw std::invalid_argument("ged_lsd_study needs at least two graphs");
    std::vector<Matrix> codes;
    codes.reserve(graphs.size());
    for (const AigGraph& g : graphs) codes.push_back(model.encode(g).mu);

    std::vector<PairRecord> pairs;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        for (std::size_t j = i + 1; j < graphs.size(); ++j) {
            pairs.push_back(PairRecord{i, j, latent_distance(codes[i], codes[j]), std::nullopt});
        }
    }

    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, pairs.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < pairs.size(); k = next++) {
            const GedResult g = graph_edit_distance(graphs[pairs[k].id1], graphs[pairs[k].id2], cfg.ged_timeout);
            if (!g.timed_out) pairs[k].ged = static_cast<double>(g.distance);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return summarize_pairs(std::move(pairs), cfg.bins);
}

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string pairs_csv(const CorrelationReport& r) {
    std::string s = "id1,id2,lsd,ged\n";
    for (const PairRecord& p : r.pairs) {
        s += std::to_string(p.id1) + "," + std::to_string(p.id2) + "," + num(p.lsd) + "," +
             (p.ged ? num(*p.ged) : std::string("TIMEOUT")) + "\n";
    }
    return s;
}

std::string bins_csv(const CorrelationReport& r) {
    std::string s = "bin,lsd_lo,lsd_hi,mean_lsd,mean_ged,std_ged,count\n";
    for (const BinStat& b : r.bins) {
        s += std::to_string(b.index) + "," + num(b.lo) + "," + num(b.hi) + "," + num(b.mean_lsd) + "," +
             num(b.mean_ged) + "," + num(b.std_ged) + "," + std::to_string(b.count) + "\n";
    }
    return s;
}

std::string summary_json(const CorrelationReport& r) {
    nlohmann::ordered_json j;
    j["pairs"] = r.pairs.size();
    j["valid"] = r.valid;
    j["discarded_timeout"] = r.discarded;
    j["valid_fraction"] = r.pairs.empty() ? 0.0 : static_cast<double>(r.valid) / static_cast<double>(r.pairs.size());
    j["pearson_r"] = r.r ? nlohmann::ordered_json(*r.r) : nlohmann::ordered_json(nullptr);
    j["pearson_r_bin_means"] = r.r_binned ? nlohmann::ordered_json(*r.r_binned) : nlohmann::ordered_json(nullptr);
    j["bins"] = r.bins.size();
    return j.dump(1) + "\n";
}

// ---------------------------------------------------------------------------

std::size_t rand_fraction_count(std::size_t cells, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in [0, 1]");
    if (cells == 0 || fraction == 0.0) return 0;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(cells))));
}

namespace {

struct LegalSites {
    std::vector<SiteKey> edges;     // UT candidates
    std::vector<SiteKey> nonedges;  // FI / FB candidates
};

LegalSites legal_sites(const PreservedGraph& pg) {
    LegalSites ls;
    const std::size_t n = pg.frame.size();
    for (std::size_t dst = 0; dst < n; ++dst) {
        if (pg.frame.type(dst) == NodeType::PI) continue;
        for (std::size_t src = 0; src < dst; ++src) {
            if (pg.frame.type(src) == NodeType::PO) continue;
            auto it = pg.sites.find({dst, src});
            if (it != pg.sites.end() && it->second.function != EdgeState::None) {
                ls.edges.push_back({dst, src});
            } else {
                ls.nonedges.push_back({dst, src});
            }
        }
    }
    return ls;
}

// Draws the next site: the covert category (FI, FB, UT) first, uniformly among
// those with sites left, then a site of that category.
bool place_one(PreservedGraph& pg, std::vector<SiteKey>& edges, std::vector<SiteKey>& nonedges,
               std::mt19937_64& rng) {
    std::vector<CovertKind> kinds;
    if (!nonedges.empty()) {
        kinds.push_back(CovertKind::FI);
        kinds.push_back(CovertKind::FB);
    }
    if (!edges.empty()) kinds.push_back(CovertKind::UT_A);
    if (kinds.empty()) return false;
    const CovertKind k = kinds[rng() % kinds.size()];
    auto& pool = k == CovertKind::UT_A ? edges : nonedges;
    const std::size_t pick = rng() % pool.size();
    const SiteKey key = pool[pick];
    pool[pick] = pool.back();
    pool.pop_back();

    Site& s = pg.sites[key];
    s.cell = SiteCell::Covert;
    if (k == CovertKind::UT_A) {
        s.kind = s.function == EdgeState::Plain ? CovertKind::UT_A : CovertKind::UT_B;
        s.mode = CovertMode::Normal;
    } else {
        s.kind = k;
        s.mode = CovertMode::Const1;
    }
    return true;
}

}  // namespace

CamouflagedNetlist random_covert_insertion(const AigGraph& f, const RandomInsertion& mode, std::mt19937_64& rng) {
    PreservedGraph pg = functional_preserve(f, f);
    LegalSites ls = legal_sites(pg);
    const std::uint64_t render_seed = rng();
    auto render = [&] {
        CamouflagedNetlist c = appearance_mimic(pg, f, render_seed);
        c.metadata.seed = render_seed;
        return c;
    };

    const std::size_t base = cell_count(f);
    if (mode.mode == RandomInsertion::Mode::Fraction) {
        const std::size_t want = rand_fraction_count(base, mode.value);
        for (std::size_t i = 0; i < want; ++i) {
            if (!place_one(pg, ls.edges, ls.nonedges, rng)) {
                throw std::invalid_argument("circuit has fewer legal sites than requested placements");
            }
        }
        return render();
    }

    if (!(mode.value >= 1.0)) throw std::invalid_argument("area ratio target must be at least 1");
    if (base == 0) throw std::invalid_argument("area ratio undefined for a circuit without cells");
    const auto target_cells = static_cast<std::size_t>(std::ceil(mode.value * static_cast<double>(base) - 1e-9));
    CamouflagedNetlist c = render();
    while (appearance_cell_count(c) < target_cells) {
        if (!place_one(pg, ls.edges, ls.nonedges, rng)) {
            throw std::invalid_argument("area ratio target unreachable on this circuit");
        }
        c = render();
    }
    return c;
}

// ---------------------------------------------------------------------------

LabeledNetlist labeled_appearance(const CamouflagedNetlist& c, std::string label) {
    LabeledNetlist l{std::move(label), c.appearance_view, {}};
    l.node_labels.assign(c.appearance_view.size(), "plain");
    for (const Placement& p : c.placements) {
        for (std::size_t g : p.cells) l.node_labels[g] = "covert";
    }
    return l;
}

namespace {

constexpr GateOp kOps[] = {GateOp::Input, GateOp::Key, GateOp::Const0, GateOp::Const1, GateOp::Buf,
                           GateOp::Not,   GateOp::And, GateOp::Nand,   GateOp::Or,     GateOp::Nor,
                           GateOp::Xor,   GateOp::Xnor, GateOp::Lut};

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                out.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.emplace_back();
        } else {
            out.back() += ch;
        }
    }
    return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p, std::size_t columns) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto r = csv_split(line);
        if (r.size() != columns) throw std::runtime_error(p.filename().string() + ": wrong column count");
        rows.push_back(std::move(r));
    }
    return rows;
}

const char* kReadme =
    "Labeled graphs for node classification.  One graph per netlist, one node per\n"
    "gate of the appearance view (what an attacker extracts from the layout).\n"
    "\n"
    "nodes.csv   graph_id, node_id, name, op, one-hot gate kind columns is_<OP>,\n"
    "            lut (truth table for LUT gates, else empty), outputs (primary\n"
    "            outputs driven by this node as index:name joined by '|'),\n"
    "            node_label (\"covert\" for cells of a covert gate, else \"plain\")\n"
    "edges.csv   graph_id, src, dst, pin (operand position of src at dst)\n"
    "labels.csv  graph_id, label (circuit family), nodes, edges\n"
    "\n"
    "node_id is the gate index inside its graph; edges always point from a lower\n"
    "to a higher node_id.  Gate kinds come from the appearance view only.\n";

}  // namespace

void export_gnn_dataset(const std::vector<LabeledNetlist>& nets, const std::string& dir) {
    namespace fs = std::filesystem;
    for (const LabeledNetlist& n : nets) {
        if (n.label.empty()) throw std::invalid_argument("every exported netlist needs a label");
        if (!n.node_labels.empty() && n.node_labels.size() != n.netlist.size()) {
            throw std::invalid_argument("node label count does not match gate count");
        }
    }
    fs::create_directories(dir);
    std::ofstream nodes(fs::path(dir) / "nodes.csv"), edges(fs::path(dir) / "edges.csv"),
        labels(fs::path(dir) / "labels.csv"), readme(fs::path(dir) / "README.txt");
    if (!nodes || !edges || !labels || !readme) throw std::runtime_error("cannot write into " + dir);
    readme << kReadme;

    nodes << "graph_id,node_id,name,op";
    for (GateOp op : kOps) nodes << ",is_" << to_string(op);
    nodes << ",lut,outputs,node_label\n";
    edges << "graph_id,src,dst,pin\n";
    labels << "graph_id,label,nodes,edges\n";

    for (std::size_t gid = 0; gid < nets.size(); ++gid) {
        const Circuit& c = nets[gid].netlist;
        std::vector<std::string> outs(c.size());
        for (std::size_t k = 0; k < c.outputs().size(); ++k) {
            const CircuitOutput& o = c.outputs()[k];
            if (!outs[o.gate].empty()) outs[o.gate] += "|";
            outs[o.gate] += std::to_string(k) + ":" + o.name;
        }
        std::size_t edge_count = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const Gate& g = c.gate(i);
            nodes << gid << "," << i << "," << csv_field(g.name) << "," << to_string(g.op);
            for (GateOp op : kOps) nodes << "," << (g.op == op ? 1 : 0);
            nodes << "," << (g.op == GateOp::Lut ? std::to_string(g.lut) : std::string{}) << ","
                  << csv_field(outs[i]) << ","
                  << csv_field(nets[gid].node_labels.empty() ? std::string("plain") : nets[gid].node_labels[i])
                  << "\n";
            for (std::size_t pin = 0; pin < g.in.size(); ++pin) {
                edges << gid << "," << g.in[pin] << "," << i << "," << pin << "\n";
                ++edge_count;
            }
        }
        labels << gid << "," << csv_field(nets[gid].label) << "," << c.size() << "," << edge_count << "\n";
    }
}

std::vector<LabeledNetlist> import_gnn_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::size_t node_cols = 4 + std::size(kOps) + 3;
    const auto node_rows = read_csv(fs::path(dir) / "nodes.csv", node_cols);
    const auto edge_rows = read_csv(fs::path(dir) / "edges.csv", 4);
    const auto label_rows = read_csv(fs::path(dir) / "labels.csv", 4);

    std::vector<LabeledNetlist> out(label_rows.size());
    for (const auto& r : label_rows) {
        const std::size_t gid = std::stoul(r[0]);
        if (gid >= out.size()) throw std::runtime_error("labels.csv: graph id out of range");
        out[gid].label = r[1];
    }
    // operands per (graph, node), ordered by pin
    std::vector<std::map<std::size_t, std::map<std::size_t, std::size_t>>> ops(out.size());
    for (const auto& r : edge_rows) {
        const std::size_t gid = std::stoul(r[0]);
        if (gid >= out.size()) throw std::runtime_error("edges.csv: graph id out of range");
        ops[gid][std::stoul(r[2])][std::stoul(r[3])] = std::stoul(r[1]);
    }
    std::vector<std::vector<std::pair<std::size_t, std::pair<std::size_t, std::string>>>> outputs(out.size());
    for (const auto& r : node_rows) {
        const std::size_t gid = std::stoul(r[0]), id = std::stoul(r[1]);
        if (gid >= out.size()) throw std::runtime_error("nodes.csv: graph id out of range");
        Circuit& c = out[gid].netlist;
        if (id != c.size()) throw std::runtime_error("nodes.csv: node ids must be dense and ordered");
        const GateOp op = gate_op_from_string(r[3]);
        std::vector<std::size_t> in;
        for (const auto& [pin, src] : ops[gid][id]) in.push_back(src);
        if (op == GateOp::Input) {
            c.add_input(r[2]);
        } else if (op == GateOp::Key) {
            c.add_key(r[2]);
        } else if (op == GateOp::Lut) {
            c.add_lut(in, static_cast<std::uint16_t>(std::stoul(r[4 + std::size(kOps)])), r[2]);
        } else {
            c.add_gate(op, in, r[2]);
        }
        std::stringstream outs(r[5 + std::size(kOps)]);
        std::string item;
        while (std::getline(outs, item, '|')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw std::runtime_error("nodes.csv: bad outputs field");
            outputs[gid].push_back({std::stoul(item.substr(0, colon)), {id, item.substr(colon + 1)}});
        }
        out[gid].node_labels.push_back(r[6 + std::size(kOps)]);
    }
    for (std::size_t gid = 0; gid < out.size(); ++gid) {
        std::sort(outputs[gid].begin(), outputs[gid].end());
        for (const auto& [k, o] : outputs[gid]) out[gid].netlist.add_output(o.first, o.second);
    }
    return out;
}

}  // namespace ipcamo
