#include "ipcamo/camouflage.hpp"

#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>

#include "ipcamo/vae.hpp"
#include "json.hpp"

namespace ipcamo {

using json = nlohmann::ordered_json;

const char* to_string(EdgeState s) {
    switch (s) {
    case EdgeState::None: return "00/01";
    case EdgeState::Plain: return "10";
    case EdgeState::Inverted: return "11";
    }
    return "?";
}

EdgeState edge_state(const TensorTriple& t, std::size_t i, std::size_t j) {
    if (i >= t.size() || j >= i) throw std::invalid_argument("edge_state needs j < i < N");
    if (t.conn(i, j) == 0.0) return EdgeState::None;
    return t.inv(i, j) != 0.0 ? EdgeState::Inverted : EdgeState::Plain;
}

const char* to_string(FixPhase p) { return p == FixPhase::Functional ? "functional" : "appearance"; }

const char* to_string(FixAction a) {
    switch (a) {
    case FixAction::NA: return "NA";
    case FixAction::CONNECT: return "CONNECT";
    case FixAction::INSERT_INV: return "INSERT_INV";
    case FixAction::FB: return "FB";
    case FixAction::FI: return "FI";
    case FixAction::UT_A: return "UT_A";
    case FixAction::UT_B: return "UT_B";
    }
    return "?";
}

FixAction fix_action_from_string(const std::string& s) {
    for (FixAction a : {FixAction::NA, FixAction::CONNECT, FixAction::INSERT_INV, FixAction::FB, FixAction::FI,
                        FixAction::UT_A, FixAction::UT_B}) {
        if (s == to_string(a)) return a;
    }
    throw std::invalid_argument("unknown fix action '" + s + "'");
}

FixAction fix_lookup(FixPhase phase, EdgeState g, EdgeState ref) {
    using S = EdgeState;
    using A = FixAction;
    // rows: state of the repaired graph; columns: reference state
    static constexpr A kFunctional[3][3] = {
        {A::NA, A::CONNECT, A::INSERT_INV},
        {A::FB, A::NA, A::UT_B},
        {A::FI, A::UT_A, A::NA},
    };
    static constexpr A kAppearance[3][3] = {
        {A::NA, A::FB, A::FI},
        {A::NA, A::NA, A::UT_A},
        {A::NA, A::UT_B, A::NA},
    };
    static_assert(static_cast<int>(S::None) == 0 && static_cast<int>(S::Inverted) == 2);
    const auto r = static_cast<std::size_t>(g), c = static_cast<std::size_t>(ref);
    return phase == FixPhase::Functional ? kFunctional[r][c] : kAppearance[r][c];
}

Matrix interpolate(const Matrix& zf, const Matrix& za, double p) {
    if (!zf.same_shape(za)) throw std::invalid_argument("latent codes differ in shape");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("proportion must lie in [0, 1]");
    Matrix z = zf;
    for (std::size_t k = 0; k < z.size(); ++k) z.data[k] = (1.0 - p) * zf.data[k] + p * za.data[k];
    return z;
}

// ---------------------------------------------------------------------------

NodeType Frame::type(std::size_t s) const {
    if (s < pi) return NodeType::PI;
    if (s < pi + and_) return NodeType::AND;
    if (s < size()) return NodeType::PO;
    throw std::out_of_range("slot outside frame");
}

std::size_t Frame::slot(NodeType t, std::size_t k) const {
    switch (t) {
    case NodeType::PI:
        if (k < pi) return k;
        break;
    case NodeType::AND:
        if (k < and_) return pi + k;
        break;
    case NodeType::PO:
        if (k < po) return pi + and_ + k;
        break;
    }
    throw std::out_of_range("ordinal outside frame block");
}

Frame Frame::cover(const AigGraph& g) {
    return Frame{g.count(NodeType::PI), g.count(NodeType::AND), g.count(NodeType::PO)};
}

Frame Frame::merge(const Frame& o) const {
    return Frame{std::max(pi, o.pi), std::max(and_, o.and_), std::max(po, o.po)};
}

namespace {

std::vector<std::size_t> slots_of(const AigGraph& g, const Frame& fr) {
    std::vector<std::size_t> out(g.size());
    std::size_t ord[kNodeTypeCount] = {0, 0, 0};
    for (std::size_t i = 0; i < g.size(); ++i) {
        const NodeType t = g.node(i).type;
        out[i] = fr.slot(t, ord[static_cast<std::size_t>(t)]++);
    }
    return out;
}

std::map<SiteKey, EdgeState> states_of(const AigGraph& g, const Frame& fr, std::vector<std::string>* warnings,
                                       const char* label) {
    const auto slot = slots_of(g, fr);
    std::map<SiteKey, EdgeState> st;
    for (const Edge& e : g.edges()) {
        const NodeType ts = g.node(e.src).type, td = g.node(e.dst).type;
        if (ts == NodeType::PO || td == NodeType::PI) {
            if (!warnings) throw GraphError(std::string(label) + ": edge leaves a PO or enters a PI");
            warnings->push_back(std::string(label) + ": dropped edge " + std::to_string(e.src) + "->" +
                                std::to_string(e.dst) + " (" + to_string(ts) + " to " + to_string(td) + ")");
            continue;
        }
        const SiteKey key{slot[e.dst], slot[e.src]};
        if (st.count(key)) {
            if (!warnings) throw GraphError(std::string(label) + ": parallel edges between one node pair");
            warnings->push_back(std::string(label) + ": dropped parallel edge " + std::to_string(e.src) + "->" +
                                std::to_string(e.dst));
            continue;
        }
        st[key] = e.inverted ? EdgeState::Inverted : EdgeState::Plain;
    }
    return st;
}

EdgeState lookup(const std::map<SiteKey, EdgeState>& m, const SiteKey& k) {
    auto it = m.find(k);
    return it == m.end() ? EdgeState::None : it->second;
}

EdgeState apparent_function(const Site& s) {
    switch (s.cell) {
    case SiteCell::None: return EdgeState::None;
    case SiteCell::Wire: return EdgeState::Plain;
    case SiteCell::Inverter: return EdgeState::Inverted;
    case SiteCell::Covert: break;
    }
    if (s.mode != CovertMode::Normal) return EdgeState::None;  // constant 1 into a conjunction
    return s.kind == CovertKind::UT_A ? EdgeState::Plain : EdgeState::Inverted;
}

void apply(Site& s, FixAction a) {
    switch (a) {
    case FixAction::NA: return;
    case FixAction::CONNECT: s.cell = SiteCell::Wire; return;
    case FixAction::INSERT_INV: s.cell = SiteCell::Inverter; return;
    case FixAction::FB: s = Site{s.function, SiteCell::Covert, CovertKind::FB, CovertMode::Const1}; return;
    case FixAction::FI: s = Site{s.function, SiteCell::Covert, CovertKind::FI, CovertMode::Const1}; return;
    case FixAction::UT_A: s = Site{s.function, SiteCell::Covert, CovertKind::UT_A, CovertMode::Normal}; return;
    case FixAction::UT_B: s = Site{s.function, SiteCell::Covert, CovertKind::UT_B, CovertMode::Normal}; return;
    }
}

Site initial_site(EdgeState g) {
    Site s;
    if (g == EdgeState::Plain) s.cell = SiteCell::Wire;
    if (g == EdgeState::Inverted) s.cell = SiteCell::Inverter;
    return s;
}

void check_function(const Site& s, const SiteKey& k, const char* phase) {
    if (apparent_function(s) != s.function) {
        throw std::logic_error(std::string(phase) + " fix left site " + std::to_string(k.first) + "<-" +
                               std::to_string(k.second) + " with the wrong function");
    }
}

void check_reference(const AigGraph& f) {
    const std::string why = f.canonical_violation();
    if (!why.empty()) throw GraphError("reference circuit is not canonical: " + why);
    if (f.count(NodeType::PO) != 1) throw GraphError("reference circuit must have exactly one PO");
}

std::string unique_name(std::string base, std::set<std::string>& used) {
    while (used.count(base)) base += "_";
    used.insert(base);
    return base;
}

}  // namespace

PreservedGraph functional_preserve(const AigGraph& g_hat, const AigGraph& f) {
    check_reference(f);
    PreservedGraph pg;
    pg.frame = Frame::cover(g_hat).merge(Frame::cover(f));
    const auto sg = states_of(g_hat, pg.frame, &pg.warnings, "decoded graph");
    const auto sf = states_of(f, pg.frame, nullptr, "reference");

    const std::size_t n = pg.frame.size();
    pg.names.assign(n, "");
    pg.real.assign(n, false);
    std::set<std::string> used;
    const auto fslot = slots_of(f, pg.frame);
    std::size_t pi_ord = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Node& node = f.node(i);
        std::string nm = node.name;
        if (node.type == NodeType::PI && nm.empty()) nm = "pi" + std::to_string(pi_ord);
        if (node.type == NodeType::PO && nm.empty()) nm = "po0";
        if (node.type == NodeType::PI) ++pi_ord;
        if (node.type == NodeType::PO) pg.real_po = fslot[i];
        pg.real[fslot[i]] = true;
        if (!nm.empty()) used.insert(nm);
        pg.names[fslot[i]] = nm;
    }
    for (std::size_t s = 0; s < n; ++s) {
        if (pg.real[s]) continue;
        const NodeType t = pg.frame.type(s);
        if (t == NodeType::PI) pg.names[s] = unique_name("x" + std::to_string(s), used);
        if (t == NodeType::PO) pg.names[s] = unique_name("y" + std::to_string(s), used);
    }

    std::set<SiteKey> keys;
    for (const auto& [k, v] : sg) keys.insert(k);
    for (const auto& [k, v] : sf) keys.insert(k);
    for (const SiteKey& k : keys) {
        const EdgeState g = lookup(sg, k), ref = lookup(sf, k);
        Site s = initial_site(g);
        s.function = ref;
        const FixAction a = fix_lookup(FixPhase::Functional, g, ref);
        apply(s, a);
        check_function(s, k, "functional");
        if (a != FixAction::NA) pg.fix_log.push_back(FixStep{a, k.first, k.second, FixPhase::Functional});
        pg.sites[k] = s;
    }
    return pg;
}

AigGraph functional_graph(const PreservedGraph& pg) {
    std::vector<std::vector<Fanin>> fanins(pg.frame.size());
    for (const auto& [k, s] : pg.sites) {
        if (s.function != EdgeState::None) fanins[k.first].push_back({k.second, s.function == EdgeState::Inverted});
    }
    AigGraph g;
    for (std::size_t s = 0; s < pg.frame.size(); ++s) g.add_node(pg.frame.type(s), fanins[s], pg.names[s]);
    return g;
}

CamouflagedNetlist appearance_mimic(const PreservedGraph& in, const AigGraph& a, std::uint64_t seed) {
    // widen the frame to cover A and move every slot into it
    PreservedGraph pg;
    pg.frame = in.frame.merge(Frame::cover(a));
    const std::size_t n = pg.frame.size();
    auto remap = [&](std::size_t s) {
        const NodeType t = in.frame.type(s);
        const std::size_t base = t == NodeType::PI ? 0 : (t == NodeType::AND ? in.frame.pi : in.frame.pi + in.frame.and_);
        return pg.frame.slot(t, s - base);
    };
    pg.names.assign(n, "");
    pg.real.assign(n, false);
    std::set<std::string> used;
    for (std::size_t s = 0; s < in.frame.size(); ++s) {
        pg.names[remap(s)] = in.names[s];
        pg.real[remap(s)] = in.real[s];
        if (!in.names[s].empty()) used.insert(in.names[s]);
    }
    for (std::size_t s = 0; s < n; ++s) {
        if (!pg.names[s].empty() || pg.frame.type(s) == NodeType::AND) continue;
        pg.names[s] = unique_name((pg.frame.type(s) == NodeType::PI ? "x" : "y") + std::to_string(s), used);
    }
    pg.real_po = remap(in.real_po);
    for (const auto& [k, s] : in.sites) pg.sites[{remap(k.first), remap(k.second)}] = s;
    pg.fix_log = in.fix_log;
    for (FixStep& st : pg.fix_log) {
        st.dst = remap(st.dst);
        st.src = remap(st.src);
    }

    const auto sa = states_of(a, pg.frame, nullptr, "appearance");
    for (const auto& [k, ref] : sa) {
        if (!pg.sites.count(k)) pg.sites[k] = Site{};
    }
    for (auto& [k, s] : pg.sites) {
        const FixAction act = fix_lookup(FixPhase::Appearance, s.function, lookup(sa, k));
        apply(s, act);
        check_function(s, k, "appearance");
        if (act != FixAction::NA) pg.fix_log.push_back(FixStep{act, k.first, k.second, FixPhase::Appearance});
    }

    CamouflagedNetlist out;
    out.frame = pg.frame;
    out.fix_log = pg.fix_log;
    out.warnings = in.warnings;
    out.functional_view = functional_graph(pg);

    std::vector<bool> present = pg.real;
    std::vector<std::vector<std::pair<std::size_t, const Site*>>> into(n);
    for (const auto& [k, s] : pg.sites) {
        if (s.cell == SiteCell::None) continue;
        present[k.first] = present[k.second] = true;
        into[k.first].push_back({k.second, &s});
    }

    std::mt19937_64 rng(seed);
    Circuit& c = out.appearance_view;
    std::vector<std::size_t> gate(n, 0);
    for (std::size_t slot = 0; slot < n; ++slot) {
        if (!present[slot]) continue;
        const NodeType t = pg.frame.type(slot);
        if (t == NodeType::PI) {
            gate[slot] = c.add_input(pg.names[slot]);
            continue;
        }
        std::vector<std::size_t> ops;
        for (const auto& [src, s] : into[slot]) {
            const std::size_t x = gate[src];
            switch (s->cell) {
            case SiteCell::None: break;
            case SiteCell::Wire: ops.push_back(x); break;
            case SiteCell::Inverter: ops.push_back(c.add_gate(GateOp::Not, {x})); break;
            case SiteCell::Covert: {
                Placement p;
                p.kind = s->kind;
                p.mode = s->mode;
                p.dst = slot;
                p.src = src;
                p.real_input = x;
                if (s->kind == CovertKind::UT_A || s->kind == CovertKind::UT_B) {
                    std::vector<std::size_t> cand;
                    for (std::size_t k = 0; k < slot; ++k) {
                        if (present[k] && k != src && pg.frame.type(k) != NodeType::PO) cand.push_back(k);
                    }
                    const std::size_t dummy = cand.empty() ? src : cand[rng() % cand.size()];
                    p.dummy_inputs.push_back(gate[dummy]);
                    p.cells.push_back(c.add_gate(GateOp::Nand, {x, gate[dummy]}));
                } else {
                    p.cells.push_back(c.add_gate(GateOp::Not, {x}));
                    if (s->kind == CovertKind::FB) p.cells.push_back(c.add_gate(GateOp::Not, {p.cells.back()}));
                }
                ops.push_back(p.cells.back());
                out.placements.push_back(std::move(p));
                break;
            }
            }
        }
        std::size_t drv;
        if (ops.empty()) {
            drv = c.add_gate(GateOp::Const1, {}, t == NodeType::AND ? pg.names[slot] : std::string{});
        } else if (ops.size() == 1 && t == NodeType::PO) {
            drv = ops[0];
        } else {
            drv = c.add_gate(GateOp::And, ops, t == NodeType::AND ? pg.names[slot] : std::string{});
        }
        gate[slot] = drv;
        if (t == NodeType::PO) c.add_output(drv, pg.names[slot]);
    }
    out.slot_gates.assign(n, CamouflagedNetlist::kAbsent);
    for (std::size_t s = 0; s < n; ++s) {
        if (present[s]) out.slot_gates[s] = gate[s];
    }
    return out;
}

Circuit functional_circuit(const CamouflagedNetlist& cn) {
    const Circuit& app = cn.appearance_view;
    std::map<std::size_t, const Placement*> at;
    for (const auto& p : cn.placements) at[p.output()] = &p;
    Circuit r;
    std::vector<std::size_t> id(app.size());
    for (std::size_t i = 0; i < app.size(); ++i) {
        const Gate& g = app.gate(i);
        auto it = at.find(i);
        if (it != at.end()) {
            const Placement& p = *it->second;
            if (p.mode == CovertMode::Const1) {
                id[i] = r.add_gate(GateOp::Const1, {});
            } else if (p.mode == CovertMode::Const0) {
                id[i] = r.add_gate(GateOp::Const0, {});
            } else {
                id[i] = r.add_gate(p.kind == CovertKind::UT_A ? GateOp::Buf : GateOp::Not, {id[p.real_input]});
            }
            continue;
        }
        std::vector<std::size_t> in;
        for (std::size_t s : g.in) in.push_back(id[s]);
        if (g.op == GateOp::Input) {
            id[i] = r.add_input(g.name);
        } else if (g.op == GateOp::Lut) {
            id[i] = r.add_lut(in, g.lut, g.name);
        } else {
            id[i] = r.add_gate(g.op, in, g.name);
        }
    }
    for (const auto& o : app.outputs()) r.add_output(id[o.gate], o.name);
    return r;
}

std::vector<CovertCellInfo> covert_cells(const CamouflagedNetlist& c) {
    std::vector<CovertCellInfo> r;
    for (const auto& p : c.placements) r.push_back({p.output(), p.kind, p.mode});
    return r;
}

std::size_t appearance_cell_count(const CamouflagedNetlist& c) { return circuit_cell_count(c.appearance_view); }

double area_overhead(const CamouflagedNetlist& c, const AigGraph& f) {
    const std::size_t base = cell_count(f);
    if (base == 0) throw std::invalid_argument("reference circuit has no cells");
    return static_cast<double>(appearance_cell_count(c)) / static_cast<double>(base);
}

std::size_t pipeline_node_count(const AigGraph& f, const AigGraph& a) {
    return Frame::cover(f).merge(Frame::cover(a)).size();
}

TensorTriple interpolated_triple(const AigVae& model, const AigGraph& f, const AigGraph& a, double p, double th) {
    const Matrix z = interpolate(model.encode(f).mu, model.encode(a).mu, p);
    return threshold_filter(model.decode(z, pipeline_node_count(f, a)), th);
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

CamouflagedNetlist camouflage_pipeline(const AigGraph& f, const AigGraph& a, const AigVae& model, double p,
                                       double th, std::uint64_t seed) {
    if (!(th > 0.0 && th < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
    check_reference(f);
    const TensorTriple t = interpolated_triple(model, f, a, p, th);
    std::vector<std::string> warnings;
    const AigGraph g_hat = from_tensors(t, &warnings);
    PreservedGraph pg = functional_preserve(g_hat, f);
    warnings.insert(warnings.end(), pg.warnings.begin(), pg.warnings.end());
    pg.warnings = warnings;
    CamouflagedNetlist c = appearance_mimic(pg, a, seed);
    c.metadata.from_pipeline = true;
    c.metadata.p = p;
    c.metadata.th = th;
    c.metadata.seed = seed;
    c.metadata.model_checksum = hex64(model.checksum());
    c.metadata.node_count = t.size();
    return c;
}

// ---------------------------------------------------------------------------

std::string to_json(const CamouflagedNetlist& c) {
    json j;
    j["format"] = "ipcamo-camouflaged";
    j["version"] = 1;
    json m;
    m["from_pipeline"] = c.metadata.from_pipeline;
    m["p"] = c.metadata.p;
    m["th"] = c.metadata.th;
    m["seed"] = c.metadata.seed;
    m["model_checksum"] = c.metadata.model_checksum;
    m["node_count"] = c.metadata.node_count;
    j["metadata"] = m;
    j["frame"] = {{"pi", c.frame.pi}, {"and", c.frame.and_}, {"po", c.frame.po}};
    json sg = json::array();
    for (std::size_t g : c.slot_gates) sg.push_back(g == CamouflagedNetlist::kAbsent ? json(nullptr) : json(g));
    j["slot_gates"] = sg;
    j["functional_view"] = json::parse(to_json(c.functional_view));
    json gates = json::array();
    for (const Gate& g : c.appearance_view.gates()) {
        json e;
        e["op"] = to_string(g.op);
        e["name"] = g.name;
        e["in"] = g.in;
        if (g.op == GateOp::Lut) e["lut"] = g.lut;
        gates.push_back(e);
    }
    json outs = json::array();
    for (const auto& o : c.appearance_view.outputs()) outs.push_back({{"gate", o.gate}, {"name", o.name}});
    j["appearance_view"] = {{"gates", gates}, {"outputs", outs}};
    json pl = json::array();
    for (const auto& p : c.placements) {
        pl.push_back({{"kind", to_string(p.kind)},
                      {"mode", to_string(p.mode)},
                      {"dst", p.dst},
                      {"src", p.src},
                      {"real_input", p.real_input},
                      {"dummy_inputs", p.dummy_inputs},
                      {"cells", p.cells}});
    }
    j["placements"] = pl;
    json log = json::array();
    for (const auto& s : c.fix_log) {
        log.push_back({{"phase", to_string(s.phase)}, {"action", to_string(s.action)}, {"dst", s.dst}, {"src", s.src}});
    }
    j["fix_log"] = log;
    j["warnings"] = c.warnings;
    return j.dump(1) + "\n";
}

CamouflagedNetlist camouflaged_from_json(const std::string& text) {
    CamouflagedNetlist c;
    try {
        const json j = json::parse(text);
        if (j.at("format") != "ipcamo-camouflaged" || j.at("version") != 1) {
            throw std::invalid_argument("not an ipcamo camouflaged netlist");
        }
        const json& m = j.at("metadata");
        c.metadata.from_pipeline = m.at("from_pipeline").get<bool>();
        c.metadata.p = m.at("p").get<double>();
        c.metadata.th = m.at("th").get<double>();
        c.metadata.seed = m.at("seed").get<std::uint64_t>();
        c.metadata.model_checksum = m.at("model_checksum").get<std::string>();
        c.metadata.node_count = m.at("node_count").get<std::size_t>();
        c.frame = Frame{j.at("frame").at("pi").get<std::size_t>(), j.at("frame").at("and").get<std::size_t>(),
                        j.at("frame").at("po").get<std::size_t>()};
        for (const json& g : j.at("slot_gates")) {
            c.slot_gates.push_back(g.is_null() ? CamouflagedNetlist::kAbsent : g.get<std::size_t>());
        }
        c.functional_view = graph_from_json(j.at("functional_view").dump());
        for (const json& e : j.at("appearance_view").at("gates")) {
            const GateOp op = gate_op_from_string(e.at("op").get<std::string>());
            auto in = e.at("in").get<std::vector<std::size_t>>();
            auto name = e.at("name").get<std::string>();
            if (op == GateOp::Input) {
                c.appearance_view.add_input(name);
            } else if (op == GateOp::Lut) {
                c.appearance_view.add_lut(in, e.at("lut").get<std::uint16_t>(), name);
            } else {
                c.appearance_view.add_gate(op, in, name);
            }
        }
        for (const json& o : j.at("appearance_view").at("outputs")) {
            c.appearance_view.add_output(o.at("gate").get<std::size_t>(), o.at("name").get<std::string>());
        }
        for (const json& e : j.at("placements")) {
            Placement p;
            p.kind = covert_kind_from_string(e.at("kind").get<std::string>());
            p.mode = covert_mode_from_string(e.at("mode").get<std::string>());
            p.dst = e.at("dst").get<std::size_t>();
            p.src = e.at("src").get<std::size_t>();
            p.real_input = e.at("real_input").get<std::size_t>();
            p.dummy_inputs = e.at("dummy_inputs").get<std::vector<std::size_t>>();
            p.cells = e.at("cells").get<std::vector<std::size_t>>();
            if (p.cells.empty()) throw std::invalid_argument("placement without cells");
            c.placements.push_back(std::move(p));
        }
        for (const json& e : j.at("fix_log")) {
            FixStep s;
            s.phase = e.at("phase") == "functional" ? FixPhase::Functional : FixPhase::Appearance;
            s.action = fix_action_from_string(e.at("action").get<std::string>());
            s.dst = e.at("dst").get<std::size_t>();
            s.src = e.at("src").get<std::size_t>();
            c.fix_log.push_back(s);
        }
        c.warnings = j.at("warnings").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed camouflaged netlist: ") + e.what());
    }
    return c;
}

}  // namespace ipcamo
