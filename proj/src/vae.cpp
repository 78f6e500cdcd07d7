#include "ipcamo/vae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace ipcamo {

namespace {

Matrix one_hot(NodeType t) {
    Matrix m(kNodeTypeCount, 1);
    m.data[static_cast<std::size_t>(t)] = 1.0;
    return m;
}

std::size_t argmax(const Matrix& m) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < m.size(); ++k) {
        if (m.data[k] > m.data[best]) best = k;
    }
    return best;
}

Matrix row_of(const Matrix& m, std::size_t r, std::size_t len) {
    Matrix out(len, 1);
    for (std::size_t c = 0; c < len; ++c) out.data[c] = m(r, c);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config, sampling, value loss
// ---------------------------------------------------------------------------

std::string VaeConfig::to_json() const {
    nlohmann::ordered_json j;
    j["hidden"] = hidden;
    j["latent"] = latent;
    j["mlp_hidden"] = mlp_hidden;
    j["pi_cap"] = pi_cap;
    return j.dump();
}

VaeConfig VaeConfig::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    VaeConfig c;
    c.hidden = j.value("hidden", c.hidden);
    c.latent = j.value("latent", c.latent);
    c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
    c.pi_cap = j.value("pi_cap", c.pi_cap);
    return c;
}

Matrix sample_latent(const LatentCode& code, SampleMode mode, std::mt19937_64& rng) {
    if (mode == SampleMode::Eval) return code.mu;
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix z = code.mu;
    for (std::size_t k = 0; k < z.size(); ++k) z.data[k] += code.sigma.data[k] * normal(rng);
    return z;
}

LossParts vae_loss(const TensorTriple& x, const TensorTriple& xhat, const Matrix& mu, const Matrix& sigma,
                   const LossWeights& w) {
    if (!x.type.same_shape(xhat.type) || !x.conn.same_shape(xhat.conn) || !x.inv.same_shape(xhat.inv)) {
        throw std::invalid_argument("vae_loss: triple shapes differ");
    }
    if (!mu.same_shape(sigma)) throw std::invalid_argument("vae_loss: mu and sigma shapes differ");
    const auto sse = [](const Matrix& a, const Matrix& b) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) s += (a.data[k] - b.data[k]) * (a.data[k] - b.data[k]);
        return s;
    };
    const double n = static_cast<double>(x.size());
    LossParts p;
    p.type = n > 0 ? sse(x.type, xhat.type) / (3.0 * n) : 0.0;
    p.conn = n > 0 ? sse(x.conn, xhat.conn) / (n * n) : 0.0;
    p.inv = n > 0 ? sse(x.inv, xhat.inv) / (n * n) : 0.0;
    double kl = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double s2 = sigma.data[k] * sigma.data[k];
        kl += s2 + mu.data[k] * mu.data[k] - std::log(s2) - 1.0;
    }
    p.kl = 0.5 * kl;
    p.total = w.alpha * p.type + w.beta * p.conn + w.gamma * p.inv + w.delta * p.kl;
    return p;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

AigVae::AigVae(const VaeConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.hidden == 0 || cfg.latent == 0 || cfg.mlp_hidden == 0 || cfg.pi_cap == 0) {
        throw std::invalid_argument("VAE dimensions must be positive");
    }
    const std::size_t H = cfg.hidden, D = cfg.latent, M = cfg.mlp_hidden;
    enc_gru_ = GruParams::create(store_, "enc.gru", H, kNodeTypeCount);
    pi_embed_ = &store_.add("enc.pi_embed", H, cfg.pi_cap, 1);
    mlp_mu_ = MlpParams::create(store_, "enc.mu", {H, M, D}, Activation::Tanh, Activation::Identity);
    mlp_logvar_ = MlpParams::create(store_, "enc.logvar", {H, M, D}, Activation::Tanh, Activation::Identity);
    init_W_ = &store_.add("dec.init.W", H, D, D);
    init_b_ = &store_.add("dec.init.b", H, 1, D);
    dec_gru_ = GruParams::create(store_, "dec.gru", H, kNodeTypeCount);
    mlp_add_ = MlpParams::create(store_, "dec.add", {H, M, kNodeTypeCount}, Activation::Tanh, Activation::Softmax);
    mlp_conn_ = MlpParams::create(store_, "dec.conn", {2 * H, M, 1}, Activation::Tanh, Activation::Sigmoid);
    mlp_inv_ = MlpParams::create(store_, "dec.inv", {2 * H, M, 1}, Activation::Tanh, Activation::Sigmoid);
    store_.init_uniform(seed);
}

Var AigVae::aggregate(Tape& t, const Node& node, const std::vector<Var>& h, std::size_t hidden) {
    Var m = t.constant(Matrix(hidden, 1));
    for (const Fanin& f : node.fanins) {
        m = f.inverted ? ad::sub(m, h[f.src]) : ad::add(m, h[f.src]);
    }
    return m;
}

AigVae::Encoded AigVae::encode(Tape& t, const AigGraph& g) {
    if (const std::string why = g.canonical_violation(); !why.empty()) {
        throw GraphError("encoder input is not canonical: " + why);
    }
    const auto pos = g.pos();
    if (pos.size() != 1) throw GraphError("encoder input must have exactly one PO, got " + std::to_string(pos.size()));

    const Var embed = t.param(*pi_embed_);
    std::vector<Var> h(g.size());
    std::vector<char> done(g.size(), 0);
    std::size_t pi_ordinal = 0;
    for (std::size_t v = 0; v < g.size(); ++v) {
        const Node& node = g.node(v);
        for (const Fanin& f : node.fanins) {
            if (!done[f.src]) throw GraphError("node " + std::to_string(v) + " visited before its fanin");
        }
        if (node.type == NodeType::PI) {
            h[v] = ad::column(embed, std::min(pi_ordinal++, cfg_.pi_cap - 1));
        } else {
            const Var m = aggregate(t, node, h, cfg_.hidden);
            h[v] = gru_step(t, enc_gru_, m, t.constant(one_hot(node.type)), m);
        }
        done[v] = 1;
    }
    const Var h_po = h[pos[0]];
    return Encoded{mlp_forward(t, mlp_mu_, h_po), mlp_forward(t, mlp_logvar_, h_po)};
}

AigVae::Decoded AigVae::decode(Tape& t, Var z, std::size_t n) {
    if (n < 2) throw std::invalid_argument("decode needs at least 2 nodes");
    if (z.rows() != cfg_.latent) throw std::invalid_argument("latent size mismatch");
    const std::size_t H = cfg_.hidden;
    Var h = ad::tanh(ad::add(ad::matvec(t.param(*init_W_), z), t.param(*init_b_)));

    const MlpLayer& c1 = mlp_conn_.layers[0];
    const MlpLayer& c2 = mlp_conn_.layers[1];
    const MlpLayer& i1 = mlp_inv_.layers[0];
    const MlpLayer& i2 = mlp_inv_.layers[1];
    const Var cW = t.param(*c1.W), cb = t.param(*c1.b), cw2 = t.param(*c2.W), cb2 = t.param(*c2.b);
    const Var iW = t.param(*i1.W), ib = t.param(*i1.b), iw2 = t.param(*i2.W), ib2 = t.param(*i2.b);

    Decoded out;
    std::vector<Var> conn_src, inv_src;  // second-half projections of earlier states
    bool po_seen = false;
    for (std::size_t i = 0; i < n; ++i) {
        Var type;
        if (i == 0) {
            type = t.constant(one_hot(NodeType::PI));
        } else if (i + 1 == n && !po_seen) {
            type = t.constant(one_hot(NodeType::PO));
        } else {
            type = mlp_forward(t, mlp_add_, h);
            if (argmax(type.value()) == static_cast<std::size_t>(NodeType::PO)) po_seen = true;
        }
        out.type.push_back(type);

        const Var ca = ad::add(ad::matvec_block(cW, 0, h), cb);
        const Var ia = ad::add(ad::matvec_block(iW, 0, h), ib);
        out.conn.push_back(ad::pair_head(ca, conn_src, cw2, cb2));
        out.inv.push_back(ad::pair_head(ia, inv_src, iw2, ib2));
        conn_src.push_back(ad::matvec_block(cW, H, h));
        inv_src.push_back(ad::matvec_block(iW, H, h));

        if (i + 1 < n) h = gru_step(t, dec_gru_, h, type, h);
    }
    return out;
}

LatentCode AigVae::encode(const AigGraph& g) const {
    Tape t(false);
    auto& self = const_cast<AigVae&>(*this);
    const Encoded e = self.encode(t, g);
    LatentCode code;
    code.mu = e.mu.value();
    code.sigma = e.logvar.value();
    for (double& v : code.sigma.data) v = std::exp(0.5 * v);
    code.z = code.mu;
    return code;
}

TensorTriple AigVae::decode(const Matrix& z, std::size_t n) const {
    Tape t(false);
    auto& self = const_cast<AigVae&>(*this);
    const Decoded d = self.decode(t, t.constant(z), n);
    TensorTriple out = zero_triple(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < kNodeTypeCount; ++k) out.type(i, k) = d.type[i].value().data[k];
        for (std::size_t j = 0; j < i; ++j) {
            out.conn(i, j) = d.conn[i].value().data[j];
            out.inv(i, j) = d.inv[i].value().data[j];
        }
    }
    return out;
}

AigGraph AigVae::reconstruct(const AigGraph& g, double th) const {
    return from_tensors(threshold_filter(decode(encode(g).mu, g.size()), th));
}

void AigVae::save(const std::string& path, const std::string& extra_metadata_json) const {
    nlohmann::ordered_json meta;
    meta["format"] = "ipcamo-vae";
    meta["version"] = 1;
    meta["config"] = nlohmann::ordered_json::parse(cfg_.to_json());
    meta["extra"] = nlohmann::ordered_json::parse(extra_metadata_json.empty() ? "{}" : extra_metadata_json);
    save_checkpoint(path, store_, meta.dump());
}

AigVae AigVae::load(const std::string& path) {
    const Checkpoint ck = read_checkpoint(path);
    const auto meta = nlohmann::json::parse(ck.metadata);
    if (meta.value("format", "") != "ipcamo-vae") throw std::runtime_error(path + ": not a VAE checkpoint");
    AigVae model(VaeConfig::from_json(meta.at("config").dump()), 0);
    apply_checkpoint(ck, model.store_);
    return model;
}

// ---------------------------------------------------------------------------
// Loss and training
// ---------------------------------------------------------------------------

TapeLoss vae_loss(Tape& t, const TensorTriple& x, const AigVae::Decoded& xhat, const AigVae::Encoded& code,
                  const LossWeights& w) {
    const std::size_t n = x.size();
    if (xhat.type.size() != n) throw std::invalid_argument("vae_loss: node count mismatch");
    std::vector<Var> type_terms, conn_terms, inv_terms;
    for (std::size_t i = 0; i < n; ++i) {
        type_terms.push_back(ad::sq_error(xhat.type[i], row_of(x.type, i, kNodeTypeCount)));
        if (i > 0) {
            conn_terms.push_back(ad::sq_error(xhat.conn[i], row_of(x.conn, i, i)));
            inv_terms.push_back(ad::sq_error(xhat.inv[i], row_of(x.inv, i, i)));
        }
    }
    const double nn = static_cast<double>(n);
    const auto mean_of = [&](const std::vector<Var>& terms, double denom) {
        return ad::weighted_sum(terms, std::vector<double>(terms.size(), 1.0 / denom));
    };
    TapeLoss L;
    L.type = mean_of(type_terms, 3.0 * nn);
    L.conn = mean_of(conn_terms, nn * nn);
    L.inv = mean_of(inv_terms, nn * nn);
    const Var lv = code.logvar;
    const Var one = t.constant(Matrix(1, 1, 1.0));
    L.kl = ad::weighted_sum({ad::sum(ad::exp(lv)), ad::sum(ad::square(code.mu)), ad::sum(lv), one},
                            {0.5, 0.5, -0.5, -0.5 * static_cast<double>(lv.rows())});
    L.total = ad::weighted_sum({L.type, L.conn, L.inv, L.kl}, {w.alpha, w.beta, w.gamma, w.delta});
    return L;
}

TapeLoss vae_forward(Tape& t, AigVae& model, const AigGraph& g, const LossWeights& w, std::mt19937_64* rng) {
    const TensorTriple x = to_tensors(g);
    const AigVae::Encoded code = model.encode(t, g);
    Var z = code.mu;
    if (rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        Matrix eps(code.mu.rows(), 1);
        for (double& v : eps.data) v = normal(*rng);
        const Var sigma = ad::exp(ad::scale(code.logvar, 0.5));
        z = ad::add(code.mu, ad::mul(sigma, t.constant(std::move(eps))));
    }
    const AigVae::Decoded xhat = model.decode(t, z, g.size());
    return vae_loss(t, x, xhat, code, w);
}

TrainResult train_vae(AigVae& model, const std::vector<AigGraph>& train, const std::vector<AigGraph>& val,
                      const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
    if (train.empty()) throw std::invalid_argument("empty training set");
    ParamStore& store = model.params();
    store.zero_grad();
    Adam adam(AdamConfig{cfg.lr});
    std::mt19937_64 rng(cfg.seed);

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<Matrix> best = store.snapshot();
    std::size_t bad = 0;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochRecord rec;
        rec.epoch = epoch;
        for (std::size_t idx : order) {
            Tape t;
            const TapeLoss L = vae_forward(t, model, train[idx], cfg.weights, &rng);
            t.backward(L.total);
            adam.step(store);
            store.zero_grad();
            rec.train_parts.type += L.type.scalar();
            rec.train_parts.conn += L.conn.scalar();
            rec.train_parts.inv += L.inv.scalar();
            rec.train_parts.kl += L.kl.scalar();
            rec.train_parts.total += L.total.scalar();
        }
        const double nt = static_cast<double>(train.size());
        rec.train_parts.type /= nt;
        rec.train_parts.conn /= nt;
        rec.train_parts.inv /= nt;
        rec.train_parts.kl /= nt;
        rec.train_parts.total /= nt;
        rec.train_loss = rec.train_parts.total;

        double vsum = 0.0;
        for (const AigGraph& g : val) {
            Tape t(false);
            vsum += vae_forward(t, model, g, cfg.weights, nullptr).total.scalar();
        }
        rec.val_loss = val.empty() ? rec.train_loss : vsum / static_cast<double>(val.size());
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.val_loss < result.best_val_loss) {
            result.best_val_loss = rec.val_loss;
            result.best_epoch = epoch;
            best = store.snapshot();
            bad = 0;
        } else if (++bad > cfg.patience) {
            result.early_stopped = true;
            break;
        }
    }
    store.restore(best);
    return result;
}

std::string history_csv(const TrainResult& r) {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,train_loss,val_loss,type,conn,inv,kl\n";
    for (const EpochRecord& e : r.history) {
        out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.train_parts.type << ','
            << e.train_parts.conn << ',' << e.train_parts.inv << ',' << e.train_parts.kl << '\n';
    }
    return out.str();
}

double reconstruction_agreement(const AigVae& model, const std::vector<AigGraph>& graphs, double th) {
    if (graphs.empty()) return 0.0;
    double acc = 0.0;
    for (const AigGraph& g : graphs) {
        const TensorTriple x = to_tensors(g);
        const TensorTriple r = threshold_filter(model.decode(model.encode(g).mu, g.size()), th);
        std::size_t same = 0, total = 0;
        for (const auto& [a, b] : {std::pair{&x.type, &r.type}, {&x.conn, &r.conn}, {&x.inv, &r.inv}}) {
            for (std::size_t k = 0; k < a->size(); ++k) same += a->data[k] == b->data[k];
            total += a->size();
        }
        acc += static_cast<double>(same) / static_cast<double>(total);
    }
    return acc / static_cast<double>(graphs.size());
}

}  // namespace ipcamo
