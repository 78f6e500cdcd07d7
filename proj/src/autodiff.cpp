#include "ipcamo/autodiff.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "json.hpp"

namespace ipcamo {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw AutodiffError(what);
}

std::string shape(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

void require_same(const Matrix& a, const Matrix& b, const char* op) {
    require(a.same_shape(b), std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
}

constexpr char kMagic[8] = {'I', 'P', 'C', 'A', 'M', 'O', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

// ---------------------------------------------------------------------------
// ParamStore
// ---------------------------------------------------------------------------

Parameter& ParamStore::add(const std::string& name, std::size_t rows, std::size_t cols, std::size_t fan_in) {
    require(!contains(name), "duplicate parameter " + name);
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->value = Matrix(rows, cols);
    p->grad = Matrix(rows, cols);
    p->fan_in = fan_in == 0 ? 1 : fan_in;
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
    const auto it = index_.find(name);
    require(it != index_.end(), "unknown parameter " + name);
    return *params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
    const auto it = index_.find(name);
    require(it != index_.end(), "unknown parameter " + name);
    return *params_[it->second];
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

void ParamStore::init_uniform(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& p : params_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(p->fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (double& v : p->value.data) v = u(rng);
    }
}

void ParamStore::zero_grad() {
    for (auto& p : params_) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
}

std::vector<Matrix> ParamStore::snapshot() const {
    std::vector<Matrix> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p->value);
    return out;
}

void ParamStore::restore(const std::vector<Matrix>& values) {
    require(values.size() == params_.size(), "snapshot size mismatch");
    for (std::size_t k = 0; k < values.size(); ++k) {
        require_same(params_[k]->value, values[k], "restore");
        params_[k]->value = values[k];
    }
}

std::uint64_t ParamStore::checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    const auto mix = [&](const void* data, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& p : params_) {
        mix(p->name.data(), p->name.size());
        const std::uint64_t dims[2] = {p->value.rows, p->value.cols};
        mix(dims, sizeof dims);
        mix(p->value.data.data(), p->value.data.size() * sizeof(double));
    }
    return h;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& path, const ParamStore& store, const std::string& metadata_json) {
    nlohmann::ordered_json header;
    header["metadata"] = metadata_json.empty() ? nlohmann::ordered_json::object()
                                               : nlohmann::ordered_json::parse(metadata_json);
    auto tensors = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < store.size(); ++k) {
        const Parameter& p = store.at(k);
        tensors.push_back({{"name", p.name}, {"rows", p.value.rows}, {"cols", p.value.cols}});
    }
    header["tensors"] = std::move(tensors);
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(kMagic, sizeof kMagic);
    const std::uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (std::size_t k = 0; k < store.size(); ++k) {
        const auto& d = store.at(k).value.data;
        out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error(path + ": not a checkpoint");
    std::uint32_t version = 0;
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || version != kCheckpointVersion) throw std::runtime_error(path + ": unsupported checkpoint version");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    const auto header = nlohmann::ordered_json::parse(text);

    Checkpoint ck;
    ck.metadata = header.at("metadata").dump();
    for (const auto& t : header.at("tensors")) {
        Matrix m(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>());
        in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * sizeof(double)));
        if (!in) throw std::runtime_error(path + ": truncated checkpoint");
        ck.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
    }
    return ck;
}

void apply_checkpoint(const Checkpoint& ck, ParamStore& store) {
    require(ck.tensors.size() == store.size(), "checkpoint holds " + std::to_string(ck.tensors.size()) +
                                                   " tensors, model expects " + std::to_string(store.size()));
    for (const auto& [name, m] : ck.tensors) {
        Parameter& p = store.get(name);
        require_same(p.value, m, ("checkpoint tensor " + name).c_str());
        p.value = m;
    }
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

const Matrix& Var::value() const {
    return tape->value(id);
}

double Var::scalar() const {
    const Matrix& m = value();
    require(m.size() == 1, "scalar() on " + shape(m));
    return m.data[0];
}

Var Tape::push(Matrix value, bool needs_grad, std::function<void(std::size_t)> back) {
    Node n;
    n.own = std::move(value);
    n.needs_grad = needs_grad && record_grad_;
    if (n.needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Matrix m) {
    return push(std::move(m), false, {});
}

Var Tape::leaf(Matrix m) {
    return push(std::move(m), true, {});
}

Var Tape::param(Parameter& p) {
    if (const auto it = param_ids_.find(&p); it != param_ids_.end()) return Var{this, it->second};
    if (!p.grad.same_shape(p.value)) p.grad = Matrix(p.value.rows, p.value.cols);
    Node n;
    n.alias = &p.value;
    n.grad_alias = &p.grad;
    n.needs_grad = record_grad_;
    nodes_.push_back(std::move(n));
    param_ids_[&p] = nodes_.size() - 1;
    return Var{this, nodes_.size() - 1};
}

const Matrix& Tape::value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.alias ? *n.alias : n.own;
}

Matrix& Tape::grad_ref(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad_alias) return *n.grad_alias;
    if (n.own_grad.size() == 0 && value(id).size() != 0) {
        const Matrix& v = value(id);
        n.own_grad = Matrix(v.rows, v.cols);
    }
    return n.own_grad;
}

Matrix Tape::grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (n.grad_alias) return *n.grad_alias;
    if (n.own_grad.size() == 0) {
        const Matrix& val = value(v.id);
        return Matrix(val.rows, val.cols);
    }
    return n.own_grad;
}

void Tape::backward(Var loss) {
    require(loss.tape == this, "loss recorded on another tape");
    require(value(loss.id).size() == 1, "backward needs a scalar loss, got " + shape(value(loss.id)));
    if (!nodes_[loss.id].needs_grad) return;
    grad_ref(loss.id).data[0] += 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.back || n.own_grad.size() == 0) continue;
        n.back(id);
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------


namespace ad {

namespace {

Tape& tape_of(Var a, Var b) {
    require(a.tape && a.tape == b.tape, "operands recorded on different tapes");
    return *a.tape;
}

// Elementwise unary op: out = f(x), dx += gy * df(x, y).
template <class F, class D>
Var elementwise(Var a, F f, D df) {
    Tape& t = *a.tape;
    const Matrix& x = a.value();
    Matrix y(x.rows, x.cols);
    for (std::size_t k = 0; k < x.size(); ++k) y.data[k] = f(x.data[k]);
    const std::size_t aid = a.id;
    return t.push(std::move(y), t.needs_grad(aid), [&t, aid, df](std::size_t self) {
        const Matrix& gy = t.grad_ref(self);
        const Matrix& xv = t.value(aid);
        const Matrix& yv = t.value(self);
        Matrix& gx = t.grad_ref(aid);
        for (std::size_t k = 0; k < gy.size(); ++k) gx.data[k] += gy.data[k] * df(xv.data[k], yv.data[k]);
    });
}

}  // namespace

Var matvec(Var W, Var x) {
    require(W.cols() == x.rows(), "matvec: " + shape(W.value()) + " times " + shape(x.value()));
    return matvec_block(W, 0, x);
}

Var matvec_block(Var W, std::size_t offset, Var x) {
    Tape& t = tape_of(W, x);
    const Matrix& w = W.value();
    const Matrix& v = x.value();
    require(v.cols == 1 && offset + v.rows <= w.cols,
            "matvec: " + shape(w) + " block at " + std::to_string(offset) + " times " + shape(v));
    const std::size_t n = v.rows;
    Matrix y(w.rows, 1);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* row = &w.data[i * w.cols + offset];
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += row[k] * v.data[k];
        y.data[i] = s;
    }
    const std::size_t wid = W.id, xid = x.id;
    const bool ng = t.needs_grad(wid) || t.needs_grad(xid);
    return t.push(std::move(y), ng, [&t, wid, xid, offset, n](std::size_t self) {
        const Matrix& gy = t.grad_ref(self);
        const Matrix& w = t.value(wid);
        const Matrix& v = t.value(xid);
        if (t.needs_grad(wid)) {
            Matrix& gw = t.grad_ref(wid);
            for (std::size_t i = 0; i < w.rows; ++i) {
                const double g = gy.data[i];
                if (g == 0.0) continue;
                double* row = &gw.data[i * w.cols + offset];
                for (std::size_t k = 0; k < n; ++k) row[k] += g * v.data[k];
            }
        }
        if (t.needs_grad(xid)) {
            Matrix& gx = t.grad_ref(xid);
            for (std::size_t i = 0; i < w.rows; ++i) {
                const double g = gy.data[i];
                if (g == 0.0) continue;
                const double* row = &w.data[i * w.cols + offset];
                for (std::size_t k = 0; k < n; ++k) gx.data[k] += g * row[k];
            }
        }
    });
}

Var add(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same(a.value(), b.value(), "add");
    Matrix y = a.value();
    for (std::size_t k = 0; k < y.size(); ++k) y.data[k] += b.value().data[k];
    const std::size_t aid = a.id, bid = b.id;
    return t.push(std::move(y), t.needs_grad(aid) || t.needs_grad(bid), [&t, aid, bid](std::size_t self) {
        const Matrix& gy = t.grad_ref(self);
        for (const std::size_t id : {aid, bid}) {
            if (!t.needs_grad(id)) continue;
            Matrix& g = t.grad_ref(id);
            for (std::size_t k = 0; k < gy.size(); ++k) g.data[k] += gy.data[k];
        }
    });
}

Var sub(Var a, Var b) {
    return add(a, neg(b));
}

Var mul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same(a.value(), b.value(), "mul");
    Matrix y = a.value();
    for (std::size_t k = 0; k < y.size(); ++k) y.data[k] *= b.value().data[k];
    const std::size_t aid = a.id, bid = b.id;
    return t.push(std::move(y), t.needs_grad(aid) || t.needs_grad(bid), [&t, aid, bid](std::size_t self) {
        const Matrix& gy = t.grad_ref(self);
        const Matrix& av = t.value(aid);
        const Matrix& bv = t.value(bid);
        if (t.needs_grad(aid)) {
            Matrix& g = t.grad_ref(aid);
            for (std::size_t k = 0; k < gy.size(); ++k) g.data[k] += gy.data[k] * bv.data[k];
        }
        if (t.needs_grad(bid)) {
            Matrix& g = t.grad_ref(bid);
            for (std::size_t k = 0; k < gy.size(); ++k) g.data[k] += gy.data[k] * av.data[k];
        }
    });
}

Var scale(Var a, double s) {
    return elementwise(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var one_minus(Var a) {
    return elementwise(a, [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Var neg(Var a) {
    return scale(a, -1.0);
}

Var sigmoid(Var a) {
    return elementwise(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
    return elementwise(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
    return elementwise(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var square(Var a) {
    return elementwise(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sum(Var a) {
    Tape& t = *a.tape;
    double s = 0.0;
    for (double v : a.value().data) s += v;
    const std::size_t aid = a.id;
    return t.push(Matrix(1, 1, s), t.needs_grad(aid), [&t, aid](std::size_t self) {
        const double g = t.grad_ref(self).data[0];
        for (double& v : t.grad_ref(aid).data) v += g;
    });
}

Var dot(Var a, Var b) {
    return sum(mul(a, b));
}

Var softmax(Var a) {
    Tape& t = *a.tape;
    const Matrix& x = a.value();
    require(x.cols == 1 && x.rows > 0, "softmax needs a column vector, got " + shape(x));
    double mx = x.data[0];
    for (double v : x.data) mx = std::max(mx, v);
    Matrix y(x.rows, 1);
    double z = 0.0;
    for (std::size_t k = 0; k < x.rows; ++k) z += (y.data[k] = std::exp(x.data[k] - mx));
    for (double& v : y.data) v /= z;
    const std::size_t aid = a.id;
    return t.push(std::move(y), t.needs_grad(aid), [&t, aid](std::size_t self) {
        const Matrix& gy = t.grad_ref(self);
        const Matrix& yv = t.value(self);
        double s = 0.0;
        for (std::size_t k = 0; k < gy.size(); ++k) s += gy.data[k] * yv.data[k];
        Matrix& gx = t.grad_ref(aid);
        for (std::size_t k = 0; k < gy.size(); ++k) gx.data[k] += yv.data[k] * (gy.data[k] - s);
    });
}

Var concat(Var a, Var b) {
    Tape& t = tape_of(a, b);
    const Matrix& x = a.value();
    const Matrix& y = b.value();
    require(x.cols == 1 && y.cols == 1, "concat needs column vectors");
    Matrix out(x.rows + y.rows, 1);
    std::copy(x.data.begin(), x.data.end(), out.data.begin());
    std::copy(y.data.begin(), y.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(x.rows));
    const std::size_t aid = a.id, bid = b.id, na = x.rows;
    return t.push(std::move(out), t.needs_grad(aid) || t.needs_grad(bid), [&t, aid, bid, na](std::size_t self) {
        const Matrix& g = t.grad_ref(self);
        if (t.needs_grad(aid)) {
            Matrix& ga = t.grad_ref(aid);
            for (std::size_t k = 0; k < na; ++k) ga.data[k] += g.data[k];
        }
        if (t.needs_grad(bid)) {
            Matrix& gb = t.grad_ref(bid);
            for (std::size_t k = 0; k < gb.size(); ++k) gb.data[k] += g.data[na + k];
        }
    });
}

Var column(Var E, std::size_t k) {
    Tape& t = *E.tape;
    const Matrix& e = E.value();
    require(k < e.cols, "column " + std::to_string(k) + " of " + shape(e));
    Matrix out(e.rows, 1);
    for (std::size_t r = 0; r < e.rows; ++r) out.data[r] = e(r, k);
    const std::size_t eid = E.id;
    return t.push(std::move(out), t.needs_grad(eid), [&t, eid, k](std::size_t self) {
        const Matrix& g = t.grad_ref(self);
        Matrix& ge = t.grad_ref(eid);
        for (std::size_t r = 0; r < g.rows; ++r) ge(r, k) += g.data[r];
    });
}

Var sq_error(Var a, const Matrix& target) {
    Tape& t = *a.tape;
    require_same(a.value(), target, "sq_error");
    double s = 0.0;
    for (std::size_t k = 0; k < target.size(); ++k) {
        const double d = a.value().data[k] - target.data[k];
        s += d * d;
    }
    const std::size_t aid = a.id;
    return t.push(Matrix(1, 1, s), t.needs_grad(aid), [&t, aid, target](std::size_t self) {
        const double g = t.grad_ref(self).data[0];
        const Matrix& av = t.value(aid);
        Matrix& ga = t.grad_ref(aid);
        for (std::size_t k = 0; k < target.size(); ++k) ga.data[k] += g * 2.0 * (av.data[k] - target.data[k]);
    });
}

Var pair_head(Var a, const std::vector<Var>& Bs, Var w2, Var b2) {
    Tape& t = tape_of(a, w2);
    tape_of(a, b2);
    const Matrix& av = a.value();
    const Matrix& wv = w2.value();
    const std::size_t h = av.rows;
    require(av.cols == 1 && wv.rows == 1 && wv.cols == h && b2.value().size() == 1,
            "pair_head: bad shapes " + shape(av) + ", " + shape(wv));
    const std::size_t m = Bs.size();
    auto hidden = std::make_shared<std::vector<double>>(m * h);
    Matrix y(m, 1);
    std::vector<std::size_t> bids(m);
    bool ng = t.needs_grad(a.id) || t.needs_grad(w2.id) || t.needs_grad(b2.id);
    for (std::size_t j = 0; j < m; ++j) {
        tape_of(a, Bs[j]);
        const Matrix& bv = Bs[j].value();
        require(bv.same_shape(av), "pair_head: B shape " + shape(bv));
        bids[j] = Bs[j].id;
        ng = ng || t.needs_grad(bids[j]);
        double s = b2.value().data[0];
        double* hj = &(*hidden)[j * h];
        for (std::size_t k = 0; k < h; ++k) {
            hj[k] = std::tanh(av.data[k] + bv.data[k]);
            s += wv.data[k] * hj[k];
        }
        y.data[j] = 1.0 / (1.0 + std::exp(-s));
    }
    const std::size_t aid = a.id, wid = w2.id, b2id = b2.id;
    return t.push(std::move(y), ng, [&t, aid, wid, b2id, bids, hidden, h](std::size_t self) {
        const Matrix& gy = t.grad_ref(self);
        const Matrix& yv = t.value(self);
        const Matrix& wv = t.value(wid);
        std::vector<double> dpre(h);
        for (std::size_t j = 0; j < bids.size(); ++j) {
            const double gs = gy.data[j] * yv.data[j] * (1.0 - yv.data[j]);
            if (gs == 0.0) continue;
            const double* hj = &(*hidden)[j * h];
            if (t.needs_grad(wid)) {
                Matrix& gw = t.grad_ref(wid);
                for (std::size_t k = 0; k < h; ++k) gw.data[k] += gs * hj[k];
            }
            if (t.needs_grad(b2id)) t.grad_ref(b2id).data[0] += gs;
            for (std::size_t k = 0; k < h; ++k) dpre[k] = gs * wv.data[k] * (1.0 - hj[k] * hj[k]);
            if (t.needs_grad(aid)) {
                Matrix& ga = t.grad_ref(aid);
                for (std::size_t k = 0; k < h; ++k) ga.data[k] += dpre[k];
            }
            if (t.needs_grad(bids[j])) {
                Matrix& gb = t.grad_ref(bids[j]);
                for (std::size_t k = 0; k < h; ++k) gb.data[k] += dpre[k];
            }
        }
    });
}

Var weighted_sum(const std::vector<Var>& xs, const std::vector<double>& w) {
    require(!xs.empty() && xs.size() == w.size(), "weighted_sum: bad arguments");
    Tape& t = *xs[0].tape;
    double s = 0.0;
    bool ng = false;
    std::vector<std::size_t> ids;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        tape_of(xs[0], xs[k]);
        s += w[k] * xs[k].scalar();
        ids.push_back(xs[k].id);
        ng = ng || t.needs_grad(xs[k].id);
    }
    return t.push(Matrix(1, 1, s), ng, [&t, ids, w](std::size_t self) {
        const double g = t.grad_ref(self).data[0];
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (t.needs_grad(ids[k])) t.grad_ref(ids[k]).data[0] += g * w[k];
        }
    });
}

}  // namespace ad

}  // namespace ipcamo
