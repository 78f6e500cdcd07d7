#include "ipcamo/nn.hpp"

#include <cmath>

namespace ipcamo {

GruParams GruParams::create(ParamStore& store, const std::string& prefix, std::size_t hidden, std::size_t cond) {
    GruParams p;
    // Gate pre-activations sum two products, so fan-in is hidden + cond.
    const std::size_t fan = hidden + cond;
    const auto gate = [&](const char* g, Parameter*& W, Parameter*& U, Parameter*& b) {
        W = &store.add(prefix + ".W" + g, hidden, hidden, fan);
        U = &store.add(prefix + ".U" + g, hidden, cond, fan);
        b = &store.add(prefix + ".b" + g, hidden, 1, fan);
    };
    gate("z", p.Wz, p.Uz, p.bz);
    gate("r", p.Wr, p.Ur, p.br);
    gate("h", p.Wh, p.Uh, p.bh);
    return p;
}

Var gru_step(Tape& t, const GruParams& p, Var m, Var cond, Var h_prev) {
    if (m.rows() != p.hidden() || h_prev.rows() != p.hidden() || cond.rows() != p.cond()) {
        throw AutodiffError("gru_step: dimension mismatch (m " + std::to_string(m.rows()) + ", cond " +
                            std::to_string(cond.rows()) + ", h " + std::to_string(h_prev.rows()) + ")");
    }
    using namespace ad;
    const auto gate = [&](Parameter* W, Parameter* U, Parameter* b, Var in) {
        return add(add(matvec(t.param(*W), in), matvec(t.param(*U), cond)), t.param(*b));
    };
    const Var z = sigmoid(gate(p.Wz, p.Uz, p.bz, m));
    const Var r = sigmoid(gate(p.Wr, p.Ur, p.br, m));
    const Var c = tanh(gate(p.Wh, p.Uh, p.bh, mul(r, h_prev)));
    return add(mul(one_minus(z), h_prev), mul(z, c));
}

MlpParams MlpParams::create(ParamStore& store, const std::string& prefix, const std::vector<std::size_t>& dims,
                            Activation hidden_act, Activation out_act) {
    if (dims.size() < 2) throw AutodiffError("mlp needs at least input and output dims");
    MlpParams p;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        MlpLayer layer;
        const std::string tag = prefix + "." + std::to_string(l);
        layer.W = &store.add(tag + ".W", dims[l + 1], dims[l], dims[l]);
        layer.b = &store.add(tag + ".b", dims[l + 1], 1, dims[l]);
        layer.act = l + 2 == dims.size() ? out_act : hidden_act;
        p.layers.push_back(layer);
    }
    return p;
}

Var activate(Var x, Activation a) {
    switch (a) {
    case Activation::Identity: return x;
    case Activation::Tanh: return ad::tanh(x);
    case Activation::Sigmoid: return ad::sigmoid(x);
    case Activation::Softmax: return ad::softmax(x);
    }
    return x;
}

Var mlp_forward(Tape& t, const MlpParams& p, Var x) {
    if (x.rows() != p.in_dim()) {
        throw AutodiffError("mlp_forward: input " + std::to_string(x.rows()) + ", expected " +
                            std::to_string(p.in_dim()));
    }
    for (const MlpLayer& layer : p.layers) {
        x = activate(ad::add(ad::matvec(t.param(*layer.W), x), t.param(*layer.b)), layer.act);
    }
    return x;
}

void Adam::step(ParamStore& store) {
    if (m_.empty()) {
        for (std::size_t k = 0; k < store.size(); ++k) {
            const Matrix& v = store.at(k).value;
            m_.emplace_back(v.rows, v.cols);
            v_.emplace_back(v.rows, v.cols);
        }
    }
    if (m_.size() != store.size()) throw AutodiffError("adam: parameter count changed");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < store.size(); ++k) {
        Parameter& p = store.at(k);
        if (!p.grad.same_shape(p.value) || !m_[k].same_shape(p.value)) {
            throw AutodiffError("adam: shape mismatch for " + p.name);
        }
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad.data[i];
            double& m = m_[k].data[i];
            double& v = v_[k].data[i];
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
            p.value.data[i] -= cfg_.lr * (m / c1) / (std::sqrt(v / c2) + cfg_.eps);
        }
    }
}

}  // namespace ipcamo
