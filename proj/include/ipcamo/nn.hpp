#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipcamo/autodiff.hpp"

namespace ipcamo {

// z = sig(Wz m + Uz t + bz), r = sig(Wr m + Ur t + br),
// c = tanh(Wh (r * h_prev) + Uh t + bh), h = (1 - z) * h_prev + z * c.
struct GruParams {
    Parameter* Wz = nullptr;
    Parameter* Uz = nullptr;
    Parameter* bz = nullptr;
    Parameter* Wr = nullptr;
    Parameter* Ur = nullptr;
    Parameter* br = nullptr;
    Parameter* Wh = nullptr;
    Parameter* Uh = nullptr;
    Parameter* bh = nullptr;

    std::size_t hidden() const { return Wz->value.rows; }
    std::size_t cond() const { return Uz->value.cols; }

    static GruParams create(ParamStore& store, const std::string& prefix, std::size_t hidden, std::size_t cond);
};

Var gru_step(Tape& t, const GruParams& p, Var m, Var cond, Var h_prev);

enum class Activation { Identity, Tanh, Sigmoid, Softmax };

struct MlpLayer {
    Parameter* W = nullptr;
    Parameter* b = nullptr;
    Activation act = Activation::Identity;
};

struct MlpParams {
    std::vector<MlpLayer> layers;

    std::size_t in_dim() const { return layers.front().W->value.cols; }
    std::size_t out_dim() const { return layers.back().W->value.rows; }

    // dims = {in, hidden..., out}; hidden layers use `hidden_act`.
    static MlpParams create(ParamStore& store, const std::string& prefix, const std::vector<std::size_t>& dims,
                            Activation hidden_act, Activation out_act);
};

Var activate(Var x, Activation a);
Var mlp_forward(Tape& t, const MlpParams& p, Var x);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over every parameter of a store, in store order.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(ParamStore& store);
    std::uint64_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }
    const std::vector<Matrix>& first_moment() const { return m_; }
    const std::vector<Matrix>& second_moment() const { return v_; }

private:
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<Matrix> m_, v_;
};

}  // namespace ipcamo
