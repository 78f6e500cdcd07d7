#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ipcamo/aig.hpp"
#include "ipcamo/autodiff.hpp"
#include "ipcamo/nn.hpp"
#include "ipcamo/tensors.hpp"

namespace ipcamo {

struct VaeConfig {
    std::size_t hidden = 512;
    std::size_t latent = 512;
    std::size_t mlp_hidden = 512;
    std::size_t pi_cap = kDefaultMaxNodes;  // PI one-hot width

    std::string to_json() const;
    static VaeConfig from_json(const std::string& text);
};

struct LossWeights {
    double alpha = 0.3;  // type
    double beta = 0.3;   // connection
    double gamma = 0.3;  // inverter
    double delta = 0.1;  // KL
};

struct LatentCode {
    Matrix mu;
    Matrix sigma;
    Matrix z;  // equals mu for codes produced by encode()
};

enum class SampleMode { Train, Eval };

// Train: mu + sigma * eps with eps ~ N(0, 1) from `rng`.  Eval: mu exactly.
Matrix sample_latent(const LatentCode& code, SampleMode mode, std::mt19937_64& rng);

struct LossParts {
    double type = 0;
    double conn = 0;
    double inv = 0;
    double kl = 0;
    double total = 0;
};

// Value-level loss.  Type MSE is divided by 3N, connection and inverter MSE
// by N^2, KL = 1/2 sum(sigma^2 + mu^2 - log sigma^2 - 1).
LossParts vae_loss(const TensorTriple& x, const TensorTriple& xhat, const Matrix& mu, const Matrix& sigma,
                   const LossWeights& w = {});

class AigVae {
public:
    AigVae(const VaeConfig& cfg, std::uint64_t seed);
    AigVae(AigVae&&) = default;

    const VaeConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    std::uint64_t checksum() const { return store_.checksum(); }

    struct Encoded {
        Var mu;
        Var logvar;  // sigma = exp(logvar / 2)
    };
    struct Decoded {
        std::vector<Var> type;  // 3 x 1 per node
        std::vector<Var> conn;  // i x 1 per node i (sources j < i)
        std::vector<Var> inv;
    };

    // Requires a canonical graph with exactly one PO.  Nodes are visited in
    // index order, which is topological.
    Encoded encode(Tape& t, const AigGraph& g);
    Decoded decode(Tape& t, Var z, std::size_t n);
    // Message into node v: sum of fanin embeddings, negated on inverted edges.
    static Var aggregate(Tape& t, const Node& node, const std::vector<Var>& h, std::size_t hidden);

    LatentCode encode(const AigGraph& g) const;
    TensorTriple decode(const Matrix& z, std::size_t n) const;
    AigGraph reconstruct(const AigGraph& g, double th) const;

    void save(const std::string& path, const std::string& extra_metadata_json = "{}") const;
    static AigVae load(const std::string& path);

private:
    VaeConfig cfg_;
    ParamStore store_;
    GruParams enc_gru_, dec_gru_;
    Parameter* pi_embed_ = nullptr;
    MlpParams mlp_mu_, mlp_logvar_, mlp_add_, mlp_conn_, mlp_inv_;
    Parameter* init_W_ = nullptr;
    Parameter* init_b_ = nullptr;
};

// Tape loss for one graph; used by training and gradient checks.
struct TapeLoss {
    Var total;
    Var type, conn, inv, kl;
};
TapeLoss vae_loss(Tape& t, const TensorTriple& x, const AigVae::Decoded& xhat, const AigVae::Encoded& code,
                  const LossWeights& w);

// Full forward pass for one graph with reparameterized sampling (eps from
// rng) or z = mu when rng is null.
TapeLoss vae_forward(Tape& t, AigVae& model, const AigGraph& g, const LossWeights& w, std::mt19937_64* rng);

struct TrainConfig {
    std::size_t epochs = 100;
    double lr = 1e-4;
    std::size_t patience = 10;
    std::uint64_t seed = 0;
    LossWeights weights;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0;
    double val_loss = 0;
    LossParts train_parts;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_loss = 0;
    bool early_stopped = false;
};

// Batch size 1, Adam, per-epoch seeded shuffle.  Stops once the validation
// loss has failed to improve for more than `patience` consecutive epochs and
// leaves the best-validation parameters in the model.  With an empty
// validation set the training loss is monitored instead.
TrainResult train_vae(AigVae& model, const std::vector<AigGraph>& train, const std::vector<AigGraph>& val,
                      const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {});

std::string history_csv(const TrainResult& r);

// Mean fraction of equal entries between to_tensors(g) and the thresholded
// reconstruction, over all graphs.
double reconstruction_agreement(const AigVae& model, const std::vector<AigGraph>& graphs, double th);

}  // namespace ipcamo
