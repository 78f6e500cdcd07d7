#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ipcamo/matrix.hpp"

namespace ipcamo {

class AutodiffError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;
    std::size_t fan_in = 1;  // for initialization bounds
};

// Owns parameters at stable addresses, in insertion order.
class ParamStore {
public:
    Parameter& add(const std::string& name, std::size_t rows, std::size_t cols, std::size_t fan_in);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t size() const { return params_.size(); }
    Parameter& at(std::size_t k) { return *params_[k]; }
    const Parameter& at(std::size_t k) const { return *params_[k]; }
    std::size_t scalar_count() const;

    // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], drawn in insertion order.
    void init_uniform(std::uint64_t seed);
    void zero_grad();

    std::vector<Matrix> snapshot() const;
    void restore(const std::vector<Matrix>& values);

    // FNV-1a over names, shapes and raw value bytes.
    std::uint64_t checksum() const;

private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct Checkpoint {
    std::string metadata;  // JSON text
    std::vector<std::pair<std::string, Matrix>> tensors;
};

// Binary layout: magic "IPCAMOCK", u32 version, u64 header length, header
// JSON {metadata, tensors:[{name,rows,cols}]}, then float64 values in order.
void save_checkpoint(const std::string& path, const ParamStore& store, const std::string& metadata_json);
Checkpoint read_checkpoint(const std::string& path);
// Copies every tensor into the store; names and shapes must match exactly.
void apply_checkpoint(const Checkpoint& ck, ParamStore& store);

class Tape;

struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Matrix& value() const;
    std::size_t rows() const { return value().rows; }
    std::size_t cols() const { return value().cols; }
    double scalar() const;
};

// Reverse-mode recording.  Values are owned by the tape except parameter
// leaves, which alias the parameter and accumulate into Parameter::grad.
class Tape {
public:
    // A tape without gradient recording evaluates forward values only.
    explicit Tape(bool record_grad = true) : record_grad_(record_grad) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix m);
    Var leaf(Matrix m);  // differentiable input with its own gradient
    Var param(Parameter& p);

    const Matrix& value(std::size_t id) const;
    // Gradient of a leaf after backward(); zeros if it was never reached.
    Matrix grad(Var v) const;
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

    // Throws AutodiffError unless `loss` is 1 x 1.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

    // `back` receives the id of the pushed node.
    Var push(Matrix value, bool needs_grad, std::function<void(std::size_t)> back);
    Matrix& grad_ref(std::size_t id);

private:
    struct Node {
        Matrix own;
        const Matrix* alias = nullptr;
        Matrix own_grad;
        Matrix* grad_alias = nullptr;
        bool needs_grad = false;
        std::function<void(std::size_t)> back;
    };
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> param_ids_;
    bool record_grad_ = true;
};

namespace ad {

Var matvec(Var W, Var x);
// W restricted to columns [offset, offset + rows(x)).
Var matvec_block(Var W, std::size_t offset, Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var one_minus(Var a);
Var neg(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var square(Var a);
Var sum(Var a);
Var dot(Var a, Var b);
Var softmax(Var a);
Var concat(Var a, Var b);
Var column(Var E, std::size_t k);
// sum_k (a_k - target_k)^2 as a 1 x 1 value.
Var sq_error(Var a, const Matrix& target);
// For each column vector B_j: sigmoid(w2 . tanh(a + B_j) + b2), stacked into
// an m x 1 vector.  w2 is 1 x h, b2 is 1 x 1.
Var pair_head(Var a, const std::vector<Var>& Bs, Var w2, Var b2);
// Sum of several 1 x 1 values with weights.
Var weighted_sum(const std::vector<Var>& xs, const std::vector<double>& w);

}  // namespace ad

}  // namespace ipcamo
