#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "fd_check.hpp"
#include "ipcamo/autodiff.hpp"
#include "ipcamo/nn.hpp"

using namespace ipcamo;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(r, c);
    for (double& v : m.data) v = u(rng);
    return m;
}

// Checks d/dx of sum(w * op(x...)) for leaf inputs against central differences.
void check_op(const std::vector<Matrix>& inputs, const std::function<Var(Tape&, const std::vector<Var>&)>& op,
              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto eval = [&](const std::vector<Matrix>& xs, std::vector<Matrix>* grads) {
        Tape t;
        std::vector<Var> vs;
        for (const Matrix& m : xs) vs.push_back(t.leaf(m));
        const Var y = op(t, vs);
        std::mt19937_64 wr(seed + 1);
        const Matrix w = random_matrix(wr, y.rows(), y.cols());
        const Var loss = ad::sum(ad::mul(y, t.constant(w)));
        if (grads) {
            t.backward(loss);
            for (const Var& v : vs) grads->push_back(t.grad(v));
        }
        return loss.scalar();
    };
    std::vector<Matrix> grads;
    eval(inputs, &grads);
    const double eps = 1e-6;
    for (std::size_t a = 0; a < inputs.size(); ++a) {
        for (std::size_t k = 0; k < inputs[a].size(); ++k) {
            auto up = inputs, down = inputs;
            up[a].data[k] += eps;
            down[a].data[k] -= eps;
            const double num = (eval(up, nullptr) - eval(down, nullptr)) / (2 * eps);
            CHECK(testutil::fd_close(grads[a].data[k], num));
        }
    }
}

}  // namespace

TEST_CASE("autodiff: scalar derivatives") {
    Tape t;
    const Var x = t.leaf(Matrix(1, 1, 3.0));
    t.backward(ad::mul(x, x));
    CHECK(t.grad(x).data[0] == doctest::Approx(6.0).epsilon(1e-15));

    Tape s;
    const Var y = s.leaf(Matrix(1, 1, 0.0));
    s.backward(ad::sigmoid(y));
    CHECK(s.grad(y).data[0] == doctest::Approx(0.25).epsilon(1e-15));

    Tape u;
    const Var v = u.leaf(Matrix(2, 1, 1.0));
    CHECK_THROWS_AS(u.backward(v), AutodiffError);
}

TEST_CASE("autodiff: every op passes finite differences") {
    std::mt19937_64 rng(99);
    const auto vec = [&](std::size_t n) { return random_matrix(rng, n, 1); };
    const Matrix W = random_matrix(rng, 4, 6);
    check_op({W, vec(6)}, [](Tape&, const std::vector<Var>& v) { return ad::matvec(v[0], v[1]); }, 1);
    check_op({W, vec(3)}, [](Tape&, const std::vector<Var>& v) { return ad::matvec_block(v[0], 2, v[1]); }, 2);
    check_op({vec(5), vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::add(v[0], v[1]); }, 3);
    check_op({vec(5), vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::sub(v[0], v[1]); }, 4);
    check_op({vec(5), vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::mul(v[0], v[1]); }, 5);
    check_op({vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::scale(v[0], -2.5); }, 6);
    check_op({vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::one_minus(v[0]); }, 7);
    check_op({vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::sigmoid(v[0]); }, 8);
    check_op({vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::tanh(v[0]); }, 9);
    check_op({vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::exp(v[0]); }, 10);
    check_op({vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::square(v[0]); }, 11);
    check_op({vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::sum(v[0]); }, 12);
    check_op({vec(5), vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::dot(v[0], v[1]); }, 13);
    check_op({vec(5)}, [](Tape&, const std::vector<Var>& v) { return ad::softmax(v[0]); }, 14);
    check_op({vec(2), vec(3)}, [](Tape&, const std::vector<Var>& v) { return ad::concat(v[0], v[1]); }, 15);
    check_op({W}, [](Tape&, const std::vector<Var>& v) { return ad::column(v[0], 4); }, 16);
    const Matrix target = vec(5);
    check_op({vec(5)}, [&](Tape&, const std::vector<Var>& v) { return ad::sq_error(v[0], target); }, 17);
    check_op({vec(4), vec(4), vec(4), random_matrix(rng, 1, 4), Matrix(1, 1, 0.3)},
             [](Tape&, const std::vector<Var>& v) { return ad::pair_head(v[0], {v[1], v[2]}, v[3], v[4]); }, 18);
    check_op({Matrix(1, 1, 0.7), Matrix(1, 1, -1.2)},
             [](Tape&, const std::vector<Var>& v) { return ad::weighted_sum({v[0], v[1]}, {0.3, -2.0}); }, 19);
}

TEST_CASE("autodiff: shape errors") {
    Tape t;
    const Var a = t.leaf(Matrix(3, 1));
    const Var b = t.leaf(Matrix(4, 1));
    CHECK_THROWS_AS(ad::add(a, b), AutodiffError);
    CHECK_THROWS_AS(ad::matvec(t.leaf(Matrix(2, 2)), a), AutodiffError);
}

TEST_CASE("GRU: zero parameters halve the previous state") {
    ParamStore store;
    const GruParams p = GruParams::create(store, "g", 4, 3);
    Tape t;
    const Matrix h = Matrix::column({1.0, -2.0, 0.5, 3.0});
    const Var out = gru_step(t, p, t.constant(Matrix::column({0.3, 0.1, -0.4, 2.0})),
                             t.constant(Matrix::column({1, 0, 0})), t.constant(h));
    REQUIRE(out.rows() == 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(out.value().data[k] == 0.5 * h.data[k]);

    Tape z;
    const Var zero = gru_step(z, p, z.constant(Matrix(4, 1)), z.constant(Matrix(3, 1)), z.constant(Matrix(4, 1)));
    for (double v : zero.value().data) CHECK(v == 0.0);

    Tape bad;
    CHECK_THROWS_AS(gru_step(bad, p, bad.constant(Matrix(5, 1)), bad.constant(Matrix(3, 1)), bad.constant(Matrix(4, 1))),
                    AutodiffError);
}

TEST_CASE("GRU: parameter gradients match finite differences (8-dim)") {
    ParamStore store;
    const GruParams p = GruParams::create(store, "g", 8, 3);
    store.init_uniform(5);
    std::mt19937_64 rng(6);
    const Matrix m = random_matrix(rng, 8, 1), c = random_matrix(rng, 3, 1), h = random_matrix(rng, 8, 1);
    const auto forward = [&](Tape& t) {
        return ad::sum(gru_step(t, p, t.constant(m), t.constant(c), t.constant(h)));
    };
    const auto rep = testutil::fd_check_params(
        store,
        [&] {
            Tape t(false);
            return forward(t).scalar();
        },
        [&] {
            Tape t;
            t.backward(forward(t));
        });
    CHECK(rep.checked == store.scalar_count());
    CHECK_MESSAGE(rep.failed == 0, rep.worst);
}

TEST_CASE("MLP: identity, simplex and gradients") {
    ParamStore store;
    MlpParams id = MlpParams::create(store, "id", {3, 3}, Activation::Identity, Activation::Identity);
    for (std::size_t k = 0; k < 3; ++k) id.layers[0].W->value(k, k) = 1.0;
    Tape t;
    const Matrix x = Matrix::column({0.1, -4.0, 2.5});
    CHECK(mlp_forward(t, id, t.constant(x)).value() == x);

    MlpParams soft = MlpParams::create(store, "soft", {8, 8, 3}, Activation::Tanh, Activation::Softmax);
    MlpParams sig = MlpParams::create(store, "sig", {8, 8, 1}, Activation::Tanh, Activation::Sigmoid);
    store.init_uniform(3);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix in = random_matrix(rng, 8, 1, 5.0);
        Tape s;
        const Var y = mlp_forward(s, soft, s.constant(in));
        double total = 0.0;
        for (double v : y.value().data) {
            CHECK(v > 0.0);
            total += v;
        }
        CHECK(std::abs(total - 1.0) <= 1e-9);
        const double q = mlp_forward(s, sig, s.constant(in)).scalar();
        CHECK(q > 0.0);
        CHECK(q < 1.0);
    }

    const Matrix in = random_matrix(rng, 8, 1);
    const Matrix w = Matrix::column({0.2, -1.0, 0.7});
    const auto forward = [&](Tape& tp) {
        return ad::add(ad::dot(mlp_forward(tp, soft, tp.constant(in)), tp.constant(w)),
                       ad::sum(mlp_forward(tp, sig, tp.constant(in))));
    };
    const auto rep = testutil::fd_check_params(
        store,
        [&] {
            Tape tp(false);
            return forward(tp).scalar();
        },
        [&] {
            Tape tp;
            tp.backward(forward(tp));
        });
    CHECK_MESSAGE(rep.failed == 0, rep.worst);

    Tape e;
    CHECK_THROWS_AS(mlp_forward(e, soft, e.constant(Matrix(7, 1))), AutodiffError);
}

TEST_CASE("Adam: first step, zero gradient and a two-step trace") {
    ParamStore store;
    Parameter& p = store.add("p", 1, 1, 1);
    p.value.data[0] = 1.0;
    p.grad.data[0] = 1.0;
    Adam first(AdamConfig{1e-4});
    first.step(store);
    CHECK(std::abs((1.0 - p.value.data[0]) - 1e-4) < 1e-10);

    // zero gradient: parameter unchanged, moments decay
    p.grad.data[0] = 0.0;
    const double m_before = first.first_moment()[0].data[0];
    const double v_before = first.second_moment()[0].data[0];
    const double before = p.value.data[0];
    first.step(store);
    CHECK(first.first_moment()[0].data[0] == doctest::Approx(0.9 * m_before));
    CHECK(first.second_moment()[0].data[0] == doctest::Approx(0.999 * v_before));
    CHECK(p.value.data[0] != before);  // bias-corrected momentum still moves it
    CHECK(first.steps() == 2);

    ParamStore zs;
    Parameter& q = zs.add("q", 2, 1, 1);
    q.value.data = {0.25, -3.0};
    Adam zero(AdamConfig{0.1});
    zero.step(zs);
    CHECK(q.value.data[0] == 0.25);
    CHECK(q.value.data[1] == -3.0);

    // Hand trace: lr 0.1, g = 1 then g = 0.5 from p = 1.
    // step 1: m = 0.1, v = 0.001, m^ = 1, v^ = 1      -> p = 1 - 0.1/(1 + 1e-8)
    // step 2: m = 0.14, v = 0.001249, m^ = 0.14/0.19, v^ = 0.001249/0.001999
    ParamStore hs;
    Parameter& h = hs.add("h", 1, 1, 1);
    h.value.data[0] = 1.0;
    Adam trace(AdamConfig{0.1});
    h.grad.data[0] = 1.0;
    trace.step(hs);
    CHECK(h.value.data[0] == doctest::Approx(0.900000001).epsilon(1e-14));
    h.grad.data[0] = 0.5;
    trace.step(hs);
    CHECK(trace.first_moment()[0].data[0] == doctest::Approx(0.14).epsilon(1e-14));
    CHECK(trace.second_moment()[0].data[0] == doctest::Approx(0.001249).epsilon(1e-14));
    CHECK(h.value.data[0] == doctest::Approx(0.806782038298161).epsilon(1e-13));
}

TEST_CASE("Adam is bitwise deterministic") {
    const auto run = [] {
        ParamStore s;
        MlpParams m = MlpParams::create(s, "m", {4, 5, 2}, Activation::Tanh, Activation::Identity);
        s.init_uniform(8);
        Adam adam(AdamConfig{1e-3});
        for (int step = 0; step < 5; ++step) {
            Tape t;
            t.backward(ad::sum(ad::square(mlp_forward(t, m, t.constant(Matrix::column({1, 2, 3, 4}))))));
            adam.step(s);
            s.zero_grad();
        }
        return s.snapshot();
    };
    CHECK(run() == run());
}

TEST_CASE("checkpoint roundtrip is bit-exact") {
    ParamStore s;
    MlpParams::create(s, "a", {3, 4, 2}, Activation::Tanh, Activation::Identity);
    s.init_uniform(12);
    s.at(0).value.data[0] = 1.0 / 3.0;
    const std::string path = "ckpt_roundtrip.bin";
    save_checkpoint(path, s, R"({"note":"x"})");
    const Checkpoint ck = read_checkpoint(path);
    CHECK(ck.metadata == R"({"note":"x"})");
    ParamStore t;
    MlpParams::create(t, "a", {3, 4, 2}, Activation::Tanh, Activation::Identity);
    apply_checkpoint(ck, t);
    CHECK(t.snapshot() == s.snapshot());
    CHECK(t.checksum() == s.checksum());

    ParamStore wrong;
    MlpParams::create(wrong, "a", {3, 5, 2}, Activation::Tanh, Activation::Identity);
    CHECK_THROWS_AS(apply_checkpoint(ck, wrong), AutodiffError);
    std::remove(path.c_str());
}
