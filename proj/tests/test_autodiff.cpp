#include <catch2/catch.hpp>

#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "gswe/autodiff.hpp"
#include "gswe/rng.hpp"
#include "testutil.hpp"

using gswe::Gradients;
using gswe::Tape;
using gswe::Tensor;
using gswe::Var;

TEST_CASE("elementwise add records the expected forward value", "[autodiff]") {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2}));
  Var y = t.leaf(Tensor::vector({3, 4}));
  Var z = t.add(x, y);
  CHECK(t.value(z)[0] == 4.0);
  CHECK(t.value(z)[1] == 6.0);
}

TEST_CASE("gather applies a permutation", "[autodiff]") {
  Tape t;
  Var x = t.leaf(Tensor::vector({5, 1, 3}));
  Var g = t.gather(x, {1, 2, 0});
  CHECK(t.value(g).data() == std::vector<double>{1, 3, 5});
}

TEST_CASE("matmul against the identity returns the other factor",
          "[autodiff]") {
  Tape t;
  Var eye = t.leaf(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  Var b = t.leaf(Tensor::matrix(2, 2, {2.5, -1, 0.25, 7}));
  Var c = t.matmul(eye, b);
  CHECK(t.value(c).data() == t.value(b).data());
}

TEST_CASE("shape mismatch reports both shapes", "[autodiff]") {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2}));
  Var y = t.leaf(Tensor::vector({1, 2, 3}));
  CHECK_THROWS_WITH(t.add(x, y),
                    Catch::Matchers::Contains("[2]") &&
                        Catch::Matchers::Contains("[3]"));
}

TEST_CASE("non-finite data is rejected at construction", "[autodiff]") {
  CHECK_THROWS_AS(Tensor::vector({1.0, std::nan("")}), gswe::numerical_error);
  CHECK_THROWS_AS(Tensor::vector({std::numeric_limits<double>::infinity()}),
                  gswe::numerical_error);
  Tape t;
  Var zero = t.leaf(Tensor::vector({0.0}));
  Var one = t.leaf(Tensor::vector({1.0}));
  CHECK_THROWS_AS(t.div(one, zero), gswe::numerical_error);
  CHECK_THROWS_AS(t.log(zero), gswe::numerical_error);
}

TEST_CASE("backward of sum is a vector of ones", "[autodiff]") {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2, 3}));
  Gradients g = t.backward(t.sum(x));
  CHECK(g.grad(x).data() == std::vector<double>{1, 1, 1});
}

TEST_CASE("backward of a product follows the product rule", "[autodiff]") {
  Tape t;
  Var x = t.leaf(Tensor::scalar(2));
  Var y = t.leaf(Tensor::scalar(3));
  Gradients g = t.backward(t.mul(x, y));
  CHECK(g.grad(x)[0] == 3.0);
  CHECK(g.grad(y)[0] == 2.0);
}

TEST_CASE("backward of mean(relu(x)) matches finite differences",
          "[autodiff]") {
  auto f = [](const std::vector<Tensor>& in) {
    Tape t;
    Var x = t.leaf(in[0]);
    return t.value(t.mean(t.relu(x)))[0];
  };
  std::vector<Tensor> inputs = {Tensor::vector({-1, 2})};
  Tape t;
  Var x = t.leaf(inputs[0]);
  Gradients g = t.backward(t.mean(t.relu(x)));
  const Tensor gx = g.grad(x);
  CHECK(gx[0] == 0.0);
  CHECK(gx[1] == Approx(0.5));
  CHECK(testutil::max_grad_rel_err(f, inputs, 0, gx) < 1e-5);
}

TEST_CASE("backward rejects non-scalar roots", "[autodiff]") {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(t.backward(x), std::invalid_argument);
}

TEST_CASE("leaves unreachable from the root get zero gradient", "[autodiff]") {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2}));
  Var y = t.leaf(Tensor::vector({4, 5, 6}));
  Gradients g = t.backward(t.sum(x));
  CHECK(g.grad(y).data() == std::vector<double>{0, 0, 0});
}

TEST_CASE("stop_gradient is the identity forward", "[autodiff]") {
  Tape t;
  Var x = t.leaf(Tensor::vector({1, 2}));
  CHECK(t.value(t.stop_gradient(x)).data() == std::vector<double>{1, 2});
}

TEST_CASE("stop_gradient detaches one factor of x*sg(x)", "[autodiff]") {
  Tape t;
  Var x = t.leaf(Tensor::scalar(3));
  Gradients g = t.backward(t.mul(x, t.stop_gradient(x)));
  CHECK(g.grad(x)[0] == 3.0);
}

TEST_CASE("stop_gradient blocks the full path", "[autodiff]") {
  Tape t;
  Var x = t.leaf(Tensor::scalar(3));
  Gradients g = t.backward(t.sum(t.stop_gradient(x)));
  CHECK(g.grad(x)[0] == 0.0);
}

TEST_CASE("gather backward scatters cotangents through the inverse "
          "permutation",
          "[autodiff]") {
  gswe::Rng rng(7);
  const std::size_t n = 9;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.below(i + 1)]);
  }
  Tape t;
  Var x = t.leaf(testutil::random_tensor({n}, rng));
  Var weights = t.leaf(testutil::random_tensor({n}, rng));
  Var g = t.gather(x, perm);
  Gradients grads = t.backward(t.sum(t.mul(g, weights)));
  const Tensor gx = grads.grad(x);
  const Tensor w = t.value(weights);
  // Cotangent w lands at source position perm[i].
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(gx[perm[i]] == w[i]);
  }
}

namespace {

// One scalar graph touching a single primitive, used for the sweep below.
struct PrimitiveCase {
  const char* name;
  std::vector<std::vector<std::size_t>> shapes;
  double lo, hi;
  std::function<Var(Tape&, const std::vector<Var>&)> build;
};

double eval_case(const PrimitiveCase& pc, const std::vector<Tensor>& in) {
  Tape t;
  std::vector<Var> vars;
  for (const auto& x : in) vars.push_back(t.leaf(x));
  return t.value(pc.build(t, vars))[0];
}

}  // namespace

TEST_CASE("every primitive's gradient matches central finite differences",
          "[autodiff][property]") {
  gswe::Rng rng(20240817);
  // A fixed random cotangent turns each primitive output into a scalar.
  auto weighted = [](Tape& t, Var y, std::uint64_t seed) {
    gswe::Rng wr(seed);
    Tensor w(t.value(y).shape());
    for (auto& v : w.data()) v = wr.uniform(-1.0, 1.0);
    return t.sum(t.mul(y, t.leaf(w)));
  };
  const std::vector<PrimitiveCase> cases = {
      {"add", {{4}, {4}}, -2, 2,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.add(v[0], v[1]), 1);
       }},
      {"mul", {{4}, {4}}, -2, 2,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.mul(v[0], v[1]), 2);
       }},
      {"div", {{4}, {4}}, 0.5, 2.5,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.div(v[0], v[1]), 3);
       }},
      {"neg", {{5}}, -2, 2,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.neg(v[0]), 4);
       }},
      {"matmul", {{3, 4}, {4, 2}}, -2, 2,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.matmul(v[0], v[1]), 5);
       }},
      {"relu", {{6}}, -2, 2,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.relu(v[0]), 6);
       }},
      {"exp", {{5}}, -2, 2,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.exp(v[0]), 7);
       }},
      {"log", {{5}}, 0.5, 2.5,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.log(v[0]), 8);
       }},
      {"power", {{5}}, 0.5, 2.5,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.power(v[0], 1.7), 9);
       }},
      {"sum", {{7}}, -2, 2,
       [&](Tape& t, const std::vector<Var>& v) { return t.sum(v[0]); }},
      {"mean", {{7}}, -2, 2,
       [&](Tape& t, const std::vector<Var>& v) { return t.mean(v[0]); }},
      {"gather", {{6}}, -2, 2,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.gather(v[0], {5, 0, 3, 3, 1}), 10);
       }},
      {"concat", {{3}, {4}}, -2, 2,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.concat({v[0], v[1]}), 11);
       }},
      {"broadcast", {{3}}, -2, 2,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.broadcast(v[0], {4, 3}), 12);
       }},
      {"division chain", {{4}, {4}}, 0.5, 2.5,
       [&](Tape& t, const std::vector<Var>& v) {
         return weighted(t, t.div(t.exp(v[0]), t.add(v[0], v[1])), 13);
       }},
  };
  for (const auto& pc : cases) {
    INFO("primitive: " << pc.name);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<Tensor> inputs;
      for (const auto& sh : pc.shapes) {
        Tensor x(sh);
        for (auto& v : x.data()) {
          v = rng.uniform(pc.lo, pc.hi);
          // Keep relu inputs away from its kink.
          if (std::string(pc.name) == "relu" && std::abs(v) < 0.05) v += 0.1;
        }
        inputs.push_back(std::move(x));
      }
      Tape t;
      std::vector<Var> vars;
      for (const auto& x : inputs) vars.push_back(t.leaf(x));
      Gradients g = t.backward(pc.build(t, vars));
      auto f = [&](const std::vector<Tensor>& in) { return eval_case(pc, in); };
      for (std::size_t which = 0; which < inputs.size(); ++which) {
        const double err =
            testutil::max_grad_rel_err(f, inputs, which, g.grad(vars[which]));
        CHECK(err < 1e-5);
      }
    }
  }
}

TEST_CASE("tape evaluation is bit-deterministic", "[autodiff]") {
  auto run = [](std::vector<double>& values, std::vector<double>& grads) {
    gswe::Rng rng(99);
    Tape t;
    Var a = t.leaf(testutil::random_tensor({4, 3}, rng));
    Var b = t.leaf(testutil::random_tensor({3, 2}, rng));
    Var c = t.relu(t.matmul(a, b));
    Var loss = t.mean(t.mul(c, c));
    values = t.value(loss).data();
    Gradients g = t.backward(loss);
    grads = g.grad(a).data();
    auto gb = g.grad(b).data();
    grads.insert(grads.end(), gb.begin(), gb.end());
  };
  std::vector<double> v1, g1, v2, g2;
  run(v1, g1);
  run(v2, g2);
  CHECK(std::memcmp(v1.data(), v2.data(), v1.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("distinct tapes work concurrently", "[autodiff]") {
  // Tensors are immutable after construction; tapes share nothing.
  const Tensor shared = Tensor::vector({1, 2, 3, 4});
  auto work = [&shared]() {
    double acc = 0.0;
    for (int i = 0; i < 200; ++i) {
      Tape t;
      Var x = t.leaf(shared);
      acc += t.value(t.sum(t.mul(x, x)))[0];
    }
    return acc;
  };
  double r1 = 0.0, r2 = 0.0;
  std::thread th1([&] { r1 = work(); });
  std::thread th2([&] { r2 = work(); });
  th1.join();
  th2.join();
  CHECK(r1 == r2);
}
