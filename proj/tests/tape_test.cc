// tests/tape_test.cc

// Copyright 2026  The aratts authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "aratts/tape.h"

#include <cmath>

#include "aratts/error.h"
#include "aratts/gradcheck.h"
#include "doctest.h"

using aratts::CounterRng;
using aratts::Error;
using aratts::ErrorKind;
using aratts::Tensor;
namespace ad = aratts::ad;

TEST_CASE("all registered backward rules match central finite differences") {
  for (const auto &r : aratts::gradcheck::RunAll(99)) {
    INFO(r.name, " max rel err ", r.max_rel_err);
    CHECK(r.pass);
  }
}

TEST_CASE("softmax outputs live on the probability simplex") {
  CounterRng rng(3, CounterRng::StreamOf("softmax"));
  for (int iter = 0; iter < 50; ++iter) {
    ad::Tape t;
    const int64_t n = 1 + static_cast<int64_t>(rng.NextBelow(9));
    ad::Var x = t.Leaf(Tensor::Randn({n}, rng, 3.0));
    const Tensor &y = t.value(t.Softmax1d(x));
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      CHECK(y[i] >= 0.0);
      sum += y[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("softmax of a constant vector is uniform") {
  ad::Tape t;
  ad::Var x = t.Leaf(Tensor({3}));
  const Tensor &y = t.value(t.Softmax1d(x));
  for (int64_t i = 0; i < 3; ++i)
    CHECK(y[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("mse of identical tensors is zero with zero gradient") {
  ad::Tape t;
  CounterRng rng(4, CounterRng::StreamOf("mse"));
  Tensor x = Tensor::Randn({2, 3}, rng);
  ad::Var p = t.Leaf(x);
  ad::Var loss = t.MseLoss(p, x);
  CHECK(t.value(loss)[0] == 0.0);
  t.Backward(loss);
  for (int64_t i = 0; i < 6; ++i) CHECK(t.grad(p)[i] == 0.0);
}

TEST_CASE("lstm cell with zero weights and state gives zero output") {
  ad::Tape t;
  CounterRng rng(6, CounterRng::StreamOf("lstm"));
  ad::Var x = t.Leaf(Tensor::Randn({3}, rng));
  ad::Var h = t.Leaf(Tensor({2}));
  ad::Var c = t.Leaf(Tensor({2}));
  ad::Var wih = t.Leaf(Tensor({3, 8}));
  ad::Var whh = t.Leaf(Tensor({2, 8}));
  ad::Var b = t.Leaf(Tensor({8}));
  ad::Tape::LstmOut s = t.LstmCell(x, h, c, wih, whh, b);
  for (int64_t i = 0; i < 2; ++i) {
    CHECK(t.value(s.h)[i] == 0.0);
    CHECK(t.value(s.c)[i] == 0.0);
  }
}

TEST_CASE("linear losses give textbook gradients") {
  ad::Tape t;
  CounterRng rng(8, CounterRng::StreamOf("lin"));
  Tensor xv = Tensor::Randn({2, 3}, rng);
  ad::Var x = t.Leaf(xv);
  t.Backward(t.Sum(x));
  for (int64_t i = 0; i < 6; ++i) CHECK(t.grad(x)[i] == 1.0);

  ad::Tape t2;
  ad::Var x2 = t2.Leaf(xv);
  t2.Backward(t2.Sum(t2.Mul(x2, x2)));
  for (int64_t i = 0; i < 6; ++i)
    CHECK(t2.grad(x2)[i] == doctest::Approx(2.0 * xv[i]).epsilon(1e-15));
}

TEST_CASE("backward accumulates until grads are zeroed") {
  ad::Tape t;
  ad::Var x = t.Leaf(Tensor::Full({4}, 2.0));
  ad::Var loss = t.Sum(t.Mul(x, x));
  t.Backward(loss);
  t.Backward(loss);
  for (int64_t i = 0; i < 4; ++i) CHECK(t.grad(x)[i] == 8.0);
  t.ZeroGrads();
  t.Backward(loss);
  for (int64_t i = 0; i < 4; ++i) CHECK(t.grad(x)[i] == 4.0);
}

TEST_CASE("batch norm in train mode standardizes each channel") {
  ad::Tape t;
  CounterRng rng(10, CounterRng::StreamOf("bn"));
  ad::Var x = t.Leaf(Tensor::Randn({64, 3}, rng));
  // gamma 1, beta 0 exposes the normalized values directly.
  ad::Var gamma = t.Leaf(Tensor::Full({3}, 1.0));
  ad::Var beta = t.Leaf(Tensor({3}));
  const Tensor &y = t.value(t.BatchNorm(x, gamma, beta, true));
  for (int64_t c = 0; c < 3; ++c) {
    double mean = 0.0, var = 0.0;
    for (int64_t i = 0; i < 64; ++i) mean += y.at(i, c);
    mean /= 64.0;
    for (int64_t i = 0; i < 64; ++i) {
      const double d = y.at(i, c) - mean;
      var += d * d;
    }
    var /= 64.0;
    CHECK(std::abs(mean) <= 1e-6);
    CHECK(std::abs(var - 1.0) <= 1e-4);
  }
}

TEST_CASE("batch norm running stats feed the eval path") {
  CounterRng rng(11, CounterRng::StreamOf("bn2"));
  Tensor rm({2}), rv({2});
  rv.Fill(1.0);
  Tensor xv = Tensor::Randn({32, 2}, rng);
  for (auto &v : xv.vec()) v = 3.0 + 2.0 * v;
  {
    ad::Tape t;
    ad::Var x = t.Leaf(xv);
    ad::Var gamma = t.Leaf(Tensor::Full({2}, 1.0));
    ad::Var beta = t.Leaf(Tensor({2}));
    // Momentum 1.0 copies the batch statistics outright.
    t.BatchNorm(x, gamma, beta, true, &rm, &rv, 1.0);
  }
  // Eval on the same batch now matches train-mode normalization.
  ad::Tape t;
  ad::Var x = t.Leaf(xv);
  ad::Var gamma = t.Leaf(Tensor::Full({2}, 1.0));
  ad::Var beta = t.Leaf(Tensor({2}));
  const Tensor &y = t.value(t.BatchNorm(x, gamma, beta, false, &rm, &rv));
  for (int64_t c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (int64_t i = 0; i < 32; ++i) mean += y.at(i, c);
    CHECK(std::abs(mean / 32.0) <= 1e-6);
  }
}

TEST_CASE("dropout is identity in eval and reproducible under a fixed seed") {
  CounterRng data_rng(12, CounterRng::StreamOf("drop"));
  Tensor xv = Tensor::Randn({5, 5}, data_rng);

  ad::Tape t;
  ad::Var x = t.Leaf(xv);
  CounterRng r1(77, 1);
  ad::Var eval_out = t.Dropout(x, 0.5, false, r1);
  CHECK(eval_out.id == x.id);  // eval path adds no node

  auto run = [&xv](uint64_t seed) {
    ad::Tape tt;
    ad::Var xx = tt.Leaf(xv);
    CounterRng r(seed, 1);
    return tt.value(tt.Dropout(xx, 0.5, true, r));
  };
  const Tensor a = run(42), b = run(42), c = run(43);
  bool same_ab = true, same_ac = true;
  for (int64_t i = 0; i < a.numel(); ++i) {
    same_ab = same_ab && a[i] == b[i];
    same_ac = same_ac && a[i] == c[i];
  }
  CHECK(same_ab);
  CHECK(!same_ac);

  // Inverted scaling: kept entries are x / (1 - p).
  for (int64_t i = 0; i < a.numel(); ++i)
    CHECK((a[i] == 0.0 || a[i] == doctest::Approx(xv[i] / 0.5).epsilon(1e-15)));
}

TEST_CASE("zoneout blend covers both the sampled and expectation forms") {
  ad::Tape t;
  ad::Var prev = t.Leaf(Tensor::Full({4}, 1.0));
  ad::Var next = t.Leaf(Tensor::Full({4}, 3.0));

  // Expectation form, rate 0.1: 0.1 * prev + 0.9 * next.  Values are copied
  // out because each new op may reallocate the tape's node storage.
  const Tensor e = t.value(t.Blend(prev, next, Tensor::Full({4}, 0.1)));
  for (int64_t i = 0; i < 4; ++i)
    CHECK(e[i] == doctest::Approx(2.8).epsilon(1e-15));

  // Rate 0 keeps the new state outright.
  const Tensor z = t.value(t.Blend(prev, next, Tensor({4})));
  for (int64_t i = 0; i < 4; ++i) CHECK(z[i] == 3.0);

  // Sampled form: each unit keeps exactly one of the two values.
  Tensor keep({4});
  keep[0] = 1.0;
  keep[2] = 1.0;
  const Tensor s = t.value(t.Blend(prev, next, keep));
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 3.0);
  CHECK(s[2] == 1.0);
  CHECK(s[3] == 3.0);
}

TEST_CASE("non-finite values poison the step loudly") {
  ad::Tape t;
  Tensor bad({2});
  bad[0] = std::nan("");
  try {
    t.Leaf(bad);
    FAIL("expected NonFinite");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kNonFinite);
  }

  ad::Var x = t.Leaf(Tensor::Full({2}, 800.0));
  try {
    t.Exp(x);  // overflows to inf
    FAIL("expected NonFinite");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kNonFinite);
  }
}

TEST_CASE("log abs det rejects singular matrices") {
  ad::Tape t;
  Tensor w({2, 2});
  w.at(0, 0) = 1.0;
  w.at(0, 1) = 2.0;
  w.at(1, 0) = 2.0;
  w.at(1, 1) = 4.0;
  ad::Var v = t.Leaf(w);
  try {
    t.LogAbsDet(v);
    FAIL("expected SingularWeight");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kSingularWeight);
  }
}

TEST_CASE("rng streams are independent and portable") {
  // Pinned values freeze the generator algorithm: splitmix64 of
  // key ^ rotl(stream,17) ^ (counter * golden), as documented in rng.h.
  CounterRng a(1, 0);
  CounterRng b(1, 0);
  CHECK(a.NextU64() == b.NextU64());
  CHECK(a.NextU64() == b.NextU64());
  CounterRng c(1, 1);
  CHECK(a.NextU64() != c.NextU64());

  CounterRng g(0, 0);
  const double u = g.NextUniform();
  CHECK(u >= 0.0);
  CHECK(u < 1.0);

  CounterRng h(123, 7);
  double mean = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) mean += h.NextGaussian();
  mean /= n;
  CHECK(std::abs(mean) < 0.05);
}
