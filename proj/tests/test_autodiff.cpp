#include <cmath>

#include "doctest.h"
#include "ibg/autodiff.hpp"
#include "ibg/errors.hpp"
#include "ibg/rng.hpp"
#include "support/fd.hpp"

using namespace ibg;
using ibg::testing::central_diff;
using ibg::testing::rel_err;

TEST_CASE("matmul identity and hand products") {
  ad::Tape tape;
  auto eye = tape.leaf({2, 2}, {1, 0, 0, 1});
  auto m = tape.leaf({2, 2}, {1, 2, 3, 4});
  auto out = tape.matmul(eye, m);
  CHECK(out.value() == std::vector<double>{1, 2, 3, 4});

  auto a = tape.leaf({1, 2}, {1, 2});
  auto b = tape.leaf({2, 1}, {3, 4});
  CHECK(tape.matmul(a, b).item() == doctest::Approx(11.0).epsilon(1e-15));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  ad::Tape tape;
  auto a = tape.leaf({2, 3}, std::vector<double>(6, 1.0));
  auto b = tape.leaf({2, 2}, std::vector<double>(4, 1.0));
  CHECK_THROWS_WITH_AS(tape.matmul(a, b), doctest::Contains("[2x3]"), DimensionError);
  CHECK_THROWS_WITH_AS(tape.matmul(a, b), doctest::Contains("[2x2]"), DimensionError);
}

TEST_CASE("matmul gradients match central differences") {
  RngStream rng(42);
  std::vector<double> av = rng.normal_vector(12), bv = rng.normal_vector(8);
  auto scalar = [&](const std::vector<double>& a_in, const std::vector<double>& b_in) {
    ad::Tape tape;
    auto a = tape.leaf({3, 4}, a_in);
    auto b = tape.leaf({4, 2}, b_in);
    return tape.sum(tape.matmul(a, b)).item();
  };
  ad::Tape tape;
  auto a = tape.leaf({3, 4}, av);
  auto b = tape.leaf({4, 2}, bv);
  tape.backward(tape.sum(tape.matmul(a, b)));
  for (std::size_t i = 0; i < av.size(); ++i) {
    double fd = central_diff(av, i, [&](const std::vector<double>& v) { return scalar(v, bv); });
    CHECK(rel_err(a.grad()[i], fd) < 1e-6);
  }
  for (std::size_t i = 0; i < bv.size(); ++i) {
    double fd = central_diff(bv, i, [&](const std::vector<double>& v) { return scalar(av, v); });
    CHECK(rel_err(b.grad()[i], fd) < 1e-6);
  }
}

TEST_CASE("elementwise add, mul annihilator, product rule") {
  ad::Tape tape;
  auto a = tape.leaf({2}, {1, 2});
  auto b = tape.leaf({2}, {3, 4});
  CHECK(tape.add(a, b).value() == std::vector<double>{4, 6});

  auto x = tape.leaf({2}, {5, 7});
  auto zero = tape.zeros({2});
  auto prod = tape.mul(x, zero);
  CHECK(prod.value() == std::vector<double>{0, 0});
  tape.backward(tape.sum(prod));
  CHECK(x.grad() == std::vector<double>{0, 0});

  ad::Tape t2;
  auto x2 = t2.leaf({2}, {2, 3});
  auto y2 = t2.leaf({2}, {5, 7});
  t2.backward(t2.sum(t2.mul(x2, y2)));
  CHECK(x2.grad() == std::vector<double>{5, 7});
  CHECK(y2.grad() == std::vector<double>{2, 3});

  auto c = t2.leaf({3}, {1, 2, 3});
  CHECK_THROWS_AS(t2.add(x2, c), DimensionError);
}

TEST_CASE("activations and their gradients") {
  ad::Tape tape;
  auto zero = tape.leaf({1}, {0.0});
  auto th = tape.tanh(zero);
  CHECK(th.item() == 0.0);
  tape.backward(th);
  CHECK(zero.grad()[0] == 1.0);

  auto neg = tape.leaf({1}, {-3.0});
  auto pos = tape.leaf({1}, {3.0});
  auto rn = tape.relu(neg);
  auto rp = tape.relu(pos);
  CHECK(rn.item() == 0.0);
  CHECK(rp.item() == 3.0);
  tape.backward(rn);
  tape.backward(rp);
  CHECK(neg.grad()[0] == 0.0);
  CHECK(pos.grad()[0] == 1.0);

  std::vector<double> xv = {1.0};
  auto f = [](const std::vector<double>& v) {
    ad::Tape t;
    return t.exp(t.leaf({1}, v)).item();
  };
  ad::Tape t3;
  auto x3 = t3.leaf({1}, xv);
  auto e = t3.exp(x3);
  CHECK(e.item() == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  t3.backward(e);
  double fd = central_diff(xv, 0, f, 1e-6);
  CHECK(rel_err(x3.grad()[0], fd) < 1e-8);
}

TEST_CASE("softmax rows: symmetry, stability, direct formula") {
  ad::Tape tape;
  auto flat = tape.softmax_rows(tape.leaf({1, 3}, {0, 0, 0}));
  for (double v : flat.value()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

  auto spiky = tape.softmax_rows(tape.leaf({1, 3}, {1000, 0, 0}));
  CHECK(spiky.value()[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spiky.value()[1] == doctest::Approx(0.0).epsilon(1e-12));

  // independent high-precision evaluation
  long double e1 = expl(1.0L), e2 = expl(2.0L), e3 = expl(3.0L);
  long double denom = e1 + e2 + e3;
  auto sm = tape.softmax_rows(tape.leaf({1, 3}, {1, 2, 3}));
  CHECK(sm.value()[0] == doctest::Approx(static_cast<double>(e1 / denom)).epsilon(1e-14));
  CHECK(sm.value()[1] == doctest::Approx(static_cast<double>(e2 / denom)).epsilon(1e-14));
  CHECK(sm.value()[2] == doctest::Approx(static_cast<double>(e3 / denom)).epsilon(1e-14));

  double sum = 0.0;
  for (double v : sm.value()) sum += v;
  CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("softmax rows sum to one on random input") {
  RngStream rng(7);
  ad::Tape tape;
  auto sm = tape.softmax_rows(tape.leaf({5, 7}, rng.normal_vector(35, 0.0, 3.0)));
  for (std::size_t r = 0; r < 5; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 7; ++c) {
      double v = sm.value()[r * 7 + c];
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("cross entropy: uniform, saturated, direct formula, bad label") {
  ad::Tape tape;
  CHECK(tape.cross_entropy(tape.leaf({1, 2}, {0, 0}), {0}).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(tape.cross_entropy(tape.leaf({1, 2}, {40, -40}), {0}).item() ==
        doctest::Approx(0.0).epsilon(1e-12));

  long double lse = logl(expl(1.0L) + expl(2.0L) + expl(3.0L));
  CHECK(tape.cross_entropy(tape.leaf({1, 3}, {1, 2, 3}), {2}).item() ==
        doctest::Approx(static_cast<double>(lse - 3.0L)).epsilon(1e-14));

  CHECK_THROWS_AS(tape.cross_entropy(tape.leaf({1, 3}, {1, 2, 3}), {3}), IndexError);
}

TEST_CASE("cross entropy backward is (softmax - onehot)/m") {
  ad::Tape tape;
  auto logits = tape.leaf({2, 3}, {0.5, -1.0, 2.0, 1.0, 1.0, 1.0});
  auto loss = tape.cross_entropy(logits, {2, 0});
  tape.backward(loss);
  auto probs_row = [&](std::size_t r) {
    ad::Tape t;
    auto sm = t.softmax_rows(t.leaf({1, 3}, {logits.value()[r * 3], logits.value()[r * 3 + 1],
                                             logits.value()[r * 3 + 2]}));
    return sm.value();
  };
  auto p0 = probs_row(0), p1 = probs_row(1);
  CHECK(logits.grad()[0] == doctest::Approx(p0[0] / 2).epsilon(1e-12));
  CHECK(logits.grad()[2] == doctest::Approx((p0[2] - 1.0) / 2).epsilon(1e-12));
  CHECK(logits.grad()[3] == doctest::Approx((p1[0] - 1.0) / 2).epsilon(1e-12));
}

TEST_CASE("gaussian kl: zero, half, monte carlo") {
  ad::Tape tape;
  CHECK(tape.gaussian_kl(tape.zeros({3}), tape.zeros({3})).item() == 0.0);
  CHECK(tape.gaussian_kl(tape.leaf({1}, {1.0}), tape.leaf({1}, {0.0})).item() ==
        doctest::Approx(0.5).epsilon(1e-15));

  // E_p[log p - log q] with 1e6 draws, diagonal gaussian vs standard normal
  std::vector<double> mu = {0.3, -0.7}, ls = {0.2, -0.1};
  auto kl = tape.gaussian_kl(tape.leaf({2}, mu), tape.leaf({2}, ls)).item();
  RngStream rng(123);
  double acc = 0.0;
  const std::size_t n = 1000000;
  for (std::size_t s = 0; s < n; ++s) {
    double logp = 0.0, logq = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      double sigma = std::exp(ls[j]);
      double x = mu[j] + sigma * rng.normal();
      double zp = (x - mu[j]) / sigma;
      logp += -0.5 * zp * zp - ls[j];
      logq += -0.5 * x * x;
    }
    acc += logp - logq;
  }
  double mc = acc / static_cast<double>(n);
  CHECK(rel_err(kl, mc) < 0.02);

  CHECK_THROWS_AS(tape.gaussian_kl(tape.zeros({3}), tape.zeros({4})), DimensionError);
}

TEST_CASE("gaussian kl is non-negative, zero only at the standard normal") {
  RngStream rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    ad::Tape tape;
    auto mu = tape.leaf({2, 3}, rng.normal_vector(6, 0.0, 1.5));
    auto ls = tape.leaf({2, 3}, rng.normal_vector(6, 0.0, 0.7));
    double kl = tape.gaussian_kl(mu, ls).item();
    CHECK(kl >= 0.0);
    bool at_origin = true;
    for (double v : mu.value()) at_origin = at_origin && std::abs(v) < 1e-12;
    for (double v : ls.value()) at_origin = at_origin && std::abs(v) < 1e-12;
    if (!at_origin) CHECK(kl > 0.0);
  }
}

TEST_CASE("backward: square, chain rule, accumulation, reset") {
  ad::Tape tape;
  auto x = tape.leaf({1}, {3.0});
  auto y = tape.mul(x, x);
  tape.backward(y);
  CHECK(x.grad()[0] == 6.0);

  // repeated calls accumulate until zero_grad
  tape.backward(y);
  CHECK(x.grad()[0] == 12.0);
  tape.zero_grad();
  tape.backward(y);
  CHECK(x.grad()[0] == 6.0);

  ad::Tape t2;
  auto a = t2.leaf({1}, {2.0});
  auto b = t2.leaf({1}, {5.0});
  t2.backward(t2.add(t2.mul(a, b), b));  // a*b + b
  CHECK(a.grad()[0] == 5.0);
  CHECK(b.grad()[0] == 3.0);

  CHECK_THROWS_AS(t2.backward(t2.leaf({2}, {1, 2})), ContractError);
}

TEST_CASE("backward linearity over scalar combinations") {
  RngStream rng(11);
  std::vector<double> xv = rng.normal_vector(4);
  double ca = 1.7, cb = -0.6;
  auto grads_of = [&](bool combined) {
    ad::Tape tape;
    auto x = tape.leaf({2, 2}, xv);
    auto f = tape.sum(tape.tanh(x));
    auto g = tape.sum(tape.mul(x, x));
    if (combined) {
      tape.backward(tape.add(tape.scale(f, ca), tape.scale(g, cb)));
      return x.grad();
    }
    tape.backward(f);
    std::vector<double> gf = x.grad();
    tape.zero_grad();
    tape.backward(g);
    std::vector<double> gg = x.grad();
    for (std::size_t i = 0; i < gf.size(); ++i) gf[i] = ca * gf[i] + cb * gg[i];
    return gf;
  };
  auto lhs = grads_of(true);
  auto rhs = grads_of(false);
  for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
}

TEST_CASE("gather rows accumulates duplicate ids; transpose round trip") {
  ad::Tape tape;
  auto table = tape.leaf({3, 2}, {1, 2, 3, 4, 5, 6});
  auto rows = tape.gather_rows(table, {1, 1, 0});
  CHECK(rows.value() == std::vector<double>{3, 4, 3, 4, 1, 2});
  tape.backward(tape.sum(rows));
  CHECK(table.grad() == std::vector<double>{1, 1, 2, 2, 0, 0});
  CHECK_THROWS_AS(tape.gather_rows(table, {3}), IndexError);

  auto t = tape.transpose(rows);
  CHECK(t.shape() == ad::Shape{2, 3});
  CHECK(t.value() == std::vector<double>{3, 3, 1, 4, 4, 2});
}

TEST_CASE("leaf rejects non-finite input at the tape boundary") {
  ad::Tape tape;
  CHECK_THROWS_AS(tape.leaf({1}, {std::nan("")}), ContractError);
  CHECK_THROWS_AS(tape.leaf({2}, {1.0, INFINITY}), ContractError);
  CHECK_THROWS_AS(tape.leaf({3}, {1.0, 2.0}), DimensionError);
}

TEST_CASE("forward and backward are deterministic") {
  RngStream rng(9);
  std::vector<double> xv = rng.normal_vector(6), wv = rng.normal_vector(6);
  auto run = [&]() {
    ad::Tape tape;
    auto x = tape.leaf({2, 3}, xv);
    auto w = tape.leaf({3, 2}, wv);
    auto out = tape.softmax_rows(tape.matmul(tape.tanh(x), w));
    auto loss = tape.cross_entropy(out, {0, 1});
    tape.backward(loss);
    return std::make_pair(loss.item(), x.grad());
  };
  auto r1 = run();
  auto r2 = run();
  CHECK(r1.first == r2.first);
  CHECK(r1.second == r2.second);
}

TEST_CASE("sub and add_rowvec backward rules") {
  ad::Tape tape;
  auto a = tape.leaf({2}, {5, 9});
  auto b = tape.leaf({2}, {2, 4});
  auto d = tape.sub(a, b);
  CHECK(d.value() == std::vector<double>{3, 5});
  tape.backward(tape.sum(d));
  CHECK(a.grad() == std::vector<double>{1, 1});
  CHECK(b.grad() == std::vector<double>{-1, -1});

  ad::Tape t2;
  auto m = t2.leaf({2, 3}, {1, 2, 3, 4, 5, 6});
  auto row = t2.leaf({3}, {10, 20, 30});
  auto out = t2.add_rowvec(m, row);
  CHECK(out.value() == std::vector<double>{11, 22, 33, 14, 25, 36});
  t2.backward(t2.sum(out));
  CHECK(m.grad() == std::vector<double>(6, 1.0));
  CHECK(row.grad() == std::vector<double>{2, 2, 2});
  CHECK_THROWS_AS(t2.add_rowvec(m, t2.leaf({2}, {1, 2})), DimensionError);
}

TEST_CASE("explicit scalar broadcasts: scale and add_scalar") {
  ad::Tape tape;
  auto a = tape.leaf({2}, {1.5, -2.0});
  auto s = tape.scale(a, 3.0);
  CHECK(s.value() == std::vector<double>{4.5, -6.0});
  auto b = tape.add_scalar(a, 0.5);
  CHECK(b.value() == std::vector<double>{2.0, -1.5});
  tape.backward(tape.sum(b));
  CHECK(a.grad() == std::vector<double>{1, 1});
}
