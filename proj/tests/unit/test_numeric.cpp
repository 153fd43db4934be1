#include <cmath>
#include <limits>

#include "doctest.h"
#include "motionlm/core/random.hpp"
#include "motionlm/numeric/digest.hpp"
#include "motionlm/numeric/kernels.hpp"
#include "motionlm/numeric/ops.hpp"
#include "motionlm/numeric/optim.hpp"

using namespace motionlm;
using namespace motionlm::numeric;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

}  // namespace

TEST_CASE("matmul with identity") {
  const auto I = BasicTensor<double>::from({2, 2}, {1, 0, 0, 1});
  const auto A = BasicTensor<double>::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const auto C = matmul(I, A);
  CHECK(std::vector<double>(C.data().begin(), C.data().end()) ==
        std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("softmax and layer norm") {
  const auto s = softmax(BasicTensor<double>::from({1, 2}, {0, 0}));
  CHECK(s.data()[0] == 0.5);
  CHECK(s.data()[1] == 0.5);
  const auto ln = layer_norm(BasicTensor<double>::from({1, 2}, {1, 3}),
                             BasicTensor<double>::from({2}, {1, 1}),
                             BasicTensor<double>::from({2}, {0, 0}), 0.0);
  CHECK(ln.data()[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(ln.data()[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("attention special cases") {
  using T = BasicTensor<double>;
  const auto q = T::from({1, 2}, {0.3, -0.2});
  const auto k1 = T::from({1, 2}, {1.0, 2.0});
  const auto v1 = T::from({1, 2}, {5.0, -3.0});
  const auto single = scaled_dot_attention(q, k1, v1, nullptr, 1);
  CHECK(single.data()[0] == doctest::Approx(5.0));
  CHECK(single.data()[1] == doctest::Approx(-3.0));

  const auto k2 = T::from({2, 2}, {1.0, 2.0, 1.0, 2.0});
  const auto v2 = T::from({2, 2}, {1.0, 2.0, 3.0, 6.0});
  const auto same = scaled_dot_attention(q, k2, v2, nullptr, 1);
  CHECK(same.data()[0] == doctest::Approx(2.0));
  CHECK(same.data()[1] == doctest::Approx(4.0));

  auto mask = AttentionMask::all_visible(1, 2);
  mask.hide(0, 1);
  const auto hidden = scaled_dot_attention(q, T::from({2, 2}, {1, 2, -3, 4}), v2, &mask, 1);
  CHECK(hidden.data()[0] == 1.0);
  CHECK(hidden.data()[1] == 2.0);
}

TEST_CASE("cross entropy") {
  const std::vector<int> target{7};
  const auto uniform = cross_entropy(BasicTensor<double>::zeros({1, 169}), target);
  CHECK(uniform.item() == doctest::Approx(std::log(169.0)));
  std::vector<double> peaked(169, 0.0);
  peaked[7] = 1000.0;
  CHECK(cross_entropy(BasicTensor<double>::from({1, 169}, peaked), target).item() <
        1e-12);

  const auto logits = BasicTensor<double>::from({1, 4}, {0.5, -1.0, 2.0, 0.1}, true);
  const std::vector<int> t2{2};
  backward(cross_entropy(logits, t2));
  const auto p = softmax(BasicTensor<double>::from({1, 4}, {0.5, -1.0, 2.0, 0.1}));
  for (int i = 0; i < 4; ++i)
    CHECK(logits.grad()[i] == doctest::Approx(p.data()[i] - (i == 2 ? 1.0 : 0.0)));
}

TEST_CASE("d(x*x)/dx at 3 is 6") {
  const auto x = BasicTensor<double>::scalar(3.0, true);
  backward(sum(mul(x, x)));
  CHECK(x.grad()[0] == 6.0);
}

TEST_CASE("masked attention path has exactly zero gradient") {
  using T = BasicTensor<double>;
  const auto q = T::from({1, 2}, {0.3, -0.2}, true);
  const auto k = T::from({2, 2}, {1, 2, -3, 4}, true);
  const auto v = T::from({2, 2}, {1, 2, 3, 6}, true);
  auto mask = AttentionMask::all_visible(1, 2);
  mask.hide(0, 1);
  backward(sum(scaled_dot_attention(q, k, v, &mask, 1)));
  CHECK(k.grad()[2] == 0.0);
  CHECK(k.grad()[3] == 0.0);
  CHECK(v.grad()[2] == 0.0);
  CHECK(v.grad()[3] == 0.0);
  CHECK(v.grad()[0] == 1.0);
}

TEST_CASE("op gradients match finite differences") {
  using T = BasicTensor<double>;
  const auto a0 = random_values(12, 1), b0 = random_values(12, 2), g0 = random_values(4, 3),
             w0 = random_values(12, 4);
  auto f = [&](const std::vector<double>& a) {
    const auto x = T::from({3, 4}, a, true);
    const auto ln = layer_norm(x, T::from({4}, g0), T::from({4}, {0.1, 0.2, 0.3, 0.4}));
    const auto h = relu(matmul(ln, T::from({4, 3}, w0)));
    const auto att = scaled_dot_attention(h, h, h, nullptr, 1);
    return std::make_pair(x, sum(mul(softmax(att), T::from({3, 3}, std::vector<double>(b0.begin(), b0.begin() + 9)))));
  };
  auto [x, loss] = f(a0);
  backward(loss);
  for (std::size_t i = 0; i < a0.size(); ++i) {
    auto plus = a0, minus = a0;
    plus[i] += 1e-6;
    minus[i] -= 1e-6;
    const double fd = (f(plus).second.item() - f(minus).second.item()) / 2e-6;
    CHECK(x.grad()[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("AdamW") {
  using T = BasicTensor<double>;
  SUBCASE("zero gradient and zero decay leave parameters unchanged") {
    ParameterList<double> params{{"w", T::from({2}, {1.5, -2.0}, true)}};
    AdamWState state;
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    adamw_step(params, state, cfg, 0.1);
    CHECK(params[0].tensor.data()[0] == 1.5);
    CHECK(params[0].tensor.data()[1] == -2.0);
  }
  SUBCASE("first step moves by lr * g / (|g| + eps)") {
    ParameterList<double> params{{"w", T::from({2}, {1.0, 1.0}, true)}};
    params[0].tensor.mutable_grad()[0] = 0.02;
    params[0].tensor.mutable_grad()[1] = -3.0;
    AdamWState state;
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    adamw_step(params, state, cfg, 0.01);
    CHECK(params[0].tensor.data()[0] == doctest::Approx(1.0 - 0.01 * 0.02 / (0.02 + 1e-8)));
    CHECK(params[0].tensor.data()[1] == doctest::Approx(1.0 + 0.01 * 3.0 / (3.0 + 1e-8)));
  }
  SUBCASE("decay only shrinks by (1 - lr * wd)") {
    ParameterList<double> params{{"w", T::from({2}, {2.0, -4.0}, true)}};
    AdamWState state;
    AdamWConfig cfg;
    cfg.weight_decay = 0.5;
    adamw_step(params, state, cfg, 0.1);
    CHECK(params[0].tensor.data()[0] == doctest::Approx(2.0 * 0.95));
    CHECK(params[0].tensor.data()[1] == doctest::Approx(-4.0 * 0.95));
  }
}

TEST_CASE("gradient clipping and linear schedule") {
  using T = BasicTensor<double>;
  ParameterList<double> params{{"w", T::from({2}, {0, 0}, true)}};
  params[0].tensor.mutable_grad()[0] = 3.0;
  params[0].tensor.mutable_grad()[1] = 4.0;
  CHECK(clip_grad_norm(params, 1.0) == doctest::Approx(5.0));
  CHECK(params[0].tensor.grad()[0] == doctest::Approx(0.6));
  CHECK(linear_lr(0, 100, 1.0) == 1.0);
  CHECK(linear_lr(50, 100, 1.0) == 0.5);
}

TEST_CASE("parallel kernels match the serial reference") {
  const std::size_t m = 7, k = 13, n = 5, heads = 2, d = 8;
  const auto a = random_values(m * k, 5), b = random_values(k * n, 6), bt = random_values(n * k, 7),
             at = random_values(k * m, 8);
  std::vector<double> c1(m * n), c2(m * n);
  kernels::matmul(a.data(), b.data(), c1.data(), m, k, n);
  kernels::reference::matmul(a.data(), b.data(), c2.data(), m, k, n);
  CHECK(c1 == c2);
  kernels::matmul_nt(a.data(), bt.data(), c1.data(), m, k, n);
  kernels::reference::matmul_nt(a.data(), bt.data(), c2.data(), m, k, n);
  CHECK(c1 == c2);
  kernels::matmul_tn(at.data(), b.data(), c1.data(), m, k, n);
  kernels::reference::matmul_tn(at.data(), b.data(), c2.data(), m, k, n);
  CHECK(c1 == c2);

  std::vector<double> s1(m * k), s2(m * k);
  kernels::softmax_rows(a.data(), s1.data(), m, k);
  kernels::reference::softmax_rows(a.data(), s2.data(), m, k);
  CHECK(s1 == s2);
  const auto gain = random_values(k, 9), bias = random_values(k, 10);
  kernels::layer_norm_rows(a.data(), gain.data(), bias.data(), s1.data(), (double*)nullptr,
                           (double*)nullptr, m, k, 1e-5);
  kernels::reference::layer_norm_rows(a.data(), gain.data(), bias.data(), s2.data(),
                                      (double*)nullptr, (double*)nullptr, m, k, 1e-5);
  CHECK(s1 == s2);

  const auto q = random_values(m * d, 11), kk = random_values(n * d, 12), v = random_values(n * d, 13);
  std::vector<float> mask(m * n, 0.0f);
  mask[3] = -std::numeric_limits<float>::infinity();
  std::vector<double> o1(m * d), o2(m * d);
  kernels::attention(q.data(), kk.data(), v.data(), mask.data(), o1.data(), (double*)nullptr, m, n,
                     d, heads);
  kernels::reference::attention(q.data(), kk.data(), v.data(), mask.data(), o2.data(),
                                (double*)nullptr, m, n, d, heads);
  CHECK(o1 == o2);
}

TEST_CASE("shape mismatches name both shapes") {
  const auto a = Tensor::zeros({2, 3}), b = Tensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("FNV-1a digest") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(digest_hex("a") == "af63dc4c8601ec8c");
}
