#include <doctest.h>

#include <cmath>

#include "dcs/loss.hpp"
#include "dcs/ops.hpp"
#include "support/nl_oracle.hpp"
#include "support/oracles.hpp"

using namespace dcs;

TEST_CASE("l_pix and l_reg: mean absolute error") {
  Rng rng(1);
  Tensor a = oracle::random_tensor({1, 3, 6, 6}, rng, 0, 1);
  CHECK(l_pix(a, a).item() == 0.0);
  Tensor b = add(a, Tensor(a.shape(), 0.1));
  CHECK(l_pix(b, a).item() == doctest::Approx(0.1).epsilon(1e-12));

  // random pair against a scalar loop
  Tensor x = oracle::random_tensor({2, 5}, rng), y = oracle::random_tensor({2, 5}, rng);
  double want = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) want += std::fabs(x.values()[i] - y.values()[i]);
  want /= double(x.numel());
  CHECK(l_reg(x, y).item() == want);

  Tensor u = oracle::random_tensor({1, 33}, rng, 0, 1);
  Tensor uhat = add(u, Tensor({1, 33}, 0.5));
  CHECK(l_reg(uhat, u).item() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("l_sparsity: sum with unit gradient") {
  Tensor zero({16}, 0.0);
  CHECK(l_sparsity(zero).item() == 0.0);
  Tensor half({16}, 0.5, true);
  Tensor s = l_sparsity(half);
  CHECK(s.item() == doctest::Approx(8.0));
  backward(s);
  for (double g : half.grad()) CHECK(g == 1.0);

  const double fd = oracle::finite_diff(half, 3, [&] { return l_sparsity(half).item(); });
  CHECK(oracle::rel_err(1.0, fd) < 1e-6);
}

TEST_CASE("knn_patches: ties, exact copy, brute force") {
  // constant image: all distances zero, lexicographic order wins
  Tensor flat({1, 3, 24, 24}, 0.5);
  auto idx = knn_patches(flat, {0, 0}, 8, 4, 3);
  REQUIRE(idx.matches.size() == 3);
  CHECK(idx.matches[0].row == 0);
  CHECK(idx.matches[0].col == 4);
  CHECK(idx.matches[1].row == 0);
  CHECK(idx.matches[1].col == 8);
  CHECK(idx.matches[2].row == 0);
  CHECK(idx.matches[2].col == 12);

  // planted exact copy becomes match #1
  Rng rng(5);
  Tensor img = oracle::random_tensor({1, 3, 32, 32}, rng, 0, 1);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < 8; ++y)
      for (int64_t x = 0; x < 8; ++x)
        img.values()[(c * 32 + 16 + y) * 32 + 20 + x] = img.values()[(c * 32 + y) * 32 + x];
  auto planted = knn_patches(img, {0, 0}, 8, 4, 2);
  CHECK(planted.matches[0].row == 16);
  CHECK(planted.matches[0].col == 20);

  // exhaustive check against an independent brute force
  for (int trial = 0; trial < 5; ++trial) {
    Tensor t = oracle::random_tensor({1, 3, 64, 64}, rng, 0, 1);
    const int64_t p = 16, stride = 4, K = 1 + int64_t(rng.uniform_int(4));
    const PatchPos q{int64_t(rng.uniform_int(13)) * 4, int64_t(rng.uniform_int(13)) * 4};
    auto got = knn_patches(t, q, p, stride, K);

    struct C {
      double d;
      PatchPos pos;
    };
    std::vector<C> all;
    for (int64_t r = 0; r + p <= 64; r += stride)
      for (int64_t c = 0; c + p <= 64; c += stride) {
        if (r == q.row && c == q.col) continue;
        all.push_back({oracle::patch_dist_ref(t, q, {r, c}, p), {r, c}});
      }
    std::sort(all.begin(), all.end(), [](const C& a, const C& b) {
      if (a.d != b.d) return a.d < b.d;
      if (a.pos.row != b.pos.row) return a.pos.row < b.pos.row;
      return a.pos.col < b.pos.col;
    });
    for (int64_t i = 0; i < K; ++i) {
      CHECK(got.matches[i].row == all[i].pos.row);
      CHECK(got.matches[i].col == all[i].pos.col);
    }
  }

  CHECK_THROWS(knn_patches(flat, {0, 0}, 8, 4, 100));  // not enough candidates
}

TEST_CASE("l_nonlocal: zero image, K0, scalar oracle, permutation invariance") {
  // zero image: every distance 0 including the i = 0 self terms
  Tensor zlr({1, 3, 24, 24}, 0.0);
  Tensor zsr({1, 3, 48, 48}, 0.0);
  auto zidx = knn_patches(zlr, {0, 0}, 8, 4, 2);
  CHECK(l_nonlocal(zlr, zsr, zidx, 2).item() == 0.0);

  Rng rng(12);
  // K = 0 reduces to | ||q_lr|| - ||q_sr|| |
  {
    Tensor lr = oracle::random_tensor({1, 3, 24, 24}, rng, 0, 1);
    Tensor sr = oracle::random_tensor({1, 3, 48, 48}, rng, 0, 1);
    PatchIndex idx;
    idx.query = {4, 8};
    idx.patch = 8;
    idx.stride = 4;
    const double got = l_nonlocal(lr, sr, idx, 2).item();
    const double want = std::fabs(oracle::patch_norm_ref(lr, {4, 8}, 8) -
                                  oracle::patch_norm_ref(sr, {8, 16}, 16));
    CHECK(got == want);
  }
  // random patches against the scalar re-implementation, exact
  for (int trial = 0; trial < 6; ++trial) {
    Tensor lr = oracle::random_tensor({1, 3, 32, 32}, rng, 0, 1);
    Tensor sr = oracle::random_tensor({1, 3, 64, 64}, rng, 0, 1);
    auto idx = knn_patches(lr, {8, 12}, 8, 4, 3);
    CHECK(l_nonlocal(lr, sr, idx, 2).item() == oracle::l_nonlocal_ref(lr, sr, idx, 2));
  }
  // permuting equal-distance matches leaves the loss unchanged
  {
    Tensor lr({1, 3, 24, 24}, 0.25);
    Tensor sr = oracle::random_tensor({1, 3, 48, 48}, rng, 0, 1);
    auto idx = knn_patches(lr, {8, 8}, 8, 4, 3);
    auto perm = idx;
    std::swap(perm.matches[0], perm.matches[2]);
    CHECK(l_nonlocal(lr, sr, idx, 2).item() ==
          doctest::Approx(l_nonlocal(lr, sr, perm, 2).item()).epsilon(1e-15));
  }
  // non-negative
  {
    Tensor lr = oracle::random_tensor({1, 3, 24, 24}, rng, 0, 1);
    Tensor sr = oracle::random_tensor({1, 3, 48, 48}, rng, 0, 1);
    auto idx = knn_patches(lr, {0, 4}, 8, 4, 3);
    CHECK(l_nonlocal(lr, sr, idx, 2).item() >= 0.0);
  }
}

TEST_CASE("l_nonlocal: gradient reaches the SR side only and passes FD") {
  Rng rng(14);
  Tensor lr = oracle::random_tensor({1, 3, 16, 16}, rng, 0, 1);
  Tensor sr = oracle::random_tensor({1, 3, 32, 32}, rng, 0, 1, true);
  auto idx = knn_patches(lr, {4, 4}, 4, 4, 2);

  auto loss = [&] { return l_nonlocal(lr, sr, idx, 2); };
  sr.zero_grad();
  backward(loss());
  REQUIRE(sr.has_grad());
  Rng pick(15);
  for (int t = 0; t < 12; ++t) {
    const int64_t i = int64_t(pick.uniform_int(uint64_t(sr.numel())));
    const double fd = oracle::finite_diff(sr, i, [&] { return loss().item(); });
    CHECK(oracle::rel_err(sr.grad()[i], fd) < 1e-4);
  }
}

TEST_CASE("per-pixel-normalized variant shrinks the self-term mismatch") {
  Tensor lr({1, 3, 24, 24}, 0.5);
  Tensor sr({1, 3, 48, 48}, 0.5);
  auto idx = knn_patches(lr, {0, 0}, 8, 4, 2);
  // literal form: self terms scale with patch side, so the loss is nonzero
  CHECK(l_nonlocal(lr, sr, idx, 2).item() > 0.0);
  // normalized form: both self terms become 0.5 * sqrt(3*p^2)/sqrt(3*p^2)
  CHECK(l_nonlocal(lr, sr, idx, 2, true).item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("composite_loss: wiring and linearity in each lambda") {
  LossTerms t;
  t.pix = Tensor::scalar(0.7);
  t.reg = Tensor::scalar(0.3);
  t.nonlocal = Tensor::scalar(0.2);
  t.sparsity = Tensor::scalar(4.0);

  LossWeights w;  // defaults 1, 0, 0, 1, 0.25
  CHECK(composite_loss(t, w).item() == doctest::Approx(0.7 + 0.3 + 0.2 + 1.0));

  LossWeights zero;
  zero.lambda1 = zero.lambda4 = zero.lambda5 = 0.0;
  CHECK(composite_loss(t, zero).item() == doctest::Approx(0.7));

  // linear in lambda5 with the rest fixed
  LossWeights w2 = w;
  w2.lambda5 = 0.5;
  LossWeights w3 = w;
  w3.lambda5 = 1.0;
  const double base = composite_loss(t, zero).item();
  const double d1 = composite_loss(t, w2).item();
  const double d2 = composite_loss(t, w3).item();
  (void)base;
  CHECK(d2 - d1 == doctest::Approx(0.5 * 4.0));

  // doubling lambda5 doubles the sparsity gradient contribution
  Tensor a({4}, 0.5, true);
  LossTerms ta;
  ta.pix = Tensor::scalar(0.0);
  ta.sparsity = l_sparsity(a);
  LossWeights lw;
  lw.lambda1 = lw.lambda4 = 0.0;
  lw.lambda5 = 0.25;
  backward(composite_loss(ta, lw));
  const double g1 = a.grad()[0];
  a.zero_grad();
  lw.lambda5 = 0.5;
  ta.sparsity = l_sparsity(a);
  backward(composite_loss(ta, lw));
  CHECK(a.grad()[0] == doctest::Approx(2.0 * g1));

  LossTerms missing;
  CHECK_THROWS(composite_loss(missing, w));
}

TEST_CASE("sparsity pressure on pre-sigmoid activations is non-negative") {
  Rng rng(77);
  Tensor z = oracle::random_tensor({16}, rng, -4, 4, true);
  Tensor loss = scale(l_sparsity(sigmoid(z)), 0.25);  // lambda5 * L_a
  backward(loss);
  for (double g : z.grad()) CHECK(g >= 0.0);
}
