/*
 * Copyright 2026 The crossalign Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crossalign/error.hpp"
#include "crossalign/losses.hpp"
#include "support/oracles.hpp"

using namespace crossalign;

namespace {

constexpr double kE = 2.718281828459045;

fixture::Latents four_instance_case() {
  return fixture::contrastive_latents(Tensor2D{{1, 0}, {1, 0}, {0, 1}, {0, 1}},
                                      Tensor2D{{1, 0}, {0, 1}}, {1, 1, 2, 2}, {1, 2});
}

/// One-instance batch with explicit tensors for the alignment terms.
struct Single {
  std::unique_ptr<Tape> tape = std::make_unique<Tape>();
  BatchLatents b;
};

Single single(const Tensor2D& v, const Tensor2D& v_cross, const Tensor2D& s,
              const Tensor2D& s_cross, const Tensor2D& mu_v, const Tensor2D& mu_s,
              const Tensor2D& lv) {
  Single f;
  auto& t = *f.tape;
  f.b.visual = t.constant(v);
  f.b.semantic = t.constant(s);
  f.b.visual_cross = t.constant(v_cross);
  f.b.semantic_cross = t.constant(s_cross);
  f.b.mu_v = t.constant(mu_v);
  f.b.mu_s = t.constant(mu_s);
  f.b.log_var_v = t.constant(lv);
  f.b.log_var_s = t.constant(lv);
  f.b.labels = {3};
  f.b.class_of = {3};
  return f;
}

std::vector<std::size_t> desc_rows(const BatchLatents& b) { return b.descriptor_rows(); }

}  // namespace

TEST(Vtov, WorkedExample) {
  auto f = four_instance_case();
  EXPECT_NEAR(vtov_loss(f.b, 1.0, Reduction::kSum).scalar(), 4 * std::log(1 + 2 / kE), 1e-12);
  EXPECT_NEAR(vtov_loss(f.b, 1.0, Reduction::kSum).scalar(), 2.2058, 5e-5);
  EXPECT_NEAR(vtov_loss(f.b, 1.0).scalar(), std::log(1 + 2 / kE), 1e-12);
}

TEST(Vtov, IdenticalPairIsZero) {
  auto f = fixture::contrastive_latents(Tensor2D{{0.6, 0.8}, {0.6, 0.8}}, Tensor2D{{1, 0}}, {0, 0}, {0});
  EXPECT_NEAR(vtov_loss(f.b, 1.0, Reduction::kSum).scalar(), 0.0, 1e-15);
}

TEST(Vtov, SingleInstanceClassNamed) {
  auto f = fixture::contrastive_latents(Tensor2D{{1, 0}, {1, 0}, {0, 1}}, Tensor2D{{1, 0}, {0, 1}},
                                        {4, 4, 7}, {4, 7});
  try {
    vtov_loss(f.b, 1.0);
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("class 7"), std::string::npos) << e.what();
  }
}

TEST(Vtos, WorkedExample) {
  auto f = fixture::contrastive_latents(Tensor2D{{1, 0}, {0, 1}}, Tensor2D{{1, 0}, {0, 1}}, {0, 1}, {0, 1});
  EXPECT_NEAR(vtos_loss(f.b, 1.0, Reduction::kSum).scalar(), 2 * std::log(1 + 1 / kE), 1e-12);
  EXPECT_NEAR(vtos_loss(f.b, 1.0, Reduction::kSum).scalar(), 0.6265, 5e-5);
}

TEST(Vtos, SingleClassBatchIsZero) {
  auto f = fixture::contrastive_latents(Tensor2D{{1, 2}, {3, -1}}, Tensor2D{{0.5, 0.5}}, {2, 2}, {2});
  EXPECT_NEAR(vtos_loss(f.b, 2.0, Reduction::kSum).scalar(), 0.0, 1e-15);
}

TEST(Vtos, MissingDescriptorIsIntegrityError) {
  auto f = fixture::contrastive_latents(Tensor2D{{1, 0}, {0, 1}}, Tensor2D{{1, 0}}, {0, 1}, {0});
  EXPECT_THROW(vtos_loss(f.b, 1.0), IntegrityError);
}

TEST(Vtos, MonotoneInPositiveSimilarity) {
  auto lo = fixture::contrastive_latents(Tensor2D{{1, 1}, {0, 1}}, Tensor2D{{1, 0}, {0, 1}}, {0, 1}, {0, 1});
  auto hi = fixture::contrastive_latents(Tensor2D{{1, 0.5}, {0, 1}}, Tensor2D{{1, 0}, {0, 1}}, {0, 1}, {0, 1});
  EXPECT_LT(vtos_loss(hi.b, 1.0).scalar(), vtos_loss(lo.b, 1.0).scalar());
}

TEST(Stov, WorkedExample) {
  auto f = four_instance_case();
  EXPECT_NEAR(stov_loss(f.b, 1.0, Reduction::kSum).scalar(), 2 * std::log((2 * kE + 2) / kE), 1e-12);
  EXPECT_NEAR(stov_loss(f.b, 1.0, Reduction::kSum).scalar(), 2.0128, 5e-5);
}

TEST(Stov, SingleInstanceIdenticalIsZero) {
  auto f = fixture::contrastive_latents(Tensor2D{{0, 1}}, Tensor2D{{0, 2}}, {5}, {5});
  EXPECT_NEAR(stov_loss(f.b, 1.0, Reduction::kSum).scalar(), 0.0, 1e-15);
}

TEST(Stov, DescriptorWithoutInstanceRejected) {
  auto f = fixture::contrastive_latents(Tensor2D{{1, 0}, {1, 0}}, Tensor2D{{1, 0}, {0, 1}}, {0, 0}, {0, 1});
  EXPECT_THROW(stov_loss(f.b, 1.0), PreconditionError);
}

TEST(Vae, StandardPosteriorPerfectReconstruction) {
  Tape t;
  BatchLatents b;
  const Tensor2D v{{1, 2, 3}}, s{{4, 5}};
  b.visual = b.visual_recon = t.constant(v);
  b.semantic = b.semantic_recon = t.constant(s);
  b.mu_v = b.log_var_v = t.constant(Tensor2D(1, 3, 0.0));
  b.mu_s = b.log_var_s = t.constant(Tensor2D(1, 3, 0.0));
  EXPECT_EQ(vae_loss(b).scalar(), 0.0);

  BatchLatents one;
  one.visual = one.visual_recon = t.constant(Tensor2D{{1.0}});
  one.semantic = one.semantic_recon = t.constant(Tensor2D{{1.0}});
  one.mu_v = t.constant(Tensor2D{{1.0}});
  one.log_var_v = t.constant(Tensor2D{{0.0}});
  one.mu_s = one.log_var_s = t.constant(Tensor2D{{0.0}});
  EXPECT_NEAR(vae_loss(one).scalar(), 0.5, 1e-15);
}

TEST(Vae, LargerReconstructionErrorIncreasesLoss) {
  Rng rng(1);
  auto f = fixture::random_latents(rng, 2, 2, 3, 4, 3);
  const double base = vae_loss(f.b).scalar();
  Tensor2D doubled = f.v_rec;
  for (std::size_t i = 0; i < doubled.size(); ++i) {
    doubled.values()[i] = f.v.values()[i] + 2.0 * (f.v_rec.values()[i] - f.v.values()[i]);
  }
  f.b.visual_recon = f.tape->constant(doubled);
  EXPECT_GT(vae_loss(f.b).scalar(), base);
}

TEST(Cmfr, Examples) {
  const Tensor2D lv(1, 2, 0.0);
  auto perfect = single(Tensor2D{{1, 0}}, Tensor2D{{1, 0}}, Tensor2D{{2, 2}}, Tensor2D{{2, 2}},
                        Tensor2D{{0, 0}}, Tensor2D{{0, 0}}, lv);
  EXPECT_EQ(cmfr_loss(perfect.b).scalar(), 0.0);
  auto off = single(Tensor2D{{1, 0}}, Tensor2D{{0, 0}}, Tensor2D{{2, 2}}, Tensor2D{{2, 2}},
                    Tensor2D{{0, 0}}, Tensor2D{{0, 0}}, lv);
  EXPECT_DOUBLE_EQ(cmfr_loss(off.b).scalar(), 1.0);
}

TEST(Cmda, Examples) {
  const Tensor2D lv{{0.3, -0.2}};
  auto same = single(Tensor2D{{1}}, Tensor2D{{1}}, Tensor2D{{1}}, Tensor2D{{1}}, Tensor2D{{0.5, 1}},
                     Tensor2D{{0.5, 1}}, lv);
  EXPECT_EQ(cmda_loss(same.b).scalar(), 0.0);
  auto three = single(Tensor2D{{1}}, Tensor2D{{1}}, Tensor2D{{1}}, Tensor2D{{1}}, Tensor2D{{3, 0}},
                      Tensor2D{{0, 0}}, lv);
  EXPECT_NEAR(cmda_loss(three.b).scalar(), 3.0, 1e-15);
}

// Brute-force comparison of every loss on random batches.
TEST(Oracle, AllLossesMatchScalarEnumeration) {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t c = 2 + trial % 3, k = 2 + trial % 2;
    auto f = fixture::random_latents(rng, c, k, 5, 6, 4);
    const auto rows = desc_rows(f.b);
    const auto zv = oracle::to_matrix(f.zv), zs = oracle::to_matrix(f.zs);
    const double tau = 0.5 + trial * 0.3;
    const double n = static_cast<double>(c * k), m = static_cast<double>(c);

    EXPECT_NEAR(vtov_loss(f.b, tau, Reduction::kSum).scalar(), oracle::vtov(zv, f.b.labels, tau), 1e-9);
    EXPECT_NEAR(vtos_loss(f.b, tau, Reduction::kSum).scalar(), oracle::vtos(zv, zs, rows, tau), 1e-9);
    EXPECT_NEAR(stov_loss(f.b, tau, Reduction::kSum).scalar(), oracle::stov(zv, zs, rows, tau), 1e-9);
    EXPECT_NEAR(vtov_loss(f.b, tau).scalar(), oracle::vtov(zv, f.b.labels, tau) / n, 1e-9);
    EXPECT_NEAR(stov_loss(f.b, tau).scalar(), oracle::stov(zv, zs, rows, tau) / m, 1e-9);

    const auto v = oracle::to_matrix(f.v), s = oracle::to_matrix(f.s);
    const auto vr = oracle::to_matrix(f.v_rec), sr = oracle::to_matrix(f.s_rec);
    const auto vc = oracle::to_matrix(f.v_cross), sc = oracle::to_matrix(f.s_cross);
    const auto muv = oracle::to_matrix(f.mu_v), lvv = oracle::to_matrix(f.lv_v);
    const auto mus = oracle::to_matrix(f.mu_s), lvs = oracle::to_matrix(f.lv_s);

    double cmfr = 0, cmda = 0, vae_v = 0, vae_s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      cmfr += oracle::l1(v[i], vc[i]) + oracle::l1(s[rows[i]], sc[i]);
      double d2 = 0;
      for (std::size_t j = 0; j < muv[i].size(); ++j) {
        const double dm = muv[i][j] - mus[rows[i]][j];
        const double ds = std::exp(0.5 * lvv[i][j]) - std::exp(0.5 * lvs[rows[i]][j]);
        d2 += dm * dm + ds * ds;
      }
      cmda += std::sqrt(d2);
      vae_v += oracle::l1(v[i], vr[i]) + oracle::kl_closed(muv[i], lvv[i]);
    }
    for (std::size_t j = 0; j < s.size(); ++j) {
      vae_s += oracle::l1(s[j], sr[j]) + oracle::kl_closed(mus[j], lvs[j]);
    }
    EXPECT_NEAR(cmfr_loss(f.b, Reduction::kSum).scalar(), cmfr, 1e-9);
    EXPECT_NEAR(cmda_loss(f.b, Reduction::kSum).scalar(), cmda, 1e-9);
    EXPECT_NEAR(vae_loss(f.b, Reduction::kSum).scalar(), vae_v + vae_s, 1e-9);
    EXPECT_NEAR(vae_loss(f.b).scalar(), vae_v / n + vae_s / m, 1e-9);
    EXPECT_NEAR(cmfr_loss(f.b).scalar(), cmfr / n, 1e-9);
  }
}

TEST(Invariants, NonNegative) {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = fixture::random_latents(rng, 3, 3, 4, 5, 3);
    for (double tau : {0.1, 1.0, 10.0}) {
      EXPECT_GE(vtov_loss(f.b, tau).scalar(), 0.0);
      EXPECT_GE(vtos_loss(f.b, tau).scalar(), 0.0);
      EXPECT_GE(stov_loss(f.b, tau).scalar(), 0.0);
    }
    EXPECT_GE(cmfr_loss(f.b).scalar(), 0.0);
    EXPECT_GE(cmda_loss(f.b).scalar(), 0.0);
    EXPECT_GE(vae_loss(f.b).scalar(), 0.0);
  }
}

TEST(Invariants, PermutationOfInstancesAndDescriptors) {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    auto f = fixture::random_latents(rng, 3, 3, 4, 5, 3);
    std::vector<std::size_t> perm(9), dperm(3);
    std::iota(perm.begin(), perm.end(), 0);
    std::iota(dperm.begin(), dperm.end(), 0);
    rng.shuffle(perm);
    rng.shuffle(dperm);
    const BatchLatents p = fixture::permuted(f, perm, dperm);
    EXPECT_NEAR(vtov_loss(p, 2.0).scalar(), vtov_loss(f.b, 2.0).scalar(), 1e-12);
    EXPECT_NEAR(vtos_loss(p, 2.0).scalar(), vtos_loss(f.b, 2.0).scalar(), 1e-12);
    EXPECT_NEAR(stov_loss(p, 2.0).scalar(), stov_loss(f.b, 2.0).scalar(), 1e-12);
    EXPECT_NEAR(cmfr_loss(p).scalar(), cmfr_loss(f.b).scalar(), 1e-12);
    EXPECT_NEAR(cmda_loss(p).scalar(), cmda_loss(f.b).scalar(), 1e-12);
    EXPECT_NEAR(vae_loss(p).scalar(), vae_loss(f.b).scalar(), 1e-12);
  }
}

TEST(Invariants, OrthogonalRotation) {
  Rng rng(43);
  for (int trial = 0; trial < 5; ++trial) {
    auto f = fixture::random_latents(rng, 3, 2, 6, 4, 4);
    const Tensor2D q = fixture::random_orthogonal(rng, 6);
    auto r = fixture::contrastive_latents(kernels::matmul(f.zv, q), kernels::matmul(f.zs, q),
                                          f.b.labels, f.b.class_of);
    EXPECT_NEAR(vtov_loss(r.b, 2.0).scalar(), vtov_loss(f.b, 2.0).scalar(), 1e-9);
    EXPECT_NEAR(vtos_loss(r.b, 2.0).scalar(), vtos_loss(f.b, 2.0).scalar(), 1e-9);
    EXPECT_NEAR(stov_loss(r.b, 2.0).scalar(), stov_loss(f.b, 2.0).scalar(), 1e-9);
  }
}

TEST(Invariants, HighTemperatureLimit) {
  auto f = fixture::contrastive_latents(Tensor2D{{1, 0}, {0, 1}}, Tensor2D{{1, 0}, {0, 1}}, {0, 1}, {0, 1});
  EXPECT_LE(std::fabs(vtos_loss(f.b, 1e6, Reduction::kSum).scalar() - 2 * std::log(2.0)), 1e-6);
}

// Away from tiny batches the gap to N ln M is first order in 1/tau:
// sum_i (mean_k s_ik - s_i,pos) / tau, with s the cosine similarities.
TEST(Invariants, HighTemperatureFirstOrderTerm) {
  Rng rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    auto f = fixture::random_latents(rng, 4, 3, 5, 4, 4);
    const auto zv = oracle::to_matrix(f.zv), zs = oracle::to_matrix(f.zs);
    const auto rows = f.b.descriptor_rows();
    double first_order = 0;
    for (std::size_t i = 0; i < zv.size(); ++i) {
      double mean = 0;
      for (const auto& s : zs) mean += oracle::dot(oracle::unit(zv[i]), oracle::unit(s)) / 4.0;
      first_order += mean - oracle::dot(oracle::unit(zv[i]), oracle::unit(zs[rows[i]]));
    }
    const double tau = 1e6;
    const double gap = vtos_loss(f.b, tau, Reduction::kSum).scalar() - 12 * std::log(4.0);
    EXPECT_NEAR(gap, first_order / tau, 1e-10);
  }
}

TEST(Invariants, KlClosedFormMatchesIntegration) {
  Rng rng(45);
  for (int i = 0; i < 20; ++i) {
    const double mu = rng.uniform(-2, 2), lv = rng.uniform(-2, 1.5);
    Tape t;
    BatchLatents b;
    b.visual = b.visual_recon = t.constant(Tensor2D{{0.0}});
    b.semantic = b.semantic_recon = t.constant(Tensor2D{{0.0}});
    b.mu_v = t.constant(Tensor2D{{mu}});
    b.log_var_v = t.constant(Tensor2D{{lv}});
    b.mu_s = b.log_var_s = t.constant(Tensor2D{{0.0}});
    EXPECT_NEAR(vae_loss(b).scalar(), oracle::kl_numeric_1d(mu, lv), 1e-6) << mu << ' ' << lv;
  }
}

TEST(Total, ZeroWeightsEqualVaeAndSkipPreconditions) {
  Rng rng(46);
  auto f = fixture::random_latents(rng, 3, 1, 4, 4, 3);  // k = 1: vtov would throw
  LossOptions o;
  o.weights.tau = 2.0;
  const TotalLoss t = total_loss(f.b, o);
  EXPECT_EQ(t.breakdown.total, vae_loss(f.b).scalar());
  EXPECT_FALSE(t.breakdown.vtov.has_value());
  EXPECT_FALSE(t.breakdown.cmfr.has_value());
  o.weights.vtov = 1.0;
  EXPECT_THROW(total_loss(f.b, o), PreconditionError);
}

TEST(Total, WeightedSumOfTerms) {
  Rng rng(47);
  auto f = fixture::random_latents(rng, 3, 2, 4, 4, 3);
  LossOptions o;
  o.weights = LossWeights{10, 1, 100, 100, 10, 2};
  const TotalLoss t = total_loss(f.b, o);
  const auto& b = t.breakdown;
  EXPECT_NEAR(b.total, b.vae + 10 * *b.cmfr + *b.cmda + 100 * *b.vtov + 100 * *b.vtos + 10 * *b.stov, 1e-9);
  EXPECT_NEAR(*b.vtos, vtos_loss(f.b, 2.0).scalar(), 1e-15);
}

TEST(Total, NegativeWeightRejected) {
  LossWeights w;
  w.vtov = -1;
  EXPECT_THROW(w.validate(), ConfigError);
  LossWeights t;
  t.tau = 0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Gradients, EachLossMatchesFiniteDifferences) {
  Rng rng(48);
  auto g = fixture::make_gradient_case(rng, 2, 2, 3, 5, 4, 6);
  const std::vector<std::pair<const char*, fixture::LossFn>> losses = {
      {"vae", [](const BatchLatents& b) { return vae_loss(b); }},
      {"cmfr", [](const BatchLatents& b) { return cmfr_loss(b); }},
      {"cmda", [](const BatchLatents& b) { return cmda_loss(b); }},
      {"vtov", [](const BatchLatents& b) { return vtov_loss(b, 2.0); }},
      {"vtos", [](const BatchLatents& b) { return vtos_loss(b, 2.0); }},
      {"stov", [](const BatchLatents& b) { return stov_loss(b, 2.0); }},
      {"vtov_mu", [](const BatchLatents& b) { return vtov_loss(b, 2.0, Reduction::kMean, true); }},
  };
  for (const auto& [name, fn] : losses) EXPECT_LT(fixture::gradient_error(g, fn, 1e-5), 1e-4) << name;
}
