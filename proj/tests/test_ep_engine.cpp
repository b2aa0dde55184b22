#include "lsad/ep_engine.hpp"

#include "oracles.hpp"

#include <Eigen/LU>

#include <gtest/gtest.h>

#include <set>

using namespace lsad;

namespace {

ModelConfig popularity_config(double mu_mean, double mu_var, double pop_var) {
  ModelConfig c;
  c.set_latent_dim(0);
  c.prior_mean_mu = mu_mean;
  c.prior_var_mu = mu_var;
  c.prior_var_alpha = pop_var;
  c.prior_var_beta = pop_var;
  c.convergence_tol = 1e-10;
  c.max_sweeps = 500;
  return c;
}

std::vector<FactorRef> random_factors(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(n - 1));
  std::set<std::pair<NodeId, NodeId>> seen;
  std::vector<FactorRef> out;
  while (out.size() < count) {
    const NodeId i = node(rng), j = node(rng);
    if (i == j || !seen.insert({i, j}).second) continue;
    out.push_back({i, j, out.size() % 3 == 0 ? 1 : -1});
  }
  return out;
}

}  // namespace

TEST(MessageStore, StartsUniformAndResets) {
  MessageStore st(2, {{0, 1, 1}, {1, 0, -1}});
  EXPECT_EQ(st.size(), 2u);
  EXPECT_EQ(st.mu(0), Gaussian1D::uniform());
  EXPECT_TRUE(st.u(1).precision.isZero());
  st.raw(1)[0] = 3.0;
  EXPECT_EQ(st.mu(1).precision, 3.0);
  st.reset();
  EXPECT_EQ(st.mu(1).precision, 0.0);
}

TEST(EpEngine, UnitEpsilonIsNoOp) {
  ModelConfig c;
  const ParamState prior = init_priors(c, 6, 6);
  EpEngine eng(prior, random_factors(6, 12, 1), 1.0);
  std::mt19937_64 rng(1);
  eng.sweep(rng);
  const ParamState q = eng.state();
  EXPECT_EQ(q.mu, prior.mu);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(q.alpha[i], prior.alpha[i]);
    EXPECT_EQ(q.beta[i], prior.beta[i]);
    EXPECT_TRUE(q.u[i].precision.isApprox(prior.u[i].precision));
  }
}

TEST(EpEngine, PosteriorEqualsPriorTimesMessages) {
  ModelConfig c;
  const ParamState prior = init_priors(c, 8, 8);
  const auto factors = random_factors(8, 30, 2);
  EpEngine eng(prior, factors, 2.0, 0.0, LatentInit{5, 0.1});
  std::mt19937_64 rng(3);
  for (int s = 0; s < 4; ++s) {
    eng.sweep(rng);
    const ParamState q = eng.state();
    const MessageStore& st = eng.messages();
    Gaussian1D mu = prior.mu;
    std::vector<Gaussian1D> a = prior.alpha, b = prior.beta;
    std::vector<GaussianD> u = prior.u, v = prior.v;
    for (std::size_t f = 0; f < st.size(); ++f) {
      const FactorRef& r = st.factor(f);
      mu = multiply(mu, st.mu(f));
      a[r.sender] = multiply(a[r.sender], st.alpha(f));
      b[r.receiver] = multiply(b[r.receiver], st.beta(f));
      u[r.sender] = multiply(u[r.sender], st.u(f));
      v[r.receiver] = multiply(v[r.receiver], st.v(f));
    }
    EXPECT_NEAR(mu.precision, q.mu.precision, 1e-8);
    EXPECT_NEAR(mu.precision_mean, q.mu.precision_mean, 1e-8);
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_NEAR(a[i].precision, q.alpha[i].precision, 1e-8);
      EXPECT_NEAR(a[i].precision_mean, q.alpha[i].precision_mean, 1e-8);
      EXPECT_NEAR(b[i].precision_mean, q.beta[i].precision_mean, 1e-8);
      EXPECT_LT((u[i].precision - q.u[i].precision).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LT((u[i].precision_mean - q.u[i].precision_mean).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LT((v[i].precision - q.v[i].precision).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LT((v[i].precision_mean - q.v[i].precision_mean).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(EpEngine, SinglePositiveFactorRaisesAlpha) {
  const ModelConfig c = popularity_config(0.0, 1.0, 1.0);
  const std::vector<DyadObservation> obs{{0, 0, 1}};
  const FitResult r = fit_period(init_priors(c, 1, 1), obs, {}, 0.0, c, 0.0, 1);
  EXPECT_GT(r.state.alpha[0].mean(), 0.0);
  // psi = mu + alpha + beta ~ N(0, 3); alpha's share of the tilted mean is 1/3.
  const auto m = oracle::quad_moments(
      [](double x) { return oracle::normal_pdf(x, 0, 3) * oracle::sigmoid(x); }, -30, 30);
  EXPECT_NEAR(r.state.alpha[0].mean(), m.mean / 3.0, 0.05);
}

TEST(EpEngine, TwoNodeMeansMatchQuadrature) {
  // psi01 = mu + a0 + b1, psi10 = mu + a1 + b0; joint Gaussian, so the exact
  // posterior mean of each parameter follows from the tilted mean of the pair.
  for (const auto& [mu0, vmu, vpop, y01, y10] :
       {std::tuple{0.0, 1.0, 1.0, 1, -1}, std::tuple{-1.0, 0.5, 1.0, 1, 1},
        std::tuple{0.5, 1.0, 0.5, -1, -1}}) {
    const ModelConfig c = popularity_config(mu0, vmu, vpop);
    const std::vector<DyadObservation> obs{{0, 1, y01}, {1, 0, y10}};
    const FitResult r = fit_period(init_priors(c, 2, 2), obs, {}, 0.0, c, 0.0, 7);
    ASSERT_TRUE(r.converged);
    const double v = vmu + 2 * vpop;
    const auto p = oracle::tilted_pair_mean(mu0, mu0, v, v, vmu, [&](double x, double y) {
      return oracle::sigmoid(y01 * x) * oracle::sigmoid(y10 * y);
    });
    Eigen::Matrix2d s;
    s << v, vmu, vmu, v;
    const Eigen::Vector2d w = s.inverse() * Eigen::Vector2d(p.x - mu0, p.y - mu0);
    const double want_mu = mu0 + vmu * (w[0] + w[1]);
    const double want_a0 = vpop * w[0], want_b1 = vpop * w[0];
    const double want_a1 = vpop * w[1], want_b0 = vpop * w[1];
    EXPECT_NEAR(r.state.mu.mean(), want_mu, 0.05);
    EXPECT_NEAR(r.state.alpha[0].mean(), want_a0, 0.05);
    EXPECT_NEAR(r.state.alpha[1].mean(), want_a1, 0.05);
    EXPECT_NEAR(r.state.beta[0].mean(), want_b0, 0.05);
    EXPECT_NEAR(r.state.beta[1].mean(), want_b1, 0.05);
  }
}

TEST(FitPeriod, NoFactorsReturnsPriors) {
  const ModelConfig c;
  const ParamState prior = init_priors(c, 5, 5);
  const FitResult r = fit_period(prior, {}, {}, 0.0, c, 0.0, 3);
  EXPECT_EQ(r.state.mu, prior.mu);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.state.alpha[i], prior.alpha[i]);
    EXPECT_TRUE(r.state.u[i].precision.isApprox(prior.u[i].precision));
    EXPECT_TRUE(r.state.u[i].precision_mean.isZero());
  }
}

TEST(FitPeriod, RecordsSamplingRateAndRebasesMu) {
  const ModelConfig c;
  const ParamState prior = init_priors(c, 5, 5);
  const FitResult r = fit_period(prior, {}, {}, std::log(0.1), c, 0.0, 3);
  EXPECT_DOUBLE_EQ(r.state.cc_log_q, std::log(0.1));
  // With no data the corrected mean is still the prior mean.
  EXPECT_NEAR(cc_mean_correction(r.state), prior.mu.mean(), 1e-12);
}

TEST(FitPeriod, DeterministicUnderSeed) {
  const ModelConfig c;
  const ParamState prior = init_priors(c, 10, 10);
  const auto f = random_factors(10, 40, 4);
  std::vector<DyadObservation> obs;
  std::vector<FactorRef> nc;
  for (const FactorRef& r : f) {
    if (r.label > 0) obs.push_back({r.sender, r.receiver, 1});
    else nc.push_back(r);
  }
  const FitResult a = fit_period(prior, obs, nc, 0.0, c, 0.0, 99);
  const FitResult b = fit_period(prior, obs, nc, 0.0, c, 0.0, 99);
  EXPECT_EQ(a.sweeps, b.sweeps);
  EXPECT_EQ(a.state.mu, b.state.mu);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(a.state.alpha[i], b.state.alpha[i]);
    EXPECT_EQ(a.state.u[i].precision_mean, b.state.u[i].precision_mean);
  }
}

TEST(SampleNoncases, AllPolicyReturnsEveryNonEdge) {
  const DyadSet edges({{0, 1}, {2, 0}});
  std::mt19937_64 rng(1);
  const NoncaseSample s = sample_noncases(edges, 3, SamplingPolicy::all(), false, rng);
  EXPECT_EQ(s.factors.size(), 4u);
  EXPECT_EQ(s.available, 4u);
  EXPECT_DOUBLE_EQ(s.log_q, 0.0);
  for (const FactorRef& f : s.factors) {
    EXPECT_NE(f.sender, f.receiver);
    EXPECT_FALSE(edges.contains(f.sender, f.receiver));
    EXPECT_EQ(f.label, -1);
  }
  std::mt19937_64 rng2(1);
  EXPECT_EQ(sample_noncases(edges, 3, SamplingPolicy::all(), true, rng2).factors.size(), 7u);
}

TEST(SampleNoncases, SimulationScaleFactorCount) {
  std::mt19937_64 g(8);
  std::uniform_int_distribution<NodeId> node(0, 499);
  std::vector<Edge> e;
  while (e.size() < 2000) {
    const NodeId i = node(g), j = node(g);
    if (i != j) e.push_back({i, j});
  }
  const DyadSet edges(std::move(e));
  std::mt19937_64 rng(5);
  const NoncaseSample s = sample_noncases(edges, 500, SamplingPolicy::proportion(0.025), false, rng);
  const double total = static_cast<double>(s.factors.size() + edges.size());
  EXPECT_NEAR(total, 8200, 250);
  EXPECT_EQ(s.available, 500u * 499u - edges.size());
  EXPECT_NEAR(s.log_q, std::log(static_cast<double>(s.factors.size()) / s.available), 1e-12);
  EXPECT_TRUE(std::is_sorted(s.factors.begin(), s.factors.end(), [](auto& a, auto& b) {
    return std::pair(a.sender, a.receiver) < std::pair(b.sender, b.receiver);
  }));
  std::set<std::pair<NodeId, NodeId>> uniq;
  for (const FactorRef& f : s.factors) {
    uniq.insert({f.sender, f.receiver});
    EXPECT_FALSE(edges.contains(f.sender, f.receiver));
  }
  EXPECT_EQ(uniq.size(), s.factors.size());

  std::mt19937_64 rng2(5);
  EXPECT_EQ(sample_noncases(edges, 500, SamplingPolicy::proportion(0.025), false, rng2).factors,
            s.factors);
}

TEST(SampleNoncases, CountClampsAndRatioScales) {
  const DyadSet edges({{0, 1}, {1, 2}});
  std::mt19937_64 rng(1);
  const NoncaseSample all = sample_noncases(edges, 4, SamplingPolicy::count(1000), false, rng);
  EXPECT_EQ(all.factors.size(), 10u);
  EXPECT_DOUBLE_EQ(all.log_q, 0.0);
  const NoncaseSample r = sample_noncases(edges, 4, SamplingPolicy::edge_ratio(2.0), false, rng);
  EXPECT_EQ(r.factors.size(), 4u);
  const NoncaseSample none = sample_noncases(DyadSet{}, 4, SamplingPolicy::edge_ratio(2.0), false, rng);
  EXPECT_TRUE(none.factors.empty());
}
