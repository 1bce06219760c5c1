#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include <omp.h>

#include "fjres/analysis.hpp"
#include "fjres/error.hpp"
#include "fjres/numerics.hpp"
#include "support.hpp"

using namespace fjres;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using fjres::test::max_abs;

namespace {

struct Instance {
  Network net;
  PriorModel prior;
  MisbehaviorModel mis;
};

Instance random_case(std::uint64_t seed, int n, int m, bool diagonal, double d = 3.0, double q = 1.0) {
  Rng rng = make_rng(seed, 1);
  Instance c{test::random_instance(seed, n, m), PriorModel::identity(n), MisbehaviorModel::scalar(m, d, q)};
  if (diagonal) {
    std::uniform_real_distribution<double> u(0.5, 2.0);
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = u(rng);
    c.prior = PriorModel::diagonal(v);
  } else {
    c.prior = PriorModel::explicit_covariance(test::random_spd(n, rng));
  }
  c.mis = MisbehaviorModel(test::random_psd(m, rng, d), test::random_psd(m, rng, q));
  return c;
}

// e_v at λ = 1 for any Σ: tr Σ11 − Σ(Σ11)/R.
double ev_at_one(const MatrixXd& sigma, int r) {
  const MatrixXd s11 = sigma.topLeftCorner(r, r);
  return s11.trace() - s11.sum() / r;
}

// e_v at λ → 0 for M = 1: L1 → 0, L2 → 𝟙, so E = [−C_R | 𝟙].
double ev_at_zero(const MatrixXd& sigma, double d, int r) {
  const MatrixXd s11 = sigma.topLeftCorner(r, r);
  return s11.sum() / r - 2.0 * sigma.col(r).head(r).sum() + r * (sigma(r, r) + d);
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("actual weight matrix") {
  const Network all = generate(GraphSpec::k_regular(8, 3, 1));
  CHECK(max_abs(build_actual_w(all).w - all.weights()) == 0.0);
  const ActualWeightMatrix two = build_actual_w(test::two_node());
  MatrixXd expected(2, 2);
  expected << 0, 1, 0, 1;
  CHECK(two.w == expected);
  const Network star = mark_misbehaving(test::star(5), {2, 3, 4, 5});
  const ActualWeightMatrix w = build_actual_w(star);
  CHECK(w.regular == 1);
  CHECK(max_abs(w.w.bottomRows(4) - MatrixXd::Identity(5, 5).bottomRows(4)) == 0.0);
  CHECK(max_abs(w.w.row(0) - star.weights().row(0)) == 0.0);
}

TEST_CASE("resolvent") {
  const Network two = test::two_node();
  MatrixXd expected(2, 2);
  expected << 0.5, 0.5, 0, 1;
  CHECK(max_abs(resolvent_l(two, 0.5) - expected) <= 1e-15);

  const Network net = test::random_instance(3, 15, 1);
  CHECK(max_abs(resolvent_l(net, 1.0) - MatrixXd::Identity(15, 15)) <= 1e-15);
  for (double lambda : {1e-6, 1e-3, 0.2, 0.7, 1.0}) {
    const MatrixXd l = resolvent_l(net, lambda);
    CHECK(max_abs(l.rowwise().sum() - VectorXd::Ones(15)) <= 1e-10);
    CHECK(l.minCoeff() >= -1e-12);
  }
  // λ → 0⁺ with one attacker: L → [[0, 𝟙],[0, 1]]
  const MatrixXd l0 = resolvent_l(net, 1e-6);
  CHECK(max_abs(l0.topLeftCorner(14, 14)) <= 1e-4);
  CHECK(max_abs(l0.topRightCorner(14, 1) - VectorXd::Ones(14)) <= 1e-4);
  CHECK(max_abs(resolvent_l(net, 0.0).topRightCorner(14, 1) - VectorXd::Ones(14)) <= 1e-12);

  // more attackers: the limit of L2 is G = (I − W_reg)⁻¹W_mal
  const Network multi = test::random_instance(4, 15, 3);
  CHECK(max_abs(resolvent_l(multi, 1e-7).topRightCorner(12, 3) - absorption_matrix(multi)) <= 1e-5);

  // all-regular limit is the Perron projector
  const Network plain = generate(GraphSpec::erdos_renyi(12, 0.4, 2));
  const MatrixXd lim = resolvent_l(plain, 0.0);
  CHECK(max_abs(lim - resolvent_l(plain, 1e-9)) <= 1e-6);
  CHECK(max_abs(lim * plain.weights() - lim) <= 1e-12);
}

TEST_CASE("steady-state covariance") {
  MatrixXd q(1, 1);
  q << 2.0;
  CHECK(steady_state_p(test::two_node(), 0.5, q)(0, 0) == doctest::Approx(0.5));
  const Network net = test::random_instance(5, 12, 2);
  CHECK(max_abs(steady_state_p(net, 1.0, MatrixXd::Identity(2, 2))) == 0.0);

  // long-run covariance of noise-driven states, θ = 0 and v = 0
  const double lambda = 0.4;
  Rng rng(17);
  const MatrixXd qm = test::random_psd(2, rng, 1.0) + 0.2 * MatrixXd::Identity(2, 2);
  const MisbehaviorModel mis(MatrixXd::Zero(2, 2), qm);
  const MatrixXd p = steady_state_p(net, lambda, qm);
  const int paths = 10000;
  const int horizon = 80;
  const VectorXd zero = VectorXd::Zero(12), zb = VectorXd::Zero(2);
  MatrixXd samples(paths, 10);
  for (int s = 0; s < paths; ++s) {
    VectorXd x = VectorXd::Zero(12);
    x.tail(2) = sample_noise(mis, rng);
    for (int k = 0; k < horizon; ++k) x = step_fj(net, lambda, x, zero, zb, sample_noise(mis, rng));
    samples.row(s) = x.head(10).transpose();
  }
  const VectorXd tr_samples = samples.rowwise().squaredNorm();
  const double mean = tr_samples.mean();
  const double se = std::sqrt((tr_samples.array() - mean).square().sum() / (paths - 1) / paths);
  CHECK(std::abs(mean - p.trace()) <= 3.0 * se);
  const MatrixXd cov = samples.transpose() * samples / paths;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const VectorXd prod = samples.col(i).cwiseProduct(samples.col(j));
      const double sd = std::sqrt((prod.array() - prod.mean()).square().sum() / (paths - 1) / paths);
      CHECK(std::abs(cov(i, j) - p(i, j)) <= 4.5 * sd);
    }
}

TEST_CASE("error terms and decomposition") {
  const Network two = test::two_node();
  for (double d : {0.0, 1.0, 7.5})
    for (double q : {0.0, 2.0}) {
      const auto rep = error_terms(two, 0.5, PriorModel::identity(2), MisbehaviorModel::scalar(1, d, q));
      CHECK(rep.e_v == doctest::Approx(0.5 + 0.25 * d).epsilon(1e-14));
      CHECK(rep.e_n == doctest::Approx(0.25 * q).epsilon(1e-14));
      CHECK(rep.e_total == doctest::Approx(0.5 + 0.25 * d + 0.25 * q).epsilon(1e-14));
      CHECK(rep.e_consensus == doctest::Approx(0.25).epsilon(1e-14));
      CHECK(rep.e_deception == doctest::Approx((1 + d) * 0.25 + 0.25 * q).epsilon(1e-14));
      CHECK(social_power(two, 0.5, 1)(0) == doctest::Approx(0.5));
    }

  const Network net = test::random_instance(6, 14, 1);
  const auto one = error_terms(net, 1.0, PriorModel::identity(14), MisbehaviorModel::scalar(1, 4.0, 2.0));
  CHECK(one.e_v == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(one.e_n == 0.0);
  CHECK(one.e_deception == doctest::Approx(0.0));
  CHECK(one.e_consensus == doctest::Approx(one.e_v).epsilon(1e-12));
  CHECK(max_abs(social_power(net, 1.0, 13)) <= 1e-15);

  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Instance c = random_case(seed, 12, 1, true);
    const ErrorModel model(c.net, c.prior, c.mis);
    double prev_dec = std::numeric_limits<double>::infinity();
    VectorXd prev_power = VectorXd::Constant(11, std::numeric_limits<double>::infinity());
    for (double lambda : lambda_grid(40)) {
      const ErrorPoint p = model.point(lambda);
      CHECK(std::abs(p.e_deception + p.e_consensus - p.e_total) <= 1e-9);
      CHECK(p.e_v >= 0.0);
      CHECK(p.e_n >= 0.0);
      CHECK(p.e_deception <= prev_dec + 1e-12);
      prev_dec = p.e_deception;
      const VectorXd power = social_power(c.net, lambda, 11);
      CHECK((power.array() <= prev_power.array() + 1e-12).all());
      prev_power = power;
    }
    const Decomposition dec = decomposition(c.net, 0.3, c.prior, c.mis);
    CHECK(dec.e_deception == doctest::Approx(model.point(0.3).e_deception));
  }
  const Instance multi = random_case(3, 12, 2, true);
  CHECK_THROWS_AS(decomposition(multi.net, 0.3, multi.prior, multi.mis), InvalidArgument);
  const Instance corr = random_case(3, 12, 1, false);
  CHECK_THROWS_AS(decomposition(corr.net, 0.3, corr.prior, corr.mis), InvalidArgument);
  CHECK(std::isnan(ErrorModel(corr.net, corr.prior, corr.mis).point(0.3).e_deception));
  CHECK_THROWS_AS(social_power(net, 0.5, 0), InvalidArgument);
}

TEST_CASE("noise error decreases to zero") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Instance c = random_case(seed, 14, 1 + seed % 3, seed % 2 == 0);
    const ErrorModel model(c.net, c.prior, c.mis);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : lambda_grid(50)) {
      const double en = model.e_n(lambda);
      CHECK(en < prev);
      prev = en;
    }
    CHECK(model.e_n(1.0) <= 1e-12);
  }
}

TEST_CASE("symmetric fast path agrees with the general solve") {
  const Network net = mark_misbehaving(generate(GraphSpec::k_regular(30, 4, 3)), {5, 17});
  const MisbehaviorModel mis = MisbehaviorModel::scalar(2, 1.0, 2.0);
  const ErrorModel model(net, PriorModel::identity(30), mis);
  for (double lambda : {0.0, 0.05, 0.4, 0.9}) {
    const MatrixXd a = (1 - lambda) * net.regular_block();
    const MatrixXd s = (1 - lambda) * (1 - lambda) * net.misbehaving_block() * mis.noise_cov() *
                       net.misbehaving_block().transpose();
    CHECK(max_abs(model.steady_state_p(lambda) - numerics::lyapunov_doubling(a, s)) <= 1e-10);
  }
}

TEST_CASE("derivative matches central differences") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Instance c = random_case(seed, 12, 1 + seed % 3, seed % 2 == 1, 4.0, 2.0);
    const ErrorModel model(c.net, c.prior, c.mis);
    for (double lambda : {0.2, 0.5, 0.8}) {
      const double h = 1e-5;
      const double fd = (model.total(lambda + h) - model.total(lambda - h)) / (2 * h);
      const double an = model.derivative(lambda).total();
      CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      const double fdn = (model.e_n(lambda + h) - model.e_n(lambda - h)) / (2 * h);
      CHECK(std::abs(model.derivative(lambda).d_n - fdn) <= 1e-6 * std::max(1.0, std::abs(fdn)));
    }
    CHECK(error_derivative(c.net, 0.5, c.prior, c.mis) == doctest::Approx(model.derivative(0.5).total()));
  }
  // endpoint signs under diagonal Σ with nontrivial misbehavior
  const Instance c = random_case(11, 12, 1, true, 5.0, 1.0);
  const ErrorModel model(c.net, c.prior, c.mis);
  CHECK(model.derivative(1.0).total() > 0.0);
  CHECK(model.derivative(1e-4).total() < 0.0);
}

TEST_CASE("Gamma") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Network net = generate(GraphSpec::k_regular(16, 3 + seed % 3, seed));
    net = mark_misbehaving(net, {static_cast<int>(seed), static_cast<int>(seed + 7)});
    const GammaBlocks closed = gamma_blocks(net);
    const GammaBlocks spec = gamma_spectral(net);
    const GammaBlocks fd = gamma_finite_difference(net);
    CHECK(max_abs(closed.gamma - spec.gamma) <= 1e-9);
    CHECK(max_abs(closed.gamma - fd.gamma) <= 1e-3);
    CHECK(max_abs(closed.gamma * VectorXd::Ones(16)) <= 1e-9);
    CHECK(closed.gamma1.minCoeff() >= -1e-9);
    CHECK(closed.gamma2.maxCoeff() <= 1e-9);
    CHECK(max_abs(closed.gamma.bottomRows(2)) == 0.0);
  }
  // all-regular C4: Γ v = (1 − μ)⁻¹ v on non-unit eigenvectors, Γ𝟙 = 0
  const Network c4 = test::cycle(4);
  const GammaBlocks g = gamma_blocks(c4);
  const auto eig = numerics::eig_sym(c4.weights());
  for (int k = 0; k < 4; ++k) {
    const VectorXd v = eig.vectors.col(k);
    const double mu = eig.values(k);
    if (std::abs(1 - mu) < 1e-9) CHECK(max_abs(g.gamma * v) <= 1e-12);
    else CHECK(max_abs(g.gamma * v - v / (1 - mu)) <= 1e-12);
  }
  CHECK(max_abs(gamma_spectral(c4).gamma - g.gamma) <= 1e-12);
  CHECK_THROWS_AS(gamma_spectral(test::random_instance(2, 10, 1, 0.5)), InvalidArgument);
}

TEST_CASE("endpoint closed forms") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Instance c = random_case(seed, 13, 1, false, 2.0 + seed);
    const ErrorModel model(c.net, c.prior, c.mis);
    CHECK(std::abs(model.e_v(1.0) - ev_at_one(c.prior.sigma(), 12)) <= 1e-10);
    const double ref = ev_at_zero(c.prior.sigma(), c.mis.bias_cov()(0, 0), 12);
    CHECK(std::abs(model.e_v(1e-5) - ref) <= 1e-3 * std::abs(ref));
  }
}

TEST_CASE("endpoint condition matches the endpoints") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng = make_rng(seed, 5);
    std::uniform_real_distribution<double> u(0.0, 6.0);
    const Instance c = random_case(seed, 10, 1 + seed % 3, seed % 2 == 0, u(rng), u(rng));
    const ErrorModel model(c.net, c.prior, c.mis);
    const Prop1Check p = check_prop1(c.net, c.prior, c.mis);
    const double gap = model.total(1e-5) - model.total(1.0);
    if (std::abs(gap) < 1e-6) continue;
    CHECK(p.full_competition_better == (gap > 0));
    ++checked;
  }
  CHECK(checked >= 25);
  const Network two = test::two_node();
  CHECK(check_prop1(two, PriorModel::identity(2), MisbehaviorModel::scalar(1, 0, 0)).full_competition_better);
  MatrixXd quiet = MatrixXd::Identity(12, 12);
  quiet(11, 11) = 0.01;
  const Network ring = mark_misbehaving(generate(GraphSpec::k_regular(12, 3, 4)), {12});
  CHECK_FALSE(check_prop1(ring, PriorModel::explicit_covariance(quiet), MisbehaviorModel::scalar(1, 0, 0))
                  .full_competition_better);
  CHECK(check_prop1(two, PriorModel::identity(2), MisbehaviorModel::scalar(1, 50, 0)).full_competition_better);
  CHECK_THROWS_AS(check_prop1(generate(GraphSpec::k_regular(6, 2, 1)), PriorModel::identity(6),
                              MisbehaviorModel::scalar(0, 0, 0)),
                  InvalidArgument);
}

TEST_CASE("interior optimum condition") {
  const Instance diag = random_case(1, 12, 1, true);
  CHECK(check_theorem1(diag.net, diag.prior, diag.mis).condition == Theorem1Condition::C1);

  // correlated priors on a regular graph: C2 holds, optimum interior
  Network net = mark_misbehaving(generate(GraphSpec::k_regular(12, 3, 4)), {12});
  MatrixXd sigma = MatrixXd::Constant(12, 12, 0.95);
  sigma.diagonal().setOnes();
  const PriorModel prior = PriorModel::explicit_covariance(sigma);
  const MisbehaviorModel honest = MisbehaviorModel::scalar(1, 0, 0);
  const Theorem1Check t = check_theorem1(net, prior, honest);
  CHECK(t.condition == Theorem1Condition::C2);
  CHECK(t.lhs > t.rhs);
  const double star = optimal_lambda(net, prior, honest).lambda;
  CHECK(star > kLambdaGridMin);
  CHECK(star < 1.0);
  // same priors on an irregular graph: no claim
  const Network irregular = test::random_instance(4, 12, 1, 0.4);
  const Theorem1Check none = check_theorem1(irregular, prior, honest);
  CHECK(none.condition == Theorem1Condition::Neither);
  CHECK(std::isnan(none.lhs));

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Instance c = random_case(seed, 12, 1 + seed % 2, seed % 3 == 0, 6.0, 1.0);
    if (check_theorem1(c.net, c.prior, c.mis).condition == Theorem1Condition::Neither) continue;
    const ErrorModel model(c.net, c.prior, c.mis);
    const auto curve = error_curve(model, lambda_grid(256));
    const auto best = std::min_element(curve.begin(), curve.end(),
                                       [](const ErrorPoint& a, const ErrorPoint& b) { return a.e_total < b.e_total; });
    CHECK(best != curve.begin());
    CHECK(best != curve.end() - 1);
  }
}

TEST_CASE("optimal lambda") {
  const Network plain = generate(GraphSpec::k_regular(12, 3, 2));
  const OptimalLambda nominal = optimal_lambda(plain, PriorModel::identity(12), MisbehaviorModel::scalar(0, 0, 0));
  CHECK(nominal.lambda == doctest::Approx(kLambdaGridMin).epsilon(1e-6));
  CHECK(nominal.error <= 1e-2);

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Instance c = random_case(seed, 12, 1, true, 8.0, 1.0);
    const ErrorModel model(c.net, c.prior, c.mis);
    const OptimalLambda opt = optimal_lambda(model);
    double brute = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 20000; ++k) brute = std::min(brute, model.total(kLambdaGridMin + (1 - kLambdaGridMin) * k / 20000.0));
    CHECK(opt.error <= brute + 1e-9);
    CHECK(opt.error == doctest::Approx(model.total(opt.lambda)));
  }

  // monotone in the intensities
  const Instance c = random_case(7, 14, 1, true);
  const Network& net = c.net;
  double prev_star = 0.0;
  std::vector<double> prev_curve;
  for (double d : {0.0, 2.0, 10.0, 50.0}) {
    const ErrorModel model(net, c.prior, MisbehaviorModel::scalar(1, d, 0.5));
    std::vector<double> curve;
    for (const ErrorPoint& p : error_curve(model, lambda_grid(64))) curve.push_back(p.e_total);
    if (!prev_curve.empty())
      for (std::size_t k = 0; k + 1 < curve.size(); ++k) CHECK(curve[k] > prev_curve[k]);
    prev_curve = curve;
    const double star = optimal_lambda(model).lambda;
    CHECK(star >= prev_star - 1e-5);
    prev_star = star;
  }
  CHECK_THROWS_AS(optimal_lambda(c.net, c.prior, c.mis, 16), InvalidArgument);
}

TEST_CASE("error curve output") {
  const Instance c = random_case(2, 12, 2, false);
  const ErrorModel model(c.net, c.prior, c.mis);
  const auto grid = lambda_grid(33);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  const auto par = error_curve(model, grid);
  omp_set_num_threads(saved);
  const auto ser = error_curve_serial(model, grid);
  REQUIRE(par.size() == ser.size());
  for (std::size_t k = 0; k < par.size(); ++k) CHECK(par[k].e_total == ser[k].e_total);

  std::stringstream ss;
  write_error_csv(par, ss);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "lambda,e_v,e_n,e_total,e_deception,e_consensus");
  const auto j = to_json(par[3]);
  CHECK(j.at("e_deception").is_null());
  CHECK(j.at("e_total").get<double>() == par[3].e_total);
}

}  // TEST_SUITE
