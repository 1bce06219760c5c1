#include "fjres/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "fjres/error.hpp"
#include "fjres/format.hpp"
#include "fjres/numerics.hpp"

namespace fjres {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------- models

PriorModel::PriorModel(PriorKind kind, MatrixXd sigma) : kind_(kind), sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() == 0) {
    throw InvalidArgument("prior covariance must be square and non-empty");
  }
  if (!numerics::is_symmetric(sigma_, 1e-12)) throw InvalidArgument("prior covariance must be symmetric");
  Eigen::LLT<MatrixXd> llt(sigma_);
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument("prior covariance is not positive definite (Cholesky failed)");
  }
  chol_ = llt.matrixL();
}

PriorModel PriorModel::diagonal(const VectorXd& variances) {
  if ((variances.array() <= 0.0).any()) throw InvalidArgument("prior variances must be positive");
  return PriorModel(PriorKind::Diagonal, variances.asDiagonal().toDenseMatrix());
}

PriorModel PriorModel::identity(int n, double variance) {
  return diagonal(VectorXd::Constant(n, variance));
}

PriorModel PriorModel::exp_decay(const Network& net, double base, double rate) {
  if (!(base > 0.0) || !(rate >= 0.0)) throw InvalidArgument("exp_decay: base must be > 0 and rate >= 0");
  const Eigen::MatrixXi hops = shortest_path_lengths(net);
  const int n = net.size();
  MatrixXd sigma(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      sigma(i, j) = i == j ? 1.0 : std::pow(base, -rate * hops(i, j));
    }
  }
  return PriorModel(PriorKind::ExpDecay, std::move(sigma));
}

PriorModel PriorModel::explicit_covariance(const MatrixXd& sigma) {
  return PriorModel(PriorKind::Explicit, sigma);
}

bool PriorModel::is_diagonal() const { return numerics::is_diagonal(sigma_); }

MisbehaviorModel::MisbehaviorModel(MatrixXd bias_cov, MatrixXd noise_cov,
                                   std::optional<VectorXd> fixed_bias)
    : v_(std::move(bias_cov)), q_(std::move(noise_cov)), fixed_bias_(std::move(fixed_bias)) {
  if (v_.rows() != v_.cols() || q_.rows() != q_.cols() || v_.rows() != q_.rows()) {
    throw InvalidArgument("misbehavior covariances must be square with matching size");
  }
  if (fixed_bias_ && fixed_bias_->size() != v_.rows()) {
    throw InvalidArgument("fixed bias length must equal the number of misbehaving nodes");
  }
  if (!numerics::is_symmetric(v_) || !numerics::is_symmetric(q_)) {
    throw InvalidArgument("misbehavior covariances must be symmetric");
  }
  v_factor_ = numerics::psd_factor(v_);
  q_factor_ = numerics::psd_factor(q_);
}

MisbehaviorModel MisbehaviorModel::scalar(int m, double d, double q) {
  if (m < 0 || d < 0.0 || q < 0.0) throw InvalidArgument("misbehavior intensities must be nonnegative");
  return MisbehaviorModel(d * MatrixXd::Identity(m, m), q * MatrixXd::Identity(m, m));
}

MisbehaviorModel MisbehaviorModel::with_bias_cov(const MatrixXd& v) const {
  return MisbehaviorModel(v, q_);
}

MisbehaviorModel MisbehaviorModel::with_noise_cov(const MatrixXd& q) const {
  return MisbehaviorModel(v_, q, fixed_bias_);
}

void check_models(const Network& net, const PriorModel& prior, const MisbehaviorModel& mis) {
  if (prior.size() != net.size()) throw InvalidArgument("prior size does not match the network");
  if (mis.size() != net.misbehaving_count()) {
    throw InvalidArgument("misbehavior model size does not match the number of misbehaving nodes");
  }
}

// ---------------------------------------------------------------- sampling

namespace {

VectorXd standard_normal(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

}  // namespace

World sample_world(const PriorModel& prior, const MisbehaviorModel& mis, Rng& rng) {
  World w;
  w.theta = prior.cholesky_lower() * standard_normal(prior.size(), rng);
  if (mis.fixed_bias()) {
    w.bias = *mis.fixed_bias();
  } else {
    w.bias = mis.bias_factor() * standard_normal(mis.size(), rng);
  }
  return w;
}

VectorXd sample_noise(const MisbehaviorModel& mis, Rng& rng) {
  if (mis.size() == 0) return VectorXd(0);
  return mis.noise_factor() * standard_normal(mis.size(), rng);
}

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::Consensus: return "consensus";
    case Protocol::FJ: return "fj";
    case Protocol::WMSR: return "wmsr";
    case Protocol::SABA: return "saba";
  }
  return "fj";
}

Protocol protocol_from_string(const std::string& name) {
  if (name == "consensus") return Protocol::Consensus;
  if (name == "fj") return Protocol::FJ;
  if (name == "wmsr") return Protocol::WMSR;
  if (name == "saba") return Protocol::SABA;
  throw InvalidArgument("unknown protocol '" + name + "'");
}

// ---------------------------------------------------------------- steps

namespace {

void set_misbehaving(const Network& net, VectorXd& out, const VectorXd& theta, const VectorXd& bias,
                     const VectorXd& noise) {
  const int m = net.misbehaving_count();
  if (m == 0) return;
  out.tail(m) = theta.tail(m) + bias;
  if (noise.size() == m) out.tail(m) += noise;
}

void check_state(const Network& net, const VectorXd& x, const VectorXd& theta, const VectorXd& bias) {
  if (x.size() != net.size() || theta.size() != net.size() || bias.size() != net.misbehaving_count()) {
    throw InvalidArgument("state, observation or bias vector has the wrong size");
  }
}

}  // namespace

VectorXd step_fj(const Network& net, double lambda, const VectorXd& x, const VectorXd& theta,
                 const VectorXd& bias, const VectorXd& noise) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  check_state(net, x, theta, bias);
  const MatrixXd& w = net.weights();
  VectorXd out(net.size());
  for (int i = 0; i < net.regular_count(); ++i) {
    double acc = 0.0;
    for (int j : net.neighbors(i)) acc += w(i, j) * x(j);
    out(i) = lambda * theta(i) + (1.0 - lambda) * acc;
  }
  set_misbehaving(net, out, theta, bias, noise);
  return out;
}

VectorXd step_consensus(const Network& net, const VectorXd& x, const VectorXd& theta, const VectorXd& bias,
                        const VectorXd& noise) {
  return step_fj(net, 0.0, x, theta, bias, noise);
}

double wmsr_update(double own, const std::vector<double>& values, int trim) {
  if (trim < 0) throw InvalidArgument("W-MSR trim parameter must be nonnegative");
  // Indices of strictly larger / smaller values, farthest from own first, then
  // lower neighbor index first.
  std::vector<std::size_t> above;
  std::vector<std::size_t> below;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] > own) above.push_back(k);
    if (values[k] < own) below.push_back(k);
  }
  auto farthest_first = [&](std::size_t a, std::size_t b) {
    const double da = std::abs(values[a] - own);
    const double db = std::abs(values[b] - own);
    return da != db ? da > db : a < b;
  };
  std::sort(above.begin(), above.end(), farthest_first);
  std::sort(below.begin(), below.end(), farthest_first);
  std::vector<char> dropped(values.size(), 0);
  for (std::size_t k = 0; k < above.size() && k < static_cast<std::size_t>(trim); ++k) dropped[above[k]] = 1;
  for (std::size_t k = 0; k < below.size() && k < static_cast<std::size_t>(trim); ++k) dropped[below[k]] = 1;

  double sum = own;
  int count = 1;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!dropped[k]) {
      sum += values[k];
      ++count;
    }
  }
  return sum / count;
}

VectorXd step_wmsr(const Network& net, int trim, const VectorXd& x, const VectorXd& theta,
                   const VectorXd& bias, const VectorXd& noise) {
  check_state(net, x, theta, bias);
  VectorXd out(net.size());
  std::vector<double> values;
  for (int i = 0; i < net.regular_count(); ++i) {
    values.clear();
    for (int j : net.neighbors(i)) values.push_back(x(j));
    out(i) = wmsr_update(x(i), values, trim);
  }
  set_misbehaving(net, out, theta, bias, noise);
  return out;
}

void RunningMedian::push(double value) {
  if (low_.empty() || value <= low_.top()) {
    low_.push(value);
  } else {
    high_.push(value);
  }
  if (low_.size() > high_.size() + 1) {
    high_.push(low_.top());
    low_.pop();
  } else if (high_.size() > low_.size()) {
    low_.push(high_.top());
    high_.pop();
  }
}

double RunningMedian::median() const {
  if (low_.empty()) throw InvalidArgument("median of an empty buffer");
  if (low_.size() > high_.size()) return low_.top();
  return 0.5 * (low_.top() + high_.top());
}

VectorXd step_saba(const Network& net, SabaBuffers& buffers, const VectorXd& x, const VectorXd& theta,
                   const VectorXd& bias, const VectorXd& noise) {
  check_state(net, x, theta, bias);
  if (static_cast<int>(buffers.per_node.size()) != net.size()) buffers = SabaBuffers(net.size());
  for (int j = 0; j < net.size(); ++j) buffers.per_node[j].push(x(j));
  const MatrixXd& w = net.weights();
  VectorXd out(net.size());
  for (int i = 0; i < net.regular_count(); ++i) {
    double acc = 0.0;
    for (int j : net.neighbors(i)) acc += w(i, j) * buffers.per_node[j].median();
    out(i) = acc;
  }
  set_misbehaving(net, out, theta, bias, noise);
  return out;
}

// ---------------------------------------------------------------- simulation

double regular_cost(const Network& net, const VectorXd& x, const VectorXd& theta) {
  const int r = net.regular_count();
  const double mean = theta.head(r).mean();
  return (x.head(r).array() - mean).square().sum();
}

namespace {

// Runs one trial and calls on_step(k, x, world) for k = 0..horizon.
template <class OnStep>
void run_trial(const Network& net, Protocol protocol, const ProtocolParams& params, const PriorModel& prior,
               const MisbehaviorModel& mis, int horizon, Rng& rng, OnStep&& on_step) {
  const int r = net.regular_count();
  World world = sample_world(prior, mis, rng);
  VectorXd x(net.size());
  x.head(r) = world.theta.head(r);
  set_misbehaving(net, x, world.theta, world.bias, sample_noise(mis, rng));
  on_step(0, x, world);

  SabaBuffers buffers(protocol == Protocol::SABA ? net.size() : 0);
  for (int k = 1; k <= horizon; ++k) {
    VectorXd noise = sample_noise(mis, rng);
    switch (protocol) {
      case Protocol::Consensus: x = step_consensus(net, x, world.theta, world.bias, noise); break;
      case Protocol::FJ: x = step_fj(net, params.lambda, x, world.theta, world.bias, noise); break;
      case Protocol::WMSR: x = step_wmsr(net, params.trim, x, world.theta, world.bias, noise); break;
      case Protocol::SABA: x = step_saba(net, buffers, x, world.theta, world.bias, noise); break;
    }
    on_step(k, x, world);
  }
}

void check_run(const Network& net, const ProtocolParams& params, const PriorModel& prior,
               const MisbehaviorModel& mis, int horizon) {
  check_models(net, prior, mis);
  if (horizon < 1) throw InvalidArgument("horizon must be at least 1");
  if (!(params.lambda >= 0.0 && params.lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
}

double final_cost(const Network& net, Protocol protocol, const ProtocolParams& params, const PriorModel& prior,
                  const MisbehaviorModel& mis, int horizon, std::uint64_t seed, int trial) {
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(trial));
  double cost = 0.0;
  run_trial(net, protocol, params, prior, mis, horizon, rng, [&](int k, const VectorXd& x, const World& w) {
    if (k == horizon) cost = regular_cost(net, x, w.theta);
  });
  return cost;
}

MCEstimate summarize(const std::vector<double>& costs, int horizon) {
  const int n = static_cast<int>(costs.size());
  double mean = 0.0;
  for (double c : costs) mean += c;
  mean /= n;
  double ss = 0.0;
  for (double c : costs) ss += (c - mean) * (c - mean);
  const double sd = std::sqrt(ss / (n - 1));
  return {mean, sd / std::sqrt(static_cast<double>(n)), n, horizon};
}

void check_trials(int trials) {
  if (trials < kMinMonteCarloTrials) {
    throw InvalidArgument("Monte Carlo estimates need at least " + std::to_string(kMinMonteCarloTrials) +
                          " trials");
  }
}

}  // namespace

Trajectory simulate(const Network& net, Protocol protocol, const ProtocolParams& params, const PriorModel& prior,
                    const MisbehaviorModel& mis, int horizon, Rng& rng) {
  check_run(net, params, prior, mis, horizon);
  Trajectory traj;
  traj.horizon = horizon;
  traj.states.resize(horizon + 1, net.size());
  traj.noise.reserve(horizon + 1);
  // Reconstruct the noise from the misbehaving rows after the fact.
  run_trial(net, protocol, params, prior, mis, horizon, rng, [&](int k, const VectorXd& x, const World& w) {
    traj.states.row(k) = x.transpose();
    if (k == 0) {
      traj.theta = w.theta;
      traj.bias = w.bias;
    }
    const int m = net.misbehaving_count();
    traj.noise.push_back(x.tail(m) - w.theta.tail(m) - w.bias);
  });
  return traj;
}

void write_trajectory_csv(const Network& net, const Trajectory& traj, std::ostream& out) {
  out << "k,node_id,role,state\n";
  for (int k = 0; k <= traj.horizon; ++k) {
    for (int i = 0; i < net.size(); ++i) {
      out << k << ',' << net.label(i) << ',' << (i < net.regular_count() ? "regular" : "misbehaving") << ','
          << fmt(traj.states(k, i)) << '\n';
    }
  }
}

MCEstimate mc_cost(const Network& net, Protocol protocol, const ProtocolParams& params, const PriorModel& prior,
                   const MisbehaviorModel& mis, int horizon, int trials, std::uint64_t seed) {
  check_run(net, params, prior, mis, horizon);
  check_trials(trials);
  std::vector<double> costs(trials);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < trials; ++t) {
    costs[t] = final_cost(net, protocol, params, prior, mis, horizon, seed, t);
  }
  return summarize(costs, horizon);
}

MCEstimate mc_cost_serial(const Network& net, Protocol protocol, const ProtocolParams& params,
                          const PriorModel& prior, const MisbehaviorModel& mis, int horizon, int trials,
                          std::uint64_t seed) {
  check_run(net, params, prior, mis, horizon);
  check_trials(trials);
  std::vector<double> costs(trials);
  for (int t = 0; t < trials; ++t) costs[t] = final_cost(net, protocol, params, prior, mis, horizon, seed, t);
  return summarize(costs, horizon);
}

std::vector<double> mc_cost_curve(const Network& net, Protocol protocol, const ProtocolParams& params,
                                  const PriorModel& prior, const MisbehaviorModel& mis, int horizon, int trials,
                                  std::uint64_t seed) {
  check_run(net, params, prior, mis, horizon);
  if (trials < 1) throw InvalidArgument("trials must be positive");
  std::vector<std::vector<double>> per_trial(trials, std::vector<double>(horizon + 1));
#pragma omp parallel for schedule(static)
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
    run_trial(net, protocol, params, prior, mis, horizon, rng, [&](int k, const VectorXd& x, const World& w) {
      per_trial[t][k] = regular_cost(net, x, w.theta);
    });
  }
  std::vector<double> mean(horizon + 1, 0.0);
  for (int t = 0; t < trials; ++t) {
    for (int k = 0; k <= horizon; ++k) mean[k] += per_trial[t][k];
  }
  for (double& v : mean) v /= trials;
  return mean;
}

int horizon_for_tolerance(const Network& net, double lambda, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("tolerance must lie in (0, 1)");
  const double rate = (1.0 - lambda) * numerics::spectral_radius(net.regular_block());
  if (rate <= 0.0) return 1;
  if (rate >= 1.0) throw InvalidArgument("FJ dynamics is not contracting for this lambda");
  return std::max(1, static_cast<int>(std::ceil(std::log(tol) / std::log(rate))));
}

}  // namespace fjres
