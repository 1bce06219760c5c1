#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fjres/graphs.hpp"
#include "fjres/rng.hpp"

namespace fjres {

enum class PriorKind { Diagonal, ExpDecay, Explicit };

/// Zero-mean Gaussian prior over the observations θ (N×N covariance Σ ≻ 0),
/// in the network's internal node order.
class PriorModel {
public:
  static PriorModel diagonal(const Eigen::VectorXd& variances);
  static PriorModel identity(int n, double variance = 1.0);
  /// Σ_ij = base^(-rate * hops(i, j)), unit variances.
  static PriorModel exp_decay(const Network& net, double base, double rate);
  static PriorModel explicit_covariance(const Eigen::MatrixXd& sigma);

  PriorKind kind() const { return kind_; }
  int size() const { return static_cast<int>(sigma_.rows()); }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::MatrixXd& cholesky_lower() const { return chol_; }
  bool is_diagonal() const;

private:
  PriorModel(PriorKind kind, Eigen::MatrixXd sigma);

  PriorKind kind_ = PriorKind::Explicit;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd chol_;
};

/// Bias covariance V, noise covariance Q (both M×M PSD) and an optional fixed
/// bias vector that replaces sampling from V.
class MisbehaviorModel {
public:
  MisbehaviorModel() = default;
  MisbehaviorModel(Eigen::MatrixXd bias_cov, Eigen::MatrixXd noise_cov,
                   std::optional<Eigen::VectorXd> fixed_bias = std::nullopt);

  /// V = d·I_M, Q = q·I_M.
  static MisbehaviorModel scalar(int m, double d, double q);

  int size() const { return static_cast<int>(v_.rows()); }
  const Eigen::MatrixXd& bias_cov() const { return v_; }
  const Eigen::MatrixXd& noise_cov() const { return q_; }
  const std::optional<Eigen::VectorXd>& fixed_bias() const { return fixed_bias_; }
  const Eigen::MatrixXd& bias_factor() const { return v_factor_; }
  const Eigen::MatrixXd& noise_factor() const { return q_factor_; }
  bool noiseless() const { return q_.size() == 0 || q_.cwiseAbs().maxCoeff() == 0.0; }

  /// Same model with V replaced (fixed bias dropped).
  MisbehaviorModel with_bias_cov(const Eigen::MatrixXd& v) const;
  MisbehaviorModel with_noise_cov(const Eigen::MatrixXd& q) const;

private:
  Eigen::MatrixXd v_ = Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd q_ = Eigen::MatrixXd(0, 0);
  std::optional<Eigen::VectorXd> fixed_bias_;
  Eigen::MatrixXd v_factor_ = Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd q_factor_ = Eigen::MatrixXd(0, 0);
};

/// Throws unless prior and misbehavior dimensions match the network partition.
void check_models(const Network& net, const PriorModel& prior, const MisbehaviorModel& mis);

struct World {
  Eigen::VectorXd theta;  // N
  Eigen::VectorXd bias;   // M
};

/// θ ~ N(0, Σ), then v ~ N(0, V) (or the fixed bias). θ and v are independent.
World sample_world(const PriorModel& prior, const MisbehaviorModel& mis, Rng& rng);

/// One draw of the deception noise n(k) ~ N(0, Q).
Eigen::VectorXd sample_noise(const MisbehaviorModel& mis, Rng& rng);

enum class Protocol { Consensus, FJ, WMSR, SABA };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& name);

struct ProtocolParams {
  double lambda = 0.0;  // FJ competition
  int trim = 1;         // W-MSR parameter F
};

// Single synchronous steps. Regular rows follow the protocol using x(k);
// misbehaving rows are set to θ_m + v_m + noise_m.

Eigen::VectorXd step_fj(const Network& net, double lambda, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& theta, const Eigen::VectorXd& bias,
                        const Eigen::VectorXd& noise);

Eigen::VectorXd step_consensus(const Network& net, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& theta, const Eigen::VectorXd& bias,
                               const Eigen::VectorXd& noise);

/// W-MSR: each regular node drops up to F neighbor values strictly above its own
/// state (largest first) and up to F strictly below (smallest first), then
/// averages the retained values together with its own state, uniformly.
Eigen::VectorXd step_wmsr(const Network& net, int trim, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& theta, const Eigen::VectorXd& bias,
                          const Eigen::VectorXd& noise);

/// W-MSR update of a single node (exposed for the rule's unit tests).
/// `values` are neighbor states in neighbor-index order.
double wmsr_update(double own, const std::vector<double>& values, int trim);

/// Streaming median of every value a node has broadcast so far.
class RunningMedian {
public:
  void push(double value);
  double median() const;
  std::size_t count() const { return low_.size() + high_.size(); }

private:
  std::priority_queue<double> low_;
  std::priority_queue<double, std::vector<double>, std::greater<>> high_;
};

/// Per-sender buffers for the SABA variant. Every neighbor receives the same
/// broadcast, so one buffer per sender holds each receiver's view.
struct SabaBuffers {
  std::vector<RunningMedian> per_node;
  explicit SabaBuffers(int n = 0) : per_node(static_cast<std::size_t>(n)) {}
};

/// Simplified SABA: append x(k) to the buffers, vote each neighbor's value as
/// the median of its buffer, then apply the nominal weighted update.
Eigen::VectorXd step_saba(const Network& net, SabaBuffers& buffers, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& theta, const Eigen::VectorXd& bias,
                          const Eigen::VectorXd& noise);

struct Trajectory {
  Eigen::MatrixXd states;  // (horizon + 1) × N, row k is x(k)
  Eigen::VectorXd theta;
  Eigen::VectorXd bias;
  std::vector<Eigen::VectorXd> noise;  // noise[k] is n(k)
  int horizon = 0;
};

/// Runs `horizon` steps from x_R(0) = θ_R.
Trajectory simulate(const Network& net, Protocol protocol, const ProtocolParams& params,
                    const PriorModel& prior, const MisbehaviorModel& mis, int horizon, Rng& rng);

/// Σ_{i∈R} (x_i − θ̄_R)².
double regular_cost(const Network& net, const Eigen::VectorXd& x, const Eigen::VectorXd& theta);

/// CSV with header `k,node_id,role,state`.
void write_trajectory_csv(const Network& net, const Trajectory& traj, std::ostream& out);

struct MCEstimate {
  double mean_cost = 0.0;
  double std_error = 0.0;
  int trials = 0;
  int horizon = 0;
};

inline constexpr int kMinMonteCarloTrials = 100;

/// Monte Carlo estimate of the cost at step `horizon`. Trial t uses the RNG
/// stream derive_seed(seed, t); trials run under OpenMP and reduce in trial
/// order, so results do not depend on the thread count.
MCEstimate mc_cost(const Network& net, Protocol protocol, const ProtocolParams& params,
                   const PriorModel& prior, const MisbehaviorModel& mis, int horizon, int trials,
                   std::uint64_t seed);

/// Serial reference for mc_cost.
MCEstimate mc_cost_serial(const Network& net, Protocol protocol, const ProtocolParams& params,
                          const PriorModel& prior, const MisbehaviorModel& mis, int horizon,
                          int trials, std::uint64_t seed);

/// Mean cost per step k = 0..horizon. Same per-trial streams as mc_cost, so
/// protocols run with the same seed see identical worlds and noise paths.
std::vector<double> mc_cost_curve(const Network& net, Protocol protocol, const ProtocolParams& params,
                                  const PriorModel& prior, const MisbehaviorModel& mis, int horizon,
                                  int trials, std::uint64_t seed);

/// Steps needed for the FJ transient to decay below `tol`:
/// ceil(log(tol) / log((1-λ)·ρ(W_reg))).
int horizon_for_tolerance(const Network& net, double lambda, double tol);

}  // namespace fjres
