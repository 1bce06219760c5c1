#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fjres/dynamics.hpp"
#include "fjres/graphs.hpp"

namespace fjres {

/// Actual interaction matrix: regular rows copy W°, misbehaving rows are
/// identity rows.
struct ActualWeightMatrix {
  Eigen::MatrixXd w;
  int regular = 0;
  int misbehaving = 0;

  Eigen::MatrixXd regular_block() const { return w.topLeftCorner(regular, regular); }
  Eigen::MatrixXd misbehaving_block() const { return w.topRightCorner(regular, misbehaving); }
};

ActualWeightMatrix build_actual_w(const Network& net);

/// Below this λ the resolvent of an all-regular network is replaced by its
/// limit, the Perron projector 𝟙πᵀ.
inline constexpr double kLambdaGuard = 1e-6;

/// L = λ(I − (1−λ)W)⁻¹ for λ ∈ [0, 1] (λ = 0 gives the limit W̄).
Eigen::MatrixXd resolvent_l(const Network& net, double lambda);

/// Steady-state covariance of the regular states:
/// P = (1−λ)²W_reg P W_regᵀ + (1−λ)²W_mal Q W_malᵀ.
Eigen::MatrixXd steady_state_p(const Network& net, double lambda, const Eigen::MatrixXd& q);

/// Scalar error values at one λ. The decomposition fields are NaN unless
/// there is a single misbehaving node and Σ is diagonal.
struct ErrorPoint {
  double lambda = 0.0;
  double e_v = 0.0;
  double e_n = 0.0;
  double e_total = 0.0;
  double e_deception = 0.0;
  double e_consensus = 0.0;
};

struct AnalyticReport : ErrorPoint {
  Eigen::MatrixXd L;
  Eigen::MatrixXd P;
};

struct ErrorDerivative {
  double d_v = 0.0;
  double d_n = 0.0;
  double total() const { return d_v + d_n; }
};

/// Error evaluator for one (network, prior, misbehavior) triple. Holds the
/// block partition, Σ̃ = Σ + S_MᵀVS_M and, when W_reg is symmetric and the
/// noise is nontrivial, the eigendecomposition used by the Lyapunov solves.
class ErrorModel {
public:
  ErrorModel(const Network& net, const PriorModel& prior, const MisbehaviorModel& mis);

  int regular_count() const { return r_; }
  int misbehaving_count() const { return m_; }
  bool has_decomposition() const { return m_ == 1 && sigma_diagonal_; }

  /// Top block row [L1 | L2] of the resolvent.
  Eigen::MatrixXd resolvent_top(double lambda) const;
  Eigen::MatrixXd resolvent(double lambda) const;
  Eigen::MatrixXd steady_state_p(double lambda) const;

  double e_v(double lambda) const;
  double e_n(double lambda) const;
  double total(double lambda) const { return e_v(lambda) + e_n(lambda); }
  ErrorPoint point(double lambda) const;
  AnalyticReport report(double lambda) const;

  /// Analytic de/dλ. The noise part differentiates the Lyapunov equation.
  ErrorDerivative derivative(double lambda) const;

  /// Elementwise implicit-function form of de_n/dλ that ignores the coupling
  /// through off-diagonal entries of P. Diagnostic only.
  double noise_derivative_elementwise(double lambda) const;

  const Eigen::MatrixXd& w_reg() const { return w_reg_; }
  const Eigen::MatrixXd& w_mal() const { return w_mal_; }
  const Eigen::MatrixXd& sigma_tilde() const { return sigma_tilde_; }

private:
  Eigen::MatrixXd solve_shifted(double lambda, const Eigen::MatrixXd& rhs) const;
  double weighted_norm(const Eigen::MatrixXd& e) const;
  double bilinear_trace(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const;
  Eigen::MatrixXd lyapunov(double lambda, const Eigen::MatrixXd& s) const;

  int r_ = 0;
  int m_ = 0;
  Eigen::MatrixXd w_reg_;
  Eigen::MatrixXd w_mal_;
  Eigen::MatrixXd sigma_tilde_;
  Eigen::VectorXd sigma_tilde_diag_;
  bool sigma_tilde_diagonal_ = false;
  bool sigma_diagonal_ = false;
  Eigen::MatrixXd q_tilde_;  // W_mal Q W_malᵀ
  bool noisy_ = false;
  Eigen::RowVectorXd perron_;  // all-regular networks only
  std::optional<Eigen::VectorXd> eig_values_;
  Eigen::MatrixXd eig_vectors_;
};

AnalyticReport error_terms(const Network& net, double lambda, const PriorModel& prior,
                           const MisbehaviorModel& mis);

struct Decomposition {
  double e_deception = 0.0;
  double e_consensus = 0.0;
};

/// Deception/consensus split. Needs one misbehaving node and diagonal Σ.
Decomposition decomposition(const Network& net, double lambda, const PriorModel& prior,
                            const MisbehaviorModel& mis);

/// Regular rows of column `m` of L; `m` is an internal misbehaving index.
Eigen::VectorXd social_power(const Network& net, double lambda, int m);

double error_derivative(const Network& net, double lambda, const PriorModel& prior,
                        const MisbehaviorModel& mis);

struct GammaBlocks {
  Eigen::MatrixXd gamma;   // N×N, bottom rows zero
  Eigen::MatrixXd gamma1;  // R×R
  Eigen::MatrixXd gamma2;  // R×M
};

/// Γ = lim dL/dλ at λ → 0⁺ in closed form: Γ1 = (I − W_reg)⁻¹, Γ2 = −Γ1·G with
/// G = (I − W_reg)⁻¹W_mal. Without misbehaving nodes Γ is the group inverse
/// of I − W°.
GammaBlocks gamma_blocks(const Network& net);

/// Spectral construction for symmetric W°.
GammaBlocks gamma_spectral(const Network& net);

/// Central differences of the resolvent at λ0, 2λ0 and 3λ0, extrapolated to λ = 0.
GammaBlocks gamma_finite_difference(const Network& net, double lambda0 = 1e-4);

/// Limit of L2 at λ → 0⁺: G = (I − W_reg)⁻¹W_mal.
Eigen::MatrixXd absorption_matrix(const Network& net);

struct Prop1Check {
  bool full_competition_better = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Compares e(1) against e(0⁺). With M = 1 and diagonal V the inequality is
/// the printed one; for M > 1 the consensus limit uses G in place of C_RM.
Prop1Check check_prop1(const Network& net, const PriorModel& prior, const MisbehaviorModel& mis);

enum class Theorem1Condition { C1, C2, Neither };

const char* to_string(Theorem1Condition c);

struct Theorem1Check {
  Theorem1Condition condition = Theorem1Condition::Neither;
  // Sides of the C2 inequality (NaN when not evaluated).
  double lhs = 0.0;
  double rhs = 0.0;
};

Theorem1Check check_theorem1(const Network& net, const PriorModel& prior, const MisbehaviorModel& mis);

struct OptimalLambda {
  double lambda = 0.0;
  double error = 0.0;
};

inline constexpr double kLambdaGridMin = 1e-4;

/// Evenly spaced grid over [kLambdaGridMin, 1].
std::vector<double> lambda_grid(int resolution);

/// Grid scan followed by golden-section refinement between the neighbors of
/// the best grid point.
OptimalLambda optimal_lambda(const ErrorModel& model, int resolution = 256, double tol = 1e-5);
OptimalLambda optimal_lambda(const Network& net, const PriorModel& prior, const MisbehaviorModel& mis,
                             int resolution = 256, double tol = 1e-5);

/// Error values over a λ grid; points evaluated in parallel.
std::vector<ErrorPoint> error_curve(const ErrorModel& model, const std::vector<double>& grid);
std::vector<ErrorPoint> error_curve_serial(const ErrorModel& model, const std::vector<double>& grid);

nlohmann::json to_json(const ErrorPoint& p);

/// CSV with header `lambda,e_v,e_n,e_total,e_deception,e_consensus`.
void write_error_csv(const std::vector<ErrorPoint>& points, std::ostream& out);

}  // namespace fjres
