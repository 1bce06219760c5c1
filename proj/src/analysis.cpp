#include "fjres/analysis.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "fjres/error.hpp"
#include "fjres/format.hpp"
#include "fjres/numerics.hpp"
#include "parallel.hpp"

namespace fjres {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
}

// Stationary distribution of the uniform-weight random walk: π_i ∝ deg(i).
Eigen::RowVectorXd perron_vector(const Network& net) {
  Eigen::RowVectorXd pi(net.size());
  for (int i = 0; i < net.size(); ++i) pi(i) = net.degree(i);
  return pi / pi.sum();
}

double trace_product(const MatrixXd& a, const MatrixXd& b) {
  // tr(A Bᵀ)
  return a.cwiseProduct(b).sum();
}

}  // namespace

ActualWeightMatrix build_actual_w(const Network& net) {
  ActualWeightMatrix out;
  out.regular = net.regular_count();
  out.misbehaving = net.misbehaving_count();
  out.w = net.weights();
  out.w.bottomRows(out.misbehaving).setZero();
  out.w.bottomRightCorner(out.misbehaving, out.misbehaving).setIdentity();
  return out;
}

// ---------------------------------------------------------------- ErrorModel

ErrorModel::ErrorModel(const Network& net, const PriorModel& prior, const MisbehaviorModel& mis)
    : r_(net.regular_count()), m_(net.misbehaving_count()) {
  check_models(net, prior, mis);
  w_reg_ = net.regular_block();
  w_mal_ = net.misbehaving_block();
  sigma_tilde_ = prior.sigma();
  sigma_tilde_.bottomRightCorner(m_, m_) += mis.bias_cov();
  sigma_diagonal_ = prior.is_diagonal();
  sigma_tilde_diagonal_ = numerics::is_diagonal(sigma_tilde_);
  sigma_tilde_diag_ = sigma_tilde_.diagonal();
  if (m_ == 0) {
    perron_ = perron_vector(net);
  } else {
    q_tilde_ = w_mal_ * mis.noise_cov() * w_mal_.transpose();
    noisy_ = !mis.noiseless();
    if (noisy_ && numerics::is_symmetric(w_reg_)) {
      auto eig = numerics::eig_sym(w_reg_);
      eig_values_ = eig.values;
      eig_vectors_ = eig.vectors;
    }
  }
}

MatrixXd ErrorModel::solve_shifted(double lambda, const MatrixXd& rhs) const {
  if (eig_values_) {
    const VectorXd scale = (1.0 - (1.0 - lambda) * eig_values_->array()).inverse();
    return eig_vectors_ * (scale.asDiagonal() * (eig_vectors_.transpose() * rhs));
  }
  MatrixXd shifted = -(1.0 - lambda) * w_reg_;
  shifted.diagonal().array() += 1.0;
  return numerics::solve_linear(shifted, rhs);
}

MatrixXd ErrorModel::lyapunov(double lambda, const MatrixXd& s) const {
  if (eig_values_) return numerics::lyapunov_symmetric((1.0 - lambda) * *eig_values_, eig_vectors_, s);
  return numerics::solve_discrete_lyapunov((1.0 - lambda) * w_reg_, s);
}

double ErrorModel::weighted_norm(const MatrixXd& e) const { return bilinear_trace(e, e); }

double ErrorModel::bilinear_trace(const MatrixXd& a, const MatrixXd& b) const {
  // tr(A Σ̃ Bᵀ)
  if (sigma_tilde_diagonal_) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) acc += sigma_tilde_diag_(j) * a.col(j).dot(b.col(j));
    return acc;
  }
  return trace_product(a * sigma_tilde_, b);
}

MatrixXd ErrorModel::resolvent_top(double lambda) const {
  check_lambda(lambda);
  MatrixXd top(r_, r_ + m_);
  if (lambda == 1.0) {
    top.setZero();
    top.leftCols(r_).setIdentity();
    return top;
  }
  if (m_ == 0 && lambda < kLambdaGuard) return MatrixXd::Ones(r_, 1) * perron_;
  MatrixXd rhs(r_, r_ + m_);
  rhs.leftCols(r_).setIdentity();
  rhs.rightCols(m_) = w_mal_;
  top = solve_shifted(lambda, rhs);
  top.leftCols(r_) *= lambda;
  top.rightCols(m_) *= 1.0 - lambda;
  return top;
}

MatrixXd ErrorModel::resolvent(double lambda) const {
  MatrixXd l = MatrixXd::Zero(r_ + m_, r_ + m_);
  l.topRows(r_) = resolvent_top(lambda);
  l.bottomRightCorner(m_, m_).setIdentity();
  return l;
}

MatrixXd ErrorModel::steady_state_p(double lambda) const {
  check_lambda(lambda);
  if (!noisy_ || lambda == 1.0) return MatrixXd::Zero(r_, r_);
  const double c = (1.0 - lambda) * (1.0 - lambda);
  return lyapunov(lambda, c * q_tilde_);
}

namespace {

MatrixXd error_matrix(MatrixXd top, int r) {
  // E = [L1 − C_R | L2]
  top.leftCols(r).array() -= 1.0 / r;
  return top;
}

}  // namespace

double ErrorModel::e_v(double lambda) const { return weighted_norm(error_matrix(resolvent_top(lambda), r_)); }

double ErrorModel::e_n(double lambda) const { return steady_state_p(lambda).trace(); }

ErrorPoint ErrorModel::point(double lambda) const {
  const MatrixXd e = error_matrix(resolvent_top(lambda), r_);
  ErrorPoint p;
  p.lambda = lambda;
  p.e_v = weighted_norm(e);
  p.e_n = e_n(lambda);
  p.e_total = p.e_v + p.e_n;
  if (has_decomposition()) {
    double consensus = 0.0;
    for (int i = 0; i < r_; ++i) consensus += sigma_tilde_diag_(i) * e.col(i).squaredNorm();
    p.e_consensus = consensus;
    p.e_deception = sigma_tilde_diag_(r_) * e.col(r_).squaredNorm() + p.e_n;
  } else {
    p.e_consensus = kNaN;
    p.e_deception = kNaN;
  }
  return p;
}

AnalyticReport ErrorModel::report(double lambda) const {
  AnalyticReport rep;
  static_cast<ErrorPoint&>(rep) = point(lambda);
  rep.L = resolvent(lambda);
  rep.P = steady_state_p(lambda);
  return rep;
}

ErrorDerivative ErrorModel::derivative(double lambda) const {
  check_lambda(lambda);
  if (m_ == 0 && lambda < kLambdaGuard) {
    throw InvalidArgument("error derivative of an all-regular network needs lambda >= 1e-6");
  }
  const MatrixXd top = resolvent_top(lambda);
  // dL1 = K(I − W_reg L1), dL2 = −K(W_mal + W_reg L2), K = (I − (1−λ)W_reg)⁻¹
  MatrixXd rhs(r_, r_ + m_);
  rhs.leftCols(r_) = -w_reg_ * top.leftCols(r_);
  rhs.leftCols(r_).diagonal().array() += 1.0;
  rhs.rightCols(m_) = -(w_mal_ + w_reg_ * top.rightCols(m_));
  const MatrixXd d_top = solve_shifted(lambda, rhs);

  ErrorDerivative out;
  out.d_v = 2.0 * bilinear_trace(d_top, error_matrix(top, r_));
  if (noisy_ && lambda < 1.0) {
    const double s = 1.0 - lambda;
    const MatrixXd p = lyapunov(lambda, s * s * q_tilde_);
    const MatrixXd a = s * w_reg_;
    const MatrixXd wpa = w_reg_ * p * a.transpose();
    const MatrixXd forcing = -(wpa + wpa.transpose()) - 2.0 * s * q_tilde_;
    out.d_n = lyapunov(lambda, forcing).trace();
  }
  return out;
}

double ErrorModel::noise_derivative_elementwise(double lambda) const {
  check_lambda(lambda);
  if (!noisy_) return 0.0;
  const double s = 1.0 - lambda;
  const MatrixXd p = steady_state_p(lambda);
  const MatrixXd wpw = w_reg_ * p * w_reg_.transpose();
  double acc = 0.0;
  for (int i = 0; i < r_; ++i) {
    const double wii = w_reg_(i, i);
    acc -= 2.0 * s * (wpw(i, i) + q_tilde_(i, i)) / (1.0 - s * s * wii * wii);
  }
  return acc;
}

// ---------------------------------------------------------------- free functions

namespace {

ErrorModel noiseless_model(const Network& net) {
  const int m = net.misbehaving_count();
  return ErrorModel(net, PriorModel::identity(net.size()), MisbehaviorModel::scalar(m, 0.0, 0.0));
}

}  // namespace

MatrixXd resolvent_l(const Network& net, double lambda) { return noiseless_model(net).resolvent(lambda); }

MatrixXd steady_state_p(const Network& net, double lambda, const MatrixXd& q) {
  const int m = net.misbehaving_count();
  ErrorModel model(net, PriorModel::identity(net.size()), MisbehaviorModel(MatrixXd::Zero(m, m), q));
  return model.steady_state_p(lambda);
}

AnalyticReport error_terms(const Network& net, double lambda, const PriorModel& prior,
                           const MisbehaviorModel& mis) {
  return ErrorModel(net, prior, mis).report(lambda);
}

Decomposition decomposition(const Network& net, double lambda, const PriorModel& prior,
                            const MisbehaviorModel& mis) {
  ErrorModel model(net, prior, mis);
  if (!model.has_decomposition()) {
    throw InvalidArgument("decomposition needs exactly one misbehaving node and a diagonal prior");
  }
  const ErrorPoint p = model.point(lambda);
  return {p.e_deception, p.e_consensus};
}

VectorXd social_power(const Network& net, double lambda, int m) {
  if (m < net.regular_count() || m >= net.size()) {
    throw InvalidArgument("social_power: node is not misbehaving");
  }
  return noiseless_model(net).resolvent_top(lambda).col(m);
}

double error_derivative(const Network& net, double lambda, const PriorModel& prior,
                        const MisbehaviorModel& mis) {
  return ErrorModel(net, prior, mis).derivative(lambda).total();
}

MatrixXd absorption_matrix(const Network& net) {
  if (net.misbehaving_count() == 0) throw InvalidArgument("absorption_matrix needs misbehaving nodes");
  MatrixXd shifted = -net.regular_block();
  shifted.diagonal().array() += 1.0;
  return numerics::solve_linear(shifted, net.misbehaving_block());
}

namespace {

GammaBlocks assemble_gamma(const MatrixXd& g1, const MatrixXd& g2) {
  const Eigen::Index r = g1.rows();
  const Eigen::Index m = g2.cols();
  GammaBlocks out;
  out.gamma1 = g1;
  out.gamma2 = g2;
  out.gamma = MatrixXd::Zero(r + m, r + m);
  out.gamma.topLeftCorner(r, r) = g1;
  out.gamma.topRightCorner(r, m) = g2;
  return out;
}

}  // namespace

GammaBlocks gamma_blocks(const Network& net) {
  const int n = net.size();
  if (net.misbehaving_count() == 0) {
    const MatrixXd proj = MatrixXd::Ones(n, 1) * perron_vector(net);
    MatrixXd fundamental = MatrixXd::Identity(n, n) - net.weights() + proj;
    return assemble_gamma(numerics::inverse(fundamental) - proj, MatrixXd(n, 0));
  }
  MatrixXd shifted = -net.regular_block();
  shifted.diagonal().array() += 1.0;
  const MatrixXd g1 = numerics::inverse(shifted);
  const MatrixXd g = g1 * net.misbehaving_block();
  return assemble_gamma(g1, -g1 * g);
}

GammaBlocks gamma_spectral(const Network& net) {
  if (!numerics::is_symmetric(net.weights())) throw InvalidArgument("gamma_spectral needs a symmetric W°");
  const auto eig = numerics::eig_sym(net.regular_block());
  VectorXd inv(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    // unit eigenvalues (all-regular networks) span the kernel
    const double gap = 1.0 - eig.values(k);
    inv(k) = std::abs(gap) < 1e-9 ? 0.0 : 1.0 / gap;
  }
  const MatrixXd g1 = eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
  if (net.misbehaving_count() == 0) return assemble_gamma(g1, MatrixXd(net.size(), 0));
  return assemble_gamma(g1, -g1 * (g1 * net.misbehaving_block()));
}

GammaBlocks gamma_finite_difference(const Network& net, double lambda0) {
  const double h = 0.5 * lambda0;
  const ErrorModel model = noiseless_model(net);
  auto central = [&](double at) {
    return MatrixXd((model.resolvent_top(at + h) - model.resolvent_top(at - h)) / (2.0 * h));
  };
  // quadratic extrapolation of the slopes at λ0, 2λ0, 3λ0 back to λ = 0
  const MatrixXd d = 3.0 * central(lambda0) - 3.0 * central(2.0 * lambda0) + central(3.0 * lambda0);
  const int r = net.regular_count();
  return assemble_gamma(d.leftCols(r), d.rightCols(net.misbehaving_count()));
}

namespace {

struct PriorBlocks {
  MatrixXd s11, s12, s22;
};

PriorBlocks split_prior(const PriorModel& prior, int r, int m) {
  const MatrixXd& s = prior.sigma();
  return {s.topLeftCorner(r, r), s.topRightCorner(r, m), s.bottomRightCorner(m, m)};
}

}  // namespace

Prop1Check check_prop1(const Network& net, const PriorModel& prior, const MisbehaviorModel& mis) {
  check_models(net, prior, mis);
  const int r = net.regular_count();
  const int m = net.misbehaving_count();
  if (m == 0) throw InvalidArgument("check_prop1 needs at least one misbehaving node");
  const MatrixXd g = absorption_matrix(net);
  const PriorBlocks s = split_prior(prior, r, m);
  const double e_n0 = ErrorModel(net, prior, mis).e_n(0.0);
  const double scale = static_cast<double>(m) * m / r;

  Prop1Check out;
  out.lhs = scale * (e_n0 + trace_product(g * mis.bias_cov(), g));
  const MatrixXd c_r = MatrixXd::Constant(r, r, 1.0 / r);
  out.rhs = scale * (s.s11.trace() - 2.0 / r * s.s11.sum() + 2.0 * trace_product(c_r * s.s12, g) -
                     trace_product(g * s.s22, g));
  out.full_competition_better = out.lhs > out.rhs;
  return out;
}

const char* to_string(Theorem1Condition c) {
  switch (c) {
    case Theorem1Condition::C1: return "C1";
    case Theorem1Condition::C2: return "C2";
    case Theorem1Condition::Neither: return "neither";
  }
  return "neither";
}

Theorem1Check check_theorem1(const Network& net, const PriorModel& prior, const MisbehaviorModel& mis) {
  check_models(net, prior, mis);
  Theorem1Check out;
  out.lhs = kNaN;
  out.rhs = kNaN;
  const int r = net.regular_count();
  const int m = net.misbehaving_count();
  if (m == 0) return out;
  if (prior.is_diagonal()) {
    out.condition = Theorem1Condition::C1;
    return out;
  }
  if (!numerics::is_symmetric(net.weights())) return out;

  const GammaBlocks gam = gamma_blocks(net);
  const MatrixXd g = absorption_matrix(net);
  const PriorBlocks s = split_prior(prior, r, m);
  const MatrixXd c_r = MatrixXd::Constant(r, r, 1.0 / r);
  const double dn0 = ErrorModel(net, prior, mis).derivative(0.0).d_n;

  // tr(X Yᵀ) forms of the right derivative of e_v at 0
  out.lhs = -dn0 - 2.0 * trace_product(gam.gamma2 * mis.bias_cov(), g);
  out.rhs = 2.0 * (-trace_product(gam.gamma1 * s.s11, c_r) - trace_product(gam.gamma2 * s.s12.transpose(), c_r) +
                   trace_product(gam.gamma1 * s.s12, g) + trace_product(gam.gamma2 * s.s22, g));
  if (out.lhs > out.rhs) out.condition = Theorem1Condition::C2;
  return out;
}

std::vector<double> lambda_grid(int resolution) {
  if (resolution < 2) throw InvalidArgument("lambda grid needs at least two points");
  std::vector<double> grid(resolution);
  for (int k = 0; k < resolution; ++k) {
    grid[k] = kLambdaGridMin + (1.0 - kLambdaGridMin) * k / (resolution - 1);
  }
  grid.back() = 1.0;
  return grid;
}

OptimalLambda optimal_lambda(const ErrorModel& model, int resolution, double tol) {
  if (resolution < 32) throw InvalidArgument("optimal_lambda needs a grid resolution of at least 32");
  if (!(tol > 0.0)) throw InvalidArgument("optimal_lambda needs a positive tolerance");
  const std::vector<double> grid = lambda_grid(resolution);
  std::vector<double> values(grid.size());
  detail::parallel_for(static_cast<int>(grid.size()), [&](int k) { values[k] = model.total(grid[k]); });

  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] < values[best]) best = k;
  }
  OptimalLambda out{grid[best], values[best]};

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[std::min(best + 1, grid.size() - 1)];
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = model.total(c);
  double fd = model.total(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = model.total(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = model.total(d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fmid = model.total(mid);
  if (fmid < out.error) out = {mid, fmid};
  return out;
}

OptimalLambda optimal_lambda(const Network& net, const PriorModel& prior, const MisbehaviorModel& mis,
                             int resolution, double tol) {
  return optimal_lambda(ErrorModel(net, prior, mis), resolution, tol);
}

std::vector<ErrorPoint> error_curve(const ErrorModel& model, const std::vector<double>& grid) {
  std::vector<ErrorPoint> out(grid.size());
  detail::parallel_for(static_cast<int>(grid.size()), [&](int k) { out[k] = model.point(grid[k]); });
  return out;
}

std::vector<ErrorPoint> error_curve_serial(const ErrorModel& model, const std::vector<double>& grid) {
  std::vector<ErrorPoint> out;
  out.reserve(grid.size());
  for (double lambda : grid) out.push_back(model.point(lambda));
  return out;
}

nlohmann::json to_json(const ErrorPoint& p) {
  auto num = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
  return {{"lambda", p.lambda},       {"e_v", p.e_v},
          {"e_n", p.e_n},             {"e_total", p.e_total},
          {"e_deception", num(p.e_deception)}, {"e_consensus", num(p.e_consensus)}};
}

void write_error_csv(const std::vector<ErrorPoint>& points, std::ostream& out) {
  out << "lambda,e_v,e_n,e_total,e_deception,e_consensus\n";
  for (const ErrorPoint& p : points) {
    out << fmt(p.lambda) << ',' << fmt(p.e_v) << ',' << fmt(p.e_n) << ',' << fmt(p.e_total) << ','
        << fmt(p.e_deception) << ',' << fmt(p.e_consensus) << '\n';
  }
}

}  // namespace fjres
