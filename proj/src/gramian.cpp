#include "fjres/gramian.hpp"

#include <cmath>
#include <ostream>

#include "fjres/error.hpp"
#include "fjres/format.hpp"
#include "parallel.hpp"

namespace fjres {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_inputs(const Network& net, double lambda, int K) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (K < 1) throw InvalidArgument("Gramian horizon K must be at least 1");
  if (net.misbehaving_count() == 0) throw InvalidArgument("Gramian needs at least one misbehaving node");
}

}  // namespace

GramianResult controllability_gramian(const Network& net, double lambda, int K) {
  check_inputs(net, lambda, K);
  const MatrixXd a = (1.0 - lambda) * net.regular_block();
  const MatrixXd b = (1.0 - lambda) * net.misbehaving_block();
  MatrixXd term = b * b.transpose();
  MatrixXd sum = term;
  for (int k = 1; k < K; ++k) {
    term = a * term * a.transpose();
    sum += term;
  }
  GramianResult out;
  out.K = K;
  out.gramian = 0.5 * (sum + sum.transpose());
  out.trace = out.gramian.trace();
  return out;
}

double gramian_trace(const Network& net, double lambda, int K) {
  check_inputs(net, lambda, K);
  const MatrixXd a = (1.0 - lambda) * net.regular_block();
  MatrixXd y = (1.0 - lambda) * net.misbehaving_block();
  double acc = y.squaredNorm();
  for (int k = 1; k < K; ++k) {
    y = a * y;
    acc += y.squaredNorm();
  }
  return acc;
}

Reachability reachability(const Network& net, double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw InvalidArgument("reachability index needs lambda in [0, 1)");
  if (net.misbehaving_count() == 0) throw InvalidArgument("reachability index needs misbehaving nodes");
  const MatrixXd a = net.regular_block();
  const int r = net.regular_count();

  Reachability out;
  std::vector<VectorXd> basis;
  MatrixXd block = net.misbehaving_block();
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1.0);
  for (int step = 1; step <= r && block.cols() > 0; ++step) {
    std::vector<VectorXd> added;
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
      VectorXd v = block.col(c);
      const double norm0 = v.norm();
      if (norm0 == 0.0) continue;
      // Gram-Schmidt, two passes
      for (int pass = 0; pass < 2; ++pass) {
        for (const VectorXd& q : basis) v -= q.dot(v) * q;
        for (const VectorXd& q : added) v -= q.dot(v) * q;
      }
      const double ratio = v.norm() / (norm0 * scale);
      if (ratio > 1e-4 * kReachabilityTolerance && ratio < 1e4 * kReachabilityTolerance) out.borderline = true;
      if (ratio > kReachabilityTolerance) added.push_back(v / v.norm());
    }
    if (added.empty()) break;
    out.index = step;
    for (auto& q : added) basis.push_back(q);
    if (static_cast<int>(basis.size()) == r) break;
    block.resize(r, static_cast<Eigen::Index>(added.size()));
    for (std::size_t k = 0; k < added.size(); ++k) block.col(static_cast<Eigen::Index>(k)) = a * added[k];
  }
  out.rank = static_cast<int>(basis.size());
  return out;
}

int reachability_index(const Network& net, double lambda) { return reachability(net, lambda).index; }

std::string to_string(KPolicy p) { return p == KPolicy::Fixed ? "fixed" : "reachability"; }

KPolicy k_policy_from_string(const std::string& name) {
  if (name == "reachability") return KPolicy::Reachability;
  if (name == "fixed") return KPolicy::Fixed;
  throw InvalidArgument("unknown K policy '" + name + "'");
}

int resolve_k(const Network& net, KPolicy policy, int fixed_k) {
  if (policy == KPolicy::Fixed) {
    if (fixed_k < 1) throw InvalidArgument("fixed K must be at least 1");
    return fixed_k;
  }
  const Reachability reach = reachability(net, 0.0);
  return reach.borderline ? net.regular_count() : std::max(reach.index, 1);
}

std::vector<GramianPoint> gramian_trace_curve(const Network& net, const std::vector<double>& grid, int K) {
  std::vector<GramianPoint> out(grid.size());
  detail::parallel_for(static_cast<int>(grid.size()), [&](int i) {
    if (!(grid[i] < 1.0)) throw InvalidArgument("Gramian curve grid must lie in [0, 1)");
    out[i] = {grid[i], K, gramian_trace(net, grid[i], K)};
  });
  return out;
}

std::vector<GramianPoint> gramian_trace_curve_serial(const Network& net, const std::vector<double>& grid, int K) {
  std::vector<GramianPoint> out;
  for (double lambda : grid) {
    if (!(lambda < 1.0)) throw InvalidArgument("Gramian curve grid must lie in [0, 1)");
    out.push_back({lambda, K, gramian_trace(net, lambda, K)});
  }
  return out;
}

void write_gramian_csv(const std::vector<GramianPoint>& points, std::ostream& out) {
  out << "lambda,K,trace\n";
  for (const auto& p : points) out << fmt(p.lambda) << ',' << p.K << ',' << fmt(p.trace) << '\n';
}

}  // namespace fjres
