#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fjres/graphs.hpp"

namespace fjres {

/// W(K) = Σ_{k<K} AᵏBBᵀ(Aᵀ)ᵏ with A = (1−λ)W_reg, B = (1−λ)W_mal.
struct GramianResult {
  int K = 0;
  Eigen::MatrixXd gramian;
  double trace = 0.0;
};

GramianResult controllability_gramian(const Network& net, double lambda, int K);

/// tr W(K) as Σ_{k<K} ‖AᵏB‖²_F, without forming W(K).
double gramian_trace(const Network& net, double lambda, int K);

inline constexpr double kReachabilityTolerance = 1e-10;

struct Reachability {
  int index = 0;
  int rank = 0;
  /// Some Krylov direction fell within four decades of the rank tolerance.
  bool borderline = false;
};

/// Block Krylov iteration on (W_reg, W_mal). Scaling by (1−λ) leaves the
/// Krylov spaces unchanged, so the index is the same for every λ < 1.
Reachability reachability(const Network& net, double lambda);
int reachability_index(const Network& net, double lambda);

enum class KPolicy { Reachability, Fixed };

std::string to_string(KPolicy p);
KPolicy k_policy_from_string(const std::string& name);

/// Reachability index (R when borderline) or the fixed K.
int resolve_k(const Network& net, KPolicy policy, int fixed_k);

struct GramianPoint {
  double lambda = 0.0;
  int K = 0;
  double trace = 0.0;
};

/// tr W(K) per λ, grid points evaluated in parallel.
std::vector<GramianPoint> gramian_trace_curve(const Network& net, const std::vector<double>& grid, int K);
std::vector<GramianPoint> gramian_trace_curve_serial(const Network& net, const std::vector<double>& grid, int K);

/// CSV with header `lambda,K,trace`.
void write_gramian_csv(const std::vector<GramianPoint>& points, std::ostream& out);

}  // namespace fjres
