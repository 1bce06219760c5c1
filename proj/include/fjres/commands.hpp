#pragma once

#include <iosfwd>
#include <vector>

#include "fjres/config.hpp"
#include "fjres/dynamics.hpp"

namespace fjres {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitValidation = 3;

struct CompareResult {
  double lambda = 0.0;  // FJ competition actually used
  std::vector<Protocol> protocols;
  std::vector<std::vector<double>> curves;  // mean cost per step, per protocol
};

/// Runs every configured protocol on the same per-trial worlds and noise paths.
CompareResult run_compare(const ExperimentConfig& cfg);

/// CSV with header `k,protocol,cost`.
void write_compare_csv(const CompareResult& result, std::ostream& out);

struct ValidationRow {
  double lambda = 0.0;
  double analytic = 0.0;
  MCEstimate mc;
  double z = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  bool pass = true;
};

/// Analytic error against the Monte Carlo estimate at each configured λ
/// (default 0.1, 0.3, 0.5, 0.8, 1). A fixed bias v enters the analytic side as
/// V = vvᵀ.
ValidationReport run_mc_validate(const ExperimentConfig& cfg);

/// CSV with header `lambda,analytic,mc_mean,mc_stderr,z,status`.
void write_validation_csv(const ValidationReport& report, std::ostream& out);

// CLI verbs. Each writes its table to `out` and returns an exit code.
int cmd_generate(const ExperimentConfig& cfg, std::ostream& out);
int cmd_error_curve(const ExperimentConfig& cfg, std::ostream& out);
int cmd_compare(const ExperimentConfig& cfg, std::ostream& out);
int cmd_mc_validate(const ExperimentConfig& cfg, std::ostream& out);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out);
int cmd_gramian(const ExperimentConfig& cfg, std::ostream& out);
int cmd_prune(const ExperimentConfig& cfg, std::ostream& out);

}  // namespace fjres
