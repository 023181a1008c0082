#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spikevar/rng.hpp"

namespace spikevar {

struct SamplerConfig {
  int chains = 4;
  int iterations = 5000;  // per chain; the first `warmup` are adaptation
  int warmup = -1;        // -1 means iterations/2
  std::uint64_t seed = 1;
  double target_accept = 0.8;
  int max_depth = 10;
  int threads = 0;  // 0 = hardware concurrency
  double divergence_warn_fraction = 0.01;

  int effective_warmup() const { return warmup >= 0 ? warmup : iterations / 2; }
  void validate() const;
};

// Differentiable target plus the reporting transform for kept draws.
struct TargetModel {
  int dim = 0;
  // fills grad, returns log density (may be -inf); grad sized by callee
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> logp_grad;
  // reported (constrained) coordinates of a draw; identity when null
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> constrain;
  std::vector<std::string> names;  // one per reported coordinate
  // per-chain initial point; zero vector when null
  std::function<Eigen::VectorXd(Rng&)> init;
};

struct ChainDiagnostics {
  int divergences = 0;
  int max_depth_hits = 0;
  double step_size = 0.0;
  double accept_mean = 0.0;
};

struct PosteriorChains {
  std::vector<std::string> names;
  int n_chains = 0;
  int n_kept = 0;                      // post-warmup draws per chain
  std::vector<Eigen::MatrixXd> draws;  // per chain: n_kept x names.size()
  std::vector<ChainDiagnostics> chain_info;
  std::vector<std::string> warnings;
  std::uint64_t seed = 0;

  int col(const std::string& name) const;
  // pooled column across chains, in chain order
  Eigen::VectorXd pooled(int column) const;
};

// Hamiltonian sampler: multinomial selection along a doubling trajectory with
// a fixed maximum depth, dual-averaging step size and diagonal mass-matrix
// adaptation during warmup. Deterministic given (seed, chain index).
PosteriorChains run_sampler(const TargetModel& target, const SamplerConfig& cfg);

// Convergence diagnostics (split chains). Return NaN when the within-chain
// variance degenerates.
double split_rhat(const PosteriorChains& chains, const std::string& name);
double split_rhat_col(const PosteriorChains& chains, int column);
double effective_sample_size(const PosteriorChains& chains, const std::string& name);
double effective_sample_size_col(const PosteriorChains& chains, int column);

// type-7 quantile (linear interpolation between order statistics)
double quantile_type7(std::vector<double> values, double p);

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double lo = 0.0;  // 2.5%
  double hi = 0.0;  // 97.5%
};

struct Summary {
  std::vector<SummaryRow> rows;
  const SummaryRow& row(const std::string& name) const;
  bool has(const std::string& name) const;
};

// pooled mean and 2.5/97.5 percentiles per column
Summary summarize(const PosteriorChains& chains);

}  // namespace spikevar
