#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "spikevar/ingest.hpp"

namespace spikevar {

// Partition of the modeled countries into continent blocks; the daily noise
// covariance is block diagonal with one scale and one correlation matrix per
// block.
struct ContinentSpec {
  std::vector<std::string> names;
  std::vector<std::vector<int>> members;  // country indices per block

  int n_blocks() const { return static_cast<int>(names.size()); }
  int block_of(int country) const;
  void validate(int n_countries) const;

  static ContinentSpec from_codes(const std::vector<std::pair<std::string, std::vector<std::string>>>& blocks,
                                  const std::vector<std::string>& countries);
};

struct PriorConfig {
  std::vector<double> dirichlet_alpha{3, 39, 1, 1, 1};  // initial-proportion pseudocounts
  double sigma_scale = 0.5;                             // half-Cauchy scale for sigma
  double lkj_eta = 2.0;                                 // LKJ shape for correlation blocks
  bool alpha_normal = false;                            // flat growth-rate prior by default
  double alpha_sd = 1.0;

  void validate(int n_clusters) const;
};

struct ModelParams {
  Eigen::VectorXd alpha;                  // C-1 growth rates (cluster 1 is the baseline)
  Eigen::MatrixXd p1;                     // K x C initial proportions, rows on the simplex
  std::vector<double> sigma;              // per continent block
  std::vector<Eigen::MatrixXd> omega;     // per block, correlation matrix
  std::vector<Eigen::MatrixXd> eps;       // per country, (T-1) x (C-1) innovations; row t-2 is day t
};

struct LatentTrajectory {
  std::vector<Eigen::MatrixXd> p;  // per country, T x C simplex rows
};

// Log-ratio coordinates ------------------------------------------------------

// (log(p_c/p_1)) for c = 2..C
Eigen::VectorXd alr(const Eigen::VectorXd& p);
// softmax of (0, v); strictly positive, sums to 1
Eigen::VectorXd alr_inv(const Eigen::VectorXd& v);

// Dynamics -------------------------------------------------------------------

// p_t for one country: log-ratio random walk with drift alpha plus the given
// innovations (rows t=2..T)
Eigen::MatrixXd propagate(const Eigen::VectorXd& p1, const Eigen::VectorXd& alpha,
                          const Eigen::MatrixXd& eps);

// average of the latest `window` rows (all rows so far when t < window); t is 1-based
Eigen::VectorXd window_prob(const Eigen::MatrixXd& traj, int t, int window);

// Densities ------------------------------------------------------------------

// multinomial observation model over all (country, day) cells with counts,
// including the normalizing coefficient
double log_likelihood(const CountSeries& counts, const LatentTrajectory& traj, int window);

double log_prior(const ModelParams& params, const PriorConfig& cfg, const ContinentSpec& continents);

// exact log density of an LKJ(eta) correlation matrix, normalizing constant included
double lkj_log_density(const Eigen::MatrixXd& omega, double eta);
double half_cauchy_log_density(double x, double scale);
double dirichlet_log_density(const Eigen::VectorXd& p, const std::vector<double>& alpha);

// Posterior in unconstrained coordinates --------------------------------------
//
// Coordinate packing: [alpha | p1 log-ratios by country | log sigma per block |
// correlation partial-correlation coords per block | innovations]. Innovations
// enter identically; p1 uses the log-ratio bijection, sigma the log, and
// correlation blocks the tanh/partial-correlation construction.
class Posterior {
 public:
  Posterior(const CountSeries& counts, ContinentSpec continents, PriorConfig prior, int window = 14);

  int dim() const { return dim_; }
  int n_countries() const { return K_; }
  int n_days() const { return T_; }
  int n_clusters() const { return C_; }
  const ContinentSpec& continents() const { return continents_; }
  const PriorConfig& prior() const { return prior_; }
  int window() const { return window_; }

  // value = log_likelihood + log_prior + log_jacobian; grad has matching
  // dimension. Returns -inf (grad zeroed) when the trajectory degenerates
  // numerically; throws on non-finite input naming the coordinate.
  double value_and_grad(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const;
  double value(const Eigen::VectorXd& u) const;

  // change-of-variables term alone (for recomposition checks)
  double log_jacobian(const Eigen::VectorXd& u) const;

  ModelParams unpack(const Eigen::VectorXd& u) const;
  Eigen::VectorXd pack(const ModelParams& params) const;
  LatentTrajectory trajectory(const ModelParams& params) const;

  // reporting surface: natural-scale coordinates and their names
  // (alpha_*, p1_<country>_*, sigma_<block>, omega_<block>_r_k, eps_* optional)
  std::vector<std::string> constrained_names(bool include_eps) const;
  Eigen::VectorXd constrained_row(const Eigen::VectorXd& u, bool include_eps) const;

  // prior draw in unconstrained coordinates (alpha 0, eps 0, omega identity,
  // sigma half-Cauchy truncated at 2, p1 from the Dirichlet prior)
  Eigen::VectorXd initial_point(class Rng& rng) const;

  // layout offsets (used by tests and the forecast reconstruction)
  int alpha_offset() const { return 0; }
  int p1_offset() const { return C_ - 1; }
  int sigma_offset() const { return sigma_off_; }
  int omega_offset(int block) const { return omega_off_[block]; }
  int eps_offset() const { return eps_off_; }
  int eps_index(int country, int t, int c) const {  // t in 2..T, c in 2..C
    return eps_off_ + (country * (T_ - 1) + (t - 2)) * (C_ - 1) + (c - 2);
  }

 private:
  CountSeries counts_;
  ContinentSpec continents_;
  PriorConfig prior_;
  int window_;
  int K_, T_, C_, B_;
  int sigma_off_ = 0, eps_off_ = 0, dim_ = 0;
  std::vector<int> omega_off_;
  std::vector<double> log_coef_;       // multinomial coefficient per (i,t)
  std::vector<std::vector<int>> obs_;  // observed day indices (0-based) per country

  struct BlockGeom;
  double eval(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const;
};

}  // namespace spikevar
