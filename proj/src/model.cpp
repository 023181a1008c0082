#include "spikevar/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spikevar/rng.hpp"

namespace spikevar {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace

// ContinentSpec ---------------------------------------------------------------

int ContinentSpec::block_of(int country) const {
  for (size_t b = 0; b < members.size(); ++b)
    for (int idx : members[b])
      if (idx == country) return static_cast<int>(b);
  return -1;
}

void ContinentSpec::validate(int n_countries) const {
  if (names.size() != members.size()) throw std::invalid_argument("continent spec: name/member mismatch");
  std::vector<int> seen(n_countries, 0);
  for (const auto& block : members)
    for (int idx : block) {
      if (idx < 0 || idx >= n_countries)
        throw std::invalid_argument("continent spec: country index out of range");
      ++seen[idx];
    }
  for (int i = 0; i < n_countries; ++i)
    if (seen[i] != 1)
      throw std::invalid_argument("continent spec: every country must appear in exactly one block");
}

ContinentSpec ContinentSpec::from_codes(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& blocks,
    const std::vector<std::string>& countries) {
  ContinentSpec spec;
  for (const auto& [name, codes] : blocks) {
    std::vector<int> idxs;
    for (const auto& code : codes) {
      int found = -1;
      for (size_t i = 0; i < countries.size(); ++i)
        if (countries[i] == code) found = static_cast<int>(i);
      if (found < 0) continue;  // block may mention countries absent from this dataset
      idxs.push_back(found);
    }
    if (!idxs.empty()) {
      spec.names.push_back(name);
      spec.members.push_back(std::move(idxs));
    }
  }
  spec.validate(static_cast<int>(countries.size()));
  return spec;
}

void PriorConfig::validate(int n_clusters) const {
  if (static_cast<int>(dirichlet_alpha.size()) != n_clusters)
    throw std::invalid_argument("prior config: dirichlet_alpha must have one entry per cluster");
  for (double a : dirichlet_alpha)
    if (!(a > 0)) throw std::invalid_argument("prior config: dirichlet_alpha entries must be positive");
  if (!(sigma_scale > 0)) throw std::invalid_argument("prior config: sigma_scale must be positive");
  if (!(lkj_eta > 0)) throw std::invalid_argument("prior config: lkj_eta must be positive");
  if (alpha_normal && !(alpha_sd > 0))
    throw std::invalid_argument("prior config: alpha_sd must be positive");
}

// Log-ratio transform ---------------------------------------------------------

Eigen::VectorXd alr(const Eigen::VectorXd& p) {
  const int C = static_cast<int>(p.size());
  if (C < 2) throw std::invalid_argument("alr: need at least 2 components");
  double sum = 0.0;
  for (int c = 0; c < C; ++c) {
    if (!(p[c] > 0)) throw std::domain_error("alr: nonpositive component");
    sum += p[c];
  }
  if (std::abs(sum - 1.0) > 1e-10) throw std::domain_error("alr: components must sum to 1");
  Eigen::VectorXd v(C - 1);
  const double log_base = std::log(p[0]);
  for (int c = 1; c < C; ++c) v[c - 1] = std::log(p[c]) - log_base;
  return v;
}

Eigen::VectorXd alr_inv(const Eigen::VectorXd& v) {
  const int C = static_cast<int>(v.size()) + 1;
  for (int c = 0; c < C - 1; ++c)
    if (!std::isfinite(v[c])) throw std::domain_error("alr_inv: non-finite input");
  double mx = 0.0;  // implicit leading zero
  for (int c = 0; c < C - 1; ++c) mx = std::max(mx, v[c]);
  Eigen::VectorXd p(C);
  p[0] = std::exp(-mx);
  double sum = p[0];
  for (int c = 1; c < C; ++c) {
    p[c] = std::exp(v[c - 1] - mx);
    sum += p[c];
  }
  p /= sum;
  return p;
}

// Dynamics --------------------------------------------------------------------

Eigen::MatrixXd propagate(const Eigen::VectorXd& p1, const Eigen::VectorXd& alpha,
                          const Eigen::MatrixXd& eps) {
  const int C = static_cast<int>(p1.size());
  const int T = static_cast<int>(eps.rows()) + 1;
  if (alpha.size() != C - 1 || eps.cols() != C - 1)
    throw std::invalid_argument("propagate: dimension mismatch");
  Eigen::MatrixXd traj(T, C);
  Eigen::VectorXd ptil = alr(p1);
  traj.row(0) = alr_inv(ptil).transpose();
  for (int t = 1; t < T; ++t) {
    ptil += alpha + eps.row(t - 1).transpose();
    traj.row(t) = alr_inv(ptil).transpose();
  }
  return traj;
}

Eigen::VectorXd window_prob(const Eigen::MatrixXd& traj, int t, int window) {
  const int T = static_cast<int>(traj.rows());
  if (t < 1 || t > T) throw std::out_of_range("window_prob: t out of range");
  const int w = std::min(t, window);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(traj.cols());
  for (int j = t - w; j < t; ++j) q += traj.row(j).transpose();
  return q / w;
}

// Densities ---------------------------------------------------------------------

double log_likelihood(const CountSeries& counts, const LatentTrajectory& traj, int window) {
  const int K = static_cast<int>(counts.countries.size());
  const int T = counts.days;
  const int C = counts.n_clusters;
  if (static_cast<int>(traj.p.size()) != K)
    throw std::invalid_argument("log_likelihood: trajectory must cover every country");
  double total = 0.0;
  for (int i = 0; i < K; ++i) {
    if (traj.p[i].rows() != T || traj.p[i].cols() != C)
      throw std::invalid_argument("log_likelihood: trajectory dimension mismatch");
    for (int t = 1; t <= T; ++t) {
      const std::int64_t n = counts.total(i, t - 1);
      if (n == 0) continue;
      const Eigen::VectorXd q = window_prob(traj.p[i], t, window);
      double cell = std::lgamma(static_cast<double>(n) + 1.0);
      for (int c = 0; c < C; ++c) {
        const std::int64_t y = counts.at(i, t - 1, c);
        if (q[c] <= 0) throw std::domain_error("log_likelihood: nonpositive probability entry");
        cell -= std::lgamma(static_cast<double>(y) + 1.0);
        cell += static_cast<double>(y) * std::log(q[c]);
      }
      total += cell;
    }
  }
  return total;
}

double dirichlet_log_density(const Eigen::VectorXd& p, const std::vector<double>& alpha) {
  if (p.size() != static_cast<Eigen::Index>(alpha.size()))
    throw std::invalid_argument("dirichlet_log_density: dimension mismatch");
  double a_sum = 0.0, lg_sum = 0.0, val = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    if (!(p[c] > 0)) throw std::domain_error("dirichlet_log_density: nonpositive component");
    a_sum += alpha[c];
    lg_sum += std::lgamma(alpha[c]);
    val += (alpha[c] - 1.0) * std::log(p[c]);
  }
  return val + std::lgamma(a_sum) - lg_sum;
}

double half_cauchy_log_density(double x, double scale) {
  if (!(x > 0)) throw std::domain_error("half_cauchy_log_density: support is x > 0");
  return std::log(2.0 / (M_PI * scale)) - std::log1p((x / scale) * (x / scale));
}

double lkj_log_density(const Eigen::MatrixXd& omega, double eta) {
  const int m = static_cast<int>(omega.rows());
  if (omega.cols() != m) throw std::invalid_argument("lkj_log_density: square matrix required");
  if (m == 1) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("lkj_log_density: matrix not positive definite");
  double logdet = 0.0;
  for (int i = 0; i < m; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  // normalizing constant via the partial-correlation factorization:
  // column k contributes (m-k) independent scaled Beta(b_k, b_k) terms
  double log_c = 0.0;
  for (int k = 1; k <= m - 1; ++k) {
    const double b = eta + (m - 1 - k) / 2.0;
    log_c -= (m - k) * ((2.0 * b - 1.0) * std::log(2.0) + log_beta(b, b));
  }
  return log_c + (eta - 1.0) * logdet;
}

double log_prior(const ModelParams& params, const PriorConfig& cfg, const ContinentSpec& continents) {
  const int C = static_cast<int>(params.p1.cols());
  const int K = static_cast<int>(params.p1.rows());
  const int B = continents.n_blocks();
  cfg.validate(C);
  if (static_cast<int>(params.sigma.size()) != B || static_cast<int>(params.omega.size()) != B)
    throw std::invalid_argument("log_prior: one sigma and omega per continent block");

  double val = 0.0;
  for (int i = 0; i < K; ++i)
    val += dirichlet_log_density(params.p1.row(i).transpose(), cfg.dirichlet_alpha);
  for (int b = 0; b < B; ++b) {
    if (!(params.sigma[b] > 0)) throw std::domain_error("log_prior: sigma must be positive");
    val += half_cauchy_log_density(params.sigma[b], cfg.sigma_scale);
    val += lkj_log_density(params.omega[b], cfg.lkj_eta);
  }
  if (cfg.alpha_normal)
    for (Eigen::Index c = 0; c < params.alpha.size(); ++c)
      val += -0.5 * kLog2Pi - std::log(cfg.alpha_sd) -
             0.5 * (params.alpha[c] / cfg.alpha_sd) * (params.alpha[c] / cfg.alpha_sd);

  // innovations: one K-variate normal per (day, cluster), block diagonal
  if (K > 0 && !params.eps.empty()) {
    const int Tm1 = static_cast<int>(params.eps[0].rows());
    const int Cm1 = static_cast<int>(params.eps[0].cols());
    for (int b = 0; b < B; ++b) {
      const auto& mem = continents.members[b];
      const int m = static_cast<int>(mem.size());
      const double sigma = params.sigma[b];
      Eigen::MatrixXd cov = sigma * sigma * params.omega[b];
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) throw std::domain_error("log_prior: covariance not PD");
      double logdet = 0.0;
      for (int i = 0; i < m; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
      Eigen::VectorXd e(m);
      for (int t = 0; t < Tm1; ++t)
        for (int c = 0; c < Cm1; ++c) {
          for (int j = 0; j < m; ++j) e[j] = params.eps[mem[j]](t, c);
          const double quad = e.dot(llt.solve(e));
          val += -0.5 * (m * kLog2Pi + logdet + quad);
        }
    }
  }
  return val;
}

// Posterior -------------------------------------------------------------------

Posterior::Posterior(const CountSeries& counts, ContinentSpec continents, PriorConfig prior,
                     int window)
    : counts_(counts),
      continents_(std::move(continents)),
      prior_(std::move(prior)),
      window_(window),
      K_(static_cast<int>(counts.countries.size())),
      T_(counts.days),
      C_(counts.n_clusters) {
  if (window_ < 1) throw std::invalid_argument("Posterior: window must be >= 1");
  if (T_ < 2) throw std::invalid_argument("Posterior: need at least 2 days");
  if (C_ < 2) throw std::invalid_argument("Posterior: need at least 2 clusters");
  continents_.validate(K_);
  prior_.validate(C_);
  B_ = continents_.n_blocks();

  sigma_off_ = (C_ - 1) * (1 + K_);
  int off = sigma_off_ + B_;
  omega_off_.resize(B_);
  for (int b = 0; b < B_; ++b) {
    omega_off_[b] = off;
    const int m = static_cast<int>(continents_.members[b].size());
    off += m * (m - 1) / 2;
  }
  eps_off_ = off;
  dim_ = eps_off_ + K_ * (T_ - 1) * (C_ - 1);

  log_coef_.assign(size_t(K_) * T_, 0.0);
  obs_.resize(K_);
  for (int i = 0; i < K_; ++i)
    for (int t = 0; t < T_; ++t) {
      const std::int64_t n = counts_.total(i, t);
      if (n > 0) {
        double lc = std::lgamma(static_cast<double>(n) + 1.0);
        for (int c = 0; c < C_; ++c)
          lc -= std::lgamma(static_cast<double>(counts_.at(i, t, c)) + 1.0);
        log_coef_[size_t(i) * T_ + t] = lc;
        obs_[i].push_back(t);
      }
    }
}

ModelParams Posterior::unpack(const Eigen::VectorXd& u) const {
  if (u.size() != dim_) throw std::invalid_argument("unpack: dimension mismatch");
  ModelParams p;
  p.alpha = u.segment(0, C_ - 1);
  p.p1.resize(K_, C_);
  for (int i = 0; i < K_; ++i)
    p.p1.row(i) = alr_inv(u.segment(p1_offset() + i * (C_ - 1), C_ - 1)).transpose();
  p.sigma.resize(B_);
  p.omega.resize(B_);
  for (int b = 0; b < B_; ++b) {
    p.sigma[b] = std::exp(u[sigma_off_ + b]);
    const int m = static_cast<int>(continents_.members[b].size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    L(0, 0) = 1.0;
    int idx = omega_off_[b];
    for (int r = 1; r < m; ++r) {
      double prefix = 1.0;
      for (int k = 0; k < r; ++k) {
        const double z = std::tanh(u[idx++]);
        L(r, k) = z * prefix;
        prefix *= std::sqrt(1.0 - z * z);
      }
      L(r, r) = prefix;
    }
    p.omega[b] = L * L.transpose();
  }
  p.eps.resize(K_);
  for (int i = 0; i < K_; ++i) {
    p.eps[i].resize(T_ - 1, C_ - 1);
    for (int t = 2; t <= T_; ++t)
      for (int c = 2; c <= C_; ++c) p.eps[i](t - 2, c - 2) = u[eps_index(i, t, c)];
  }
  return p;
}

Eigen::VectorXd Posterior::pack(const ModelParams& p) const {
  Eigen::VectorXd u(dim_);
  u.segment(0, C_ - 1) = p.alpha;
  for (int i = 0; i < K_; ++i)
    u.segment(p1_offset() + i * (C_ - 1), C_ - 1) = alr(p.p1.row(i).transpose());
  for (int b = 0; b < B_; ++b) {
    if (!(p.sigma[b] > 0)) throw std::domain_error("pack: sigma must be positive");
    u[sigma_off_ + b] = std::log(p.sigma[b]);
    const int m = static_cast<int>(continents_.members[b].size());
    Eigen::LLT<Eigen::MatrixXd> llt(p.omega[b]);
    if (llt.info() != Eigen::Success) throw std::domain_error("pack: omega not positive definite");
    Eigen::MatrixXd L = llt.matrixL();
    int idx = omega_off_[b];
    for (int r = 1; r < m; ++r) {
      double prefix = 1.0;
      for (int k = 0; k < r; ++k) {
        const double z = L(r, k) / prefix;
        if (!(z > -1.0 && z < 1.0)) throw std::domain_error("pack: invalid correlation matrix");
        u[idx++] = std::atanh(z);
        prefix *= std::sqrt(1.0 - z * z);
      }
    }
  }
  for (int i = 0; i < K_; ++i)
    for (int t = 2; t <= T_; ++t)
      for (int c = 2; c <= C_; ++c) u[eps_index(i, t, c)] = p.eps[i](t - 2, c - 2);
  return u;
}

LatentTrajectory Posterior::trajectory(const ModelParams& params) const {
  LatentTrajectory traj;
  traj.p.reserve(K_);
  for (int i = 0; i < K_; ++i)
    traj.p.push_back(propagate(params.p1.row(i).transpose(), params.alpha, params.eps[i]));
  return traj;
}

double Posterior::log_jacobian(const Eigen::VectorXd& u) const {
  if (u.size() != dim_) throw std::invalid_argument("log_jacobian: dimension mismatch");
  double val = 0.0;
  // log-ratio bijection for p1: sum of log components
  for (int i = 0; i < K_; ++i) {
    const Eigen::VectorXd p = alr_inv(u.segment(p1_offset() + i * (C_ - 1), C_ - 1));
    for (int c = 0; c < C_; ++c) val += std::log(p[c]);
  }
  // log bijection for sigma
  for (int b = 0; b < B_; ++b) val += u[sigma_off_ + b];
  // tanh + partial-correlation construction for omega
  for (int b = 0; b < B_; ++b) {
    const int m = static_cast<int>(continents_.members[b].size());
    int idx = omega_off_[b];
    for (int r = 1; r < m; ++r)
      for (int k = 0; k < r; ++k) {
        const double z = std::tanh(u[idx++]);
        val += (1.0 + (m - 2 - k) / 2.0) * std::log1p(-z * z);
      }
  }
  return val;
}

double Posterior::value(const Eigen::VectorXd& u) const { return eval(u, nullptr); }

double Posterior::value_and_grad(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const {
  grad.resize(dim_);
  return eval(u, &grad);
}

double Posterior::eval(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const {
  if (u.size() != dim_) throw std::invalid_argument("posterior: dimension mismatch");
  for (int i = 0; i < dim_; ++i)
    if (!std::isfinite(u[i]))
      throw std::domain_error("posterior: non-finite input at coordinate " + std::to_string(i));
  if (grad) grad->setZero();

  const int Cm1 = C_ - 1;
  double val = 0.0;

  // --- likelihood plus p1 prior, country by country ---
  std::vector<double> p_rows(size_t(T_) * C_);    // trajectory on the simplex
  std::vector<double> gq(size_t(T_) * C_);        // d val / d window prob (observed days)
  std::vector<double> gp(size_t(T_) * C_);        // d val / d p
  std::vector<double> ptil(Cm1), wsum(C_), S(Cm1), A(Cm1);

  const double a_total = [&] {
    double s = 0.0;
    for (double a : prior_.dirichlet_alpha) s += a;
    return s;
  }();
  double dir_const = std::lgamma(a_total);
  for (double a : prior_.dirichlet_alpha) dir_const -= std::lgamma(a);

  for (int i = 0; i < K_; ++i) {
    const int vp1_off = p1_offset() + i * Cm1;
    for (int c = 0; c < Cm1; ++c) ptil[c] = u[vp1_off + c];
    std::fill(wsum.begin(), wsum.end(), 0.0);
    if (grad) {
      std::fill(gq.begin(), gq.end(), 0.0);
      std::fill(gp.begin(), gp.end(), 0.0);
    }

    // forward: build p rows, window sums, and the observation terms
    bool degenerate = false;
    size_t obs_cursor = 0;
    for (int s = 0; s < T_; ++s) {
      if (s > 0) {
        const int e_off = eps_off_ + (i * (T_ - 1) + (s - 1)) * Cm1;
        for (int c = 0; c < Cm1; ++c) ptil[c] += u[c] + u[e_off + c];
      }
      double mx = 0.0;
      for (int c = 0; c < Cm1; ++c) mx = std::max(mx, ptil[c]);
      double sum = std::exp(-mx);
      double* prow = &p_rows[size_t(s) * C_];
      prow[0] = sum;
      for (int c = 0; c < Cm1; ++c) {
        prow[c + 1] = std::exp(ptil[c] - mx);
        sum += prow[c + 1];
      }
      const double inv = 1.0 / sum;
      for (int c = 0; c < C_; ++c) {
        prow[c] *= inv;
        wsum[c] += prow[c];
      }
      if (s >= window_) {
        const double* drop = &p_rows[size_t(s - window_) * C_];
        for (int c = 0; c < C_; ++c) wsum[c] -= drop[c];
      }

      if (obs_cursor < obs_[i].size() && obs_[i][obs_cursor] == s) {
        ++obs_cursor;
        const int w_len = std::min(s + 1, window_);
        const double inv_w = 1.0 / w_len;
        double cell = log_coef_[size_t(i) * T_ + s];
        double* gq_row = &gq[size_t(s) * C_];
        for (int c = 0; c < C_; ++c) {
          const std::int64_t y = counts_.at(i, s, c);
          if (y == 0) continue;
          const double q = wsum[c] * inv_w;
          if (!(q > 0.0)) {
            degenerate = true;
            break;
          }
          cell += static_cast<double>(y) * std::log(q);
          if (grad) gq_row[c] = static_cast<double>(y) / q;
        }
        if (degenerate) break;
        val += cell;
      }
    }
    if (degenerate) {
      if (grad) grad->setZero();
      return kNegInf;
    }

    // p1 prior (with its bijection Jacobian folded in: coefficients a_c, not a_c - 1)
    {
      const double* p0 = &p_rows[0];
      val += dir_const;
      for (int c = 0; c < C_; ++c) val += prior_.dirichlet_alpha[c] * std::log(p0[c]);
      if (grad)
        for (int c = 1; c < C_; ++c)
          (*grad)[vp1_off + c - 1] += prior_.dirichlet_alpha[c] - a_total * p0[c];
    }

    if (!grad) continue;

    // backward: window scatter, softmax, then suffix sums into eps/alpha/p1
    for (int t : obs_[i]) {
      const int w_len = std::min(t + 1, window_);
      const double inv_w = 1.0 / w_len;
      const double* gq_row = &gq[size_t(t) * C_];
      for (int j = t - w_len + 1; j <= t; ++j) {
        double* gp_row = &gp[size_t(j) * C_];
        for (int c = 0; c < C_; ++c) gp_row[c] += gq_row[c] * inv_w;
      }
    }
    std::fill(S.begin(), S.end(), 0.0);
    std::fill(A.begin(), A.end(), 0.0);
    for (int s = T_ - 1; s >= 0; --s) {
      const double* prow = &p_rows[size_t(s) * C_];
      const double* gp_row = &gp[size_t(s) * C_];
      double dot = 0.0;
      for (int c = 0; c < C_; ++c) dot += gp_row[c] * prow[c];
      for (int c = 0; c < Cm1; ++c) S[c] += prow[c + 1] * (gp_row[c + 1] - dot);
      if (s >= 1) {
        const int e_off = eps_off_ + (i * (T_ - 1) + (s - 1)) * Cm1;
        for (int c = 0; c < Cm1; ++c) {
          (*grad)[e_off + c] += S[c];
          A[c] += S[c];
        }
      } else {
        for (int c = 0; c < Cm1; ++c) (*grad)[vp1_off + c] += S[c];
      }
    }
    for (int c = 0; c < Cm1; ++c) (*grad)[c] += A[c];
  }

  // --- alpha prior ---
  if (prior_.alpha_normal) {
    const double sd = prior_.alpha_sd;
    for (int c = 0; c < Cm1; ++c) {
      val += -0.5 * kLog2Pi - std::log(sd) - 0.5 * (u[c] / sd) * (u[c] / sd);
      if (grad) (*grad)[c] -= u[c] / (sd * sd);
    }
  }

  // --- per-block: sigma prior, correlation prior, innovation density ---
  const int Ns = (T_ - 1) * Cm1;  // independent noise slices per block
  for (int b = 0; b < B_; ++b) {
    const auto& mem = continents_.members[b];
    const int m = static_cast<int>(mem.size());
    const double w = u[sigma_off_ + b];
    const double sigma = std::exp(w);
    const double s2 = prior_.sigma_scale * prior_.sigma_scale;

    // half-Cauchy prior plus log bijection Jacobian
    val += std::log(2.0 / (M_PI * prior_.sigma_scale)) - std::log1p(sigma * sigma / s2) + w;
    if (grad) (*grad)[sigma_off_ + b] += 1.0 - 2.0 * sigma * sigma / (sigma * sigma + s2);

    // correlation block from partial correlations
    Eigen::MatrixXd L = Eigen::MatrixXd::Identity(m, m);
    std::vector<double> z(size_t(m) * m, 0.0);
    double logdet = 0.0;
    {
      int idx = omega_off_[b];
      for (int r = 1; r < m; ++r) {
        double prefix = 1.0;
        for (int k = 0; k < r; ++k) {
          const double zz = std::tanh(u[idx++]);
          z[size_t(r) * m + k] = zz;
          L(r, k) = zz * prefix;
          prefix *= std::sqrt(1.0 - zz * zz);
          logdet += std::log1p(-zz * zz);
        }
        L(r, r) = prefix;
        if (!(prefix > 1e-150)) {
          if (grad) grad->setZero();
          return kNegInf;
        }
      }
    }

    // prior + Jacobian for the partial correlations: sum b_k log(1 - z^2) + const
    {
      int idx = omega_off_[b];
      for (int r = 1; r < m; ++r)
        for (int k = 0; k < r; ++k) {
          const double bk = prior_.lkj_eta + (m - 2 - k) / 2.0;
          const double zz = z[size_t(r) * m + k];
          val += bk * std::log1p(-zz * zz) - (2.0 * bk - 1.0) * std::log(2.0) - log_beta(bk, bk);
          if (grad) (*grad)[idx] += -2.0 * bk * zz;
          ++idx;
        }
    }

    // innovation slices e ~ N(0, sigma^2 Omega)
    Eigen::MatrixXd Linv = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(m, m));
    Eigen::MatrixXd omega_inv = Linv.transpose() * Linv;
    Eigen::VectorXd e(m), f(m);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
    double quad_total = 0.0;
    std::vector<int> base(m);
    for (int j = 0; j < m; ++j) base[j] = eps_off_ + mem[j] * (T_ - 1) * Cm1;
    for (int slice = 0; slice < Ns; ++slice) {
      for (int j = 0; j < m; ++j) e[j] = u[base[j] + slice];
      f.noalias() = omega_inv * e;
      quad_total += e.dot(f);
      if (grad) {
        const double inv_s2 = 1.0 / (sigma * sigma);
        for (int j = 0; j < m; ++j) (*grad)[base[j] + slice] -= f[j] * inv_s2;
        R.noalias() += f * f.transpose();
      }
    }
    val += -0.5 * Ns * (m * kLog2Pi + logdet) - Ns * m * w - quad_total / (2.0 * sigma * sigma);
    if (grad) {
      (*grad)[sigma_off_ + b] += -static_cast<double>(Ns) * m + quad_total / (sigma * sigma);
      if (m > 1) {
        // chain rule through Omega = L L^T for the quadratic-form term; the
        // log-det term has the closed form Ns * z
        Eigen::MatrixXd G = R / (2.0 * sigma * sigma);
        Eigen::MatrixXd gL = 2.0 * G * L;
        int idx = omega_off_[b];
        for (int r = 1; r < m; ++r) {
          // prefix products P_k = prod_{j<=k} sqrt(1-z_j^2)
          double tail = gL(r, r) * L(r, r);
          std::vector<double> gy(r);
          for (int k = r - 1; k >= 0; --k) {
            const double zz = z[size_t(r) * m + k];
            double prefix = 1.0;
            for (int j = 0; j < k; ++j) {
              const double zj = z[size_t(r) * m + j];
              prefix *= std::sqrt(1.0 - zj * zj);
            }
            gy[k] = gL(r, k) * prefix * (1.0 - zz * zz) - zz * tail;
            tail += gL(r, k) * L(r, k);
          }
          for (int k = 0; k < r; ++k) {
            const double zz = z[size_t(r) * m + k];
            (*grad)[idx + k] += gy[k] + static_cast<double>(Ns) * zz;
          }
          idx += r;
        }
      }
    }
  }
  if (!std::isfinite(val)) {
    if (grad) grad->setZero();
    return kNegInf;
  }
  return val;
}

std::vector<std::string> Posterior::constrained_names(bool include_eps) const {
  std::vector<std::string> names;
  for (int c = 2; c <= C_; ++c) names.push_back("alpha_" + std::to_string(c));
  for (int i = 0; i < K_; ++i)
    for (int c = 1; c <= C_; ++c)
      names.push_back("p1_" + counts_.countries[i] + "_" + std::to_string(c));
  for (int b = 0; b < B_; ++b) names.push_back("sigma_" + continents_.names[b]);
  for (int b = 0; b < B_; ++b) {
    const int m = static_cast<int>(continents_.members[b].size());
    for (int r = 2; r <= m; ++r)
      for (int k = 1; k < r; ++k)
        names.push_back("omega_" + continents_.names[b] + "_" + std::to_string(r) + "_" +
                        std::to_string(k));
  }
  if (include_eps)
    for (int i = 0; i < K_; ++i)
      for (int t = 2; t <= T_; ++t)
        for (int c = 2; c <= C_; ++c)
          names.push_back("eps_" + counts_.countries[i] + "_" + std::to_string(t) + "_" +
                          std::to_string(c));
  return names;
}

Eigen::VectorXd Posterior::constrained_row(const Eigen::VectorXd& u, bool include_eps) const {
  const ModelParams p = unpack(u);
  int n_omega = 0;
  for (int b = 0; b < B_; ++b) {
    const int m = static_cast<int>(continents_.members[b].size());
    n_omega += m * (m - 1) / 2;
  }
  const int n = (C_ - 1) + K_ * C_ + B_ + n_omega +
                (include_eps ? K_ * (T_ - 1) * (C_ - 1) : 0);
  Eigen::VectorXd row(n);
  int idx = 0;
  for (int c = 0; c < C_ - 1; ++c) row[idx++] = p.alpha[c];
  for (int i = 0; i < K_; ++i)
    for (int c = 0; c < C_; ++c) row[idx++] = p.p1(i, c);
  for (int b = 0; b < B_; ++b) row[idx++] = p.sigma[b];
  for (int b = 0; b < B_; ++b) {
    const int m = static_cast<int>(continents_.members[b].size());
    for (int r = 1; r < m; ++r)
      for (int k = 0; k < r; ++k) row[idx++] = p.omega[b](r, k);
  }
  if (include_eps)
    for (int i = 0; i < K_; ++i)
      for (int t = 2; t <= T_; ++t)
        for (int c = 2; c <= C_; ++c) row[idx++] = p.eps[i](t - 2, c - 2);
  return row;
}

Eigen::VectorXd Posterior::initial_point(Rng& rng) const {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim_);
  for (int i = 0; i < K_; ++i) {
    const std::vector<double> p = rng.dirichlet(prior_.dirichlet_alpha);
    Eigen::VectorXd pv = Eigen::Map<const Eigen::VectorXd>(p.data(), C_);
    // guard against zero components from extreme prior draws
    for (int c = 0; c < C_; ++c) pv[c] = std::max(pv[c], 1e-12);
    pv /= pv.sum();
    u.segment(p1_offset() + i * (C_ - 1), C_ - 1) = alr(pv);
  }
  for (int b = 0; b < B_; ++b) {
    double s;
    do {
      s = std::abs(rng.cauchy(0.0, prior_.sigma_scale));
    } while (s >= 2.0 || s < 1e-3);
    u[sigma_off_ + b] = std::log(s);
  }
  return u;
}

}  // namespace spikevar
