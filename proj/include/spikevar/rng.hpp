#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace spikevar {

// mt19937_64 engine with hand-rolled distributions. The engine's output is
// pinned by the standard; the std:: distributions are not, and every seeded
// run here must reproduce bit-identical results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t bits() { return engine_(); }

  // uniform on (0, 1); never returns 0 or 1
  double u01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive range
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // Lemire-style rejection keeps this unbiased and deterministic.
    std::uint64_t x, r;
    do {
      x = engine_();
      r = x % span;
    } while (x - r > std::uint64_t(-1) - span + 1);
    return lo + static_cast<std::int64_t>(r);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * u01() - 1.0;
      v = 2.0 * u01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  double cauchy(double loc, double scale) {
    return loc + scale * std::tan(M_PI * (u01() - 0.5));
  }

  // Marsaglia-Tsang; boosted for shape < 1
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = u01();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = u01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::vector<double> dirichlet(const std::vector<double>& alpha) {
    std::vector<double> g(alpha.size());
    double sum = 0.0;
    for (size_t i = 0; i < alpha.size(); ++i) {
      g[i] = gamma(alpha[i]);
      sum += g[i];
    }
    if (sum <= 0.0) throw std::runtime_error("dirichlet: degenerate draw");
    for (auto& x : g) x /= sum;
    return g;
  }

  std::int64_t binomial(std::int64_t n, double p) {
    if (n < 0) throw std::invalid_argument("binomial: n < 0");
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < n; ++i)
      if (u01() < p) ++k;
    return k;
  }

  // sequential conditional binomials; sum of result equals n
  std::vector<std::int64_t> multinomial(std::int64_t n, const std::vector<double>& p) {
    std::vector<std::int64_t> y(p.size(), 0);
    double rest = 1.0;
    std::int64_t left = n;
    for (size_t c = 0; c + 1 < p.size() && left > 0; ++c) {
      const double q = rest > 0.0 ? std::min(1.0, p[c] / rest) : 1.0;
      y[c] = binomial(left, q);
      left -= y[c];
      rest -= p[c];
    }
    if (!p.empty()) y[p.size() - 1] += left;
    return y;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace spikevar
