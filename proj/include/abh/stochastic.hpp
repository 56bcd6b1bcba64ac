#pragma once

// Monte Carlo side: Gaussian noise with covariance hbar N, the retarded Green
// function from characteristics, a lattice Langevin solve and ensemble
// estimates of the Pi-Pi correlation.

#include <abh/collapse.hpp>
#include <abh/correlations.hpp>
#include <abh/environment.hpp>
#include <abh/errors.hpp>
#include <abh/parallel.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace abh {

// ---- random streams ----

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream i of a master seed; the result does not depend on who asks or when.
inline std::mt19937_64 stream(std::uint64_t master, std::uint64_t i) {
  return std::mt19937_64(splitmix64(master ^ splitmix64(i + 0x632be59bd9b4e019ULL)));
}

// ---- lattice ----

struct Lattice {
  double x_lo = -20.0, x_hi = 120.0, dx = 0.1;
  double t_end = 100.0, dt = 0.05;

  std::size_t nx() const { return static_cast<std::size_t>(std::llround((x_hi - x_lo) / dx)) + 1; }
  std::size_t nt() const { return static_cast<std::size_t>(std::llround(t_end / dt)) + 1; }
  double x(std::size_t i) const { return x_lo + static_cast<double>(i) * dx; }
  double t(std::size_t n) const { return static_cast<double>(n) * dt; }

  // dx = dx_over_a a, dt = dx/2, x in [-w a, w a + t_end].
  static Lattice for_profile(const CollapseProfile& p, double t_end, double dx_over_a = 0.1,
                             double window_factor = 20.0) {
    if (!(dx_over_a > 0) || !(window_factor > 0) || !(t_end > 0)) throw ConfigError("bad lattice parameters");
    Lattice l;
    l.dx = dx_over_a * p.a;
    l.dt = 0.5 * l.dx;
    l.x_lo = -window_factor * p.a;
    l.x_hi = window_factor * p.a + t_end;
    l.t_end = t_end;
    return l;
  }
};

// ---- noise ----

// Factor of the time covariance hbar gamma^2 N(t_i - t_j) on a fixed set of times.
class NoiseSampler {
 public:
  NoiseSampler(const std::vector<double>& times, const OhmicBath& bath) : n_(times.size()) {
    if (n_ == 0) throw ConfigError("noise needs at least one time");
    factor_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    if (bath.gamma == 0.0) return;
    Eigen::MatrixXd C(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    const double scale = bath.hbar * bath.gamma * bath.gamma;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        const double v = scale * noise_kernel_closed(times[i] - times[j], bath);
        C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        C(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    Eigen::VectorXd lam = es.eigenvalues();
    const double norm = std::max(std::abs(lam.minCoeff()), std::abs(lam.maxCoeff()));
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (lam(i) < -1e-10 * norm)
        throw CovarianceNotPSD("noise covariance has a significantly negative eigenvalue");
      if (lam(i) < 0) {
        lam(i) = 0;
        clipped_ = true;
      }
    }
    factor_ = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
  }

  std::size_t size() const { return n_; }
  bool clipped() const { return clipped_; }

  template <class Rng>
  Eigen::VectorXd draw(Rng& rng) const {
    std::normal_distribution<double> g;
    Eigen::VectorXd z(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) z(static_cast<Eigen::Index>(i)) = g(rng);
    return factor_ * z;
  }

 private:
  std::size_t n_;
  Eigen::MatrixXd factor_;
  bool clipped_ = false;
};

struct NoiseRealization {
  Lattice lattice;
  Eigen::MatrixXd xi;  // (time, site)
  std::uint64_t seed = 0;
  bool clipped = false;
};

inline std::vector<double> lattice_times(const Lattice& l) {
  std::vector<double> t(l.nt());
  for (std::size_t n = 0; n < t.size(); ++n) t[n] = l.t(n);
  return t;
}

// Sites are independent (N is local in space); the discrete delta makes the
// per-site covariance hbar N / dx.
inline NoiseRealization sample_noise(const Lattice& lattice, const NoiseSampler& sampler, std::uint64_t seed) {
  if (sampler.size() != lattice.nt()) throw ConfigError("noise sampler does not match the lattice times");
  NoiseRealization r;
  r.lattice = lattice;
  r.seed = seed;
  r.clipped = sampler.clipped();
  r.xi.resize(static_cast<Eigen::Index>(lattice.nt()), static_cast<Eigen::Index>(lattice.nx()));
  const double s = 1.0 / std::sqrt(lattice.dx);
  for (std::size_t j = 0; j < lattice.nx(); ++j) {
    auto rng = stream(seed, j);
    r.xi.col(static_cast<Eigen::Index>(j)) = s * sampler.draw(rng);
  }
  return r;
}

inline NoiseRealization sample_noise(const Lattice& lattice, const OhmicBath& bath, std::uint64_t seed) {
  return sample_noise(lattice, NoiseSampler(lattice_times(lattice), bath), seed);
}

// ---- retarded Green function ----

// 1/2 between the two characteristics leaving the source, zero elsewhere.
inline double green_retarded(double xs, double ts, double x, double t, const CollapseProfile& profile) {
  if (!(t > ts)) return 0.0;
  const double right = propagate_ray(xs, ts, t, profile, RayFamily::trapped).x_end();
  const double left = propagate_ray(xs, ts, t, profile, RayFamily::counter).x_end();
  return (x >= left && x <= right) ? 0.5 : 0.0;
}

// ---- Langevin solve ----

// Psi_o = sum_m 2 Re[alpha_m Psi^-_{k_m}].
struct InitialModes {
  std::vector<double> k;
  std::vector<std::complex<double>> alpha;
};

// Thermal amplitudes: real and imaginary parts with variance coth(beta k/2)/4 each.
inline InitialModes sample_initial_modes(const std::vector<double>& ks, double temperature, double hbar,
                                         std::uint64_t seed) {
  InitialModes m;
  m.k = ks;
  auto rng = stream(seed, 0xfeedULL);
  std::normal_distribution<double> g;
  const double beta = temperature > 0 ? hbar / temperature : std::numeric_limits<double>::infinity();
  for (double k : ks) {
    if (k == 0.0) throw DegenerateMode("zero wavenumber has no normalized mode");
    const double cth = std::isfinite(beta) ? 1.0 / std::tanh(0.5 * beta * std::abs(k)) : 1.0;
    const double sd = std::sqrt(cth / 4.0);
    const double re = sd * g(rng);
    m.alpha.emplace_back(re, sd * g(rng));
  }
  return m;
}

inline double free_field(const InitialModes& m, double x, double t, const CollapseProfile& profile) {
  const double x0 = trace_back(x, t, profile);
  double s = 0.0;
  for (std::size_t i = 0; i < m.k.size(); ++i)
    s += 2.0 * (m.alpha[i] * std::polar(1.0 / std::sqrt(4.0 * std::numbers::pi * std::abs(m.k[i])), m.k[i] * x0))
                   .real();
  return s;
}

struct FieldPoint {
  double x, t;
};

struct LangevinSample {
  std::vector<double> psi;    // full first-order field
  std::vector<double> psi_o;  // free part
  std::vector<double> noise;  // G_ret xi
  std::vector<double> diss;   // G_ret (D Psi_o)
};

namespace stoch_detail {

// Trapezoid weight of lattice time n in [0, t_n_max].
inline double time_weight(std::size_t n, std::size_t n_max) { return (n == 0 || n == n_max) ? 0.5 : 1.0; }

}  // namespace stoch_detail

// gamma^2 int_0^{t_n} D(t_n - s) Psi_o(x, s) ds by trapezoid on the lattice times,
// with the closed-form cutoff kernel.
inline Eigen::MatrixXd dissipation_convolution(const Eigen::MatrixXd& psi_o, const Lattice& l, const OhmicBath& bath) {
  const auto nt = static_cast<std::size_t>(psi_o.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(psi_o.rows(), psi_o.cols());
  if (bath.gamma == 0.0) return out;
  std::vector<double> Dk(nt);
  for (std::size_t n = 0; n < nt; ++n) Dk[n] = dissipation_kernel_closed(l.t(n), bath);
  const double g2 = bath.gamma * bath.gamma;
  for (std::size_t n = 1; n < nt; ++n)
    for (std::size_t m = 0; m <= n; ++m) {
      const double w = g2 * l.dt * stoch_detail::time_weight(m, n) * Dk[n - m];
      out.row(static_cast<Eigen::Index>(n)) += w * psi_o.row(static_cast<Eigen::Index>(m));
    }
  return out;
}

// Psi = Psi_o + G_ret xi - G_ret (D Psi_o) at the requested points (t <= t_end).
// Source integrals run over lattice cells inside the past cone, found by tracing
// both characteristics back from each field point.
inline LangevinSample langevin_realization(const NoiseRealization& noise, const InitialModes& modes,
                                           const CollapseProfile& profile, const OhmicBath& bath,
                                           const std::vector<FieldPoint>& points) {
  const Lattice& l = noise.lattice;
  const std::size_t nt = l.nt(), nx = l.nx();
  if (static_cast<std::size_t>(noise.xi.rows()) != nt || static_cast<std::size_t>(noise.xi.cols()) != nx)
    throw ConfigError("noise realization does not match its lattice");
  Eigen::MatrixXd psi_o(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nx));
  for (std::size_t n = 0; n < nt; ++n)
    for (std::size_t j = 0; j < nx; ++j)
      psi_o(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) = free_field(modes, l.x(j), l.t(n), profile);
  const Eigen::MatrixXd dpsi = dissipation_convolution(psi_o, l, bath);

  LangevinSample out;
  for (const auto& fp : points) {
    if (fp.t < 0 || fp.t > l.t_end * (1 + 1e-12)) throw ConfigError("field point outside the lattice time range");
    double sn = 0.0, sd = 0.0;
    // last lattice time strictly before the field time
    std::size_t n_max = 0;
    while (n_max + 1 < nt && l.t(n_max + 1) < fp.t - 1e-12 * l.dt) ++n_max;
    double xr = fp.x, xl = fp.x, tc = fp.t;
    for (std::size_t nn = n_max + 1; nn-- > 0;) {
      const double tn = l.t(nn);
      if (fp.t - tn <= 1e-12 * l.dt) continue;
      xr = propagate_ray(xr, tc, tn, profile, RayFamily::trapped).x_end();
      xl = propagate_ray(xl, tc, tn, profile, RayFamily::counter).x_end();
      tc = tn;
      const double lo = std::min(xl, xr), hi = std::max(xl, xr);
      const double wt = l.dt * stoch_detail::time_weight(nn, n_max);
      for (std::size_t j = 0; j < nx; ++j) {
        const double xj = l.x(j);
        if (xj < lo || xj > hi) continue;
        sn += 0.5 * wt * l.dx * noise.xi(static_cast<Eigen::Index>(nn), static_cast<Eigen::Index>(j));
        sd += 0.5 * wt * l.dx * dpsi(static_cast<Eigen::Index>(nn), static_cast<Eigen::Index>(j));
      }
    }
    const double po = free_field(modes, fp.x, fp.t, profile);
    out.psi_o.push_back(po);
    out.noise.push_back(sn);
    out.diss.push_back(sd);
    out.psi.push_back(po + sn - sd);
  }
  return out;
}

// ---- single-mode noise check ----

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Noise part of the occupation correction, omega^2 q_xi^2 + p_xi^2 with
// q_xi = int G xi, by sampling xi on nt + 1 equally spaced times in [0, t].
inline McEstimate mc_mode_noise(double k, double t, const OhmicBath& bath, std::size_t nt, std::size_t M,
                                std::uint64_t seed) {
  if (M < 2 || nt < 2) throw ConfigError("need at least two samples and two time steps");
  const double w = std::abs(k);
  std::vector<double> times(nt + 1);
  for (std::size_t n = 0; n <= nt; ++n) times[n] = t * static_cast<double>(n) / static_cast<double>(nt);
  const NoiseSampler sampler(times, bath);
  const double h = t / static_cast<double>(nt);
  Eigen::VectorXd ws(static_cast<Eigen::Index>(nt + 1)), wc(static_cast<Eigen::Index>(nt + 1));
  for (std::size_t n = 0; n <= nt; ++n) {
    const double tw = h * stoch_detail::time_weight(n, nt);
    ws(static_cast<Eigen::Index>(n)) = tw * std::sin(w * (t - times[n]));
    wc(static_cast<Eigen::Index>(n)) = tw * std::cos(w * (t - times[n]));
  }
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    auto rng = stream(seed, i);
    const Eigen::VectorXd xi = sampler.draw(rng);
    const double wq = ws.dot(xi), p = wc.dot(xi);  // omega q and p
    const double v = wq * wq + p * p;
    s += v;
    s2 += v * v;
  }
  const double Md = static_cast<double>(M);
  McEstimate e;
  e.mean = s / Md;
  e.std_error = std::sqrt(std::max(0.0, (s2 / Md - e.mean * e.mean) / (Md - 1.0)));
  return e;
}

// ---- ensemble correlation ----

struct McCorrelation {
  CorrelationGrid grid;  // values: ensemble mean of Pi(x1) Pi(x)
  std::vector<double> std_error;
  std::size_t realizations = 0;
  std::uint64_t seed = 0;
  bool insufficient_statistics = false;
};

// Closed-system ensemble over thermally sampled initial data of the trapped
// (left-moving) sector on the same k grid as closed_correlation, so the
// direction filter is exact by construction. Each realization draws from its
// own stream; fixed-size chunks are summed and merged in chunk order, which
// keeps results bitwise independent of the thread count.
inline McCorrelation mc_correlation(const CorrelationSpec& spec, const CollapseProfile& profile, std::size_t M,
                                    std::uint64_t master_seed, unsigned threads = 1) {
  if (M < 100) throw ConfigError("Monte Carlo needs at least 100 realizations");
  if (spec.xs.empty()) throw ConfigError("correlation grid needs at least one x");
  const SpectralSum S(spec, profile);
  const auto& W = S.weights();
  const auto& K = S.wavenumbers();
  const std::size_t J = K.size(), P = spec.xs.size();

  // u_k(x) = sqrt(W_k) X0'(x) e^{i k X0(x)}; point 0 is x1.
  std::vector<double> pts{spec.x1};
  pts.insert(pts.end(), spec.xs.begin(), spec.xs.end());
  std::vector<std::complex<double>> u(J * pts.size());
  std::vector<Region> regions(P);
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const auto tb = trace_back_with_jacobian(pts[p], spec.t, profile);
    if (p > 0) regions[p - 1] = tb.x0 < profile.a ? Region::hawking : Region::trivial_flat;
    for (std::size_t j = 0; j < J; ++j) u[p * J + j] = std::sqrt(W[j]) * tb.dx0_dx * std::polar(1.0, K[j] * tb.x0);
  }

  constexpr std::size_t chunk = 64;
  const std::size_t nchunks = (M + chunk - 1) / chunk;
  std::vector<std::vector<double>> sum(nchunks, std::vector<double>(P)), sum2(nchunks, std::vector<double>(P));
  parallel_for(nchunks, threads, [&](std::size_t c) {
    std::vector<double> field(pts.size());
    std::normal_distribution<double> g;
    const std::size_t end = std::min(M, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      auto rng = stream(master_seed, i);
      std::fill(field.begin(), field.end(), 0.0);
      for (std::size_t j = 0; j < J; ++j) {
        // complex standard normal: E|z|^2 = 1
        const double zr = g(rng) * std::numbers::sqrt2 * 0.5, zi = g(rng) * std::numbers::sqrt2 * 0.5;
        for (std::size_t p = 0; p < pts.size(); ++p) {
          const auto& v = u[p * J + j];
          field[p] += std::numbers::sqrt2 * (zr * v.real() - zi * v.imag());
        }
      }
      for (std::size_t p = 0; p < P; ++p) {
        const double prod = field[0] * field[p + 1];
        sum[c][p] += prod;
        sum2[c][p] += prod * prod;
      }
    }
  });

  McCorrelation r;
  r.realizations = M;
  r.seed = master_seed;
  auto& g = r.grid;
  g.x1 = spec.x1;
  g.xs = spec.xs;
  g.t = spec.t;
  g.temperature = spec.temperature;
  g.regions = regions;
  g.values.assign(P, 0.0);
  g.signal.assign(P, 0.0);
  r.std_error.assign(P, 0.0);
  const double Md = static_cast<double>(M);
  for (std::size_t p = 0; p < P; ++p) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t c = 0; c < nchunks; ++c) {
      s += sum[c][p];
      s2 += sum2[c][p];
    }
    const double mean = s / Md;
    g.values[p] = mean;
    g.signal[p] = mean - S(spec.x1 - spec.xs[p]);
    r.std_error[p] = std::sqrt(std::max(0.0, (s2 / Md - mean * mean) / (Md - 1.0)));
  }
  const auto m = peak_metrics(g, profile, spec);
  std::size_t at = 0;
  if (m.present) {
    for (std::size_t p = 0; p < P; ++p)
      if (g.xs[p] == m.peak_x) at = p;
  } else {
    for (std::size_t p = 0; p < P; ++p)
      if (std::abs(g.values[p]) > std::abs(g.values[at])) at = p;
  }
  r.insufficient_statistics = r.std_error[at] > 0.2 * std::abs(g.values[at]);
  return r;
}

}  // namespace abh
