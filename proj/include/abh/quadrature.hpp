#pragma once

// Adaptive and oscillatory quadrature used throughout the library.
//
// The 15-point Gauss-Kronrod rule comes from Boost.Math; the global adaptive
// driver, zero-aligned panel subdivision and the Filon rules live here.

#include <abh/errors.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

namespace abh::quad {

// Neumaier compensated accumulator.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  KahanSum& operator+=(double x) { add(x); return *this; }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
};

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  int max_subdivisions = 20000;
  // Throw QuadratureNonConvergent if the final relative error estimate
  // exceeds this bound.
  double fail_rel = 1e-6;
};

namespace detail {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 0, 0.0, &err);
  return {a, b, v, err};
}

}  // namespace detail

// Globally adaptive GK15 over the panels delimited by `breaks` (sorted,
// at least two entries).
template <class F>
Result integrate_panels(F&& f, std::span<const double> breaks, const Options& opt = {}) {
  using detail::Panel;
  std::priority_queue<Panel> heap;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    if (breaks[i + 1] > breaks[i]) heap.push(detail::gk15(f, breaks[i], breaks[i + 1]));

  auto totals = [&heap]() {
    KahanSum v, e;
    auto copy = heap;
    while (!copy.empty()) {
      v += copy.top().value;
      e += copy.top().error;
      copy.pop();
    }
    return Result{v.value(), e.value()};
  };

  // Running error total avoids re-summing the heap on every iteration.
  double err_total = 0.0, val_abs = 0.0;
  {
    auto copy = heap;
    while (!copy.empty()) {
      err_total += copy.top().error;
      val_abs += std::abs(copy.top().value);
      copy.pop();
    }
  }
  int splits = 0;
  while (!heap.empty()) {
    const double tol = std::max(opt.abs_tol, opt.rel_tol * val_abs);
    if (err_total <= tol || splits >= opt.max_subdivisions) break;
    Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    Panel left = detail::gk15(f, worst.a, mid);
    Panel right = detail::gk15(f, mid, worst.b);
    err_total += left.error + right.error - worst.error;
    val_abs += std::abs(left.value) + std::abs(right.value) - std::abs(worst.value);
    heap.push(left);
    heap.push(right);
    ++splits;
  }
  Result r = totals();
  // Judge against the panel magnitude so an integral that cancels to ~0 is not flagged.
  const double scale = std::max({std::abs(r.value), val_abs, opt.abs_tol / std::max(opt.fail_rel, 1e-300)});
  if (r.error > opt.fail_rel * scale && r.error > opt.abs_tol)
    throw QuadratureNonConvergent("adaptive quadrature did not reach tolerance");
  return r;
}

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  const double br[2] = {a, b};
  return integrate_panels(f, br, opt);
}

// Integrate f over [a, b] where f oscillates with angular frequency `freq`.
// When freq*(b-a) exceeds `phase_threshold` the interval is cut at every
// half period so each panel sees at most one sign change.
template <class F>
Result integrate_oscillatory(F&& f, double a, double b, double freq,
                             const Options& opt = {}, double phase_threshold = 50.0) {
  freq = std::abs(freq);
  if (freq * (b - a) <= phase_threshold) return integrate(f, a, b, opt);
  const double step = std::numbers::pi / freq;
  std::vector<double> br;
  br.reserve(static_cast<std::size_t>((b - a) / step) + 2);
  br.push_back(a);
  // Cut at the zeros of cos(freq x): x = (k + 1/2) pi / freq.
  double k = std::ceil(a / step - 0.5);
  for (double x = (k + 0.5) * step; x < b; k += 1.0, x = (k + 0.5) * step)
    if (x > a) br.push_back(x);
  br.push_back(b);
  return integrate_panels(f, br, opt);
}

// Composite Filon-Simpson rules for int_a^b f(x) cos(m x) dx and
// int_a^b f(x) sin(m x) dx. Accuracy is governed by how well a piecewise
// quadratic resolves f on `panels` (even count), independent of m.
namespace detail {

inline void filon_coeffs(double theta, double& alpha, double& beta, double& gamma) {
  if (std::abs(theta) < 1.0 / 6.0) {
    const double t2 = theta * theta, t3 = t2 * theta, t4 = t2 * t2, t5 = t4 * theta,
                 t6 = t4 * t2, t7 = t6 * theta;
    alpha = 2.0 * t3 / 45.0 - 2.0 * t5 / 315.0 + 2.0 * t7 / 4725.0;
    beta = 2.0 / 3.0 + 2.0 * t2 / 15.0 - 4.0 * t4 / 105.0 + 2.0 * t6 / 567.0;
    gamma = 4.0 / 3.0 - 2.0 * t2 / 15.0 + t4 / 210.0 - t6 / 11340.0;
    return;
  }
  const double s = std::sin(theta), c = std::cos(theta);
  const double t2 = theta * theta, t3 = t2 * theta;
  alpha = (t2 + theta * s * c - 2.0 * s * s) / t3;
  beta = 2.0 * (theta * (1.0 + c * c) - 2.0 * s * c) / t3;
  gamma = 4.0 * (s - theta * c) / t3;
}

template <class F>
double filon(F&& f, double a, double b, double m, int panels, bool cosine) {
  if (panels < 2) panels = 2;
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double alpha, beta, gamma;
  filon_coeffs(h * m, alpha, beta, gamma);
  KahanSum even, odd;
  std::vector<double> fx(panels + 1);
  for (int i = 0; i <= panels; ++i) fx[i] = f(a + i * h);
  auto trig = [&](double x) { return cosine ? std::cos(m * x) : std::sin(m * x); };
  for (int i = 0; i <= panels; i += 2) {
    double w = fx[i] * trig(a + i * h);
    if (i == 0 || i == panels) w *= 0.5;
    even += w;
  }
  for (int i = 1; i < panels; i += 2) odd += fx[i] * trig(a + i * h);
  double edge;
  if (cosine)
    edge = fx[panels] * std::sin(m * b) - fx[0] * std::sin(m * a);
  else
    edge = -(fx[panels] * std::cos(m * b) - fx[0] * std::cos(m * a));
  return h * (alpha * edge + beta * even.value() + gamma * odd.value());
}

}  // namespace detail

template <class F>
double filon_cos(F&& f, double a, double b, double m, int panels) {
  return detail::filon(f, a, b, m, panels, true);
}

template <class F>
double filon_sin(F&& f, double a, double b, double m, int panels) {
  return detail::filon(f, a, b, m, panels, false);
}

}  // namespace abh::quad
