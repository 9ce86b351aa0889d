#include "ramp/spline.hpp"

#include <algorithm>
#include <cstddef>

#include "ramp/error.hpp"

namespace ramp {

namespace {

void check_knots(const std::vector<double>& times, std::size_t n_values) {
  if (times.size() < 2) throw Error("spline: need at least 2 knots, got " + std::to_string(times.size()));
  if (times.size() != n_values)
    throw Error("spline: " + std::to_string(times.size()) + " times vs " + std::to_string(n_values) +
                " values");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] == times[i - 1])
      throw Error("spline: duplicate timestamp at knot " + std::to_string(i));
    if (times[i] < times[i - 1])
      throw Error("spline: decreasing timestamp at knot " + std::to_string(i));
  }
}

}  // namespace

Spline1D Spline1D::fit(const std::vector<double>& times, const std::vector<double>& values) {
  check_knots(times, values.size());
  const std::size_t n = times.size();
  Spline1D s;
  s.times_ = times;

  if (n == 2) {
    const double h = times[1] - times[0];
    s.a_ = {values[0]};
    s.b_ = {(values[1] - values[0]) / h};
    s.c_ = {0.0};
    s.d_ = {0.0};
    return s;
  }

  if (n == 3) {
    // Interpolating parabola, re-centered per interval.
    const double t0 = times[0], t1 = times[1], t2 = times[2];
    const double c2 = ((values[2] - values[0]) / (t2 - t0) - (values[1] - values[0]) / (t1 - t0)) /
                      (t2 - t1);
    const double c1 = (values[1] - values[0]) / (t1 - t0) - c2 * (t1 - t0);
    // q(t) = values[0] + c1*(t-t0) + c2*(t-t0)^2
    s.a_.resize(2);
    s.b_.resize(2);
    s.c_.assign(2, c2);
    s.d_.assign(2, 0.0);
    for (std::size_t i = 0; i < 2; ++i) {
      const double dt = times[i] - t0;
      s.a_[i] = values[0] + c1 * dt + c2 * dt * dt;
      s.b_[i] = c1 + 2.0 * c2 * dt;
    }
    return s;
  }

  // Natural cubic spline: tridiagonal solve for knot second derivatives m,
  // with m[0] = m[n-1] = 0 (Thomas algorithm).
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = times[i + 1] - times[i];

  const std::size_t m_count = n - 2;
  std::vector<double> diag(m_count), rhs(m_count);
  for (std::size_t i = 0; i < m_count; ++i) {
    diag[i] = 2.0 * (h[i] + h[i + 1]);
    rhs[i] = 6.0 * ((values[i + 2] - values[i + 1]) / h[i + 1] - (values[i + 1] - values[i]) / h[i]);
  }
  std::vector<double> upper(m_count, 0.0);
  for (std::size_t i = 0; i + 1 < m_count; ++i) upper[i] = h[i + 1];
  for (std::size_t i = 1; i < m_count; ++i) {
    const double w = h[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> m(n, 0.0);
  if (m_count > 0) {
    m[m_count] = rhs[m_count - 1] / diag[m_count - 1];
    for (std::size_t i = m_count - 1; i-- > 0;) m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
  }

  s.a_.resize(n - 1);
  s.b_.resize(n - 1);
  s.c_.resize(n - 1);
  s.d_.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    s.a_[i] = values[i];
    s.b_[i] = (values[i + 1] - values[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
    s.c_[i] = m[i] / 2.0;
    s.d_[i] = (m[i + 1] - m[i]) / (6.0 * h[i]);
  }
  return s;
}

std::size_t Spline1D::piece_for(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::ptrdiff_t idx = (it - times_.begin()) - 1;
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(a_.size()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, last));
}

double Spline1D::eval(double t) const {
  const std::size_t i = piece_for(t);
  const double dt = t - times_[i];
  return a_[i] + dt * (b_[i] + dt * (c_[i] + dt * d_[i]));
}

double Spline1D::derivative(double t) const {
  const std::size_t i = piece_for(t);
  const double dt = t - times_[i];
  return b_[i] + dt * (2.0 * c_[i] + dt * 3.0 * d_[i]);
}

double Spline1D::second_derivative(double t) const {
  const std::size_t i = piece_for(t);
  const double dt = t - times_[i];
  return 2.0 * c_[i] + 6.0 * d_[i] * dt;
}

double Cubic::eval(double t) const {
  const double dt = t - t0;
  return a + dt * (b + dt * (c + dt * d));
}

double Cubic::derivative(double t) const {
  const double dt = t - t0;
  return b + dt * (2.0 * c + dt * 3.0 * d);
}

double Cubic::second_derivative(double t) const { return 2.0 * c + 6.0 * d * (t - t0); }

Cubic smooth_stop_cubic(double value, double slope, double t_start, double t_stop) {
  if (!(t_stop > t_start))
    throw Error("extrapolate: target time " + std::to_string(t_stop) + " not after " +
                std::to_string(t_start));
  // Solve a + b*dt + c*dt^2 + d*dt^3 with g(0)=value, g'(0)=slope,
  // g'(h)=0, g''(h)=0.
  const double h = t_stop - t_start;
  Cubic g;
  g.t0 = t_start;
  g.a = value;
  g.b = slope;
  g.d = slope / (3.0 * h * h);
  g.c = -3.0 * g.d * h;
  return g;
}

TrackSpline fit_track_spline(const std::vector<double>& times, const std::vector<Vec2>& points) {
  check_knots(times, points.size());
  std::vector<double> xs(points.size()), ys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    xs[i] = points[i].x();
    ys[i] = points[i].y();
  }
  TrackSpline s;
  s.times = times;
  s.x = Spline1D::fit(times, xs);
  s.y = Spline1D::fit(times, ys);
  return s;
}

Vec2 extrapolate(const TrackSpline& spline, double t_target) {
  const double t_k = spline.times.back();
  const Cubic gx = smooth_stop_cubic(spline.x.eval(t_k), spline.x.derivative(t_k), t_k, t_target);
  const Cubic gy = smooth_stop_cubic(spline.y.eval(t_k), spline.y.derivative(t_k), t_k, t_target);
  return {gx.eval(t_target), gy.eval(t_target)};
}

Vec2 extrapolate_tail(const TrackSpline& spline, double t_target) {
  const double t_k = spline.times.back();
  if (!(t_target > t_k))
    throw Error("extrapolate: target time " + std::to_string(t_target) + " not after " +
                std::to_string(t_k));
  return {spline.x.eval(t_target), spline.y.eval(t_target)};
}

}  // namespace ramp
