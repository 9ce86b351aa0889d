#pragma once

#include <cstddef>
#include <vector>

#include "ramp/geometry.hpp"

namespace ramp {

// Piecewise-cubic interpolant over strictly increasing knot times. Four or
// more knots give the natural cubic spline (zero second derivative at both
// ends); three knots degrade to the interpolating parabola, two to a line.
class Spline1D {
 public:
  Spline1D() = default;
  static Spline1D fit(const std::vector<double>& times, const std::vector<double>& values);

  double eval(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;

  double first_knot_time() const { return times_.front(); }
  double last_knot_time() const { return times_.back(); }
  std::size_t knot_count() const { return times_.size(); }

 private:
  std::size_t piece_for(double t) const;

  std::vector<double> times_;
  // piece i covers [times_[i], times_[i+1]], coefficients in dt = t - times_[i]:
  // a + b*dt + c*dt^2 + d*dt^3. Boundary pieces extend beyond their interval.
  std::vector<double> a_, b_, c_, d_;
};

// Cubic segment g(t) = a + b*dt + c*dt^2 + d*dt^3 with dt = t - t0.
struct Cubic {
  double t0 = 0;
  double a = 0, b = 0, c = 0, d = 0;

  double eval(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;
};

// The unique cubic on [t_start, t_stop] that matches the given value and
// slope at t_start and comes to rest at t_stop (zero first and second
// derivative there).
Cubic smooth_stop_cubic(double value, double slope, double t_start, double t_stop);

// One image-plane track: x(t) and y(t) fitted over shared knot times.
struct TrackSpline {
  std::vector<double> times;
  Spline1D x;
  Spline1D y;
};

TrackSpline fit_track_spline(const std::vector<double>& times, const std::vector<Vec2>& points);

// Position at t_target > last knot, via the smooth-stop cubic per axis.
Vec2 extrapolate(const TrackSpline& spline, double t_target);

// Position at t_target > last knot by extending the final interpolation
// piece past its interval (no added boundary conditions).
Vec2 extrapolate_tail(const TrackSpline& spline, double t_target);

}  // namespace ramp
