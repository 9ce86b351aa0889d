#pragma once

#include <string>
#include <vector>

#include "ramp/geometry.hpp"

namespace ramp {

// One patch-to-frame measurement: the cached target center plus the
// correction delta define where the optimizer should reproject the patch.
// sigma holds the diagonal of the 2x2 weight; zero entries disable an axis.
struct BaEdge {
  int patch = 0;  // position in BaProblem::patches
  int frame = 0;  // position in BaProblem::poses
  Vec2 center{0, 0};
  Vec2 delta{0, 0};
  Vec2 sigma{1, 1};
  bool masked = false;
};

// Window bundle-adjustment problem. The first n_fixed poses are the gauge
// and never move. Patch inverse depths are free unless optimize_depths is
// off or no measurement constrains them.
struct BaProblem {
  std::vector<Se3Pose> poses;
  std::vector<Patch> patches;  // frame_index addresses this->poses
  std::vector<BaEdge> edges;
  Intrinsics intrinsics;
  int n_fixed = 2;
  bool optimize_depths = true;
};

struct LmConfig {
  int steps = 2;
  double lambda_init = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double lambda_min = 1e-8;
  double lambda_max = 1e4;
  double depth_min = 1e-4;
  double depth_max = 10.0;
};

struct LmStep {
  double cost_before = 0;
  double cost_after = 0;
  double lambda = 0;
  bool accepted = false;
  std::string note;
};

struct LmReport {
  double initial_cost = 0;
  double final_cost = 0;
  std::vector<LmStep> steps;
};

// Sum over unmasked edges of r^T diag(sigma) r. Throws on non-finite
// residuals.
double total_cost(const BaProblem& problem);

// One damped Gauss-Newton solve of the current linearization: normal
// equations from analytic Jacobians, scalar depth blocks eliminated by Schur
// complement, reduced pose system solved densely, depths back-substituted.
struct NormalEquationSolution {
  bool ok = false;
  std::string note;
  std::vector<int> free_poses;   // indices into BaProblem::poses
  std::vector<int> free_depths;  // indices into BaProblem::patches
  Eigen::VectorXd pose_step;     // 6 entries per free pose, [translation; rotation]
  Eigen::VectorXd depth_step;    // 1 entry per free depth
};
NormalEquationSolution solve_normal_equations(const BaProblem& problem, double lambda);

// Levenberg-Marquardt: exactly cfg.steps attempted steps, accept only on
// cost decrease, multiplicative lambda schedule, depths clamped into
// [depth_min, depth_max]. Updates the problem in place.
LmReport lm_solve(BaProblem& problem, const LmConfig& cfg);

}  // namespace ramp
