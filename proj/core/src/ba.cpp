#include "ramp/ba.hpp"

#include <algorithm>
#include <cmath>

#include "ramp/error.hpp"

namespace ramp {
namespace {

// Depth columns with negligible curvature are frozen for the step; they are
// unobservable in the current linearization (e.g. zero parallax).
constexpr double kMinDepthCurvature = 1e-12;

void validate(const BaProblem& p) {
  if (p.poses.empty()) throw Error("ba: empty pose window");
  if (p.n_fixed < 0 || p.n_fixed > static_cast<int>(p.poses.size()))
    throw Error("ba: n_fixed out of range");
  for (const auto& patch : p.patches) {
    if (patch.frame_index < 0 || patch.frame_index >= static_cast<int>(p.poses.size()))
      throw Error("ba: patch source frame out of range");
  }
  for (const auto& e : p.edges) {
    if (e.frame < 0 || e.frame >= static_cast<int>(p.poses.size()))
      throw Error("ba: edge frame out of range");
    if (e.patch < 0 || e.patch >= static_cast<int>(p.patches.size()))
      throw Error("ba: edge patch out of range");
    if (e.sigma.x() < 0 || e.sigma.y() < 0)
      throw Error("ba: edge weight must be nonnegative");
  }
}

}  // namespace

double total_cost(const BaProblem& p) {
  validate(p);
  double cost = 0;
  for (const auto& e : p.edges) {
    if (e.masked) continue;
    const Patch& patch = p.patches[e.patch];
    const auto r = residual(e.center, e.delta, p.poses[e.frame],
                            p.poses[patch.frame_index], p.intrinsics, patch);
    if (!r) continue;
    if (!r->allFinite()) throw Error("ba: non-finite residual");
    cost += e.sigma.x() * r->x() * r->x() + e.sigma.y() * r->y() * r->y();
  }
  return cost;
}

NormalEquationSolution solve_normal_equations(const BaProblem& p, double lambda) {
  validate(p);
  NormalEquationSolution sol;

  const int n_poses = static_cast<int>(p.poses.size());
  std::vector<int> pose_var(n_poses, -1);
  for (int i = p.n_fixed; i < n_poses; ++i) {
    pose_var[i] = static_cast<int>(sol.free_poses.size());
    sol.free_poses.push_back(i);
  }
  if (sol.free_poses.empty()) throw Error("ba: no free pose");
  const int np = static_cast<int>(sol.free_poses.size());

  struct EdgeTerm {
    int edge_index;
    Vec2 r;
    PatchJacobians jac;
  };
  std::vector<EdgeTerm> terms;
  terms.reserve(p.edges.size());
  std::vector<double> depth_curvature(p.patches.size(), 0.0);

  for (int ei = 0; ei < static_cast<int>(p.edges.size()); ++ei) {
    const BaEdge& e = p.edges[ei];
    if (e.masked || (e.sigma.x() == 0 && e.sigma.y() == 0)) continue;
    const Patch& patch = p.patches[e.patch];
    const Se3Pose& T_i = p.poses[e.frame];
    const Se3Pose& T_j = p.poses[patch.frame_index];
    const auto r = residual(e.center, e.delta, T_i, T_j, p.intrinsics, patch);
    if (!r) continue;
    if (!r->allFinite()) throw Error("ba: non-finite residual");
    PatchJacobians jac = center_jacobians(T_i, T_j, p.intrinsics, patch);
    if (!jac.valid) continue;
    depth_curvature[e.patch] += e.sigma.x() * jac.d_depth.x() * jac.d_depth.x() +
                                e.sigma.y() * jac.d_depth.y() * jac.d_depth.y();
    terms.push_back({ei, *r, std::move(jac)});
  }

  std::vector<int> depth_var(p.patches.size(), -1);
  if (p.optimize_depths) {
    for (int l = 0; l < static_cast<int>(p.patches.size()); ++l) {
      if (depth_curvature[l] > kMinDepthCurvature) {
        depth_var[l] = static_cast<int>(sol.free_depths.size());
        sol.free_depths.push_back(l);
      }
    }
  }
  const int nd = static_cast<int>(sol.free_depths.size());

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6 * np, 6 * np);
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(6 * np, nd);
  Eigen::VectorXd C = Eigen::VectorXd::Zero(nd);
  Eigen::VectorXd b_p = Eigen::VectorXd::Zero(6 * np);
  Eigen::VectorXd b_d = Eigen::VectorXd::Zero(nd);

  for (const EdgeTerm& term : terms) {
    const BaEdge& e = p.edges[term.edge_index];
    const Patch& patch = p.patches[e.patch];
    const Eigen::Matrix2d W = e.sigma.asDiagonal();

    // Gather the pose blocks involved in this edge; a self-observation
    // (frame == source) folds both Jacobians into one block.
    int vars[2] = {-1, -1};
    Mat26 mats[2];
    int n_vars = 0;
    if (e.frame == patch.frame_index) {
      if (pose_var[e.frame] >= 0) {
        vars[n_vars] = pose_var[e.frame];
        mats[n_vars++] = term.jac.d_pose_i + term.jac.d_pose_j;
      }
    } else {
      if (pose_var[e.frame] >= 0) {
        vars[n_vars] = pose_var[e.frame];
        mats[n_vars++] = term.jac.d_pose_i;
      }
      if (pose_var[patch.frame_index] >= 0) {
        vars[n_vars] = pose_var[patch.frame_index];
        mats[n_vars++] = term.jac.d_pose_j;
      }
    }
    const int dv = depth_var[e.patch];

    for (int a = 0; a < n_vars; ++a) {
      b_p.segment<6>(6 * vars[a]) += mats[a].transpose() * W * term.r;
      for (int b = 0; b < n_vars; ++b) {
        B.block<6, 6>(6 * vars[a], 6 * vars[b]) +=
            mats[a].transpose() * W * mats[b];
      }
      if (dv >= 0) {
        E.block<6, 1>(6 * vars[a], dv) +=
            mats[a].transpose() * W * term.jac.d_depth;
      }
    }
    if (dv >= 0) {
      C(dv) += term.jac.d_depth.transpose() * W * term.jac.d_depth;
      b_d(dv) += term.jac.d_depth.transpose() * W * term.r;
    }
  }

  // Multiplicative diagonal damping, then Schur elimination of the scalar
  // depth blocks.
  B.diagonal() *= 1.0 + lambda;
  C *= 1.0 + lambda;

  Eigen::MatrixXd S = B;
  Eigen::VectorXd rhs = b_p;
  for (int d = 0; d < nd; ++d) {
    if (!(C(d) > 0)) {
      sol.note = "singular depth block after damping";
      return sol;
    }
    S.noalias() -= E.col(d) * (E.col(d).transpose() / C(d));
    rhs.noalias() -= E.col(d) * (b_d(d) / C(d));
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success) {
    sol.note = "reduced pose system not decomposable";
    return sol;
  }
  sol.pose_step = ldlt.solve(rhs);
  if (!sol.pose_step.allFinite()) {
    sol.note = "singular reduced pose system";
    return sol;
  }
  sol.depth_step = Eigen::VectorXd::Zero(nd);
  for (int d = 0; d < nd; ++d) {
    sol.depth_step(d) = (b_d(d) - E.col(d).dot(sol.pose_step)) / C(d);
  }
  if (!sol.depth_step.allFinite()) {
    sol.note = "singular depth back-substitution";
    return sol;
  }
  sol.ok = true;
  return sol;
}

LmReport lm_solve(BaProblem& p, const LmConfig& cfg) {
  if (cfg.steps < 1) throw Error("lm_solve: steps must be >= 1");
  if (!(cfg.lambda_min <= cfg.lambda_max) || !(cfg.depth_min <= cfg.depth_max))
    throw Error("lm_solve: bounds out of order");

  LmReport report;
  report.initial_cost = total_cost(p);
  double lambda = cfg.lambda_init;
  double current_cost = report.initial_cost;

  for (int step = 0; step < cfg.steps; ++step) {
    LmStep rec;
    rec.cost_before = current_cost;
    rec.lambda = lambda;

    NormalEquationSolution sol = solve_normal_equations(p, lambda);
    if (!sol.ok) {
      rec.cost_after = current_cost;
      rec.accepted = false;
      rec.note = sol.note;
      lambda = std::min(lambda * cfg.lambda_up, cfg.lambda_max);
      report.steps.push_back(std::move(rec));
      continue;
    }

    BaProblem trial = p;
    for (std::size_t k = 0; k < sol.free_poses.size(); ++k) {
      const Vec6 xi = sol.pose_step.segment<6>(6 * static_cast<int>(k));
      trial.poses[sol.free_poses[k]] = trial.poses[sol.free_poses[k]].retract(xi);
    }
    for (std::size_t k = 0; k < sol.free_depths.size(); ++k) {
      double& d = trial.patches[sol.free_depths[k]].inv_depth;
      d = std::clamp(d + sol.depth_step(static_cast<int>(k)), cfg.depth_min,
                     cfg.depth_max);
    }

    const double cost_after = total_cost(trial);
    rec.cost_after = cost_after;
    if (std::isfinite(cost_after) && cost_after < current_cost) {
      p = std::move(trial);
      current_cost = cost_after;
      rec.accepted = true;
      lambda = std::max(lambda * cfg.lambda_down, cfg.lambda_min);
    } else {
      rec.accepted = false;
      rec.note = "cost did not decrease";
      lambda = std::min(lambda * cfg.lambda_up, cfg.lambda_max);
    }
    report.steps.push_back(std::move(rec));
  }

  report.final_cost = current_cost;
  return report;
}

}  // namespace ramp
