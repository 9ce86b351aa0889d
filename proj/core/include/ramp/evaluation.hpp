#pragma once

#include <string>
#include <vector>

#include "ramp/formats.hpp"
#include "ramp/geometry.hpp"

namespace ramp {

// Closed-form least-squares similarity est -> gt; apply(p) = scale * R * p + t.
struct AlignmentResult {
  double scale = 1.0;
  Eigen::Quaterniond rotation{1, 0, 0, 0};
  Vec3 translation{0, 0, 0};
  double ate_rmse = 0.0;

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
};

// Umeyama alignment of matched point sets (rigid when with_scale is off).
// Throws on mismatched/short inputs and on rank < 2 point covariance.
AlignmentResult umeyama_align(const std::vector<Vec3>& est, const std::vector<Vec3>& gt,
                              bool with_scale);

// Alignment of the camera centers of two equally long trajectories.
AlignmentResult align_trajectories(const std::vector<TumEntry>& est,
                                   const std::vector<TumEntry>& gt, bool with_scale);

// Mean success rate over n_grid thresholds tau_max*k/n_grid, k = 1..n_grid,
// where a sequence succeeds at tau when its error is <= tau.
double auc_of_threshold(const std::vector<double>& ate_values, double tau_max, int n_grid);

struct SequenceResult {
  std::string name;
  double ate = 0.0;
  double auc_contribution = 0.0;  // summing these over sequences gives the AUC
};

struct EvalReport {
  double tau_max = 1.0;
  int n_grid = 100;
  double auc = 0.0;
  std::vector<SequenceResult> sequences;
};

EvalReport evaluate_sequences(const std::vector<std::pair<std::string, double>>& named_ates,
                              double tau_max = 1.0, int n_grid = 100);

void write_eval_csv(const std::string& path, const EvalReport& report);
void write_eval_json(const std::string& path, const EvalReport& report);

}  // namespace ramp
