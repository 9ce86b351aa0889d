#include "ramp/evaluation.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "ramp/error.hpp"

namespace ramp {

AlignmentResult umeyama_align(const std::vector<Vec3>& est, const std::vector<Vec3>& gt,
                              bool with_scale) {
  if (est.size() != gt.size())
    throw Error("umeyama: point count mismatch, est " + std::to_string(est.size()) + " vs gt " +
                std::to_string(gt.size()));
  if (est.size() < 3) throw Error("umeyama: need at least 3 points, got " + std::to_string(est.size()));
  const double n = static_cast<double>(est.size());

  Vec3 mean_est = Vec3::Zero(), mean_gt = Vec3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    mean_est += est[i];
    mean_gt += gt[i];
  }
  mean_est /= n;
  mean_gt /= n;

  Mat3 cov = Mat3::Zero();
  double var_est = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const Vec3 e = est[i] - mean_est;
    const Vec3 g = gt[i] - mean_gt;
    cov += g * e.transpose();
    var_est += e.squaredNorm();
  }
  cov /= n;
  var_est /= n;

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  const double rank_tol = 1e-9 * d(0);
  int rank = 0;
  for (int i = 0; i < 3; ++i)
    if (d(i) > rank_tol && d(i) > 0.0) ++rank;
  if (rank < 2)
    throw Error("umeyama: degenerate input, point covariance rank " + std::to_string(rank));

  Vec3 s_diag(1, 1, 1);
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) s_diag(2) = -1;
  const Mat3 rotation = svd.matrixU() * s_diag.asDiagonal() * svd.matrixV().transpose();

  AlignmentResult result;
  result.rotation = Eigen::Quaterniond(rotation).normalized();
  result.scale = with_scale ? d.dot(s_diag) / var_est : 1.0;
  if (!(result.scale > 0)) throw Error("umeyama: non-positive scale " + std::to_string(result.scale));
  result.translation = mean_gt - result.scale * (rotation * mean_est);

  double sse = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) sse += (result.apply(est[i]) - gt[i]).squaredNorm();
  result.ate_rmse = std::sqrt(sse / n);
  return result;
}

AlignmentResult align_trajectories(const std::vector<TumEntry>& est,
                                   const std::vector<TumEntry>& gt, bool with_scale) {
  if (est.size() != gt.size())
    throw Error("trajectory length mismatch: est " + std::to_string(est.size()) + " vs gt " +
                std::to_string(gt.size()));
  std::vector<Vec3> est_pts(est.size()), gt_pts(gt.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    est_pts[i] = est[i].pose.t;
    gt_pts[i] = gt[i].pose.t;
  }
  return umeyama_align(est_pts, gt_pts, with_scale);
}

double auc_of_threshold(const std::vector<double>& ate_values, double tau_max, int n_grid) {
  if (ate_values.empty()) throw Error("auc: empty error list");
  if (!(tau_max > 0)) throw Error("auc: tau_max must be positive");
  if (n_grid < 2) throw Error("auc: n_grid must be at least 2, got " + std::to_string(n_grid));
  double sum = 0.0;
  for (int k = 1; k <= n_grid; ++k) {
    const double tau = tau_max * k / n_grid;
    std::size_t hits = 0;
    for (const double ate : ate_values)
      if (ate <= tau) ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(ate_values.size());
  }
  return sum / n_grid;
}

EvalReport evaluate_sequences(const std::vector<std::pair<std::string, double>>& named_ates,
                              double tau_max, int n_grid) {
  if (named_ates.empty()) throw Error("auc: empty error list");
  EvalReport report;
  report.tau_max = tau_max;
  report.n_grid = n_grid;
  std::vector<double> ates;
  for (const auto& [name, ate] : named_ates) {
    ates.push_back(ate);
    std::size_t hits = 0;
    for (int k = 1; k <= n_grid; ++k)
      if (ate <= tau_max * k / n_grid) ++hits;
    SequenceResult seq;
    seq.name = name;
    seq.ate = ate;
    seq.auc_contribution =
        static_cast<double>(hits) / (static_cast<double>(n_grid) * named_ates.size());
    report.sequences.push_back(std::move(seq));
  }
  report.auc = auc_of_threshold(ates, tau_max, n_grid);
  return report;
}

void write_eval_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "sequence,ate,auc_contribution\n";
  char line[160];
  for (const SequenceResult& seq : report.sequences) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g\n", seq.ate, seq.auc_contribution);
    out << seq.name << ',' << line;
  }
  if (!out.good()) throw Error("write failed on " + path);
}

void write_eval_json(const std::string& path, const EvalReport& report) {
  nlohmann::json doc;
  doc["tau_max"] = report.tau_max;
  doc["n_grid"] = report.n_grid;
  doc["auc"] = report.auc;
  doc["sequences"] = nlohmann::json::array();
  for (const SequenceResult& seq : report.sequences) {
    doc["sequences"].push_back(
        {{"name", seq.name}, {"ate", seq.ate}, {"auc_contribution", seq.auc_contribution}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';
  if (!out.good()) throw Error("write failed on " + path);
}

}  // namespace ramp
