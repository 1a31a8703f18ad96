#include "forgekit/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace forgekit {

namespace {

// Min-cost perfect assignment on a square matrix, O(n^3) with potentials.
// Returns the column assigned to each row.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = int(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] >= 1) col_of_row[p[j] - 1] = j - 1;
  return col_of_row;
}

}  // namespace

double hungarian_iou(const std::vector<bounding_box>& pred,
                     const std::vector<bounding_box>& gt) {
  if (gt.empty()) fail(errc::empty_ground_truth, "hungarian_iou needs gt boxes");
  if (pred.empty()) return 0.0;
  const int n = int(pred.size());
  const int m = int(gt.size());
  const int k = std::max(n, m);

  // Padded slots cost 1 (IoU 0), so the solver maximizes matched IoU.
  std::vector<std::vector<double>> cost(k, std::vector<double>(k, 1.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) cost[i][j] = 1.0 - box_iou(pred[i], gt[j]);

  const std::vector<int> match = solve_assignment(cost);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const int j = match[i];
    if (j >= 0 && j < m) sum += box_iou(pred[i], gt[j]);
  }
  return sum / double(std::min(n, m));
}

double r_cls(const parsed_answer& pred, label gt_label) {
  if (pred.final_label != gt_label) return 0.0;
  if (gt_label == label::real) return 1.0;
  return pred.boxes.empty() ? 0.0 : 1.0;
}

double r_loc(const parsed_answer& pred, label gt_label,
             const std::vector<bounding_box>& gt_boxes) {
  if (gt_label == label::real) return 0.0;
  return hungarian_iou(pred.boxes, gt_boxes);
}

double r_tool(bool tool_used, label gt_label, double r_cls_value, double h_iou,
              double tau_iou) {
  if (!tool_used) return 0.0;
  if (gt_label == label::real) return r_cls_value;
  return h_iou > tau_iou ? 1.0 : 0.0;
}

double r_total(const reward_breakdown& parts, const reward_weights& w) {
  return w.cls * parts.r_cls + w.loc * parts.r_loc + w.tool * parts.r_tool;
}

reward_breakdown score_sample(const group_sample& s, const reward_weights& w,
                              double tau_iou) {
  reward_breakdown out;
  out.r_cls = r_cls(s.answer, s.gt_label);
  if (s.gt_label == label::fake) {
    out.hungarian = hungarian_iou(s.answer.boxes, s.gt_boxes);
    out.r_loc = *out.hungarian;
    out.r_tool = r_tool(s.answer.tool_used, s.gt_label, out.r_cls, *out.hungarian,
                        tau_iou);
  } else {
    out.r_tool = r_tool(s.answer.tool_used, s.gt_label, out.r_cls, 0.0, tau_iou);
  }
  out.r_total = r_total(out, w);
  return out;
}

std::vector<double> grpo_advantages(const std::vector<double>& rewards) {
  if (rewards.empty()) fail(errc::empty_group, "no rewards to normalize");
  const double n = double(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (sd < 1e-12) return out;
  for (size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

group_result score_group(const std::vector<group_sample>& samples,
                         const reward_weights& w, double tau_iou) {
  if (samples.empty()) fail(errc::empty_group, "score_group needs samples");
  for (const auto& s : samples) {
    if (s.gt_label != samples[0].gt_label || s.gt_boxes != samples[0].gt_boxes)
      fail(errc::invalid_param, "group samples disagree on ground truth");
  }
  group_result out;
  std::vector<double> totals;
  for (const auto& s : samples) {
    out.breakdowns.push_back(score_sample(s, w, tau_iou));
    totals.push_back(out.breakdowns.back().r_total);
  }
  out.advantages = grpo_advantages(totals);
  return out;
}

}  // namespace forgekit
