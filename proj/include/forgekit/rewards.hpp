#pragma once

#include <optional>
#include <vector>

#include "forgekit/core.hpp"
#include "forgekit/parser.hpp"

namespace forgekit {

struct reward_weights {
  double cls = 1.0;
  double loc = 2.0;
  double tool = 0.5;
};

struct reward_breakdown {
  double r_cls = 0.0;
  double r_loc = 0.0;
  double r_tool = 0.0;
  double r_total = 0.0;
  std::optional<double> hungarian;  // absent when the ground truth is real

  friend bool operator==(const reward_breakdown&, const reward_breakdown&) = default;
};

// One rollout plus the shared ground truth it is scored against.
struct group_sample {
  parsed_answer answer;
  label gt_label = label::real;
  std::vector<bounding_box> gt_boxes;
};

struct group_result {
  std::vector<reward_breakdown> breakdowns;
  std::vector<double> advantages;
};

// Mean IoU of optimally matched pred/gt pairs (min-cost assignment on
// cost = 1 - IoU, padded square). Exactly min(|pred|, |gt|) pairs count.
// Empty pred scores 0; empty gt throws empty_ground_truth.
double hungarian_iou(const std::vector<bounding_box>& pred,
                     const std::vector<bounding_box>& gt);

double r_cls(const parsed_answer& pred, label gt_label);
double r_loc(const parsed_answer& pred, label gt_label,
             const std::vector<bounding_box>& gt_boxes);
// Strict threshold: h_iou must exceed tau_iou for a fake-sample tool bonus.
double r_tool(bool tool_used, label gt_label, double r_cls_value, double h_iou,
              double tau_iou = 0.5);
double r_total(const reward_breakdown& parts, const reward_weights& w);

reward_breakdown score_sample(const group_sample& s, const reward_weights& w,
                              double tau_iou = 0.5);

// Group-relative advantages: (r - mean) / population std; all-zero when the
// group is flat (std below 1e-12). Throws empty_group.
std::vector<double> grpo_advantages(const std::vector<double>& rewards);

// All samples must share one ground truth.
group_result score_group(const std::vector<group_sample>& samples,
                         const reward_weights& w, double tau_iou = 0.5);

}  // namespace forgekit
