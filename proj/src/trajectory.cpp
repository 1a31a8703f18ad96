#include "forgekit/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "forgekit/error.hpp"
#include "forgekit/evalkit.hpp"
#include "forgekit/image_io.hpp"
#include "forgekit/toolbox.hpp"

namespace forgekit {
namespace {

constexpr std::string_view k_user_prompt =
    "Determine if this image is real or fake. If manipulation is found, "
    "highlight the tampered regions with bounding boxes.";

void validate_config(const selection_config& cfg) {
  if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0))
    fail(errc::invalid_param, "tau outside [0,1]: " + std::to_string(cfg.tau));
  if (cfg.k_fake < 0 || cfg.k_real < 0)
    fail(errc::invalid_param, "truncation K must be >= 0");
}

void validate_scores(const score_record& s) {
  if (!(s.p_base >= 0.0 && s.p_base <= 1.0))
    fail(errc::invalid_param, "p_base outside [0,1] for " + s.sample_id);
  for (const auto& [id, v] : s.tool_scores)
    if (!(v >= 0.0 && v <= 1.0))
      fail(errc::invalid_param, std::string("score for ") + to_string(id) +
                                    " outside [0,1] for " + s.sample_id);
}

}  // namespace

selection_outcome select_and_rank(const score_record& score,
                                  const selection_config& cfg) {
  validate_config(cfg);
  validate_scores(score);

  double best = score.p_base;
  for (const auto& [id, v] : score.tool_scores) best = std::max(best, v);
  if (best < cfg.tau) return {.rejected = true, .ranked = {}};

  const double bar = std::max(score.p_base, cfg.tau);
  // map iteration is tool id order, so a stable sort pins the tie-break
  std::vector<std::pair<tool_id, double>> valid;
  for (const auto& [id, v] : score.tool_scores)
    if (v > bar) valid.emplace_back(id, v);
  std::stable_sort(valid.begin(), valid.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  selection_outcome out;
  out.ranked.reserve(valid.size());
  for (const auto& [id, v] : valid) out.ranked.push_back(id);
  return out;
}

trajectory_plan synthesize_paths(const std::string& sample_id, label gt,
                                 const selection_outcome& outcome,
                                 const selection_config& cfg) {
  validate_config(cfg);
  if (outcome.rejected)
    fail(errc::invalid_param, "rejected sample has no trajectory paths");

  const int k = gt == label::fake ? cfg.k_fake : cfg.k_real;
  const int kp = std::min<int>(static_cast<int>(outcome.ranked.size()), k);

  trajectory_plan plan;
  plan.sample_id = sample_id;
  plan.paths.emplace_back();
  for (int i = 0; i < kp; ++i)
    plan.paths.push_back({outcome.ranked[static_cast<std::size_t>(i)]});
  for (int len = 2; len <= kp; ++len)
    plan.paths.emplace_back(outcome.ranked.begin(), outcome.ranked.begin() + len);
  return plan;
}

bounding_box zoom_box(const std::vector<bounding_box>& gt_boxes, int width,
                      int height, double margin) {
  if (width <= 0 || height <= 0)
    fail(errc::invalid_param, "zoom_box needs a positive image size");
  if (!(margin >= 0.0))
    fail(errc::invalid_param, "zoom margin must be >= 0");
  if (gt_boxes.empty()) return {0, 0, width, height};

  long long x1 = gt_boxes.front().x1, y1 = gt_boxes.front().y1;
  long long x2 = gt_boxes.front().x2, y2 = gt_boxes.front().y2;
  for (const auto& b : gt_boxes) {
    if (!box_valid(b)) fail(errc::degenerate_box, "invalid ground-truth box");
    x1 = std::min<long long>(x1, b.x1);
    y1 = std::min<long long>(y1, b.y1);
    x2 = std::max<long long>(x2, b.x2);
    y2 = std::max<long long>(y2, b.y2);
  }
  const long long dx = std::llround(margin * static_cast<double>(x2 - x1));
  const long long dy = std::llround(margin * static_cast<double>(y2 - y1));
  x1 = std::clamp<long long>(x1 - dx, 0, width);
  x2 = std::clamp<long long>(x2 + dx, 0, width);
  y1 = std::clamp<long long>(y1 - dy, 0, height);
  y2 = std::clamp<long long>(y2 + dy, 0, height);
  if (x1 >= x2 || y1 >= y2)
    fail(errc::degenerate_box, "ground-truth boxes lie outside the image");
  return {static_cast<int>(x1), static_cast<int>(y1), static_cast<int>(x2),
          static_cast<int>(y2)};
}

std::vector<bounding_box> resolve_gt_boxes(const manifest_entry& entry) {
  if (!entry.boxes.empty() || entry.gt == label::real) return entry.boxes;
  if (!entry.mask)
    fail(errc::missing_gt_box,
         "fake sample " + entry.sample_id + " has neither mask nor boxes");
  const auto boxes = mask_to_boxes(binarize_map(load_gray(*entry.mask)));
  if (boxes.empty())
    fail(errc::missing_gt_box,
         "mask for " + entry.sample_id + " has no surviving component");
  return boxes;
}

trajectory materialize_trajectory(const std::vector<tool_id>& path,
                                  const manifest_entry& entry,
                                  const raster_image& img,
                                  const materialize_config& cfg) {
  if (entry.gt == label::fake && entry.boxes.empty())
    fail(errc::missing_gt_box, "fake sample " + entry.sample_id + " has no boxes");

  trajectory t;
  t.sample_id = entry.sample_id;

  turn user;
  user.who = role::user;
  user.content = std::string(k_image_token) + std::string(k_user_prompt);
  user.images = {entry.image};
  t.turns.push_back(std::move(user));

  for (const tool_id tool : path) {
    tool_call call;
    call.name = tool;
    tool_args args;
    args.min_side = cfg.min_side;
    if (tool == tool_id::zoom_in) {
      const std::vector<bounding_box>& gt =
          entry.gt == label::fake ? entry.boxes : std::vector<bounding_box>{};
      const bounding_box zb = zoom_box(gt, img.width, img.height, cfg.margin);
      call.bbox = {{zb.x1, zb.y1, zb.x2, zb.y2}};
      args.bbox = zb;
    }

    turn caller;
    caller.who = role::assistant;
    caller.tool_calls = {call};
    t.turns.push_back(std::move(caller));

    const tool_output out = run_tool(tool, img, args);
    std::filesystem::create_directories(cfg.maps_dir);
    const std::filesystem::path map_path =
        cfg.maps_dir / (entry.sample_id + "_" + to_string(tool) + ".png");
    if (const auto* g = std::get_if<gray_map>(&out.map))
      save_png(*g, map_path);
    else
      save_png(std::get<raster_image>(out.map), map_path);

    turn resp;
    resp.who = role::tool_response;
    resp.content = std::string(k_tool_response) + "\n" +
                   std::string(k_image_token) + "\n</tool_response>";
    resp.images = {map_path.string()};
    t.turns.push_back(std::move(resp));
  }

  turn verdict;
  verdict.who = role::assistant;
  verdict.content = render_answer(
      entry.gt, entry.gt == label::fake ? entry.boxes
                                        : std::vector<bounding_box>{});
  t.turns.push_back(std::move(verdict));

  t.final_label = entry.gt;
  if (entry.gt == label::fake) t.final_boxes = entry.boxes;
  return t;
}

nlohmann::ordered_json to_json(const build_report& r) {
  nlohmann::ordered_json j;
  j["samples_scored"] = r.samples_scored;
  j["samples_skipped"] = r.samples_skipped;
  j["kept"] = r.kept;
  j["rejected"] = r.rejected;
  j["trajectories"] = r.trajectories;
  j["trajectories_real"] = r.trajectories_real;
  j["trajectories_fake"] = r.trajectories_fake;
  nlohmann::ordered_json usage = nlohmann::ordered_json::object();
  for (const auto& [id, n] : r.tool_usage) usage[to_string(id)] = n;
  j["tool_usage"] = usage;
  return j;
}

build_report build_report_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(errc::malformed_json, "report must be an object");
  const auto count = [&](const char* key) -> std::int64_t {
    if (!j.contains(key) || !j.at(key).is_number_integer())
      fail(errc::malformed_json, std::string("report needs integer \"") + key + "\"");
    return j.at(key).get<std::int64_t>();
  };
  build_report r;
  r.samples_scored = count("samples_scored");
  r.samples_skipped = count("samples_skipped");
  r.kept = count("kept");
  r.rejected = count("rejected");
  r.trajectories = count("trajectories");
  r.trajectories_real = count("trajectories_real");
  r.trajectories_fake = count("trajectories_fake");
  if (!j.contains("tool_usage") || !j.at("tool_usage").is_object())
    fail(errc::malformed_json, "report needs a tool_usage object");
  for (const auto& [key, value] : j.at("tool_usage").items()) {
    if (!value.is_number_integer())
      fail(errc::malformed_json, "tool_usage values must be integers");
    r.tool_usage[tool_from_string(key)] = value.get<std::int64_t>();
  }
  return r;
}

build_report build_corpus(const std::vector<manifest_entry>& manifest,
                          const std::vector<score_record>& scores,
                          const std::filesystem::path& corpus_path,
                          const selection_config& sel,
                          const materialize_config& mat) {
  validate_config(sel);

  std::map<std::string, const score_record*> score_by_id;
  for (const auto& s : scores)
    if (!score_by_id.emplace(s.sample_id, &s).second)
      fail(errc::invalid_param, "duplicate score for " + s.sample_id);

  std::set<std::string> manifest_ids;
  for (const auto& e : manifest)
    if (!manifest_ids.insert(e.sample_id).second)
      fail(errc::invalid_param, "duplicate manifest entry " + e.sample_id);
  for (const auto& s : scores)
    if (!manifest_ids.contains(s.sample_id))
      fail(errc::manifest_mismatch,
           "score for unknown sample " + s.sample_id);

  std::ofstream out(corpus_path, std::ios::binary);
  if (!out) fail(errc::io_failure, "cannot write " + corpus_path.string());

  build_report rep;
  for (const auto& e : manifest) {
    const auto it = score_by_id.find(e.sample_id);
    if (it == score_by_id.end()) {
      ++rep.samples_skipped;
      continue;
    }
    const score_record& s = *it->second;
    if (s.gt != e.gt)
      fail(errc::manifest_mismatch, "label disagreement for " + e.sample_id);
    ++rep.samples_scored;

    const selection_outcome oc = select_and_rank(s, sel);
    if (oc.rejected) {
      ++rep.rejected;
      continue;
    }
    ++rep.kept;
    const trajectory_plan plan = synthesize_paths(e.sample_id, e.gt, oc, sel);

    manifest_entry entry = e;
    entry.boxes = resolve_gt_boxes(e);
    const raster_image img = load_image(entry.image);

    for (const auto& path : plan.paths) {
      const trajectory t = materialize_trajectory(path, entry, img, mat);
      out << serialize_trajectory(t) << '\n';
      ++rep.trajectories;
      ++(entry.gt == label::fake ? rep.trajectories_fake : rep.trajectories_real);
      for (const tool_id tool : path) ++rep.tool_usage[tool];
    }
  }
  return rep;
}

}  // namespace forgekit
