#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "forgekit/parser.hpp"
#include "forgekit/records.hpp"

namespace forgekit {

struct selection_config {
  double tau = 0.5;  // validity threshold
  int k_fake = 4;    // ranking truncation for fake samples
  int k_real = 2;    // ranking truncation for real samples
};

// rejected = no score (baseline or tool) reached tau.
// ranked = tools scoring strictly above max(p_base, tau), descending,
// ties broken by tool id order (ELA, FFT, NPP, zoom_in).
struct selection_outcome {
  bool rejected = false;
  std::vector<tool_id> ranked;

  friend bool operator==(const selection_outcome&, const selection_outcome&) = default;
};

selection_outcome select_and_rank(const score_record& score,
                                  const selection_config& cfg = {});

// Path set for one kept sample: the empty path, each single tool from the
// truncated ranking, and each ranking prefix. |paths| = max(1, 2*K') with
// K' = min(|ranked|, K). Canonical order: empty, singles in rank order,
// prefixes of length >= 2 by length. Throws invalid_param on a rejected
// outcome.
struct trajectory_plan {
  std::string sample_id;
  std::vector<std::vector<tool_id>> paths;
};

trajectory_plan synthesize_paths(const std::string& sample_id, label gt,
                                 const selection_outcome& outcome,
                                 const selection_config& cfg = {});

struct materialize_config {
  std::filesystem::path maps_dir = "maps";
  int min_side = 224;     // zoom_in upscale target
  double margin = 0.10;   // zoom box expansion per side, fraction of box size
};

// Expanded zoom_in argument: union of the gt boxes grown by margin per side,
// clamped to the image; the full frame when gt_boxes is empty.
bounding_box zoom_box(const std::vector<bounding_box>& gt_boxes, int width,
                      int height, double margin = 0.10);

// Ground-truth boxes for an entry: the explicit list, else the surviving
// components of the mask. Fake entries must resolve to at least one box
// (missing_gt_box); real entries pass through untouched.
std::vector<bounding_box> resolve_gt_boxes(const manifest_entry& entry);

// Renders one tool path into a multi-turn trajectory, running each tool on
// the image and saving its map under maps_dir as <sample_id>_<tool>.png.
// Fake entries need nonempty gt boxes (missing_gt_box otherwise); tool and
// image errors propagate.
trajectory materialize_trajectory(const std::vector<tool_id>& path,
                                  const manifest_entry& entry,
                                  const raster_image& img,
                                  const materialize_config& cfg = {});

struct build_report {
  std::int64_t samples_scored = 0;    // manifest entries with a score
  std::int64_t samples_skipped = 0;   // manifest entries without a score
  std::int64_t kept = 0;
  std::int64_t rejected = 0;
  std::int64_t trajectories = 0;
  std::int64_t trajectories_real = 0;
  std::int64_t trajectories_fake = 0;
  std::map<tool_id, std::int64_t> tool_usage;  // tool invocations emitted

  friend bool operator==(const build_report&, const build_report&) = default;
};

nlohmann::ordered_json to_json(const build_report& r);
build_report build_report_from_json(const nlohmann::json& j);

// Runs selection, synthesis, and materialization over the whole manifest in
// order, writing one serialized trajectory per line to corpus_path. Every
// score must resolve to a manifest entry with the same label
// (manifest_mismatch otherwise); unscored entries are skipped. Fake entries
// without boxes fall back to mask_to_boxes on their mask. Deterministic:
// identical inputs produce byte-identical output.
build_report build_corpus(const std::vector<manifest_entry>& manifest,
                          const std::vector<score_record>& scores,
                          const std::filesystem::path& corpus_path,
                          const selection_config& sel = {},
                          const materialize_config& mat = {});

}  // namespace forgekit
