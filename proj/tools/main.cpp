#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "forgekit/error.hpp"
#include "forgekit/evalkit.hpp"
#include "forgekit/image_io.hpp"
#include "forgekit/records.hpp"
#include "forgekit/rewards.hpp"
#include "forgekit/toolbox.hpp"
#include "forgekit/trajectory.hpp"

using namespace forgekit;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

bounding_box parse_bbox_flag(const std::string& text) {
  int v[4];
  char extra;
  if (std::sscanf(text.c_str(), "%d,%d,%d,%d%c", &v[0], &v[1], &v[2], &v[3],
                  &extra) != 4)
    fail(errc::bad_arguments, "--bbox expects x1,y1,x2,y2, got \"" + text + "\"");
  return make_box(v[0], v[1], v[2], v[3]);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

binary_mask load_mask(const fs::path& path, double threshold) {
  return binarize_map(load_gray(path), threshold);
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_failure, "cannot write " + path.string());
  out << body;
}

ordered_json boxes_json(const std::vector<bounding_box>& boxes) {
  ordered_json arr = ordered_json::array();
  for (const auto& b : boxes) arr.push_back({b.x1, b.y1, b.x2, b.y2});
  return arr;
}

std::map<std::string, const manifest_entry*> index_manifest(
    const std::vector<manifest_entry>& manifest) {
  std::map<std::string, const manifest_entry*> by_id;
  for (const auto& e : manifest)
    if (!by_id.emplace(e.sample_id, &e).second)
      fail(errc::invalid_param, "duplicate manifest entry " + e.sample_id);
  return by_id;
}

// ---- tool ----------------------------------------------------------------

struct tool_opts {
  std::string name;
  std::string in, out;
  int quality = 90;
  double amplification = 10.0;
  std::string fft_mode_name = "global_spectrum";
  int block_size = 32;
  double cutoff = 0.25;
  std::string bbox_text;
  int min_side = 224;
  std::string npp_map;
};

int cmd_tool(const tool_opts& o) {
  const tool_id tool = tool_from_string(o.name);
  const raster_image img = load_image(o.in);

  tool_args args;
  args.ela = ela_config{o.quality, o.amplification};
  args.fft = fft_config{fft_mode_from_string(o.fft_mode_name), o.block_size,
                        o.cutoff};
  args.min_side = o.min_side;
  if (!o.bbox_text.empty()) args.bbox = parse_bbox_flag(o.bbox_text);
  if (!o.npp_map.empty()) args.npp_map = fs::path(o.npp_map);

  const tool_output result = run_tool(tool, img, args);
  if (const auto* g = std::get_if<gray_map>(&result.map))
    save_png(*g, o.out);
  else
    save_png(std::get<raster_image>(result.map), o.out);
  std::cout << result.params_echo.dump() << "\n";
  return 0;
}

// ---- rewards ---------------------------------------------------------------

struct rewards_opts {
  std::string completions, manifest, out;
  double w_cls = 1.0, w_loc = 2.0, w_tool = 0.5;
  double tau_iou = 0.5;
  int group_size = 0;  // 0 disables the check
};

int cmd_rewards(const rewards_opts& o) {
  const auto completions = load_completions(o.completions);
  const auto manifest = load_manifest(o.manifest);
  const auto by_id = index_manifest(manifest);
  const reward_weights weights{o.w_cls, o.w_loc, o.w_tool};

  // one GRPO group per sample, in first-appearance order
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<const completion_record*>> groups;
  for (const auto& c : completions) {
    auto& bucket = groups[c.sample_id];
    if (bucket.empty()) group_order.push_back(c.sample_id);
    bucket.push_back(&c);
  }

  ordered_json lines = ordered_json::array();
  double total = 0.0;
  std::int64_t parse_errors = 0;
  for (const auto& id : group_order) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      fail(errc::manifest_mismatch, "completion for unknown sample " + id);
    const manifest_entry& entry = *it->second;
    const auto& bucket = groups[id];
    if (o.group_size > 0 &&
        bucket.size() != static_cast<std::size_t>(o.group_size))
      fail(errc::invalid_param,
           "sample " + id + " has " + std::to_string(bucket.size()) +
               " completions, expected " + std::to_string(o.group_size));

    const std::vector<bounding_box> gt_boxes = resolve_gt_boxes(entry);
    std::vector<reward_breakdown> breakdowns;
    std::vector<bool> failed;
    for (const completion_record* c : bucket) {
      try {
        parsed_answer ans = parse_answer(c->completion);
        std::vector<std::string> texts = c->turn_texts;
        texts.push_back(c->completion);
        ans.tool_used = detect_tool_usage(texts);
        breakdowns.push_back(
            score_sample({ans, entry.gt, gt_boxes}, weights, o.tau_iou));
        failed.push_back(false);
      } catch (const error&) {
        breakdowns.emplace_back();  // all-zero reward for a malformed rollout
        failed.push_back(true);
        ++parse_errors;
      }
    }

    std::vector<double> totals;
    for (const auto& b : breakdowns) totals.push_back(b.r_total);
    const std::vector<double> advantages = grpo_advantages(totals);

    for (std::size_t i = 0; i < breakdowns.size(); ++i) {
      const auto& b = breakdowns[i];
      ordered_json line;
      line["sample_id"] = id;
      if (failed[i]) line["parse_error"] = true;
      line["r_cls"] = b.r_cls;
      line["r_loc"] = b.r_loc;
      line["r_tool"] = b.r_tool;
      line["r_total"] = b.r_total;
      if (b.hungarian)
        line["hungarian_iou"] = *b.hungarian;
      else
        line["hungarian_iou"] = nullptr;
      line["advantage"] = advantages[i];
      lines.push_back(std::move(line));
      total += b.r_total;
    }
  }

  std::string body;
  for (const auto& line : lines) body += line.dump() + "\n";
  if (!o.out.empty()) write_text(o.out, body);

  ordered_json summary;
  summary["completions"] = completions.size();
  summary["groups"] = group_order.size();
  summary["parse_errors"] = parse_errors;
  summary["mean_r_total"] =
      completions.empty() ? 0.0 : total / static_cast<double>(completions.size());
  std::cout << summary.dump() << "\n";
  return 0;
}

// ---- build-traj ------------------------------------------------------------

struct build_opts {
  std::string scores, manifest, out_corpus, out_report;
  std::string maps_dir = "maps";
  double tau = 0.5;
  int k_fake = 4, k_real = 2;
  int min_side = 224;
  double margin = 0.10;
};

int cmd_build_traj(const build_opts& o) {
  const auto manifest = load_manifest(o.manifest);
  const auto scores = load_scores(o.scores);
  const selection_config sel{o.tau, o.k_fake, o.k_real};
  const materialize_config mat{fs::path(o.maps_dir), o.min_side, o.margin};

  const build_report report =
      build_corpus(manifest, scores, o.out_corpus, sel, mat);
  const std::string body = to_json(report).dump(2) + "\n";
  if (!o.out_report.empty()) write_text(o.out_report, body);
  std::cout << body;
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct eval_opts {
  std::string mode;
  std::string predictions, manifest, out;
  double threshold = 0.5;
};

// Dimensions for mask comparison: the gt mask if the entry has one, else the
// image itself.
std::pair<int, int> entry_dims(const manifest_entry& e,
                               binary_mask* gt_out, double threshold) {
  if (e.mask) {
    *gt_out = load_mask(*e.mask, threshold);
    return {gt_out->width, gt_out->height};
  }
  const raster_image img = load_image(e.image);
  *gt_out = box_fill_mask(e.boxes, img.width, img.height);
  return {img.width, img.height};
}

int cmd_eval(const eval_opts& o) {
  const auto predictions = load_predictions(o.predictions);
  const auto manifest = load_manifest(o.manifest);
  const auto by_id = index_manifest(manifest);

  std::map<std::string, const prediction_record*> pred_by_id;
  for (const auto& p : predictions) {
    if (!by_id.contains(p.sample_id))
      fail(errc::manifest_mismatch,
           "prediction for unknown sample " + p.sample_id);
    if (!pred_by_id.emplace(p.sample_id, &p).second)
      fail(errc::invalid_param, "duplicate prediction for " + p.sample_id);
  }
  const auto pred_for = [&](const manifest_entry& e) -> const prediction_record& {
    const auto it = pred_by_id.find(e.sample_id);
    if (it == pred_by_id.end())
      fail(errc::manifest_mismatch, "no prediction for sample " + e.sample_id);
    return *it->second;
  };

  std::vector<std::string> dataset_order;
  std::map<std::string, std::vector<const manifest_entry*>> datasets;
  for (const auto& e : manifest) {
    auto& bucket = datasets[e.dataset];
    if (bucket.empty()) dataset_order.push_back(e.dataset);
    bucket.push_back(&e);
  }

  ordered_json per_dataset = ordered_json::object();
  ordered_json weighted = ordered_json::object();

  if (o.mode == "det") {
    std::vector<std::pair<double, std::int64_t>> f1s, accs;
    for (const auto& name : dataset_order) {
      std::vector<detection_record> records;
      for (const manifest_entry* e : datasets[name])
        records.push_back({pred_for(*e).pred, e->gt});
      const detection_summary m = detection_metrics(records);
      per_dataset[name] = {{"count", records.size()}, {"f1", m.f1},
                           {"accuracy", m.accuracy}, {"tp", m.tp},
                           {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
      f1s.emplace_back(m.f1, static_cast<std::int64_t>(records.size()));
      accs.emplace_back(m.accuracy, static_cast<std::int64_t>(records.size()));
    }
    weighted = {{"f1", weighted_average(f1s)},
                {"accuracy", weighted_average(accs)}};
  } else if (o.mode == "loc") {
    std::vector<std::pair<double, std::int64_t>> f1s, ious;
    for (const auto& name : dataset_order) {
      double f1_sum = 0.0, iou_sum = 0.0;
      std::int64_t n = 0;
      for (const manifest_entry* e : datasets[name]) {
        if (e->gt != label::fake) continue;  // tampered images only
        const prediction_record& p = pred_for(*e);
        binary_mask gt;
        const auto [w, h] = entry_dims(*e, &gt, o.threshold);
        binary_mask pred;
        if (p.mask) {
          pred = load_mask(*p.mask, o.threshold);
          if (pred.width != w || pred.height != h)
            fail(errc::shape_mismatch,
                 "sample " + e->sample_id + ": prediction mask is " +
                     std::to_string(pred.width) + "x" +
                     std::to_string(pred.height) + ", ground truth is " +
                     std::to_string(w) + "x" + std::to_string(h));
        } else {
          pred = box_fill_mask(p.boxes, w, h);
        }
        const pixel_summary m = pixel_metrics(pred, gt);
        f1_sum += m.f1;
        iou_sum += m.iou;
        ++n;
      }
      if (n == 0) continue;
      per_dataset[name] = {{"count", n},
                           {"f1", f1_sum / static_cast<double>(n)},
                           {"iou", iou_sum / static_cast<double>(n)}};
      f1s.emplace_back(f1_sum / static_cast<double>(n), n);
      ious.emplace_back(iou_sum / static_cast<double>(n), n);
    }
    weighted = {{"f1", weighted_average(f1s)}, {"iou", weighted_average(ious)}};
  } else if (o.mode == "bbox") {
    std::vector<std::pair<double, std::int64_t>> means;
    for (const auto& name : dataset_order) {
      std::vector<localization_record> records;
      for (const manifest_entry* e : datasets[name]) {
        if (e->gt != label::fake) continue;
        records.push_back({pred_for(*e).boxes, resolve_gt_boxes(*e), e->gt});
      }
      if (records.empty()) continue;
      const double mean = bbox_eval(records);
      per_dataset[name] = {{"count", records.size()}, {"bbox_iou", mean}};
      means.emplace_back(mean, static_cast<std::int64_t>(records.size()));
    }
    weighted = {{"bbox_iou", weighted_average(means)}};
  } else {
    fail(errc::invalid_param, "mode must be det, loc, or bbox");
  }

  ordered_json report;
  report["mode"] = o.mode;
  report["per_dataset"] = per_dataset;
  report["weighted_avg"] = weighted;
  const std::string body = report.dump(2) + "\n";
  if (!o.out.empty()) write_text(o.out, body);
  std::cout << body;
  return 0;
}

// ---- degrade ---------------------------------------------------------------

struct degrade_opts {
  std::string op_name;
  int quality = 90;
  double sigma = 5.0;
  int kernel = 5;
  double rate = 1.0;
  std::uint64_t seed = 0;
  std::string in_dir, out_dir;
  std::string manifest, out_manifest;
  bool keep_going = false;
};

bool has_image_ext(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

int cmd_degrade(const degrade_opts& o) {
  degrade_op op;
  op.kind = degrade_kind_from_string(o.op_name);
  op.quality = o.quality;
  op.sigma = o.sigma;
  op.kernel = o.kernel;
  op.rate = o.rate;

  const fs::path in_root(o.in_dir), out_root(o.out_dir);
  if (!fs::is_directory(in_root))
    fail(errc::io_failure, o.in_dir + " is not a directory");

  std::vector<fs::path> rel_paths;
  for (const auto& entry : fs::recursive_directory_iterator(in_root))
    if (entry.is_regular_file() && has_image_ext(entry.path()))
      rel_paths.push_back(entry.path().lexically_relative(in_root));
  std::sort(rel_paths.begin(), rel_paths.end());

  // old path -> new path, for the manifest rewrite
  std::map<std::string, std::string> moved;
  std::int64_t failures = 0;
  for (const auto& rel : rel_paths) {
    fs::path out_rel = rel;
    out_rel.replace_extension(".png");
    try {
      const raster_image img = load_image(in_root / rel);
      degrade_op per_file = op;
      // decorrelate per-image noise while keeping runs reproducible
      per_file.seed = o.seed ^ fnv1a64(rel.generic_string());
      const raster_image out = degrade(img, per_file);
      fs::create_directories((out_root / out_rel).parent_path());
      save_png(out, out_root / out_rel);
      moved[(in_root / rel).string()] = (out_root / out_rel).string();
    } catch (const error& e) {
      if (!o.keep_going) throw;
      std::cerr << "failed " << (in_root / rel).string() << ": " << e.what()
                << "\n";
      ++failures;
    }
  }

  if (!o.manifest.empty()) {
    auto manifest = load_manifest(o.manifest);
    for (auto& e : manifest) {
      const auto it = moved.find(e.image);
      if (it == moved.end())
        fail(errc::manifest_mismatch,
             "image for " + e.sample_id + " was not degraded: " + e.image);
      e.image = it->second;
    }
    const fs::path out_path =
        o.out_manifest.empty() ? fs::path(o.manifest + ".degraded")
                               : fs::path(o.out_manifest);
    save_manifest(manifest, out_path);
  }

  ordered_json summary;
  summary["processed"] = static_cast<std::int64_t>(rel_paths.size()) - failures;
  summary["failed"] = failures;
  std::cout << summary.dump() << "\n";
  return failures == 0 ? 0 : 1;
}

// ---- mask2box ----------------------------------------------------------------

struct mask2box_opts {
  std::string mask;
  std::int64_t min_pixels = 100;
  double min_area_frac = 0.0005;
  double threshold = 0.5;
};

int cmd_mask2box(const mask2box_opts& o) {
  const binary_mask mask = load_mask(o.mask, o.threshold);
  const auto boxes = mask_to_boxes(mask, {o.min_pixels, o.min_area_frac});
  std::cout << boxes_json(boxes).dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forensic imaging toolkit: tools, rewards, corpus, evaluation"};
  app.require_subcommand(1);
  app.set_config("--config");

  tool_opts to;
  auto* tool_cmd = app.add_subcommand("tool", "run one forensic tool on an image")->configurable();
  tool_cmd->add_option("name", to.name, "ELA, FFT, NPP, or zoom_in")->required();
  tool_cmd->add_option("--in", to.in, "input image")->required();
  tool_cmd->add_option("--out", to.out, "output PNG")->required();
  tool_cmd->add_option("--quality", to.quality, "ELA recompression quality");
  tool_cmd->add_option("--amplification", to.amplification, "ELA gain");
  tool_cmd->add_option("--fft-mode", to.fft_mode_name,
                       "global_spectrum or high_freq_heatmap");
  tool_cmd->add_option("--block-size", to.block_size, "FFT heatmap tile size");
  tool_cmd->add_option("--cutoff", to.cutoff, "FFT radial cutoff fraction");
  tool_cmd->add_option("--bbox", to.bbox_text, "zoom_in region x1,y1,x2,y2");
  tool_cmd->add_option("--min-side", to.min_side, "zoom_in upscale target");
  tool_cmd->add_option("--npp-map", to.npp_map, "precomputed noise fingerprint");

  rewards_opts ro;
  auto* rewards_cmd =
      app.add_subcommand("rewards", "score completions and group advantages")
          ->configurable();
  rewards_cmd->add_option("--completions", ro.completions, "completions JSONL")
      ->required();
  rewards_cmd->add_option("--manifest", ro.manifest, "ground-truth manifest")
      ->required();
  rewards_cmd->add_option("--out", ro.out, "report JSONL path");
  rewards_cmd->add_option("--w-cls", ro.w_cls, "classification weight");
  rewards_cmd->add_option("--w-loc", ro.w_loc, "localization weight");
  rewards_cmd->add_option("--w-tool", ro.w_tool, "tool-utility weight");
  rewards_cmd->add_option("--tau-iou", ro.tau_iou, "tool bonus IoU threshold");
  rewards_cmd->add_option("--group-size", ro.group_size,
                          "require this many completions per sample");

  build_opts bo;
  auto* build_cmd =
      app.add_subcommand("build-traj", "synthesize the trajectory corpus")
          ->configurable();
  build_cmd->add_option("--scores", bo.scores, "scores JSONL")->required();
  build_cmd->add_option("--manifest", bo.manifest, "sample manifest")->required();
  build_cmd->add_option("--out-corpus", bo.out_corpus, "corpus JSONL path")
      ->required();
  build_cmd->add_option("--out-report", bo.out_report, "report JSON path");
  build_cmd->add_option("--maps-dir", bo.maps_dir, "tool map output directory");
  build_cmd->add_option("--tau", bo.tau, "validity threshold");
  build_cmd->add_option("--k-fake", bo.k_fake, "ranking cap, fake samples");
  build_cmd->add_option("--k-real", bo.k_real, "ranking cap, real samples");
  build_cmd->add_option("--min-side", bo.min_side, "zoom_in upscale target");
  build_cmd->add_option("--margin", bo.margin, "zoom box expansion per side");

  eval_opts eo;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate predictions")->configurable();
  eval_cmd->add_option("--mode", eo.mode, "det, loc, or bbox")->required();
  eval_cmd->add_option("--predictions", eo.predictions, "predictions JSONL")
      ->required();
  eval_cmd->add_option("--manifest", eo.manifest, "sample manifest")->required();
  eval_cmd->add_option("--out", eo.out, "report JSON path");
  eval_cmd->add_option("--threshold", eo.threshold, "mask binarization threshold");

  degrade_opts dgo;
  auto* degrade_cmd =
      app.add_subcommand("degrade", "degrade an image tree for robustness tests")
          ->configurable();
  degrade_cmd->add_option("--op", dgo.op_name, "jpeg, noise, blur, or resize")
      ->required();
  degrade_cmd->add_option("--quality", dgo.quality, "jpeg quality");
  degrade_cmd->add_option("--sigma", dgo.sigma, "noise sigma, 8-bit units");
  degrade_cmd->add_option("--kernel", dgo.kernel, "blur kernel size, odd");
  degrade_cmd->add_option("--rate", dgo.rate, "resize scale factor");
  degrade_cmd->add_option("--seed", dgo.seed, "noise RNG seed");
  degrade_cmd->add_option("--in-dir", dgo.in_dir, "input image tree")->required();
  degrade_cmd->add_option("--out-dir", dgo.out_dir, "mirrored output tree")
      ->required();
  degrade_cmd->add_option("--manifest", dgo.manifest, "manifest to rewrite");
  degrade_cmd->add_option("--out-manifest", dgo.out_manifest,
                          "rewritten manifest path");
  degrade_cmd->add_flag("--continue-on-error", dgo.keep_going,
                        "keep going past unreadable files, exit 1 at the end");

  mask2box_opts mo;
  auto* m2b_cmd =
      app.add_subcommand("mask2box", "extract component boxes from a mask")
          ->configurable();
  m2b_cmd->add_option("--mask", mo.mask, "mask image")->required();
  m2b_cmd->add_option("--min-pixels", mo.min_pixels, "component size floor");
  m2b_cmd->add_option("--min-area-frac", mo.min_area_frac,
                      "component area floor, fraction of the mask");
  m2b_cmd->add_option("--threshold", mo.threshold, "mask binarization threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (tool_cmd->parsed()) return cmd_tool(to);
    if (rewards_cmd->parsed()) return cmd_rewards(ro);
    if (build_cmd->parsed()) return cmd_build_traj(bo);
    if (eval_cmd->parsed()) return cmd_eval(eo);
    if (degrade_cmd->parsed()) return cmd_degrade(dgo);
    if (m2b_cmd->parsed()) return cmd_mask2box(mo);
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
