// Python bindings. Images cross the boundary as numpy arrays: uint8 (h, w, 3)
// for color, float32 (h, w) for analysis maps, uint8/bool (h, w) for masks.
// Labels, tools, and modes are plain strings.
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forgekit/core.hpp"
#include "forgekit/error.hpp"
#include "forgekit/evalkit.hpp"
#include "forgekit/image_io.hpp"
#include "forgekit/parser.hpp"
#include "forgekit/rewards.hpp"
#include "forgekit/toolbox.hpp"
#include "forgekit/trajectory.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace forgekit;

namespace {

raster_image to_raster(const py::array& a) {
  if (!a.dtype().is(py::dtype::of<std::uint8_t>()))
    fail(errc::shape_mismatch, "image array must be uint8");
  auto arr = py::array_t<std::uint8_t, py::array::c_style>::ensure(a);
  if (!arr || arr.ndim() != 3 || arr.shape(2) != 3)
    fail(errc::shape_mismatch, "image array must have shape (h, w, 3)");
  raster_image img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  std::memcpy(img.data.data(), arr.data(), img.data.size());
  return img;
}

py::array from_raster(const raster_image& img) {
  py::array_t<std::uint8_t> out({img.height, img.width, 3});
  std::memcpy(out.mutable_data(), img.data.data(), img.data.size());
  return out;
}

gray_map to_gray(const py::array& a) {
  auto arr = py::array_t<float, py::array::c_style | py::array::forcecast>::ensure(a);
  if (!arr || arr.ndim() != 2)
    fail(errc::shape_mismatch, "map array must have shape (h, w)");
  gray_map map(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  std::memcpy(map.data.data(), arr.data(), map.data.size() * sizeof(float));
  return map;
}

py::array from_gray(const gray_map& map) {
  py::array_t<float> out({map.height, map.width});
  std::memcpy(out.mutable_data(), map.data.data(), map.data.size() * sizeof(float));
  return out;
}

binary_mask to_mask(const py::array& a) {
  const bool ok_dtype = a.dtype().is(py::dtype::of<std::uint8_t>()) ||
                        a.dtype().is(py::dtype::of<bool>());
  if (!ok_dtype) fail(errc::shape_mismatch, "mask array must be uint8 or bool");
  auto arr = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>::ensure(a);
  if (!arr || arr.ndim() != 2)
    fail(errc::shape_mismatch, "mask array must have shape (h, w)");
  binary_mask mask(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  const auto* src = arr.data();
  for (size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = src[i] ? 1 : 0;
  return mask;
}

py::array from_mask(const binary_mask& mask) {
  py::array_t<std::uint8_t> out({mask.height, mask.width});
  std::memcpy(out.mutable_data(), mask.data.data(), mask.data.size());
  return out;
}

bounding_box as_box(const py::handle& obj) {
  if (py::isinstance<bounding_box>(obj)) return obj.cast<bounding_box>();
  const auto seq = py::cast<py::sequence>(obj);
  if (py::len(seq) != 4) fail(errc::bad_arguments, "a box needs exactly 4 integers");
  return make_box(py::cast<int>(seq[0]), py::cast<int>(seq[1]),
                  py::cast<int>(seq[2]), py::cast<int>(seq[3]));
}

std::vector<bounding_box> as_boxes(const py::iterable& objs) {
  std::vector<bounding_box> out;
  for (const auto& h : objs) out.push_back(as_box(h));
  return out;
}

py::dict breakdown_dict(const reward_breakdown& b) {
  py::dict d;
  d["r_cls"] = b.r_cls;
  d["r_loc"] = b.r_loc;
  d["r_tool"] = b.r_tool;
  d["r_total"] = b.r_total;
  d["hungarian"] = b.hungarian ? py::cast(*b.hungarian) : py::none();
  return d;
}

group_sample make_group_sample(const parsed_answer& answer, const std::string& gt,
                               const py::iterable& gt_boxes) {
  group_sample s;
  s.answer = answer;
  s.gt_label = label_from_string(gt);
  s.gt_boxes = as_boxes(gt_boxes);
  return s;
}

}  // namespace

PYBIND11_MODULE(_forgekit, m) {
  m.doc() = "Forensic image analysis: visual tools, answer parsing, rollout "
            "rewards, trajectory path planning, and evaluation metrics.";
  m.attr("__version__") = FORGEKIT_VERSION;

  py::register_exception<error>(m, "ForgekitError");

  py::class_<bounding_box>(m, "Box", "Pixel rectangle, x2/y2 exclusive.")
      .def(py::init([](int x1, int y1, int x2, int y2) {
             return make_box(x1, y1, x2, y2);
           }),
           "x1"_a, "y1"_a, "x2"_a, "y2"_a)
      .def_readonly("x1", &bounding_box::x1)
      .def_readonly("y1", &bounding_box::y1)
      .def_readonly("x2", &bounding_box::x2)
      .def_readonly("y2", &bounding_box::y2)
      .def("to_tuple",
           [](const bounding_box& b) { return py::make_tuple(b.x1, b.y1, b.x2, b.y2); })
      .def("area", &box_area)
      .def(py::self == py::self)
      .def("__hash__",
           [](const bounding_box& b) {
             return py::hash(py::make_tuple(b.x1, b.y1, b.x2, b.y2));
           })
      .def("__iter__",
           [](const bounding_box& b) {
             return py::iter(py::make_tuple(b.x1, b.y1, b.x2, b.y2));
           })
      .def("__repr__", [](const bounding_box& b) {
        return "Box(" + std::to_string(b.x1) + ", " + std::to_string(b.y1) + ", " +
               std::to_string(b.x2) + ", " + std::to_string(b.y2) + ")";
      });

  m.def("box_iou",
        [](const py::object& a, const py::object& b) {
          return box_iou(as_box(a), as_box(b));
        },
        "a"_a, "b"_a, "Exact intersection-over-union of two boxes.");
  m.def("clamp_box",
        [](const py::object& b, int width, int height) {
          return clamp_box(as_box(b), width, height);
        },
        "box"_a, "width"_a, "height"_a);

  // image i/o
  m.def("load_image",
        [](const std::filesystem::path& p) { return from_raster(load_image(p)); },
        "path"_a, "PNG or JPEG file to a uint8 (h, w, 3) array.");
  m.def("load_gray",
        [](const std::filesystem::path& p) { return from_gray(load_gray(p)); },
        "path"_a, "Grayscale PNG to a float32 (h, w) array in [0, 1].");
  m.def("save_png",
        [](const py::array& a, const std::filesystem::path& p) {
          if (a.ndim() == 3)
            save_png(to_raster(a), p);
          else
            save_png(to_gray(a), p);
        },
        "array"_a, "path"_a,
        "Writes (h, w, 3) uint8 as color PNG, (h, w) float as grayscale PNG.");

  // forensic tools
  m.def("ela",
        [](const py::array& img, int quality, double amplification) {
          return from_gray(ela(to_raster(img), {quality, amplification}));
        },
        "img"_a, "quality"_a = 90, "amplification"_a = 10.0,
        "Recompression residual map in [0, 1].");
  m.def("fft_map",
        [](const py::array& img, const std::string& mode, int block_size,
           double radial_cutoff) {
          fft_config cfg;
          cfg.mode = fft_mode_from_string(mode);
          cfg.block_size = block_size;
          cfg.radial_cutoff = radial_cutoff;
          return from_gray(fft_map(to_raster(img), cfg));
        },
        "img"_a, "mode"_a = "global_spectrum", "block_size"_a = 32,
        "radial_cutoff"_a = 0.25,
        "Frequency analysis map: 'global_spectrum' or 'high_freq_heatmap'.");
  m.def("noise_residual",
        [](const py::array& img) { return from_gray(noise_residual(to_raster(img))); },
        "img"_a, "Median-filter noise residual map in [0, 1].");
  m.def("zoom_in",
        [](const py::array& img, const py::object& box, int min_side) {
          return from_raster(zoom_in(to_raster(img), as_box(box), min_side));
        },
        "img"_a, "box"_a, "min_side"_a = 224,
        "Crop and upscale until the shorter side reaches min_side.");

  // answer and tool-call wire format
  py::class_<parsed_answer>(m, "ParsedAnswer")
      .def(py::init([](const std::string& lbl, const py::iterable& boxes,
                       bool tool_used) {
             parsed_answer a;
             a.final_label = label_from_string(lbl);
             a.boxes = as_boxes(boxes);
             a.tool_used = tool_used;
             return a;
           }),
           "label"_a = "real", "boxes"_a = py::tuple(), "tool_used"_a = false)
      .def_property(
          "label",
          [](const parsed_answer& a) { return to_string(a.final_label); },
          [](parsed_answer& a, const std::string& s) {
            a.final_label = label_from_string(s);
          })
      .def_property(
          "boxes", [](const parsed_answer& a) { return a.boxes; },
          [](parsed_answer& a, const py::iterable& boxes) {
            a.boxes = as_boxes(boxes);
          })
      .def_readwrite("tool_used", &parsed_answer::tool_used)
      .def(py::self == py::self)
      .def("__repr__", [](const parsed_answer& a) {
        std::string r = "ParsedAnswer(label='" + to_string(a.final_label) + "', boxes=[";
        for (size_t i = 0; i < a.boxes.size(); ++i) {
          if (i) r += ", ";
          const auto& b = a.boxes[i];
          r += "Box(" + std::to_string(b.x1) + ", " + std::to_string(b.y1) + ", " +
               std::to_string(b.x2) + ", " + std::to_string(b.y2) + ")";
        }
        return r + "], tool_used=" + (a.tool_used ? "True" : "False") + ")";
      });

  m.def("parse_answer", &parse_answer, "completion"_a,
        "First <answer> span of a completion; raises ForgekitError when the tag "
        "or the real/fake keyword is missing.");
  m.def("detect_tool_usage", &detect_tool_usage, "turn_texts"_a,
        "True when any turn holds a well-formed tool call or a tool response.");
  m.def("render_answer",
        [](const std::string& lbl, const py::iterable& boxes) {
          return render_answer(label_from_string(lbl), as_boxes(boxes));
        },
        "label"_a, "boxes"_a = py::tuple());
  m.def("parse_tool_call",
        [](const std::string& span) {
          const tool_call call = parse_tool_call(span);
          py::dict d;
          d["name"] = to_string(call.name);
          d["bbox"] = call.bbox ? py::object(py::make_tuple((*call.bbox)[0], (*call.bbox)[1],
                                                            (*call.bbox)[2], (*call.bbox)[3]))
                                : py::object(py::none());
          return d;
        },
        "span_json"_a, "JSON between tool-call tags to {'name', 'bbox'}.");
  m.def("render_tool_call",
        [](const std::string& name, const std::optional<std::array<int, 4>>& bbox) {
          tool_call call;
          call.name = tool_from_string(name);
          call.bbox = bbox;
          return render_tool_call(call);
        },
        "name"_a, "bbox"_a = py::none());

  // rewards
  m.def("hungarian_iou",
        [](const py::iterable& pred, const py::iterable& gt) {
          return hungarian_iou(as_boxes(pred), as_boxes(gt));
        },
        "pred"_a, "gt"_a,
        "Mean IoU of the optimal pred/gt box assignment.");
  m.def("score_sample",
        [](const parsed_answer& answer, const std::string& gt_label,
           const py::iterable& gt_boxes, double w_cls, double w_loc, double w_tool,
           double tau_iou) {
          const reward_weights w{w_cls, w_loc, w_tool};
          return breakdown_dict(
              score_sample(make_group_sample(answer, gt_label, gt_boxes), w, tau_iou));
        },
        "answer"_a, "gt_label"_a, "gt_boxes"_a = py::tuple(), "w_cls"_a = 1.0,
        "w_loc"_a = 2.0, "w_tool"_a = 0.5, "tau_iou"_a = 0.5,
        "Reward breakdown dict for one rollout against the ground truth.");
  m.def("grpo_advantages", &grpo_advantages, "rewards"_a,
        "Group-relative advantages: (r - mean) / population std, zeros for a "
        "flat group.");
  m.def("score_group",
        [](const std::vector<parsed_answer>& answers, const std::string& gt_label,
           const py::iterable& gt_boxes, double w_cls, double w_loc, double w_tool,
           double tau_iou) {
          const reward_weights w{w_cls, w_loc, w_tool};
          std::vector<group_sample> samples;
          samples.reserve(answers.size());
          const auto boxes = as_boxes(gt_boxes);
          for (const auto& a : answers) {
            group_sample s;
            s.answer = a;
            s.gt_label = label_from_string(gt_label);
            s.gt_boxes = boxes;
            samples.push_back(std::move(s));
          }
          const group_result res = score_group(samples, w, tau_iou);
          py::list breakdowns;
          for (const auto& b : res.breakdowns) breakdowns.append(breakdown_dict(b));
          return py::make_tuple(breakdowns, res.advantages);
        },
        "answers"_a, "gt_label"_a, "gt_boxes"_a = py::tuple(), "w_cls"_a = 1.0,
        "w_loc"_a = 2.0, "w_tool"_a = 0.5, "tau_iou"_a = 0.5,
        "Scores rollouts sharing one ground truth; returns (breakdowns, advantages).");

  // tool selection and path planning
  m.def("select_and_rank",
        [](double p_base, const std::map<std::string, double>& tool_scores,
           double tau) {
          score_record rec;
          rec.p_base = p_base;
          for (const auto& [name, score] : tool_scores)
            rec.tool_scores[tool_from_string(name)] = score;
          selection_config cfg;
          cfg.tau = tau;
          const selection_outcome out = select_and_rank(rec, cfg);
          py::list ranked;
          for (const tool_id t : out.ranked) ranked.append(to_string(t));
          return py::make_tuple(out.rejected, ranked);
        },
        "p_base"_a, "tool_scores"_a, "tau"_a = 0.5,
        "Returns (rejected, ranked tools). Tools qualify by scoring strictly "
        "above max(p_base, tau); rejection means nothing reached tau.");
  m.def("synthesize_paths",
        [](const std::string& gt_label, const std::vector<std::string>& ranked,
           int k_fake, int k_real) {
          selection_outcome out;
          for (const auto& name : ranked) out.ranked.push_back(tool_from_string(name));
          selection_config cfg;
          cfg.k_fake = k_fake;
          cfg.k_real = k_real;
          const trajectory_plan plan =
              synthesize_paths("", label_from_string(gt_label), out, cfg);
          py::list paths;
          for (const auto& path : plan.paths) {
            py::list names;
            for (const tool_id t : path) names.append(to_string(t));
            paths.append(names);
          }
          return paths;
        },
        "gt_label"_a, "ranked"_a, "k_fake"_a = 4, "k_real"_a = 2,
        "Path set for a kept sample: empty path, singles, ranking prefixes; "
        "max(1, 2 * min(len(ranked), k)) paths in canonical order.");
  m.def("zoom_box",
        [](const py::iterable& gt_boxes, int width, int height, double margin) {
          return zoom_box(as_boxes(gt_boxes), width, height, margin);
        },
        "gt_boxes"_a, "width"_a, "height"_a, "margin"_a = 0.10,
        "Union of the boxes grown by margin per side and clamped; the full "
        "frame when empty.");

  // evaluation
  m.def("binarize_map",
        [](const py::array& map, double threshold) {
          return from_mask(binarize_map(to_gray(map), threshold));
        },
        "map"_a, "threshold"_a = 0.5, "Strictly-greater threshold to a 0/1 mask.");
  m.def("map_to_detection",
        [](const py::array& map, double threshold) {
          return to_string(map_to_detection(to_gray(map), threshold));
        },
        "map"_a, "threshold"_a = 0.5);
  m.def("mask_to_detection",
        [](const py::array& mask) { return to_string(mask_to_detection(to_mask(mask))); },
        "mask"_a, "'fake' iff any pixel is set.");
  m.def("mask_to_boxes",
        [](const py::array& mask, std::int64_t min_pixels, double min_area_frac) {
          return mask_to_boxes(to_mask(mask), {min_pixels, min_area_frac});
        },
        "mask"_a, "min_pixels"_a = 100, "min_area_frac"_a = 0.0005,
        "Bounding boxes of the 8-connected components that clear both floors.");
  m.def("box_fill_mask",
        [](const py::iterable& boxes, int width, int height) {
          return from_mask(box_fill_mask(as_boxes(boxes), width, height));
        },
        "boxes"_a, "width"_a, "height"_a);
  m.def("pixel_metrics",
        [](const py::array& pred, const py::array& gt) {
          const pixel_summary s = pixel_metrics(to_mask(pred), to_mask(gt));
          py::dict d;
          d["f1"] = s.f1;
          d["iou"] = s.iou;
          return d;
        },
        "pred"_a, "gt"_a, "Pixel F1 and IoU of two masks of equal shape.");
  m.def("detection_metrics",
        [](const std::vector<std::pair<std::string, std::string>>& records) {
          std::vector<detection_record> recs;
          recs.reserve(records.size());
          for (const auto& [pred, gt] : records)
            recs.push_back({label_from_string(pred), label_from_string(gt)});
          const detection_summary s = detection_metrics(recs);
          py::dict d;
          d["f1"] = s.f1;
          d["accuracy"] = s.accuracy;
          d["tp"] = s.tp;
          d["fp"] = s.fp;
          d["tn"] = s.tn;
          d["fn"] = s.fn;
          return d;
        },
        "records"_a, "Detection metrics from (pred, gt) label pairs; fake is "
        "the positive class.");
  m.def("bbox_eval",
        [](const py::iterable& records) {
          std::vector<localization_record> recs;
          for (const auto& item : records) {
            const auto seq = py::cast<py::sequence>(item);
            if (py::len(seq) != 3)
              fail(errc::bad_arguments, "each record is (pred_boxes, gt_boxes, gt_label)");
            localization_record r;
            r.pred = as_boxes(py::cast<py::iterable>(seq[0]));
            r.gt = as_boxes(py::cast<py::iterable>(seq[1]));
            r.gt_label = label_from_string(py::cast<std::string>(seq[2]));
            recs.push_back(std::move(r));
          }
          return bbox_eval(recs);
        },
        "records"_a, "Mean matched IoU over the tampered records.");
  m.def("weighted_average", &weighted_average, "value_count"_a,
        "Sum(value * count) / Sum(count) over (value, count) pairs.");

  // degradation protocol
  m.def("degrade",
        [](const py::array& img, const std::string& kind, int quality, double sigma,
           std::uint64_t seed, int kernel, double rate) {
          degrade_op op;
          op.kind = degrade_kind_from_string(kind);
          op.quality = quality;
          op.sigma = sigma;
          op.seed = seed;
          op.kernel = kernel;
          op.rate = rate;
          return from_raster(degrade(to_raster(img), op));
        },
        "img"_a, "kind"_a, "quality"_a = 90, "sigma"_a = 5.0, "seed"_a = 0,
        "kernel"_a = 5, "rate"_a = 1.0,
        "Applies 'jpeg', 'noise', 'blur', or 'resize'. Identity parameters "
        "return the input bits.");
}
