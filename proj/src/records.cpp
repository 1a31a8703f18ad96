#include "forgekit/records.hpp"

#include <fstream>
#include <sstream>

#include "forgekit/error.hpp"

namespace forgekit {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    fail(errc::malformed_json, std::string("missing field \"") + key + "\"");
  return j.at(key);
}

std::string require_string(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string())
    fail(errc::malformed_json, std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

label require_label(const json& j, const char* key) {
  return label_from_string(require_string(j, key));
}

double require_score(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number())
    fail(errc::malformed_json, std::string("field \"") + key + "\" must be a number");
  const double s = v.get<double>();
  if (!(s >= 0.0 && s <= 1.0))
    fail(errc::invalid_param,
         std::string("field \"") + key + "\" outside [0,1]: " + std::to_string(s));
  return s;
}

bounding_box box_from_json(const json& v) {
  if (!v.is_array() || v.size() != 4)
    fail(errc::malformed_json, "box must be a 4-element array");
  for (const auto& c : v)
    if (!c.is_number_integer())
      fail(errc::malformed_json, "box coordinates must be integers");
  return make_box(v[0].get<int>(), v[1].get<int>(), v[2].get<int>(),
                  v[3].get<int>());
}

std::vector<bounding_box> boxes_from_json(const json& v) {
  if (!v.is_array()) fail(errc::malformed_json, "\"boxes\" must be an array");
  std::vector<bounding_box> out;
  out.reserve(v.size());
  for (const auto& b : v) out.push_back(box_from_json(b));
  return out;
}

json boxes_to_json(const std::vector<bounding_box>& boxes) {
  json arr = json::array();
  for (const auto& b : boxes) arr.push_back({b.x1, b.y1, b.x2, b.y2});
  return arr;
}

template <typename Record, Record (*Parse)(const json&)>
std::vector<Record> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_failure, "cannot open " + path.string());
  std::vector<Record> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Parse(json::parse(line)));
    } catch (const json::parse_error& e) {
      fail(errc::malformed_json,
           path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const error& e) {
      throw error(e.code(), path.string() + ":" + std::to_string(lineno) +
                                ": " + e.what());
    }
  }
  return out;
}

}  // namespace

manifest_entry manifest_entry_from_json(const json& j) {
  manifest_entry e;
  e.sample_id = require_string(j, "sample_id");
  if (e.sample_id.empty()) fail(errc::invalid_param, "empty sample_id");
  e.image = require_string(j, "image");
  e.gt = require_label(j, "label");
  if (j.contains("mask") && !j.at("mask").is_null())
    e.mask = require_string(j, "mask");
  if (j.contains("boxes") && !j.at("boxes").is_null())
    e.boxes = boxes_from_json(j.at("boxes"));
  if (j.contains("dataset") && !j.at("dataset").is_null())
    e.dataset = require_string(j, "dataset");
  if (e.gt == label::fake && !e.mask && e.boxes.empty())
    fail(errc::missing_gt_box,
         "fake entry \"" + e.sample_id + "\" has neither mask nor boxes");
  return e;
}

ordered_json to_json(const manifest_entry& e) {
  ordered_json j;
  j["sample_id"] = e.sample_id;
  j["image"] = e.image;
  j["label"] = to_string(e.gt);
  if (e.mask) j["mask"] = *e.mask;
  if (!e.boxes.empty()) j["boxes"] = boxes_to_json(e.boxes);
  j["dataset"] = e.dataset;
  return j;
}

score_record score_record_from_json(const json& j) {
  score_record s;
  s.sample_id = require_string(j, "sample_id");
  if (s.sample_id.empty()) fail(errc::invalid_param, "empty sample_id");
  s.gt = require_label(j, "label");
  s.p_base = require_score(j, "p_base");
  const json& tools = require(j, "tools");
  if (!tools.is_object()) fail(errc::malformed_json, "\"tools\" must be an object");
  for (const auto& [key, value] : tools.items()) {
    const tool_id id = tool_from_string(key);  // throws unknown_tool
    if (!value.is_number())
      fail(errc::malformed_json, "tool score for " + key + " must be a number");
    const double v = value.get<double>();
    if (!(v >= 0.0 && v <= 1.0))
      fail(errc::invalid_param,
           "tool score for " + key + " outside [0,1]: " + std::to_string(v));
    s.tool_scores[id] = v;
  }
  return s;
}

ordered_json to_json(const score_record& s) {
  ordered_json j;
  j["sample_id"] = s.sample_id;
  j["label"] = to_string(s.gt);
  j["p_base"] = s.p_base;
  ordered_json tools = ordered_json::object();
  for (const auto& [id, v] : s.tool_scores) tools[to_string(id)] = v;
  j["tools"] = tools;
  return j;
}

prediction_record prediction_record_from_json(const json& j) {
  prediction_record p;
  p.sample_id = require_string(j, "sample_id");
  if (p.sample_id.empty()) fail(errc::invalid_param, "empty sample_id");
  p.pred = require_label(j, "pred_label");
  if (j.contains("boxes") && !j.at("boxes").is_null())
    p.boxes = boxes_from_json(j.at("boxes"));
  if (j.contains("mask") && !j.at("mask").is_null())
    p.mask = require_string(j, "mask");
  return p;
}

ordered_json to_json(const prediction_record& p) {
  ordered_json j;
  j["sample_id"] = p.sample_id;
  j["pred_label"] = to_string(p.pred);
  j["boxes"] = boxes_to_json(p.boxes);
  if (p.mask) j["mask"] = *p.mask;
  return j;
}

completion_record completion_record_from_json(const json& j) {
  completion_record c;
  c.sample_id = require_string(j, "sample_id");
  if (c.sample_id.empty()) fail(errc::invalid_param, "empty sample_id");
  c.completion = require_string(j, "completion");
  if (j.contains("turns") && !j.at("turns").is_null()) {
    const json& turns = j.at("turns");
    if (!turns.is_array()) fail(errc::malformed_json, "\"turns\" must be an array");
    for (const auto& t : turns) {
      if (!t.is_string())
        fail(errc::malformed_json, "\"turns\" entries must be strings");
      c.turn_texts.push_back(t.get<std::string>());
    }
  }
  return c;
}

ordered_json to_json(const completion_record& c) {
  ordered_json j;
  j["sample_id"] = c.sample_id;
  j["completion"] = c.completion;
  if (!c.turn_texts.empty()) j["turns"] = c.turn_texts;
  return j;
}

std::vector<manifest_entry> load_manifest(const std::filesystem::path& path) {
  return load_jsonl<manifest_entry, manifest_entry_from_json>(path);
}

std::vector<score_record> load_scores(const std::filesystem::path& path) {
  return load_jsonl<score_record, score_record_from_json>(path);
}

std::vector<prediction_record> load_predictions(const std::filesystem::path& path) {
  return load_jsonl<prediction_record, prediction_record_from_json>(path);
}

std::vector<completion_record> load_completions(const std::filesystem::path& path) {
  return load_jsonl<completion_record, completion_record_from_json>(path);
}

void save_manifest(const std::vector<manifest_entry>& entries,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_failure, "cannot write " + path.string());
  for (const auto& e : entries) out << to_json(e).dump() << '\n';
}

}  // namespace forgekit
