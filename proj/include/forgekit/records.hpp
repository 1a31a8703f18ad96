#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forgekit/core.hpp"

namespace forgekit {

// One dataset sample. Fake entries must carry a mask path or explicit boxes;
// boxes are derivable from the mask when absent.
struct manifest_entry {
  std::string sample_id;
  std::string image;
  label gt = label::real;
  std::optional<std::string> mask;
  std::vector<bounding_box> boxes;
  std::string dataset = "default";

  friend bool operator==(const manifest_entry&, const manifest_entry&) = default;
};

// Externally supplied scores: p_base for the direct assessment, one score per
// probed tool. All scores live in [0,1].
struct score_record {
  std::string sample_id;
  label gt = label::real;
  double p_base = 0.0;
  std::map<tool_id, double> tool_scores;

  friend bool operator==(const score_record&, const score_record&) = default;
};

// Model output under evaluation. mask is a path to a grayscale PNG.
struct prediction_record {
  std::string sample_id;
  label pred = label::real;
  std::vector<bounding_box> boxes;
  std::optional<std::string> mask;

  friend bool operator==(const prediction_record&, const prediction_record&) = default;
};

// Raw completion text to be scored; turn_texts carries any intermediate turns
// so tool usage is detectable beyond the completion itself.
struct completion_record {
  std::string sample_id;
  std::string completion;
  std::vector<std::string> turn_texts;

  friend bool operator==(const completion_record&, const completion_record&) = default;
};

manifest_entry manifest_entry_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const manifest_entry& e);

score_record score_record_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const score_record& s);

prediction_record prediction_record_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const prediction_record& p);

completion_record completion_record_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const completion_record& c);

// JSONL: one record per non-empty line. Parse errors carry the 1-based line.
std::vector<manifest_entry> load_manifest(const std::filesystem::path& path);
std::vector<score_record> load_scores(const std::filesystem::path& path);
std::vector<prediction_record> load_predictions(const std::filesystem::path& path);
std::vector<completion_record> load_completions(const std::filesystem::path& path);

void save_manifest(const std::vector<manifest_entry>& entries,
                   const std::filesystem::path& path);

}  // namespace forgekit
