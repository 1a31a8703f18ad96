#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forgekit/core.hpp"

namespace forgekit {

inline constexpr std::string_view k_answer_open = "<answer>";
inline constexpr std::string_view k_answer_close = "</answer>";
inline constexpr std::string_view k_box_open = "<|box_start|>";
inline constexpr std::string_view k_box_close = "<|box_end|>";
inline constexpr std::string_view k_tool_call_open = "<tool_call>";
inline constexpr std::string_view k_tool_call_close = "</tool_call>";
inline constexpr std::string_view k_tool_response = "<tool_response>";
inline constexpr std::string_view k_image_token = "<image>";

enum class role : std::uint8_t { system, user, assistant, tool_response };

std::string to_string(role r);                 // "system" "user" "assistant" "tool"
role role_from_string(const std::string& s);   // throws malformed_json

// zoom_in carries a raw 4-int bbox; the other tools take no arguments.
struct tool_call {
  tool_id name = tool_id::ela;
  std::optional<std::array<int, 4>> bbox;

  friend bool operator==(const tool_call&, const tool_call&) = default;
};

struct turn {
  role who = role::user;
  std::string content;
  std::vector<tool_call> tool_calls;     // assistant turns only
  std::vector<std::string> images;       // one path per <image> token in content

  friend bool operator==(const turn&, const turn&) = default;
};

struct trajectory {
  std::string sample_id;
  std::vector<turn> turns;
  std::optional<label> final_label;      // present iff the last assistant turn parses
  std::vector<bounding_box> final_boxes;

  friend bool operator==(const trajectory&, const trajectory&) = default;
};

struct parsed_answer {
  label final_label = label::real;
  std::vector<bounding_box> boxes;
  bool tool_used = false;

  friend bool operator==(const parsed_answer&, const parsed_answer&) = default;
};

// First <answer>...</answer> span; "fake" beats "real", match is case-insensitive.
// Box spans with anything other than four integers, or with a degenerate shape,
// are dropped. Throws missing_answer_tag / missing_label_keyword.
parsed_answer parse_answer(const std::string& completion);

// u_t: any turn holds a <tool_call> span naming a supported tool, or any turn
// contains <tool_response>. Malformed spans never count.
bool detect_tool_usage(const std::vector<std::string>& turn_texts);

// span_json is the text between the tool_call tags.
// Throws malformed_json / unknown_tool / bad_arguments.
tool_call parse_tool_call(const std::string& span_json);

std::string render_tool_call(const tool_call& call);  // includes the tags
std::string render_answer(label verdict, const std::vector<bounding_box>& boxes);

std::string serialize_trajectory(const trajectory& t);   // one JSON line, no '\n'
trajectory parse_trajectory(const std::string& line);

}  // namespace forgekit
