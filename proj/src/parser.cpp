#include "forgekit/parser.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>

namespace forgekit {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Runs of [-]?digits anywhere in the text, in order.
std::vector<long long> extract_ints(std::string_view s) {
  std::vector<long long> out;
  size_t i = 0;
  while (i < s.size()) {
    if (std::isdigit(static_cast<unsigned char>(s[i])) ||
        (s[i] == '-' && i + 1 < s.size() &&
         std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      size_t j = i + (s[i] == '-' ? 1 : 0);
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      long long v = 0;
      auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + j, v);
      if (ec == std::errc() && ptr == s.data() + j) out.push_back(v);
      // overflow: poison the list so the span is rejected as malformed
      else out.push_back(std::numeric_limits<long long>::min());
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

std::optional<bounding_box> box_from_span(std::string_view inner) {
  const auto ints = extract_ints(inner);
  if (ints.size() != 4) return std::nullopt;
  for (long long v : ints)
    if (v < 0 || v > std::numeric_limits<int>::max()) return std::nullopt;
  bounding_box b{int(ints[0]), int(ints[1]), int(ints[2]), int(ints[3])};
  if (!box_valid(b)) return std::nullopt;  // dropped, never swapped
  return b;
}

struct span_scan {
  std::string cleaned;
  std::vector<std::string> spans;
};

// Pulls every open..close span out of text. A span eats one '\n' immediately
// before its open tag, which is the exact inverse of how rendering joins them.
span_scan extract_spans(std::string_view text, std::string_view open,
                        std::string_view close) {
  span_scan out;
  size_t pos = 0;
  while (true) {
    const size_t a = text.find(open, pos);
    if (a == std::string_view::npos) break;
    const size_t inner = a + open.size();
    const size_t b = text.find(close, inner);
    if (b == std::string_view::npos) break;
    size_t cut = a;
    if (cut > pos && text[cut - 1] == '\n') --cut;
    out.cleaned.append(text.substr(pos, cut - pos));
    out.spans.emplace_back(text.substr(inner, b - inner));
    pos = b + close.size();
  }
  out.cleaned.append(text.substr(pos));
  return out;
}

json parse_json_or_fail(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(errc::malformed_json, "unparseable tool call");
  return j;
}

}  // namespace

std::string to_string(role r) {
  switch (r) {
    case role::system: return "system";
    case role::user: return "user";
    case role::assistant: return "assistant";
    case role::tool_response: return "tool";
  }
  return "?";
}

role role_from_string(const std::string& s) {
  if (s == "system") return role::system;
  if (s == "user") return role::user;
  if (s == "assistant") return role::assistant;
  if (s == "tool") return role::tool_response;
  fail(errc::malformed_json, "unknown role \"" + s + "\"");
}

parsed_answer parse_answer(const std::string& completion) {
  const size_t open = completion.find(k_answer_open);
  if (open == std::string::npos)
    fail(errc::missing_answer_tag, "no <answer> tag");
  const size_t start = open + k_answer_open.size();
  const size_t close = completion.find(k_answer_close, start);
  if (close == std::string::npos)
    fail(errc::missing_answer_tag, "unterminated answer span");
  const std::string_view span =
      std::string_view(completion).substr(start, close - start);

  parsed_answer out;
  const std::string low = lowercase(span);
  if (low.find("fake") != std::string::npos) {
    out.final_label = label::fake;
  } else if (low.find("real") != std::string::npos) {
    out.final_label = label::real;
  } else {
    fail(errc::missing_label_keyword, "answer span names neither label");
  }

  size_t pos = 0;
  while (true) {
    const size_t a = span.find(k_box_open, pos);
    if (a == std::string_view::npos) break;
    const size_t inner = a + k_box_open.size();
    const size_t b = span.find(k_box_close, inner);
    if (b == std::string_view::npos) break;
    if (auto box = box_from_span(span.substr(inner, b - inner)))
      out.boxes.push_back(*box);
    pos = b + k_box_close.size();
  }
  return out;
}

bool detect_tool_usage(const std::vector<std::string>& turn_texts) {
  for (const auto& text : turn_texts) {
    if (text.find(k_tool_response) != std::string::npos) return true;
    const auto scan = extract_spans(text, k_tool_call_open, k_tool_call_close);
    for (const auto& span : scan.spans) {
      json j = json::parse(span, nullptr, false);
      if (j.is_discarded() || !j.is_object()) continue;
      const auto it = j.find("name");
      if (it == j.end() || !it->is_string()) continue;
      const std::string name = it->get<std::string>();
      const bool known =
          std::any_of(std::begin(all_tools), std::end(all_tools),
                      [&](tool_id t) { return name == to_string(t); });
      if (known) return true;
    }
  }
  return false;
}

tool_call parse_tool_call(const std::string& span_json) {
  json j = parse_json_or_fail(span_json);
  if (!j.is_object()) fail(errc::malformed_json, "tool call is not an object");
  const auto name_it = j.find("name");
  if (name_it == j.end() || !name_it->is_string())
    fail(errc::malformed_json, "tool call has no name");
  const std::string name = name_it->get<std::string>();
  tool_call out;
  out.name = tool_from_string(name);  // throws unknown_tool

  json args = json::object();
  if (const auto it = j.find("arguments"); it != j.end()) {
    if (!it->is_object()) fail(errc::bad_arguments, "arguments must be an object");
    args = *it;
  }

  if (out.name == tool_id::zoom_in) {
    const auto bb = args.find("bbox");
    if (bb == args.end() || !bb->is_array() || bb->size() != 4)
      fail(errc::bad_arguments, "zoom_in needs a 4-integer bbox");
    std::array<int, 4> vals{};
    for (size_t i = 0; i < 4; ++i) {
      const json& v = (*bb)[i];
      if (!v.is_number_integer())
        fail(errc::bad_arguments, "bbox entries must be integers");
      const auto wide = v.get<long long>();
      if (wide < std::numeric_limits<int>::min() ||
          wide > std::numeric_limits<int>::max())
        fail(errc::bad_arguments, "bbox entry out of range");
      vals[i] = int(wide);
    }
    out.bbox = vals;
  } else if (!args.empty()) {
    fail(errc::bad_arguments, to_string(out.name) + " takes no arguments");
  }
  return out;
}

std::string render_tool_call(const tool_call& call) {
  ordered_json args = ordered_json::object();
  if (call.name == tool_id::zoom_in) {
    if (!call.bbox) fail(errc::bad_arguments, "zoom_in call without bbox");
    args["bbox"] = *call.bbox;
  }
  ordered_json j{{"name", to_string(call.name)}, {"arguments", args}};
  return std::string(k_tool_call_open) + j.dump() + std::string(k_tool_call_close);
}

std::string render_answer(label verdict, const std::vector<bounding_box>& boxes) {
  std::string out(k_answer_open);
  if (verdict == label::real) {
    out += "real";
  } else {
    out += "fake";
    for (const auto& b : boxes) {
      out += ", ";
      out += k_box_open;
      out += std::to_string(b.x1) + "," + std::to_string(b.y1) + "," +
             std::to_string(b.x2) + "," + std::to_string(b.y2);
      out += k_box_close;
    }
  }
  out += k_answer_close;
  return out;
}

std::string serialize_trajectory(const trajectory& t) {
  ordered_json rec;
  rec["sample_id"] = t.sample_id;
  ordered_json messages = ordered_json::array();
  ordered_json images = ordered_json::array();
  for (const auto& tn : t.turns) {
    std::string content = tn.content;
    for (const auto& call : tn.tool_calls) {
      const std::string span = render_tool_call(call);
      if (content.empty())
        content = span;
      else
        content += "\n" + span;
    }
    messages.push_back({{"role", to_string(tn.who)}, {"content", content}});
    for (const auto& path : tn.images) images.push_back(path);
  }
  rec["messages"] = std::move(messages);
  rec["images"] = std::move(images);
  return rec.dump();
}

trajectory parse_trajectory(const std::string& line) {
  json rec = json::parse(line, nullptr, false);
  if (rec.is_discarded() || !rec.is_object())
    fail(errc::malformed_json, "trajectory line is not a JSON object");
  trajectory t;
  if (const auto it = rec.find("sample_id"); it != rec.end() && it->is_string())
    t.sample_id = it->get<std::string>();
  else
    fail(errc::malformed_json, "trajectory needs a string sample_id");

  const auto msgs = rec.find("messages");
  if (msgs == rec.end() || !msgs->is_array())
    fail(errc::malformed_json, "trajectory needs a messages array");

  std::vector<std::string> images;
  if (const auto it = rec.find("images"); it != rec.end()) {
    if (!it->is_array()) fail(errc::malformed_json, "images must be an array");
    for (const json& v : *it) {
      if (!v.is_string()) fail(errc::malformed_json, "image entries must be strings");
      images.push_back(v.get<std::string>());
    }
  }

  size_t img_next = 0;
  for (const json& m : *msgs) {
    if (!m.is_object() || !m.contains("role") || !m.contains("content") ||
        !m["role"].is_string() || !m["content"].is_string())
      fail(errc::malformed_json, "message needs string role and content");
    turn tn;
    tn.who = role_from_string(m["role"].get<std::string>());
    const std::string raw = m["content"].get<std::string>();

    if (tn.who == role::assistant) {
      auto scan = extract_spans(raw, k_tool_call_open, k_tool_call_close);
      tn.content = std::move(scan.cleaned);
      for (const auto& span : scan.spans)
        tn.tool_calls.push_back(parse_tool_call(span));
    } else {
      tn.content = raw;
    }

    size_t count = 0;
    for (size_t pos = raw.find(k_image_token); pos != std::string::npos;
         pos = raw.find(k_image_token, pos + k_image_token.size()))
      ++count;
    for (size_t i = 0; i < count; ++i) {
      if (img_next >= images.size())
        fail(errc::malformed_json, "fewer images than <image> tokens");
      tn.images.push_back(images[img_next++]);
    }
    t.turns.push_back(std::move(tn));
  }
  if (img_next != images.size())
    fail(errc::malformed_json, "more images than <image> tokens");

  for (auto it = t.turns.rbegin(); it != t.turns.rend(); ++it) {
    if (it->who != role::assistant) continue;
    try {
      parsed_answer ans = parse_answer(it->content);
      t.final_label = ans.final_label;
      t.final_boxes = std::move(ans.boxes);
    } catch (const error&) {
    }
    break;
  }
  return t;
}

}  // namespace forgekit
