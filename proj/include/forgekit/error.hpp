#pragma once

#include <stdexcept>
#include <string>

namespace forgekit {

enum class errc {
  degenerate_box,
  image_too_small,
  encode_failure,
  unknown_tool,
  bad_arguments,
  malformed_json,
  missing_answer_tag,
  missing_label_keyword,
  empty_ground_truth,
  empty_group,
  empty_input,
  shape_mismatch,
  manifest_mismatch,
  missing_gt_box,
  invalid_param,
  io_failure,
};

const char* errc_name(errc code) noexcept;

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
  throw error(code, what);
}

}  // namespace forgekit
