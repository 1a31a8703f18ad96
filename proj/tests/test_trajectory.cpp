#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "forgekit/error.hpp"
#include "forgekit/evalkit.hpp"
#include "forgekit/image_io.hpp"
#include "forgekit/trajectory.hpp"
#include "support/fixtures.hpp"

using namespace forgekit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& leaf) {
  const auto dir = fs::temp_directory_path() / "forgekit_trajectory_test" / leaf;
  fs::create_directories(dir);
  return dir;
}

score_record make_score(std::string id, label gt, double p_base,
                        std::map<tool_id, double> tools) {
  score_record s;
  s.sample_id = std::move(id);
  s.gt = gt;
  s.p_base = p_base;
  s.tool_scores = std::move(tools);
  return s;
}

// Path enumeration recomputed from the raw scores by set union, so duplicate
// collapse and prefix structure are checked against an independent formulation.
struct sample_expect {
  bool rejected = false;
  std::set<std::vector<tool_id>> paths;
};

sample_expect enumerate_paths_oracle(const score_record& s, double tau,
                                     int k_fake, int k_real) {
  double best = s.p_base;
  for (const auto& [id, v] : s.tool_scores) best = std::max(best, v);
  if (best < tau) return {.rejected = true, .paths = {}};

  std::vector<tool_id> order;
  for (const auto& [id, v] : s.tool_scores)
    if (v > std::max(s.p_base, tau)) order.push_back(id);
  std::sort(order.begin(), order.end(), [&](tool_id a, tool_id b) {
    const double sa = s.tool_scores.at(a);
    const double sb = s.tool_scores.at(b);
    if (sa != sb) return sa > sb;
    return static_cast<int>(a) < static_cast<int>(b);
  });
  const std::size_t k =
      static_cast<std::size_t>(s.gt == label::fake ? k_fake : k_real);
  if (order.size() > k) order.resize(k);

  sample_expect out;
  out.paths.insert(std::vector<tool_id>{});
  for (const tool_id t : order) out.paths.insert({t});
  for (std::size_t len = 1; len <= order.size(); ++len)
    out.paths.insert(std::vector<tool_id>(order.begin(), order.begin() + len));
  return out;
}

std::vector<tool_id> extract_path(const trajectory& t) {
  std::vector<tool_id> path;
  for (const auto& tn : t.turns)
    for (const auto& call : tn.tool_calls) path.push_back(call.name);
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("select_and_rank keeps tools strictly above max(p_base, tau)") {
  const auto s = make_score("a", label::fake, 0.3,
                            {{tool_id::ela, 0.7},
                             {tool_id::fft, 0.4},
                             {tool_id::npp, 0.6}});
  const auto oc = select_and_rank(s, {.tau = 0.5});
  CHECK_FALSE(oc.rejected);
  CHECK(oc.ranked == std::vector<tool_id>{tool_id::ela, tool_id::npp});
}

TEST_CASE("select_and_rank rejects when every score stays below tau") {
  const auto s = make_score("a", label::real, 0.2,
                            {{tool_id::ela, 0.4},
                             {tool_id::fft, 0.1},
                             {tool_id::npp, 0.35},
                             {tool_id::zoom_in, 0.4}});
  const auto oc = select_and_rank(s, {.tau = 0.5});
  CHECK(oc.rejected);
  CHECK(oc.ranked.empty());
}

TEST_CASE("strong baseline with no better tool keeps the sample, empty ranking") {
  const auto s = make_score("a", label::real, 0.9,
                            {{tool_id::ela, 0.9},
                             {tool_id::fft, 0.85},
                             {tool_id::zoom_in, 0.2}});
  const auto oc = select_and_rank(s, {.tau = 0.5});
  CHECK_FALSE(oc.rejected);
  CHECK(oc.ranked.empty());
}

TEST_CASE("tau boundary is strict for rejection and for validity") {
  // max score exactly tau: kept, but a tool at tau never outranks it
  auto s = make_score("a", label::real, 0.5, {{tool_id::ela, 0.5}});
  auto oc = select_and_rank(s, {.tau = 0.5});
  CHECK_FALSE(oc.rejected);
  CHECK(oc.ranked.empty());

  s = make_score("a", label::real, 0.0, {{tool_id::ela, 0.5}});
  oc = select_and_rank(s, {.tau = 0.5});
  CHECK_FALSE(oc.rejected);
  CHECK(oc.ranked.empty());

  s.tool_scores[tool_id::ela] = std::nextafter(0.5, 1.0);
  oc = select_and_rank(s, {.tau = 0.5});
  CHECK(oc.ranked == std::vector<tool_id>{tool_id::ela});
}

TEST_CASE("score ties break by tool id order") {
  const auto s = make_score("a", label::fake, 0.1,
                            {{tool_id::ela, 0.8},
                             {tool_id::fft, 0.8},
                             {tool_id::npp, 0.8},
                             {tool_id::zoom_in, 0.8}});
  const auto oc = select_and_rank(s, {.tau = 0.5});
  CHECK(oc.ranked == std::vector<tool_id>{tool_id::ela, tool_id::fft,
                                          tool_id::npp, tool_id::zoom_in});

  const auto mixed = make_score("a", label::fake, 0.1,
                                {{tool_id::ela, 0.7},
                                 {tool_id::fft, 0.9},
                                 {tool_id::npp, 0.7},
                                 {tool_id::zoom_in, 0.9}});
  CHECK(select_and_rank(mixed, {.tau = 0.5}).ranked ==
        std::vector<tool_id>{tool_id::fft, tool_id::zoom_in, tool_id::ela,
                             tool_id::npp});
}

TEST_CASE("select_and_rank validates inputs") {
  auto s = make_score("a", label::real, 0.5, {});
  CHECK_THROWS_AS(select_and_rank(s, {.tau = 1.5}), error);
  CHECK_THROWS_AS(select_and_rank(s, {.tau = 0.5, .k_fake = -1}), error);
  s.p_base = 1.2;
  CHECK_THROWS_AS(select_and_rank(s), error);
  s.p_base = 0.5;
  s.tool_scores[tool_id::fft] = -0.2;
  CHECK_THROWS_AS(select_and_rank(s), error);
}

TEST_CASE("rejection happens exactly when the best score is below tau") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int iter = 0; iter < 2000; ++iter) {
    score_record s;
    s.sample_id = "r";
    s.gt = (rng() & 1) ? label::fake : label::real;
    s.p_base = unit(rng);
    for (const tool_id t : all_tools)
      if (rng() & 1) s.tool_scores[t] = unit(rng);
    const double tau = unit(rng);
    double best = s.p_base;
    for (const auto& [id, v] : s.tool_scores) best = std::max(best, v);

    const auto oc = select_and_rank(s, {.tau = tau});
    CHECK(oc.rejected == (best < tau));
    // ranking is strictly descending and every member beats max(p_base, tau)
    for (std::size_t i = 0; i < oc.ranked.size(); ++i) {
      CHECK(s.tool_scores.at(oc.ranked[i]) > std::max(s.p_base, tau));
      if (i + 1 < oc.ranked.size()) {
        const double a = s.tool_scores.at(oc.ranked[i]);
        const double b = s.tool_scores.at(oc.ranked[i + 1]);
        CHECK(a >= b);
        if (a == b)
          CHECK(static_cast<int>(oc.ranked[i]) < static_cast<int>(oc.ranked[i + 1]));
      }
    }
  }
}

TEST_CASE("raising tau only shrinks the ranking and never un-rejects") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int iter = 0; iter < 500; ++iter) {
    score_record s;
    s.sample_id = "m";
    s.gt = label::fake;
    s.p_base = unit(rng);
    for (const tool_id t : all_tools) s.tool_scores[t] = unit(rng);
    double t1 = unit(rng), t2 = unit(rng);
    if (t1 > t2) std::swap(t1, t2);

    const auto lo = select_and_rank(s, {.tau = t1});
    const auto hi = select_and_rank(s, {.tau = t2});
    if (lo.rejected) CHECK(hi.rejected);
    if (!hi.rejected && !lo.rejected) {
      const std::set<tool_id> wide(lo.ranked.begin(), lo.ranked.end());
      for (const tool_id t : hi.ranked) CHECK(wide.contains(t));
      CHECK(hi.ranked.size() <= lo.ranked.size());
    }
  }
}

TEST_CASE("synthesize_paths expands ranking into empty, singles, prefixes") {
  const selection_outcome oc{
      false, {tool_id::ela, tool_id::npp, tool_id::fft}};
  const auto plan = synthesize_paths("s", label::fake, oc, {.k_fake = 4});
  REQUIRE(plan.paths.size() == 6);
  CHECK(plan.paths[0].empty());
  CHECK(plan.paths[1] == std::vector<tool_id>{tool_id::ela});
  CHECK(plan.paths[2] == std::vector<tool_id>{tool_id::npp});
  CHECK(plan.paths[3] == std::vector<tool_id>{tool_id::fft});
  CHECK(plan.paths[4] == std::vector<tool_id>{tool_id::ela, tool_id::npp});
  CHECK(plan.paths[5] ==
        std::vector<tool_id>{tool_id::ela, tool_id::npp, tool_id::fft});
}

TEST_CASE("empty ranking yields only the direct assessment path") {
  const auto plan = synthesize_paths("s", label::real, {false, {}});
  REQUIRE(plan.paths.size() == 1);
  CHECK(plan.paths[0].empty());
}

TEST_CASE("truncation caps the ranking before expansion") {
  // 4 ranked tools, fake K=4 keeps all: 1 + 4 + 3 = 8 paths
  const selection_outcome oc{
      false, {tool_id::zoom_in, tool_id::ela, tool_id::fft, tool_id::npp}};
  CHECK(synthesize_paths("s", label::fake, oc).paths.size() == 8);

  // same ranking, real K=2: empty, [z], [e], [z,e]
  const auto plan = synthesize_paths("s", label::real, oc);
  REQUIRE(plan.paths.size() == 4);
  CHECK(plan.paths[1] == std::vector<tool_id>{tool_id::zoom_in});
  CHECK(plan.paths[2] == std::vector<tool_id>{tool_id::ela});
  CHECK(plan.paths[3] == std::vector<tool_id>{tool_id::zoom_in, tool_id::ela});
}

TEST_CASE("path count is max(1, 2 min(rank, K)) for every size pair") {
  for (int len = 0; len <= 8; ++len) {
    selection_outcome oc;
    for (int i = 0; i < len; ++i)
      oc.ranked.push_back(static_cast<tool_id>(i % 4));
    for (int k = 0; k <= 8; ++k) {
      const selection_config cfg{.tau = 0.5, .k_fake = k, .k_real = k};
      for (const label gt : {label::real, label::fake}) {
        const auto plan = synthesize_paths("s", gt, oc, cfg);
        const int kp = std::min(len, k);
        CHECK(plan.paths.size() ==
              static_cast<std::size_t>(std::max(1, 2 * kp)));
        CHECK(plan.paths.front().empty());
        if (len <= 4) {
          // real rankings never repeat a tool, so paths are distinct
          const std::set<std::vector<tool_id>> uniq(plan.paths.begin(),
                                                    plan.paths.end());
          CHECK(uniq.size() == plan.paths.size());
        }
        // every non-empty path is a singleton from, or a prefix of, the cap
        for (const auto& p : plan.paths) {
          if (p.empty()) continue;
          const bool prefix =
              p.size() <= static_cast<std::size_t>(kp) &&
              std::equal(p.begin(), p.end(), oc.ranked.begin());
          bool single = false;
          if (p.size() == 1)
            for (int i = 0; i < kp; ++i)
              if (oc.ranked[static_cast<std::size_t>(i)] == p[0]) single = true;
          CHECK((prefix || single));
        }
      }
    }
  }
}

TEST_CASE("synthesize_paths refuses rejected outcomes") {
  try {
    synthesize_paths("s", label::fake, {true, {}});
    FAIL("expected invalid_param");
  } catch (const error& e) {
    CHECK(e.code() == errc::invalid_param);
  }
}

TEST_CASE("zoom_box expands the ground-truth union by the margin") {
  // single box: 20x20 grows by 2 per side
  CHECK(zoom_box({{10, 20, 30, 40}}, 100, 100) ==
        bounding_box{8, 18, 32, 42});
  // union of two boxes first, then the margin
  CHECK(zoom_box({{10, 10, 20, 20}, {30, 30, 40, 36}}, 100, 100) ==
        bounding_box{7, 7, 43, 39});
  // clamped at the frame
  CHECK(zoom_box({{0, 0, 50, 50}}, 40, 40) == bounding_box{0, 0, 40, 40});
  // no boxes means the whole frame
  CHECK(zoom_box({}, 64, 48) == bounding_box{0, 0, 64, 48});
  // zero margin is the plain union
  CHECK(zoom_box({{5, 5, 9, 9}}, 20, 20, 0.0) == bounding_box{5, 5, 9, 9});

  CHECK_THROWS_AS(zoom_box({{5, 5, 9, 9}}, 0, 20), error);
  CHECK_THROWS_AS(zoom_box({{9, 5, 5, 9}}, 20, 20), error);
  CHECK_THROWS_AS(zoom_box({{50, 50, 60, 60}}, 20, 20), error);
}

TEST_CASE("materialize: direct assessment of a real sample") {
  const auto img = testing::textured_image(7, 100, 80, 8, 5.0);
  manifest_entry entry{"r01", "imgs/r01.png", label::real, std::nullopt, {}, "d"};
  const materialize_config cfg{temp_dir("real_direct"), 64, 0.10};

  const trajectory t = materialize_trajectory({}, entry, img, cfg);
  REQUIRE(t.turns.size() == 2);
  CHECK(t.turns[0].who == role::user);
  CHECK(t.turns[0].content ==
        "<image>Determine if this image is real or fake. If manipulation is "
        "found, highlight the tampered regions with bounding boxes.");
  CHECK(t.turns[0].images == std::vector<std::string>{"imgs/r01.png"});
  CHECK(t.turns[1].who == role::assistant);
  CHECK(t.turns[1].content == "<answer>real</answer>");
  CHECK(t.final_label == label::real);
  CHECK(t.final_boxes.empty());
  CHECK(parse_trajectory(serialize_trajectory(t)) == t);
}

TEST_CASE("materialize: one tool step on a fake sample") {
  const auto img = testing::textured_image(8, 100, 80, 8, 5.0);
  manifest_entry entry{"f01", "imgs/f01.png", label::fake, std::nullopt,
                       {{10, 20, 30, 40}}, "d"};
  const auto maps = temp_dir("fake_ela");
  const materialize_config cfg{maps, 64, 0.10};

  const trajectory t = materialize_trajectory({tool_id::ela}, entry, img, cfg);
  REQUIRE(t.turns.size() == 4);
  CHECK(t.turns[1].who == role::assistant);
  CHECK(t.turns[1].content.empty());
  REQUIRE(t.turns[1].tool_calls.size() == 1);
  CHECK(t.turns[1].tool_calls[0] == tool_call{tool_id::ela, std::nullopt});
  CHECK(t.turns[2].who == role::tool_response);
  CHECK(t.turns[2].content == "<tool_response>\n<image>\n</tool_response>");
  REQUIRE(t.turns[2].images.size() == 1);
  CHECK(t.turns[2].images[0] == (maps / "f01_ELA.png").string());

  const raster_image map = load_image(maps / "f01_ELA.png");
  CHECK(map.width == 100);
  CHECK(map.height == 80);

  CHECK(t.turns[3].content.find("<|box_start|>10,20,30,40<|box_end|>") !=
        std::string::npos);
  CHECK(t.turns[3].content ==
        "<answer>fake, <|box_start|>10,20,30,40<|box_end|></answer>");
  CHECK(t.final_label == label::fake);
  CHECK(t.final_boxes == entry.boxes);
  CHECK(parse_trajectory(serialize_trajectory(t)) == t);
}

TEST_CASE("materialize: zoom call carries the expanded ground-truth union") {
  const auto img = testing::textured_image(9, 100, 80, 8, 5.0);
  manifest_entry entry{"f02", "imgs/f02.png", label::fake, std::nullopt,
                       {{10, 20, 30, 40}}, "d"};
  const auto maps = temp_dir("fake_zoom");
  const materialize_config cfg{maps, 64, 0.10};

  const trajectory t =
      materialize_trajectory({tool_id::zoom_in}, entry, img, cfg);
  REQUIRE(t.turns.size() == 4);
  REQUIRE(t.turns[1].tool_calls.size() == 1);
  // recomputed by hand: 20x20 box, 10% margin is 2 per side
  const int ex1 = 10 - 2, ey1 = 20 - 2, ex2 = 30 + 2, ey2 = 40 + 2;
  CHECK(t.turns[1].tool_calls[0].name == tool_id::zoom_in);
  REQUIRE(t.turns[1].tool_calls[0].bbox.has_value());
  CHECK(*t.turns[1].tool_calls[0].bbox ==
        std::array<int, 4>{ex1, ey1, ex2, ey2});

  // 24x24 crop upscaled so the shorter side reaches min_side
  const raster_image crop = load_image(maps / "f02_zoom_in.png");
  CHECK(crop.width == 64);
  CHECK(crop.height == 64);
}

TEST_CASE("materialize: zoom on a real sample inspects the whole frame") {
  const auto img = testing::textured_image(10, 60, 50, 8, 5.0);
  manifest_entry entry{"r02", "imgs/r02.png", label::real, std::nullopt, {}, "d"};
  const materialize_config cfg{temp_dir("real_zoom"), 48, 0.10};

  const trajectory t =
      materialize_trajectory({tool_id::zoom_in}, entry, img, cfg);
  CHECK(*t.turns[1].tool_calls[0].bbox == std::array<int, 4>{0, 0, 60, 50});
  CHECK(t.turns[3].content == "<answer>real</answer>");
}

TEST_CASE("materialize: multi-tool prefix emits one response turn per tool") {
  const auto img = testing::textured_image(11, 64, 64, 8, 5.0);
  manifest_entry entry{"f03", "imgs/f03.png", label::fake, std::nullopt,
                       {{8, 8, 24, 24}}, "d"};
  const auto maps = temp_dir("fake_prefix");
  const materialize_config cfg{maps, 48, 0.10};

  const trajectory t = materialize_trajectory(
      {tool_id::ela, tool_id::fft, tool_id::npp}, entry, img, cfg);
  REQUIRE(t.turns.size() == 8);
  CHECK(extract_path(t) ==
        std::vector<tool_id>{tool_id::ela, tool_id::fft, tool_id::npp});
  for (const auto name : {"f03_ELA.png", "f03_FFT.png", "f03_NPP.png"})
    CHECK(fs::exists(maps / name));
  CHECK(parse_trajectory(serialize_trajectory(t)) == t);
}

TEST_CASE("materialize refuses a fake sample without boxes") {
  const auto img = testing::textured_image(12, 32, 32, 8, 5.0);
  manifest_entry entry{"f04", "imgs/f04.png", label::fake,
                       std::string("m.png"), {}, "d"};
  try {
    materialize_trajectory({}, entry, img, {temp_dir("noboxes"), 48, 0.10});
    FAIL("expected missing_gt_box");
  } catch (const error& e) {
    CHECK(e.code() == errc::missing_gt_box);
  }
}

TEST_CASE("build report json round-trips") {
  build_report r;
  r.samples_scored = 10;
  r.samples_skipped = 2;
  r.kept = 7;
  r.rejected = 3;
  r.trajectories = 30;
  r.trajectories_real = 12;
  r.trajectories_fake = 18;
  r.tool_usage = {{tool_id::ela, 9}, {tool_id::zoom_in, 4}};
  CHECK(build_report_from_json(to_json(r)) == r);
  CHECK_THROWS_AS(build_report_from_json(nlohmann::json::array()), error);
}

TEST_CASE("build_corpus: all-rejected input leaves an empty corpus") {
  const auto dir = temp_dir("all_rejected");
  const auto img_path = dir / "img.png";
  save_png(testing::textured_image(13, 48, 48, 8, 6.0), img_path);

  std::vector<manifest_entry> manifest(2);
  manifest[0] = {"a", img_path.string(), label::real, std::nullopt, {}, "d"};
  manifest[1] = {"b", img_path.string(), label::fake, std::nullopt,
                 {{8, 8, 24, 24}}, "d"};
  const std::vector<score_record> scores = {
      make_score("a", label::real, 0.2, {{tool_id::ela, 0.4}}),
      make_score("b", label::fake, 0.1, {{tool_id::fft, 0.3}}),
  };

  const auto corpus = dir / "corpus.jsonl";
  const auto rep = build_corpus(manifest, scores, corpus, {},
                                {dir / "maps", 48, 0.10});
  CHECK(rep.samples_scored == 2);
  CHECK(rep.rejected == 2);
  CHECK(rep.kept == 0);
  CHECK(rep.trajectories == 0);
  CHECK(slurp(corpus).empty());
}

TEST_CASE("build_corpus: three ranked tools on one fake sample give six lines") {
  const auto dir = temp_dir("single_fake");
  const auto img_path = dir / "img.png";
  save_png(testing::textured_image(14, 48, 48, 8, 6.0), img_path);

  const std::vector<manifest_entry> manifest = {
      {"f", img_path.string(), label::fake, std::nullopt, {{8, 8, 24, 24}}, "d"}};
  const std::vector<score_record> scores = {make_score(
      "f", label::fake, 0.3,
      {{tool_id::ela, 0.9}, {tool_id::fft, 0.8}, {tool_id::npp, 0.7}})};

  const auto corpus = dir / "corpus.jsonl";
  const auto rep =
      build_corpus(manifest, scores, corpus, {}, {dir / "maps", 48, 0.10});
  CHECK(rep.kept == 1);
  CHECK(rep.trajectories == 6);
  CHECK(rep.trajectories_fake == 6);
  CHECK(rep.trajectories_real == 0);
  CHECK(rep.tool_usage ==
        std::map<tool_id, std::int64_t>{
            {tool_id::ela, 3}, {tool_id::fft, 3}, {tool_id::npp, 2}});

  const auto lines = read_lines(corpus);
  REQUIRE(lines.size() == 6);
  std::set<std::vector<tool_id>> seen;
  for (const auto& line : lines) {
    const trajectory t = parse_trajectory(line);
    CHECK(t.sample_id == "f");
    CHECK(t.final_label == label::fake);
    seen.insert(extract_path(t));
  }
  const std::set<std::vector<tool_id>> expected = {
      {},
      {tool_id::ela},
      {tool_id::fft},
      {tool_id::npp},
      {tool_id::ela, tool_id::fft},
      {tool_id::ela, tool_id::fft, tool_id::npp}};
  CHECK(seen == expected);
}

TEST_CASE("build_corpus derives fake boxes from the mask when absent") {
  const auto dir = temp_dir("mask_fallback");
  const auto img_path = dir / "img.png";
  save_png(testing::textured_image(15, 64, 64, 8, 6.0), img_path);

  // 12x12 block at rows/cols 20..31 survives both component filters
  gray_map mask(64, 64);
  for (int y = 20; y < 32; ++y)
    for (int x = 20; x < 32; ++x) mask.at(x, y) = 1.f;
  const auto mask_path = dir / "mask.png";
  save_png(mask, mask_path);

  const std::vector<manifest_entry> manifest = {
      {"m", img_path.string(), label::fake, mask_path.string(), {}, "d"}};
  const std::vector<score_record> scores = {
      make_score("m", label::fake, 0.9, {})};

  const auto corpus = dir / "corpus.jsonl";
  build_corpus(manifest, scores, corpus, {}, {dir / "maps", 48, 0.10});
  const auto lines = read_lines(corpus);
  REQUIRE(lines.size() == 1);
  const trajectory t = parse_trajectory(lines[0]);
  CHECK(t.final_boxes == std::vector<bounding_box>{{20, 20, 32, 32}});
}

TEST_CASE("build_corpus validates score and manifest agreement") {
  const auto dir = temp_dir("mismatch");
  const auto img_path = dir / "img.png";
  save_png(testing::textured_image(16, 32, 32, 8, 6.0), img_path);
  const std::vector<manifest_entry> manifest = {
      {"a", img_path.string(), label::real, std::nullopt, {}, "d"}};

  try {
    build_corpus(manifest, {make_score("ghost", label::real, 0.9, {})},
                 dir / "c1.jsonl", {}, {dir / "maps", 48, 0.10});
    FAIL("expected manifest_mismatch");
  } catch (const error& e) {
    CHECK(e.code() == errc::manifest_mismatch);
  }

  try {
    build_corpus(manifest, {make_score("a", label::fake, 0.9, {})},
                 dir / "c2.jsonl", {}, {dir / "maps", 48, 0.10});
    FAIL("expected manifest_mismatch");
  } catch (const error& e) {
    CHECK(e.code() == errc::manifest_mismatch);
  }

  const std::vector<score_record> dup = {
      make_score("a", label::real, 0.9, {}),
      make_score("a", label::real, 0.8, {})};
  CHECK_THROWS_AS(
      build_corpus(manifest, dup, dir / "c3.jsonl", {}, {dir / "maps", 48, 0.10}),
      error);
}

TEST_CASE("build_corpus skips unscored entries and counts them") {
  const auto dir = temp_dir("skip");
  const auto img_path = dir / "img.png";
  save_png(testing::textured_image(17, 32, 32, 8, 6.0), img_path);
  const std::vector<manifest_entry> manifest = {
      {"a", img_path.string(), label::real, std::nullopt, {}, "d"},
      {"b", img_path.string(), label::real, std::nullopt, {}, "d"}};
  const std::vector<score_record> scores = {
      make_score("b", label::real, 0.9, {})};

  const auto corpus = dir / "corpus.jsonl";
  const auto rep =
      build_corpus(manifest, scores, corpus, {}, {dir / "maps", 48, 0.10});
  CHECK(rep.samples_skipped == 1);
  CHECK(rep.samples_scored == 1);
  CHECK(rep.kept == 1);
  const auto lines = read_lines(corpus);
  REQUIRE(lines.size() == 1);
  CHECK(parse_trajectory(lines[0]).sample_id == "b");
}

TEST_CASE("build_corpus is byte-deterministic across runs") {
  const auto dir = temp_dir("determinism");
  const auto img_path = dir / "img.png";
  save_png(testing::textured_image(18, 48, 48, 8, 6.0), img_path);
  const std::vector<manifest_entry> manifest = {
      {"f", img_path.string(), label::fake, std::nullopt, {{8, 8, 24, 24}}, "d"},
      {"r", img_path.string(), label::real, std::nullopt, {}, "d"}};
  const std::vector<score_record> scores = {
      make_score("f", label::fake, 0.3,
                 {{tool_id::ela, 0.9}, {tool_id::zoom_in, 0.7}}),
      make_score("r", label::real, 0.6, {{tool_id::fft, 0.8}})};

  const materialize_config mat{dir / "maps", 48, 0.10};
  const auto rep1 = build_corpus(manifest, scores, dir / "c1.jsonl", {}, mat);
  const auto rep2 = build_corpus(manifest, scores, dir / "c2.jsonl", {}, mat);
  CHECK(rep1 == rep2);
  const auto bytes1 = slurp(dir / "c1.jsonl");
  CHECK_FALSE(bytes1.empty());
  CHECK(bytes1 == slurp(dir / "c2.jsonl"));
}

TEST_CASE("scripted hundred-sample corpus matches the enumeration oracle") {
  const auto dir = temp_dir("scripted");
  const auto img_path = dir / "img.png";
  save_png(testing::textured_image(19, 48, 48, 8, 6.0), img_path);

  const double grid[] = {0.0, 0.15, 0.3, 0.45, 0.5, 0.55, 0.7, 0.85, 1.0};
  std::mt19937_64 rng(414);
  std::vector<manifest_entry> manifest;
  std::vector<score_record> scores;
  for (int i = 0; i < 100; ++i) {
    const std::string id = "s" + std::to_string(i);
    const label gt = (i % 2 == 0) ? label::real : label::fake;
    manifest_entry e{id, img_path.string(), gt, std::nullopt, {}, "d"};
    if (gt == label::fake) e.boxes = {{8, 8, 24, 24}};
    manifest.push_back(e);

    score_record s;
    s.sample_id = id;
    s.gt = gt;
    s.p_base = grid[rng() % 9];
    for (const tool_id t : all_tools)
      if (rng() % 4 != 0) s.tool_scores[t] = grid[rng() % 9];
    scores.push_back(s);
  }

  const selection_config sel{};
  const auto corpus = dir / "corpus.jsonl";
  const auto rep =
      build_corpus(manifest, scores, corpus, sel, {dir / "maps", 48, 0.10});

  build_report want;
  std::map<std::string, sample_expect> per_sample;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto ex =
        enumerate_paths_oracle(scores[i], sel.tau, sel.k_fake, sel.k_real);
    per_sample[scores[i].sample_id] = ex;
    ++want.samples_scored;
    if (ex.rejected) {
      ++want.rejected;
      continue;
    }
    ++want.kept;
    for (const auto& p : ex.paths) {
      ++want.trajectories;
      ++(manifest[i].gt == label::fake ? want.trajectories_fake
                                       : want.trajectories_real);
      for (const tool_id t : p) ++want.tool_usage[t];
    }
  }
  CHECK(rep == want);

  // the file itself: manifest order, and per sample exactly the oracle paths
  const auto lines = read_lines(corpus);
  CHECK(lines.size() == static_cast<std::size_t>(want.trajectories));
  std::map<std::string, std::set<std::vector<tool_id>>> seen;
  std::vector<std::string> id_order;
  for (const auto& line : lines) {
    const trajectory t = parse_trajectory(line);
    if (id_order.empty() || id_order.back() != t.sample_id)
      id_order.push_back(t.sample_id);
    seen[t.sample_id].insert(extract_path(t));
  }
  for (const auto& [id, ex] : per_sample) {
    if (ex.rejected) {
      CHECK_FALSE(seen.contains(id));
    } else {
      CHECK(seen[id] == ex.paths);
    }
  }
  // sample blocks appear exactly once each, in manifest order
  std::vector<std::string> expect_order;
  for (const auto& e : manifest)
    if (per_sample.contains(e.sample_id) && !per_sample[e.sample_id].rejected)
      expect_order.push_back(e.sample_id);
  CHECK(id_order == expect_order);
}
