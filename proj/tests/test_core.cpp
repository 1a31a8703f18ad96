#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "forgekit/core.hpp"

using namespace forgekit;

namespace {

// Counts covered grid cells directly; exact because both sides divide the same
// integers.
double iou_pixel_oracle(const bounding_box& a, const bounding_box& b, int w, int h) {
  long long inter = 0, uni = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool in_a = x >= a.x1 && x < a.x2 && y >= a.y1 && y < a.y2;
      const bool in_b = x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2;
      inter += (in_a && in_b) ? 1 : 0;
      uni += (in_a || in_b) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

bounding_box random_box(std::mt19937& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi - 1);
  int x1 = d(rng), y1 = d(rng);
  std::uniform_int_distribution<int> dx(x1 + 1, hi), dy(y1 + 1, hi);
  return {x1, y1, dx(rng), dy(rng)};
}

}  // namespace

TEST_CASE("box validity and area") {
  CHECK(box_valid({0, 0, 1, 1}));
  CHECK(box_valid({10, 20, 30, 40}));
  CHECK_FALSE(box_valid({0, 0, 0, 1}));
  CHECK_FALSE(box_valid({5, 5, 3, 9}));
  CHECK_FALSE(box_valid({-1, 0, 4, 4}));
  CHECK(box_area({10, 20, 30, 40}) == 400);
  CHECK(box_area({0, 0, 1, 1}) == 1);
  CHECK_THROWS_AS(make_box(4, 4, 4, 8), error);
  try {
    make_box(0, 0, 0, 0);
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::degenerate_box);
  }
}

TEST_CASE("box_iou pinned values") {
  bounding_box a{0, 0, 10, 10};
  CHECK(box_iou(a, a) == 1.0);
  CHECK(box_iou(a, {20, 20, 30, 30}) == 0.0);
  CHECK(box_iou(a, {10, 0, 20, 10}) == 0.0);  // edge-adjacent, exclusive bound
  bounding_box b{5, 0, 15, 10};
  CHECK(box_iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(box_iou(a, b) == iou_pixel_oracle(a, b, 20, 10));
  CHECK(box_iou(a, b) == box_iou(b, a));
}

TEST_CASE("box_iou agrees with pixel-count oracle on random boxes") {
  std::mt19937 rng(1234);
  for (int i = 0; i < 2000; ++i) {
    bounding_box a = random_box(rng, 0, 32);
    bounding_box b = random_box(rng, 0, 32);
    const double got = box_iou(a, b);
    const double want = iou_pixel_oracle(a, b, 33, 33);
    CHECK(got == want);
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
    CHECK(box_iou(a, b) == box_iou(b, a));
  }
}

TEST_CASE("clamp_box") {
  CHECK(clamp_box({-5, -5, 10, 10}, 20, 20) == bounding_box{0, 0, 10, 10});
  CHECK(clamp_box({5, 5, 50, 50}, 20, 20) == bounding_box{5, 5, 20, 20});
  CHECK(clamp_box({0, 0, 20, 20}, 20, 20) == bounding_box{0, 0, 20, 20});
  CHECK_THROWS_AS(clamp_box({30, 30, 40, 40}, 20, 20), error);
  CHECK_THROWS_AS(clamp_box({-10, 0, 0, 5}, 20, 20), error);
  try {
    clamp_box({25, 0, 40, 5}, 20, 20);
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::degenerate_box);
  }
}

TEST_CASE("enum string round-trips") {
  CHECK(label_from_string("real") == label::real);
  CHECK(label_from_string("fake") == label::fake);
  CHECK(to_string(label::fake) == "fake");
  CHECK_THROWS_AS(label_from_string("Fake"), error);
  CHECK(tool_from_string("ELA") == tool_id::ela);
  CHECK(tool_from_string("FFT") == tool_id::fft);
  CHECK(tool_from_string("NPP") == tool_id::npp);
  CHECK(tool_from_string("zoom_in") == tool_id::zoom_in);
  for (tool_id t : all_tools) CHECK(tool_from_string(to_string(t)) == t);
  try {
    tool_from_string("DCT");
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::unknown_tool);
  }
}

TEST_CASE("raster image basics") {
  raster_image img = raster_image::filled(4, 3, 10, 20, 30);
  CHECK(img.data.size() == 4u * 3u * 3u);
  CHECK(img.at(3, 2, 0) == 10);
  CHECK(img.at(0, 0, 2) == 30);
  img.at(1, 1, 1) = 99;
  CHECK(img.at(1, 1, 1) == 99);
}
