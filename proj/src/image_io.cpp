#include "forgekit/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cmath>

namespace forgekit {

namespace {

raster_image from_bgr(const cv::Mat& bgr) {
  raster_image img(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      img.at(x, y, 0) = row[x][2];
      img.at(x, y, 1) = row[x][1];
      img.at(x, y, 2) = row[x][0];
    }
  }
  return img;
}

cv::Mat to_bgr(const raster_image& img) {
  cv::Mat bgr(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width; ++x) {
      row[x][0] = img.at(x, y, 2);
      row[x][1] = img.at(x, y, 1);
      row[x][2] = img.at(x, y, 0);
    }
  }
  return bgr;
}

}  // namespace

raster_image load_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) fail(errc::io_failure, "cannot read image " + path.string());
  return from_bgr(bgr);
}

void save_png(const raster_image& img, const std::filesystem::path& path) {
  if (img.width <= 0 || img.height <= 0)
    fail(errc::invalid_param, "empty image for " + path.string());
  if (!cv::imwrite(path.string(), to_bgr(img)))
    fail(errc::io_failure, "cannot write " + path.string());
}

void save_png(const gray_map& map, const std::filesystem::path& path) {
  if (map.width <= 0 || map.height <= 0)
    fail(errc::invalid_param, "empty map for " + path.string());
  cv::Mat m(map.height, map.width, CV_8UC1);
  for (int y = 0; y < map.height; ++y) {
    std::uint8_t* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < map.width; ++x) {
      const float v = std::min(1.f, std::max(0.f, map.at(x, y)));
      row[x] = std::uint8_t(std::lround(v * 255.f));
    }
  }
  if (!cv::imwrite(path.string(), m))
    fail(errc::io_failure, "cannot write " + path.string());
}

gray_map load_gray(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) fail(errc::io_failure, "cannot read map " + path.string());
  gray_map out(m.cols, m.rows);
  if (m.type() == CV_8UC1) {
    for (int y = 0; y < m.rows; ++y)
      for (int x = 0; x < m.cols; ++x)
        out.at(x, y) = m.at<std::uint8_t>(y, x) / 255.f;
  } else if (m.type() == CV_8UC3 || m.type() == CV_8UC4) {
    for (int y = 0; y < m.rows; ++y)
      for (int x = 0; x < m.cols; ++x) {
        const cv::Vec3b px = m.type() == CV_8UC3
                                 ? m.at<cv::Vec3b>(y, x)
                                 : cv::Vec3b(m.at<cv::Vec4b>(y, x)[0],
                                             m.at<cv::Vec4b>(y, x)[1],
                                             m.at<cv::Vec4b>(y, x)[2]);
        const double luma = 0.299 * px[2] + 0.587 * px[1] + 0.114 * px[0];
        out.at(x, y) = float(luma / 255.0);
      }
  } else {
    fail(errc::io_failure, "unsupported map depth in " + path.string());
  }
  return out;
}

std::vector<std::uint8_t> encode_jpeg(const raster_image& img, int quality) {
  if (quality < 1 || quality > 100)
    fail(errc::invalid_param, "jpeg quality must be in [1,100]");
  std::vector<std::uint8_t> bytes;
  if (!cv::imencode(".jpg", to_bgr(img), bytes,
                    {cv::IMWRITE_JPEG_QUALITY, quality}))
    fail(errc::encode_failure, "jpeg encode failed");
  return bytes;
}

raster_image decode_jpeg(const std::vector<std::uint8_t>& bytes) {
  cv::Mat bgr = cv::imdecode(bytes, cv::IMREAD_COLOR);
  if (bgr.empty()) fail(errc::encode_failure, "jpeg decode failed");
  return from_bgr(bgr);
}

}  // namespace forgekit
