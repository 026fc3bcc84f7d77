#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "protofsl/core/error.hpp"

namespace protofsl {

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // HWC, RGB order
};

// Decodes any format OpenCV understands; nullopt when the file is unreadable.
inline std::optional<RgbImage> read_rgb(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty() || bgr.type() != CV_8UC3) return std::nullopt;
  RgbImage img;
  img.width = static_cast<std::size_t>(bgr.cols);
  img.height = static_cast<std::size_t>(bgr.rows);
  img.pixels.resize(img.width * img.height * 3);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    std::uint8_t* dst = img.pixels.data() + static_cast<std::size_t>(y) * img.width * 3;
    for (int x = 0; x < bgr.cols; ++x) {
      dst[3 * x + 0] = row[x][2];
      dst[3 * x + 1] = row[x][1];
      dst[3 * x + 2] = row[x][0];
    }
  }
  return img;
}

// Lossless write; the format follows the extension (.png recommended).
inline void write_rgb(const std::filesystem::path& path, std::size_t width, std::size_t height,
                      const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != width * height * 3) throw ValidationError("write_rgb: pixel buffer does not match dimensions");
  cv::Mat bgr(static_cast<int>(height), static_cast<int>(width), CV_8UC3);
  for (std::size_t y = 0; y < height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
    const std::uint8_t* src = pixels.data() + y * width * 3;
    for (std::size_t x = 0; x < width; ++x) row[x] = cv::Vec3b(src[3 * x + 2], src[3 * x + 1], src[3 * x]);
  }
  if (!cv::imwrite(path.string(), bgr)) throw RuntimeFailure("cannot write image " + path.string());
}

}  // namespace protofsl
