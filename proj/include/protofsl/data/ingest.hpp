#pragma once

#include <algorithm>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "protofsl/core/error.hpp"
#include "protofsl/data/image_io.hpp"
#include "protofsl/data/types.hpp"

namespace protofsl {

struct IngestWarning {
  std::string path;
  std::string reason;
};

struct IngestResult {
  std::vector<SourceImage> images;
  std::vector<IngestWarning> warnings;
};

// Reads <root>/<view>/<class_key>/<image files>. Class comes from the
// directory name; an unknown class directory is a hard error, an undecodable
// or undersized file only a warning. Output is ordered by relative path.
inline IngestResult ingest_images(const std::filesystem::path& root, View view, std::size_t min_side = kPatchSize) {
  namespace fs = std::filesystem;
  IngestResult result;
  const fs::path view_dir = root / to_string(view);
  if (!fs::is_directory(view_dir)) {
    result.warnings.push_back({view_dir.string(), "view directory not found; no images ingested"});
    return result;
  }
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(view_dir)) {
    if (entry.is_directory()) {
      parse_class(entry.path().filename().string());
      class_dirs.push_back(entry.path());
    } else {
      result.warnings.push_back({entry.path().string(), "not a class directory; ignored"});
    }
  }
  std::vector<fs::path> files;
  for (const auto& dir : class_dirs) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const std::string rel = fs::relative(file, root).generic_string();
    auto decoded = read_rgb(file);
    if (!decoded) {
      result.warnings.push_back({file.string(), "unreadable or not an RGB image; skipped"});
      continue;
    }
    if (decoded->width < min_side || decoded->height < min_side) {
      result.warnings.push_back({file.string(), "smaller than " + std::to_string(min_side) + " pixels; skipped"});
      continue;
    }
    SourceImage img;
    img.image_id = rel;
    img.class_key = parse_class(file.parent_path().filename().string());
    img.view = view;
    img.width = decoded->width;
    img.height = decoded->height;
    img.pixels = std::make_shared<const std::vector<std::uint8_t>>(std::move(decoded->pixels));
    result.images.push_back(std::move(img));
  }
  if (result.images.empty()) result.warnings.push_back({view_dir.string(), "no images found"});
  return result;
}

}  // namespace protofsl
