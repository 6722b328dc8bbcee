#pragma once

#include <filesystem>
#include <vector>

#include "depthprompt/raster.hpp"

namespace dp {

enum class RasterFormat {
  kFloat32Raster,  // .dpr container, see below
  kPng16Mm,        // 16-bit grayscale PNG, value = round(depth_m * 1000)
};

// .dpr container:
//   magic "DPR1" (4 bytes), version byte, 3 reserved zero bytes,
//   height (uint32 LE), width (uint32 LE),
//   version 1: height*width float32 LE, row-major, meters, 0 = invalid
//   version 2: channel count (uint32 LE), then channels * height * width
//              float32 LE, channel-major, row-major within each channel
DepthMap read_raster(const std::filesystem::path& path,
                     RasterFormat format = RasterFormat::kFloat32Raster);
void write_raster(const DepthMap& raster, const std::filesystem::path& path,
                  RasterFormat format = RasterFormat::kFloat32Raster);

std::vector<Raster<float>> read_planes(const std::filesystem::path& path);
void write_planes(const std::vector<Raster<float>>& planes,
                  const std::filesystem::path& path);

Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path);

// 8-bit RGB PNG writer used for report plots. `rgb` holds 3 planes in [0,1].
void write_png_rgb8(const std::vector<Raster<float>>& rgb,
                    const std::filesystem::path& path);

}  // namespace dp
