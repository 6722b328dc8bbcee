#include "depthprompt/raster_io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

static_assert(std::endian::native == std::endian::little,
              "raster container assumes a little-endian host");

namespace dp {
namespace {

constexpr char kMagic[4] = {'D', 'P', 'R', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

// Reads the common .dpr header; returns the version byte.
int read_header(std::istream& is, const std::filesystem::path& path,
                std::uint32_t* height, std::uint32_t* width) {
  char magic[4] = {};
  std::uint8_t version = 0;
  std::uint8_t reserved[3] = {};
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&version), 1);
  is.read(reinterpret_cast<char*>(reserved), 3);
  *height = read_u32(is);
  *width = read_u32(is);
  if (!is)
    throw FormatError("read_raster: truncated header in " + path.string());
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("read_raster: bad magic in " + path.string());
  if (*height == 0 || *width == 0)
    throw FormatError("read_raster: zero dimension in " + path.string());
  return version;
}

void write_header(std::ostream& os, std::uint8_t version, std::uint32_t height,
                  std::uint32_t width) {
  os.write(kMagic, 4);
  char v = static_cast<char>(version);
  os.write(&v, 1);
  const char zeros[3] = {0, 0, 0};
  os.write(zeros, 3);
  write_u32(os, height);
  write_u32(os, width);
}

Raster<float> read_plane(std::istream& is, int height, int width,
                         const std::filesystem::path& path) {
  std::vector<float> row(width);
  Raster<float> out(height, width);
  for (int r = 0; r < height; ++r) {
    is.read(reinterpret_cast<char*>(row.data()), width * sizeof(float));
    if (!is)
      throw FormatError("read_raster: truncated payload in " + path.string());
    for (int c = 0; c < width; ++c) out(r, c) = row[c];
  }
  return out;
}

void write_plane(std::ostream& os, const Raster<float>& plane) {
  std::vector<float> row(plane.cols());
  for (Eigen::Index r = 0; r < plane.rows(); ++r) {
    for (Eigen::Index c = 0; c < plane.cols(); ++c)
      row[c] = plane(r, c);
    os.write(reinterpret_cast<const char*>(row.data()),
             row.size() * sizeof(float));
  }
}

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

DepthMap read_png16(const std::filesystem::path& path) {
  PngReadCloser h;
  h.fp = std::fopen(path.string().c_str(), "rb");
  if (!h.fp) throw IoError("read_raster: cannot open " + path.string());
  h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  h.info = png_create_info_struct(h.png);
  if (!h.png || !h.info) throw IoError("read_raster: libpng init failed");
  if (setjmp(png_jmpbuf(h.png)))
    throw FormatError("read_raster: malformed PNG " + path.string());
  png_init_io(h.png, h.fp);
  png_read_info(h.png, h.info);

  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  png_get_IHDR(h.png, h.info, &width, &height, &bit_depth, &color_type,
               nullptr, nullptr, nullptr);
  if (bit_depth != 16 || color_type != PNG_COLOR_TYPE_GRAY)
    throw FormatError("read_raster: expected 16-bit grayscale PNG, got " +
                      path.string());
  png_set_swap(h.png);  // PNG stores big-endian samples
  png_read_update_info(h.png, h.info);

  DepthMap out(height, width);
  std::vector<std::uint16_t> row(width);
  for (png_uint_32 r = 0; r < height; ++r) {
    png_read_row(h.png, reinterpret_cast<png_bytep>(row.data()), nullptr);
    for (png_uint_32 c = 0; c < width; ++c)
      out(r, c) = static_cast<float>(row[c]) / 1000.0f;
  }
  png_read_end(h.png, nullptr);
  return out;
}

void write_png16(const DepthMap& raster, const std::filesystem::path& path) {
  PngWriteCloser h;
  h.fp = std::fopen(path.string().c_str(), "wb");
  if (!h.fp) throw IoError("write_raster: cannot open " + path.string());
  h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  h.info = png_create_info_struct(h.png);
  if (!h.png || !h.info) throw IoError("write_raster: libpng init failed");
  if (setjmp(png_jmpbuf(h.png)))
    throw IoError("write_raster: libpng failure on " + path.string());
  png_init_io(h.png, h.fp);
  png_set_IHDR(h.png, h.info, raster.cols(), raster.rows(), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(h.png, h.info);
  png_set_swap(h.png);

  std::vector<std::uint16_t> row(raster.cols());
  for (Eigen::Index r = 0; r < raster.rows(); ++r) {
    for (Eigen::Index c = 0; c < raster.cols(); ++c) {
      double mm = std::round(static_cast<double>(raster(r, c)) * 1000.0);
      if (mm < 0.0) mm = 0.0;
      if (mm > 65535.0) mm = 65535.0;
      row[c] = static_cast<std::uint16_t>(mm);
    }
    png_write_row(h.png, reinterpret_cast<png_bytep>(row.data()));
  }
  png_write_end(h.png, nullptr);
}

}  // namespace

DepthMap read_raster(const std::filesystem::path& path, RasterFormat format) {
  if (format == RasterFormat::kPng16Mm) return read_png16(path);

  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_raster: cannot open " + path.string());
  std::uint32_t height = 0, width = 0;
  int version = read_header(is, path, &height, &width);
  if (version != 1)
    throw FormatError("read_raster: version " + std::to_string(version) +
                      " is not a single-channel raster: " + path.string());
  DepthMap out = read_plane(is, height, width, path);
  require_depth_payload(out, "read_raster");
  return out;
}

void write_raster(const DepthMap& raster, const std::filesystem::path& path,
                  RasterFormat format) {
  require_depth_payload(raster, "write_raster");
  if (raster.rows() < 1 || raster.cols() < 1)
    throw ContractError("write_raster: empty raster");
  if (format == RasterFormat::kPng16Mm) {
    write_png16(raster, path);
    return;
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("write_raster: cannot open " + path.string());
  write_header(os, 1, static_cast<std::uint32_t>(raster.rows()),
               static_cast<std::uint32_t>(raster.cols()));
  write_plane(os, raster);
  if (!os) throw IoError("write_raster: short write to " + path.string());
}

std::vector<Raster<float>> read_planes(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_planes: cannot open " + path.string());
  std::uint32_t height = 0, width = 0;
  int version = read_header(is, path, &height, &width);
  std::uint32_t channels = 1;
  if (version == 2) {
    channels = read_u32(is);
    if (!is || channels == 0)
      throw FormatError("read_planes: bad channel count in " + path.string());
  } else if (version != 1) {
    throw FormatError("read_planes: unsupported version in " + path.string());
  }
  std::vector<Raster<float>> planes;
  planes.reserve(channels);
  for (std::uint32_t ch = 0; ch < channels; ++ch) {
    planes.push_back(read_plane(is, height, width, path));
    if (!planes.back().isFinite().all())
      throw DataError("read_planes: non-finite value in " + path.string());
  }
  return planes;
}

void write_planes(const std::vector<Raster<float>>& planes,
                  const std::filesystem::path& path) {
  if (planes.empty()) throw ContractError("write_planes: no channels");
  for (const auto& p : planes)
    require_same_shape(p, planes[0], "write_planes");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("write_planes: cannot open " + path.string());
  write_header(os, 2, static_cast<std::uint32_t>(planes[0].rows()),
               static_cast<std::uint32_t>(planes[0].cols()));
  write_u32(os, static_cast<std::uint32_t>(planes.size()));
  for (const auto& p : planes) write_plane(os, p);
  if (!os) throw IoError("write_planes: short write to " + path.string());
}

Image read_image(const std::filesystem::path& path) {
  Image img;
  img.planes = read_planes(path);
  if (img.channels() != 1 && img.channels() != 3)
    throw FormatError("read_image: expected 1 or 3 channels in " + path.string());
  return img;
}

void write_image(const Image& image, const std::filesystem::path& path) {
  write_planes(image.planes, path);
}

void write_png_rgb8(const std::vector<Raster<float>>& rgb,
                    const std::filesystem::path& path) {
  if (rgb.size() != 3) throw ContractError("write_png_rgb8: need 3 planes");
  PngWriteCloser h;
  h.fp = std::fopen(path.string().c_str(), "wb");
  if (!h.fp) throw IoError("write_png_rgb8: cannot open " + path.string());
  h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  h.info = png_create_info_struct(h.png);
  if (!h.png || !h.info) throw IoError("write_png_rgb8: libpng init failed");
  if (setjmp(png_jmpbuf(h.png)))
    throw IoError("write_png_rgb8: libpng failure on " + path.string());
  png_init_io(h.png, h.fp);
  png_set_IHDR(h.png, h.info, rgb[0].cols(), rgb[0].rows(), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(h.png, h.info);

  std::vector<std::uint8_t> row(rgb[0].cols() * 3);
  for (Eigen::Index r = 0; r < rgb[0].rows(); ++r) {
    for (Eigen::Index c = 0; c < rgb[0].cols(); ++c)
      for (int ch = 0; ch < 3; ++ch) {
        float v = rgb[ch](r, c);
        v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        row[c * 3 + ch] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
    png_write_row(h.png, row.data());
  }
  png_write_end(h.png, nullptr);
}

}  // namespace dp
