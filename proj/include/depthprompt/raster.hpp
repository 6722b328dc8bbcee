#pragma once

#include <Eigen/Core>

#include <utility>
#include <vector>

#include "depthprompt/error.hpp"

namespace dp {

template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Dense per-pixel depth in meters. A pixel is valid iff its value is > 0;
// 0 encodes "no measurement". Element (r, c) is row r, column c.
using DepthMap = Raster<float>;

// Same layout as DepthMap; the valid set is the sensor sample set.
using SparseDepth = DepthMap;

inline Eigen::Index valid_count(const DepthMap& d) {
  return (d > 0.0f).count();
}

// Throws DataError unless all entries are finite and >= 0.
template <typename Scalar>
void require_depth_payload(const Raster<Scalar>& d, const char* what) {
  if (!d.isFinite().all())
    throw DataError(std::string(what) + ": non-finite depth value");
  if ((d < Scalar(0)).any())
    throw DataError(std::string(what) + ": negative depth value");
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractError(std::string(what) + ": shape mismatch");
}

// Multi-channel image with values in [0, 1]; 1 or 3 channels.
struct Image {
  std::vector<Raster<float>> planes;

  Image() = default;
  Image(int channels, int height, int width)
      : planes(channels, Raster<float>::Zero(height, width)) {}

  int channels() const { return static_cast<int>(planes.size()); }
  int height() const { return planes.empty() ? 0 : static_cast<int>(planes[0].rows()); }
  int width() const { return planes.empty() ? 0 : static_cast<int>(planes[0].cols()); }
};

}  // namespace dp
