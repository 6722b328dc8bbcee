#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "depthprompt/raster.hpp"

namespace dp::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Channel-major feature map: data(ch, p) with pixel p = r * width + c.
template <typename S>
struct Tensor {
  int channels = 0, height = 0, width = 0;
  Mat<S> data;

  Tensor() = default;
  Tensor(int c, int h, int w)
      : channels(c), height(h), width(w), data(Mat<S>::Zero(c, h * w)) {}

  int pixels() const { return height * width; }
  bool empty() const { return data.size() == 0; }

  S& at(int ch, int r, int c) { return data(ch, r * width + c); }
  S at(int ch, int r, int c) const { return data(ch, r * width + c); }
};

template <typename S>
Tensor<S> tensor_from_planes(const std::vector<Raster<float>>& planes) {
  Tensor<S> t(static_cast<int>(planes.size()),
              static_cast<int>(planes[0].rows()),
              static_cast<int>(planes[0].cols()));
  for (int ch = 0; ch < t.channels; ++ch)
    for (int r = 0; r < t.height; ++r)
      for (int c = 0; c < t.width; ++c)
        t.at(ch, r, c) = static_cast<S>(planes[ch](r, c));
  return t;
}

template <typename S>
Tensor<S> tensor_from_raster(const Raster<S>& raster) {
  Tensor<S> t(1, static_cast<int>(raster.rows()),
              static_cast<int>(raster.cols()));
  for (int r = 0; r < t.height; ++r)
    for (int c = 0; c < t.width; ++c) t.at(0, r, c) = raster(r, c);
  return t;
}

template <typename S>
Raster<S> raster_from_tensor(const Tensor<S>& t, int channel) {
  Raster<S> out(t.height, t.width);
  for (int r = 0; r < t.height; ++r)
    for (int c = 0; c < t.width; ++c) out(r, c) = t.at(channel, r, c);
  return out;
}

// Learnable parameter. Conv weights are (out_channels, in_channels * k * k);
// biases are (out_channels, 1).
template <typename S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;
  bool trainable = true;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  long size() const { return value.size(); }
};

}  // namespace dp::nn
