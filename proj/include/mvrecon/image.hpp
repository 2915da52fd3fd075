// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace mvr {

using Rgb = Eigen::Vector3d;

/// Interleaved float image (row-major, channels innermost), values nominally in [0,1].
class Image {
  public:
    Image() = default;
    Image(int width, int height, int channels, double fill = 0.0);

    static Image filled(int width, int height, const Rgb& color);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }
    Rgb rgb(int x, int y) const;
    void set_rgb(int x, int y, const Rgb& v);

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Image& o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

  private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Per-pixel foreground flags.
class Mask {
  public:
    Mask() = default;
    Mask(int width, int height, bool fill = false);

    /// Foreground where alpha >= threshold. Uses channel 0 of the image.
    static Mask from_alpha(const Image& alpha, double threshold = 0.5);

    int width() const { return width_; }
    int height() const { return height_; }
    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
    std::size_t count() const;

    const std::vector<std::uint8_t>& bits() const { return bits_; }

    bool operator==(const Mask&) const = default;

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

void require_same_shape(const Image& a, const Image& b, const char* what);

} // namespace mvr
