// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#include "mvrecon/image.hpp"

#include "mvrecon/error.hpp"

#include <algorithm>
#include <string>

namespace mvr {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 1)
        throw InputError("image dimensions must be non-negative with at least one channel");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image Image::filled(int width, int height, const Rgb& color) {
    Image img(width, height, 3);
    for (std::size_t i = 0; i < img.data_.size(); i += 3) {
        img.data_[i] = color.x();
        img.data_[i + 1] = color.y();
        img.data_[i + 2] = color.z();
    }
    return img;
}

Rgb Image::rgb(int x, int y) const {
    const std::size_t i = index(x, y, 0);
    return {data_[i], data_[i + 1], data_[i + 2]};
}

void Image::set_rgb(int x, int y, const Rgb& v) {
    const std::size_t i = index(x, y, 0);
    data_[i] = v.x();
    data_[i + 1] = v.y();
    data_[i + 2] = v.z();
}

Mask::Mask(int width, int height, bool fill) : width_(width), height_(height) {
    if (width < 0 || height < 0)
        throw InputError("mask dimensions must be non-negative");
    bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

Mask Mask::from_alpha(const Image& alpha, double threshold) {
    Mask m(alpha.width(), alpha.height());
    for (int y = 0; y < alpha.height(); ++y)
        for (int x = 0; x < alpha.width(); ++x)
            m.set(x, y, alpha.at(x, y, 0) >= threshold);
    return m;
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b))
        throw InputError(std::string(what) + ": image dimensions differ (" + std::to_string(a.width()) +
                         "x" + std::to_string(a.height()) + "x" + std::to_string(a.channels()) +
                         " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                         std::to_string(b.channels()) + ")");
}

} // namespace mvr
