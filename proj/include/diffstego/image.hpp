// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace diffstego {

/// Pixel geometry of an image. Pixel values themselves live in a flat
/// row-major vector (y, then x, then channel) with nominal range [0, 1].
struct ImageShape {
    int width = 0;
    int height = 0;
    int channels = 1;

    std::size_t size() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
               static_cast<std::size_t>(channels);
    }

    bool operator==(const ImageShape&) const = default;

    void validate() const {
        if (width < 1 || height < 1 || channels < 1) {
            throw std::invalid_argument("ImageShape: width, height and channels must be >= 1");
        }
    }
};

/// A small real-valued image. Values are doubles in [0, 1] by convention;
/// intermediate pipeline states may leave that range and are only clamped
/// at file I/O and inside degradation channels.
struct Image {
    ImageShape shape;
    std::vector<double> data;

    static Image zeros(const ImageShape& shape) {
        shape.validate();
        return Image{shape, std::vector<double>(shape.size(), 0.0)};
    }

    static Image constant(const ImageShape& shape, double value) {
        shape.validate();
        return Image{shape, std::vector<double>(shape.size(), value)};
    }

    double& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * shape.width + x) * shape.channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * shape.width + x) * shape.channels + c];
    }

    void validate() const {
        shape.validate();
        if (data.size() != shape.size()) {
            throw std::invalid_argument("Image: data size does not match shape");
        }
    }
};

inline double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

/// Round to the nearest 8-bit level and map back into [0, 1].
inline double quantize8_value(double v) { return std::round(clamp01(v) * 255.0) / 255.0; }

inline std::vector<double> quantize8(const std::vector<double>& values) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = quantize8_value(values[i]);
    return out;
}

inline Image quantize8(const Image& img) { return Image{img.shape, quantize8(img.data)}; }

inline Image clamp01(const Image& img) {
    Image out{img.shape, img.data};
    for (double& v : out.data) v = clamp01(v);
    return out;
}

}  // namespace diffstego
