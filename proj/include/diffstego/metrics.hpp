// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "diffstego/image.hpp"

namespace diffstego {

// MSE below this is reported as the sentinel instead of a diverging dB value.
inline constexpr double kPsnrMseFloor = 1e-10;
inline constexpr double kPsnrSentinelDb = 99.0;

inline double mse(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("mse: size mismatch");
    if (a.empty()) throw std::invalid_argument("mse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

inline double rms_error(const std::vector<double>& a, const std::vector<double>& b) {
    return std::sqrt(mse(a, b));
}

/// Peak signal-to-noise ratio in dB with MAX = 1 (values live in [0,1]).
/// Symmetric; capped at kPsnrSentinelDb when MSE < kPsnrMseFloor.
inline double psnr(const std::vector<double>& a, const std::vector<double>& b) {
    const double m = mse(a, b);
    if (m < kPsnrMseFloor) return kPsnrSentinelDb;
    return 10.0 * std::log10(1.0 / m);
}

/// PSNR after both sides are forced through the 8-bit file representation.
inline double psnr_quantized(const std::vector<double>& a, const std::vector<double>& b) {
    return psnr(quantize8(a), quantize8(b));
}

inline double mse(const Image& a, const Image& b) {
    if (!(a.shape == b.shape)) throw std::invalid_argument("mse: shape mismatch");
    return mse(a.data, b.data);
}

inline double rms_error(const Image& a, const Image& b) {
    if (!(a.shape == b.shape)) throw std::invalid_argument("rms_error: shape mismatch");
    return rms_error(a.data, b.data);
}

inline double psnr(const Image& a, const Image& b) {
    if (!(a.shape == b.shape)) throw std::invalid_argument("psnr: shape mismatch");
    return psnr(a.data, b.data);
}

inline double psnr_quantized(const Image& a, const Image& b) {
    if (!(a.shape == b.shape)) throw std::invalid_argument("psnr_quantized: shape mismatch");
    return psnr_quantized(a.data, b.data);
}

}  // namespace diffstego
