// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffstego/image.hpp"
#include "diffstego/rng.hpp"

namespace diffstego {

enum class DegradationKind { identity, gaussian_noise, jpeg_like, resize };

inline std::string to_string(DegradationKind kind) {
    switch (kind) {
        case DegradationKind::identity: return "identity";
        case DegradationKind::gaussian_noise: return "gaussian_noise";
        case DegradationKind::jpeg_like: return "jpeg_like";
        case DegradationKind::resize: return "resize";
    }
    throw std::invalid_argument("to_string: unknown DegradationKind");
}

inline DegradationKind degradation_kind_from_string(const std::string& name) {
    if (name == "identity") return DegradationKind::identity;
    if (name == "gaussian_noise") return DegradationKind::gaussian_noise;
    if (name == "jpeg_like") return DegradationKind::jpeg_like;
    if (name == "resize") return DegradationKind::resize;
    throw std::invalid_argument("unknown degradation kind '" + name + "'");
}

/// One transmission channel: kind plus its severity knob. severity means
/// noise sigma on the 0-255 scale, JPEG quality Q in [1,100], or the integer
/// resize factor, depending on kind; identity ignores it.
struct DegradationSpec {
    DegradationKind kind = DegradationKind::identity;
    double severity = 0.0;
    std::uint64_t seed = 0;

    static DegradationSpec identity() { return DegradationSpec{}; }
    static DegradationSpec gaussian_noise(double sigma, std::uint64_t seed) {
        return DegradationSpec{DegradationKind::gaussian_noise, sigma, seed};
    }
    static DegradationSpec jpeg_like(int quality) {
        return DegradationSpec{DegradationKind::jpeg_like, static_cast<double>(quality), 0};
    }
    static DegradationSpec resize(int factor) {
        return DegradationSpec{DegradationKind::resize, static_cast<double>(factor), 0};
    }

    void validate() const {
        switch (kind) {
            case DegradationKind::identity:
                return;
            case DegradationKind::gaussian_noise:
                if (!(severity >= 0.0) || !std::isfinite(severity)) {
                    throw std::invalid_argument("DegradationSpec: noise sigma must be >= 0");
                }
                return;
            case DegradationKind::jpeg_like:
                if (severity != std::floor(severity) || severity < 1.0 || severity > 100.0) {
                    throw std::invalid_argument(
                        "DegradationSpec: jpeg quality must be an integer in [1, 100]");
                }
                return;
            case DegradationKind::resize:
                if (severity != std::floor(severity) || severity < 1.0) {
                    throw std::invalid_argument(
                        "DegradationSpec: resize factor must be an integer >= 1");
                }
                return;
        }
        throw std::invalid_argument("DegradationSpec: unknown kind");
    }

    /// Stable row label for reports, e.g. "gaussian_noise s=10".
    std::string label() const {
        if (kind == DegradationKind::identity) return "identity";
        std::string sev = std::to_string(static_cast<long long>(severity));
        if (kind == DegradationKind::gaussian_noise) {
            sev = severity == std::floor(severity) ? sev : std::to_string(severity);
            return "gaussian_noise s=" + sev;
        }
        if (kind == DegradationKind::jpeg_like) return "jpeg_like Q=" + sev;
        return "resize f=" + sev;
    }
};

namespace detail {

// ITU-T T.81 Annex K luminance quantization table, row-major.
inline constexpr std::array<int, 64> kJpegBaseTable = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

// Cosine basis c[x][u] = cos((2x+1) u pi / 16) for the 8-point DCT.
inline const std::array<std::array<double, 8>, 8>& dct_cos_table() {
    static const std::array<std::array<double, 8>, 8> table = [] {
        std::array<std::array<double, 8>, 8> t{};
        constexpr double pi = 3.14159265358979323846;
        for (int x = 0; x < 8; ++x) {
            for (int u = 0; u < 8; ++u) {
                t[static_cast<std::size_t>(x)][static_cast<std::size_t>(u)] =
                    std::cos((2.0 * x + 1.0) * u * pi / 16.0);
            }
        }
        return t;
    }();
    return table;
}

inline double dct_c(int u) { return u == 0 ? 0.70710678118654752440 : 1.0; }

// Orthonormal 2D DCT-II of one 8x8 block (row-major in/out).
inline void dct8x8(const std::array<double, 64>& in, std::array<double, 64>& out) {
    const auto& ct = dct_cos_table();
    std::array<double, 64> rows{};
    for (int y = 0; y < 8; ++y) {
        for (int u = 0; u < 8; ++u) {
            double acc = 0.0;
            for (int x = 0; x < 8; ++x) {
                acc += in[static_cast<std::size_t>(y * 8 + x)] *
                       ct[static_cast<std::size_t>(x)][static_cast<std::size_t>(u)];
            }
            rows[static_cast<std::size_t>(y * 8 + u)] = acc;
        }
    }
    for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y) {
                acc += rows[static_cast<std::size_t>(y * 8 + u)] *
                       ct[static_cast<std::size_t>(y)][static_cast<std::size_t>(v)];
            }
            out[static_cast<std::size_t>(v * 8 + u)] = 0.25 * dct_c(u) * dct_c(v) * acc;
        }
    }
}

inline void idct8x8(const std::array<double, 64>& in, std::array<double, 64>& out) {
    const auto& ct = dct_cos_table();
    std::array<double, 64> rows{};
    for (int v = 0; v < 8; ++v) {
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int u = 0; u < 8; ++u) {
                acc += dct_c(u) * in[static_cast<std::size_t>(v * 8 + u)] *
                       ct[static_cast<std::size_t>(x)][static_cast<std::size_t>(u)];
            }
            rows[static_cast<std::size_t>(v * 8 + x)] = acc;
        }
    }
    for (int x = 0; x < 8; ++x) {
        for (int y = 0; y < 8; ++y) {
            double acc = 0.0;
            for (int v = 0; v < 8; ++v) {
                acc += dct_c(v) * rows[static_cast<std::size_t>(v * 8 + x)] *
                       ct[static_cast<std::size_t>(y)][static_cast<std::size_t>(v)];
            }
            out[static_cast<std::size_t>(y * 8 + x)] = 0.25 * acc;
        }
    }
}

// Mirror index into [0, n): ... 2 1 | 0 1 2 ... n-1 | n-1 n-2 ...
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

// Keys cubic convolution kernel with a = -0.5.
inline double cubic_weight(double t) {
    constexpr double a = -0.5;
    const double at = std::abs(t);
    if (at <= 1.0) return (a + 2.0) * at * at * at - (a + 3.0) * at * at + 1.0;
    if (at < 2.0) return a * at * at * at - 5.0 * a * at * at + 8.0 * a * at - 4.0 * a;
    return 0.0;
}

}  // namespace detail

/// Quantization table for the given quality factor: the base luminance table
/// under the conventional scaling scale = 5000/Q (Q < 50) or 200 - 2Q, entry =
/// clamp((base * scale + 50) / 100, 1, 255). Q = 50 reproduces the base table.
inline std::array<int, 64> jpeg_quant_table(int quality) {
    if (quality < 1 || quality > 100) {
        throw std::invalid_argument("jpeg_quant_table: quality outside [1, 100]");
    }
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> table{};
    for (std::size_t i = 0; i < 64; ++i) {
        int v = (detail::kJpegBaseTable[i] * scale + 50) / 100;
        if (v < 1) v = 1;
        if (v > 255) v = 255;
        table[i] = v;
    }
    return table;
}

/// Compress-then-decompress distortion model: per channel plane, reflect-pad
/// to a multiple of 8, level-shift to [-128, 127], 8x8 orthonormal DCT,
/// divide-round-multiply against the quality-scaled table, inverse DCT, crop,
/// clamp to [0,1]. No chroma subsampling and no entropy coding: those stages
/// are lossless or out of scope, so only the quantization distortion remains.
inline Image jpeg_like(const Image& x, int quality) {
    x.validate();
    const std::array<int, 64> table = jpeg_quant_table(quality);
    const int w = x.shape.width;
    const int h = x.shape.height;
    const int pw = (w + 7) / 8 * 8;
    const int ph = (h + 7) / 8 * 8;
    Image out = x;
    std::vector<double> plane(static_cast<std::size_t>(pw) * ph);
    for (int c = 0; c < x.shape.channels; ++c) {
        for (int y = 0; y < ph; ++y) {
            for (int xx = 0; xx < pw; ++xx) {
                const double v =
                    x.at(detail::reflect_index(xx, w), detail::reflect_index(y, h), c);
                plane[static_cast<std::size_t>(y) * pw + xx] = v * 255.0 - 128.0;
            }
        }
        std::array<double, 64> block{}, coeff{}, back{};
        for (int by = 0; by < ph; by += 8) {
            for (int bx = 0; bx < pw; bx += 8) {
                for (int i = 0; i < 64; ++i) {
                    block[static_cast<std::size_t>(i)] =
                        plane[static_cast<std::size_t>(by + i / 8) * pw + bx + i % 8];
                }
                detail::dct8x8(block, coeff);
                for (std::size_t i = 0; i < 64; ++i) {
                    const double q = static_cast<double>(table[i]);
                    coeff[i] = q * std::round(coeff[i] / q);
                }
                detail::idct8x8(coeff, back);
                for (int i = 0; i < 64; ++i) {
                    const int yy = by + i / 8;
                    const int xx = bx + i % 8;
                    if (yy < h && xx < w) {
                        out.at(xx, yy, c) =
                            clamp01((back[static_cast<std::size_t>(i)] + 128.0) / 255.0);
                    }
                }
            }
        }
    }
    return out;
}

/// Separable cubic-convolution resampler (edge-clamped taps, center-aligned
/// coordinate mapping). Used for both directions of the resize channel.
inline Image resize_bicubic(const Image& x, int out_width, int out_height) {
    x.validate();
    if (out_width < 1 || out_height < 1) {
        throw std::invalid_argument("resize_bicubic: output size must be >= 1");
    }
    const auto resample_axis = [](const std::vector<double>& src, int n_src, int n_dst,
                                  double scale, std::vector<double>& dst) {
        for (int d = 0; d < n_dst; ++d) {
            const double center = (d + 0.5) * scale - 0.5;
            const int base = static_cast<int>(std::floor(center)) - 1;
            double acc = 0.0, wsum = 0.0;
            for (int k = 0; k < 4; ++k) {
                const int idx = base + k;
                const double wgt = detail::cubic_weight(center - idx);
                const int clamped = idx < 0 ? 0 : (idx >= n_src ? n_src - 1 : idx);
                acc += wgt * src[static_cast<std::size_t>(clamped)];
                wsum += wgt;
            }
            // The 4-tap window of the Keys kernel sums to 1; dividing guards
            // against accumulated float drift only.
            dst[static_cast<std::size_t>(d)] = acc / wsum;
        }
    };

    const int w = x.shape.width, h = x.shape.height, ch = x.shape.channels;
    Image out = Image::zeros({out_width, out_height, ch});
    const double sx = static_cast<double>(w) / out_width;
    const double sy = static_cast<double>(h) / out_height;
    std::vector<double> col_src(static_cast<std::size_t>(h));
    std::vector<double> col_dst(static_cast<std::size_t>(out_height));
    std::vector<double> row_src(static_cast<std::size_t>(w));
    std::vector<double> row_dst(static_cast<std::size_t>(out_width));
    // Vertical pass into an intermediate (w x out_height) plane, then horizontal.
    std::vector<double> mid(static_cast<std::size_t>(w) * out_height);
    for (int c = 0; c < ch; ++c) {
        for (int xx = 0; xx < w; ++xx) {
            for (int y = 0; y < h; ++y) col_src[static_cast<std::size_t>(y)] = x.at(xx, y, c);
            resample_axis(col_src, h, out_height, sy, col_dst);
            for (int y = 0; y < out_height; ++y) {
                mid[static_cast<std::size_t>(y) * w + xx] = col_dst[static_cast<std::size_t>(y)];
            }
        }
        for (int y = 0; y < out_height; ++y) {
            for (int xx = 0; xx < w; ++xx) {
                row_src[static_cast<std::size_t>(xx)] = mid[static_cast<std::size_t>(y) * w + xx];
            }
            resample_axis(row_src, w, out_width, sx, row_dst);
            for (int xx = 0; xx < out_width; ++xx) {
                out.at(xx, y, c) = row_dst[static_cast<std::size_t>(xx)];
            }
        }
    }
    return out;
}

/// Downsample by an integer factor (ceil division on each side) and resample
/// back to the original size.
inline Image resize_roundtrip(const Image& x, int factor) {
    x.validate();
    if (factor < 1) throw std::invalid_argument("resize_roundtrip: factor must be >= 1");
    if (factor == 1) return x;
    const int dw = (x.shape.width + factor - 1) / factor;
    const int dh = (x.shape.height + factor - 1) / factor;
    const Image down = resize_bicubic(x, dw, dh);
    return resize_bicubic(down, x.shape.width, x.shape.height);
}

/// Applies the channel. Every kind except identity first forces the image
/// through the 8-bit file representation (transmission starts from a stored
/// file); identity returns the input untouched. Noise is added after that
/// quantization on the 0-255 scale and the result is clamped, not re-quantized.
inline Image apply(const Image& x, const DegradationSpec& spec) {
    x.validate();
    spec.validate();
    switch (spec.kind) {
        case DegradationKind::identity:
            return x;
        case DegradationKind::gaussian_noise: {
            Image out = quantize8(x);
            Rng rng(spec.seed);
            const double sigma01 = spec.severity / 255.0;
            for (double& v : out.data) v = clamp01(v + sigma01 * rng.normal());
            return out;
        }
        case DegradationKind::jpeg_like:
            return jpeg_like(quantize8(x), static_cast<int>(spec.severity));
        case DegradationKind::resize: {
            Image out = resize_roundtrip(quantize8(x), static_cast<int>(spec.severity));
            return clamp01(out);
        }
    }
    throw std::invalid_argument("apply: unknown degradation kind");
}

}  // namespace diffstego
