// Copyright (c) 2026 the diffstego authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffstego/image.hpp"

namespace diffstego {

/// File/format failure distinct from caller mistakes; the CLI maps these to
/// its data-error exit code.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

// Skips whitespace and '#' comment lines between header tokens.
inline int pnm_next_token(std::istream& in, std::string& token) {
    token.clear();
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c) && c != '#') {
        token.push_back(static_cast<char>(c));
        c = in.get();
    }
    return c;
}

inline int pnm_parse_int(const std::string& token, const std::string& path, const char* what) {
    if (token.empty()) throw FormatError(path + ": truncated header, missing " + what);
    std::size_t pos = 0;
    int value = 0;
    try {
        value = std::stoi(token, &pos);
    } catch (const std::exception&) {
        throw FormatError(path + ": bad " + std::string(what) + " '" + token + "'");
    }
    if (pos != token.size()) {
        throw FormatError(path + ": bad " + std::string(what) + " '" + token + "'");
    }
    return value;
}

}  // namespace detail

/// Reads a binary PGM (P5) or PPM (P6) file with maxval 255 into [0,1] values.
inline Image read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open for reading");
    std::string token;
    int c = detail::pnm_next_token(in, token);
    int channels = 0;
    if (token == "P5") {
        channels = 1;
    } else if (token == "P6") {
        channels = 3;
    } else {
        throw FormatError(path + ": not a binary PNM file (magic '" + token + "')");
    }
    c = detail::pnm_next_token(in, token);
    const int width = detail::pnm_parse_int(token, path, "width");
    c = detail::pnm_next_token(in, token);
    const int height = detail::pnm_parse_int(token, path, "height");
    c = detail::pnm_next_token(in, token);
    const int maxval = detail::pnm_parse_int(token, path, "maxval");
    if (width < 1 || height < 1) throw FormatError(path + ": non-positive dimensions");
    if (maxval != 255) {
        throw FormatError(path + ": maxval " + std::to_string(maxval) + " unsupported, need 255");
    }
    // The header ends with exactly one whitespace byte, already consumed in c.
    if (c == EOF || !std::isspace(c)) throw FormatError(path + ": malformed header end");

    Image img = Image::zeros({width, height, channels});
    std::vector<unsigned char> bytes(img.shape.size());
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
        throw FormatError(path + ": truncated pixel data");
    }
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        img.data[i] = static_cast<double>(bytes[i]) / 255.0;
    }
    return img;
}

/// Writes a binary PGM/PPM file (maxval 255). Values are clamped to [0,1] and
/// rounded to 8 bits here; this is the only place the pipeline clamps.
inline void write_pnm(const std::string& path, const Image& img) {
    img.validate();
    if (img.shape.channels != 1 && img.shape.channels != 3) {
        throw std::invalid_argument("write_pnm: only 1- or 3-channel images supported, got " +
                                    std::to_string(img.shape.channels));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << (img.shape.channels == 1 ? "P5" : "P6") << "\n"
        << img.shape.width << " " << img.shape.height << "\n255\n";
    std::vector<unsigned char> bytes(img.shape.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        bytes[i] = static_cast<unsigned char>(std::lround(clamp01(img.data[i]) * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(path + ": write failed");
}

}  // namespace diffstego
