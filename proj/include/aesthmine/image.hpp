#pragma once

// Minimal 8-bit RGB raster and a Netpbm (PPM/PGM, binary or ASCII) reader.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "aesthmine/error.hpp"

namespace aesthmine {

struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    /// Interleaved RGB, row-major.
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), rgb(w * h * 3, fill) {}

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return rgb[(y * width + x) * 3 + c]; }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return rgb[(y * width + x) * 3 + c]; }

    void set(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        at(x, y, 0) = r;
        at(x, y, 1) = g;
        at(x, y, 2) = b;
    }
};

namespace detail {

class NetpbmReader {
public:
    explicit NetpbmReader(std::vector<char> data) : data_(std::move(data)) {}

    unsigned long next_int() {
        skip_space_and_comments();
        if (pos_ >= data_.size() || !std::isdigit(static_cast<unsigned char>(data_[pos_])))
            throw IoError("malformed Netpbm header");
        unsigned long v = 0;
        while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_])))
            v = v * 10 + static_cast<unsigned long>(data_[pos_++] - '0');
        return v;
    }

    std::uint8_t next_byte() {
        if (pos_ >= data_.size()) throw IoError("truncated Netpbm raster");
        return static_cast<std::uint8_t>(data_[pos_++]);
    }

    void skip_single_whitespace() {
        if (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    }

    std::string magic() {
        if (data_.size() < 2) throw IoError("not a Netpbm file");
        pos_ = 2;
        return std::string(data_.begin(), data_.begin() + 2);
    }

private:
    void skip_space_and_comments() {
        while (pos_ < data_.size()) {
            if (std::isspace(static_cast<unsigned char>(data_[pos_]))) {
                ++pos_;
            } else if (data_[pos_] == '#') {
                while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::vector<char> data_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Reads P2/P3/P5/P6 files with maxval <= 255; grey images are expanded to RGB.
inline Image read_netpbm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path);
    detail::NetpbmReader r{std::vector<char>(std::istreambuf_iterator<char>(in), {})};
    const auto magic = r.magic();
    const bool ascii = magic == "P2" || magic == "P3";
    const bool colour = magic == "P3" || magic == "P6";
    if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6")
        throw IoError("unsupported image format (expected PPM/PGM): " + path);
    Image img;
    try {
        img.width = r.next_int();
        img.height = r.next_int();
        const auto maxval = r.next_int();
        if (maxval == 0 || maxval > 255) throw IoError("only 8-bit images are supported");
        if (img.width == 0 || img.height == 0) throw IoError("empty image");
        if (!ascii) r.skip_single_whitespace();
        img.rgb.resize(img.width * img.height * 3);
        const auto scale = [&](unsigned long v) {
            if (v > maxval) throw IoError("sample exceeds maxval");
            return static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
        };
        for (std::size_t p = 0; p < img.width * img.height; ++p) {
            if (colour) {
                for (int c = 0; c < 3; ++c) img.rgb[p * 3 + c] = scale(ascii ? r.next_int() : r.next_byte());
            } else {
                const auto v = scale(ascii ? r.next_int() : r.next_byte());
                img.rgb[p * 3] = img.rgb[p * 3 + 1] = img.rgb[p * 3 + 2] = v;
            }
        }
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
    return img;
}

/// Binary PPM (P6).
inline void write_ppm(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image: " + path);
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
}

}  // namespace aesthmine
