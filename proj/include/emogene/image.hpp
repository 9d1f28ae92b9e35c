#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "emogene/data.hpp"
#include "emogene/errors.hpp"

namespace emogene {

// Float RGB image in [0,1], row-major, interleaved channels.
struct Image {
    std::size_t width = 0, height = 0, channels = 3;
    std::vector<float> data;

    Image() = default;
    Image(std::size_t w, std::size_t h, std::size_t c = 3)
        : width(w), height(h), channels(c), data(w * h * c, 0.f) {}

    float& at(std::size_t x, std::size_t y, std::size_t c) {
        return data[(y * width + x) * channels + c];
    }
    float at(std::size_t x, std::size_t y, std::size_t c) const {
        return data[(y * width + x) * channels + c];
    }
    std::size_t size() const { return data.size(); }
};

inline void save_ppm(const Image& img, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(IoCode::OpenFailed, "cannot write: " + path);
    os << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(img.width * img.height * 3);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                const float v = img.channels == 3 ? img.at(x, y, c) : img.at(x, y, 0);
                const float clamped = std::clamp(v, 0.f, 1.f);
                bytes.push_back(static_cast<unsigned char>(std::lround(clamped * 255.f)));
            }
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
}

inline Image load_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(IoCode::OpenFailed, "cannot read: " + path);
    std::string magic;
    is >> magic;
    if (magic != "P6") throw IoError(IoCode::BadMagic, "not a P6 ppm: " + path);
    std::size_t w, h, maxv;
    is >> w >> h >> maxv;
    is.get();  // single whitespace after header
    if (maxv != 255) throw IoError(IoCode::BadHeader, "only maxval 255 supported");
    Image img(w, h, 3);
    std::vector<unsigned char> bytes(w * h * 3);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(is.gcount()) != bytes.size())
        throw IoError(IoCode::Truncated, "truncated ppm payload: " + path);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.data[i] = static_cast<float>(bytes[i]) / 255.f;
    return img;
}

// Raw f32 variant, lossless: magic IMF1, u32 w/h/c, then f32 data.
inline void save_imf(const Image& img, const std::string& path) {
    auto os = detail::open_out(path);
    detail::write_bytes(os, "IMF1", 4);
    detail::write_u32(os, static_cast<std::uint32_t>(img.width));
    detail::write_u32(os, static_cast<std::uint32_t>(img.height));
    detail::write_u32(os, static_cast<std::uint32_t>(img.channels));
    detail::write_bytes(os, img.data.data(), img.data.size() * 4);
}

inline Image load_imf(const std::string& path) {
    auto is = detail::open_in(path);
    detail::expect_magic(is, "IMF1", "image");
    const auto w = detail::read_u32(is, "width");
    const auto h = detail::read_u32(is, "height");
    const auto c = detail::read_u32(is, "channels");
    Image img(w, h, c);
    detail::read_bytes(is, img.data.data(), img.data.size() * 4, "image payload");
    return img;
}

}  // namespace emogene
