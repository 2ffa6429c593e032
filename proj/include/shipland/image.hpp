#pragma once

#include <shipland/errors.hpp>

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace shipland {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major 8-bit RGB image.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(check_dims(width, height)) * 3) {
        for (std::size_t i = 0; i < data_.size(); i += 3) {
            data_[i] = fill.r;
            data_[i + 1] = fill.g;
            data_[i + 2] = fill.b;
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    Rgb at(int x, int y) const {
        const std::size_t i = index(x, y);
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set(int x, int y, Rgb c) {
        const std::size_t i = index(x, y);
        data_[i] = c.r;
        data_[i + 1] = c.g;
        data_[i + 2] = c.b;
    }

    /// Rec. 601 luma.
    double luma(int x, int y) const {
        const std::size_t i = index(x, y);
        return 0.299 * data_[i] + 0.587 * data_[i + 1] + 0.114 * data_[i + 2];
    }

    const std::vector<std::uint8_t>& bytes() const { return data_; }
    std::vector<std::uint8_t>& bytes() { return data_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    static long check_dims(int w, int h) {
        if (w < 1 || h < 1) throw ImageFormatError("image dimensions must be >= 1");
        return static_cast<long>(w) * h;
    }
    std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// One byte per pixel, 0 or 1.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool value = false)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                value ? 1 : 0) {}

    int width() const { return width_; }
    int height() const { return height_; }

    bool at(int x, int y) const { return data_[index(x, y)] != 0; }
    void set(int x, int y, bool v) { data_[index(x, y)] = v ? 1 : 0; }

    /// Out-of-bounds reads return `outside`.
    bool get_or(int x, int y, bool outside) const {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return outside;
        return at(x, y);
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data_) n += v;
        return n;
    }
    bool any() const {
        for (auto v : data_)
            if (v) return true;
        return false;
    }

    std::vector<std::uint8_t>& data() { return data_; }
    const std::vector<std::uint8_t>& data() const { return data_; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

// Binary PPM (P6, maxval 255).
inline void write_ppm(const std::string& path, const RgbImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageFormatError("cannot open " + path + " for writing");
    out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.bytes().data()),
              static_cast<std::streamsize>(img.bytes().size()));
}

inline RgbImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageFormatError("cannot open " + path);

    // Header tokens, skipping '#' comments.
    auto next_token = [&in]() {
        std::string tok;
        while (tok.empty()) {
            int c = in.get();
            if (c == EOF) throw ImageFormatError("truncated PPM header");
            if (c == '#') {
                std::string ignored;
                std::getline(in, ignored);
                continue;
            }
            if (std::isspace(c)) continue;
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(in.get()));
        }
        return tok;
    };

    if (next_token() != "P6") throw ImageFormatError("not a binary PPM (P6)");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw ImageFormatError("malformed PPM header");
    }
    if (maxval != 255) throw ImageFormatError("only maxval 255 is supported");
    in.get();  // single whitespace before raster

    RgbImage img(w, h);
    in.read(reinterpret_cast<char*>(img.bytes().data()),
            static_cast<std::streamsize>(img.bytes().size()));
    if (in.gcount() != static_cast<std::streamsize>(img.bytes().size()))
        throw ImageFormatError("truncated PPM raster");
    return img;
}

}  // namespace shipland
