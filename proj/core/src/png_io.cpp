#include "fastdvd/errors.hpp"
#include "fastdvd/video.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace fastdvd {

Tensor load_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw IoError("cannot read PNG '" + path + "': " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> raw(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot decode PNG '" + path + "': " + msg);
    }

    const int h = static_cast<int>(image.height);
    const int w = static_cast<int>(image.width);
    Tensor t(1, 3, h, w);
    for (int y = 0; y < h; ++y) {
        const unsigned char* row = raw.data() + static_cast<std::size_t>(y) * w * 3;
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                t.at(0, c, y, x) = static_cast<float>(row[x * 3 + c]) / 255.0f;
            }
        }
    }
    return t;
}

void save_png(const Tensor& frame, const std::string& path) {
    if (frame.n() != 1 || frame.c() != 3) {
        throw ShapeError("save_png: expected a (1,3,h,w) frame, got " + frame.dims().str());
    }
    const int h = frame.h();
    const int w = frame.w();
    std::vector<unsigned char> raw(static_cast<std::size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y) {
        unsigned char* row = raw.data() + static_cast<std::size_t>(y) * w * 3;
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = std::round(frame.at(0, c, y, x) * 255.0f);
                row[x * 3 + c] = static_cast<unsigned char>(std::clamp(v, 0.0f, 255.0f));
            }
        }
    }

    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, raw.data(), 0, nullptr)) {
        throw IoError("cannot write PNG '" + path + "': " + image.message);
    }
}

} // namespace fastdvd
