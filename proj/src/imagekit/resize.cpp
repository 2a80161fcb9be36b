#include <algorithm>
#include <cmath>

#include "demarklab/imagekit/image.hpp"

namespace dml::imagekit {

namespace detail {

std::vector<double> resize_planar3(const std::vector<double>& src, int h, int w, int out_h, int out_w) {
    if (out_h == h && out_w == w) return src;

    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    std::vector<double> out(static_cast<std::size_t>(out_h) * out_w * 3);
    auto at = [&](int c, int y, int x) { return src[(static_cast<std::size_t>(c) * h + y) * w + x]; };

    for (int y = 0; y < out_h; ++y) {
        // half-pixel centers, clamped to the source grid
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = at(c, y0, x0) * (1.0 - wx) + at(c, y0, x1) * wx;
                const double bot = at(c, y1, x0) * (1.0 - wx) + at(c, y1, x1) * wx;
                out[(static_cast<std::size_t>(c) * out_h + y) * out_w + x] = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

} // namespace detail

ImageTensor resize_bilinear(const ImageTensor& img, int out_height, int out_width) {
    if (out_height == img.height() && out_width == img.width()) return img;
    return ImageTensor(out_height, out_width,
                       detail::resize_planar3(img.data(), img.height(), img.width(), out_height, out_width));
}

} // namespace dml::imagekit
