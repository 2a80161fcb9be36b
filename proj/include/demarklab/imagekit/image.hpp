#pragma once

#include <filesystem>
#include <vector>

#include "demarklab/errors.hpp"
#include "demarklab/nn/tensor.hpp"

namespace dml::imagekit {

// RGB image with values in [0,1], stored planar (channel-major) so it maps
// directly onto the (3,H,W) tensors the models consume. Values are clamped on
// construction; dimensions must be at least 8 (the encoder's downsampling
// path needs that much room).
class ImageTensor {
public:
    static constexpr int kMinDim = 8;

    ImageTensor(int height, int width);
    ImageTensor(int height, int width, std::vector<double> chw_data);

    int height() const { return height_; }
    int width() const { return width_; }

    double at(int y, int x, int c) const { return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }
    void set(int y, int x, int c, double v) { data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x] = clamp01(v); }

    const std::vector<double>& data() const { return data_; }

    nn::Tensor to_tensor() const { return nn::Tensor({3, height_, width_}, data_); }
    static ImageTensor from_tensor(const nn::Tensor& t);

    bool same_shape(const ImageTensor& o) const { return height_ == o.height_ && width_ == o.width_; }

    static double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

private:
    int height_;
    int width_;
    std::vector<double> data_; // 3 * height * width

    void check_dims() const;
};

// Decodes an 8-bit RGB PNG or JPEG and bilinearly resizes to (height, width).
ImageTensor load_image(const std::filesystem::path& path, int height, int width);

// Writes an 8-bit RGB PNG; element v encodes as round(v * 255).
void save_image(const ImageTensor& img, const std::filesystem::path& path);

// Bilinear resize, half-pixel-centered sampling (align_corners = false).
ImageTensor resize_bilinear(const ImageTensor& img, int out_height, int out_width);

// In-memory JPEG encode/decode round trip at the given quality (1..100).
ImageTensor jpeg_reencode(const ImageTensor& img, int quality);

namespace detail {
// Resize three planar channels without ImageTensor's minimum-size constraint
// (decoded sources may be tiny, e.g. a 1x1 PNG).
std::vector<double> resize_planar3(const std::vector<double>& src, int h, int w, int out_h, int out_w);
} // namespace detail

} // namespace dml::imagekit
