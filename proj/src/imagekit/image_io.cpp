#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "demarklab/imagekit/image.hpp"

namespace dml::imagekit {

namespace {

struct Rgb8Image {
    int height = 0;
    int width = 0;
    std::vector<unsigned char> pixels; // interleaved RGB
};

ImageTensor from_rgb8(const Rgb8Image& raw, int out_h, int out_w) {
    std::vector<double> planar(static_cast<std::size_t>(raw.height) * raw.width * 3);
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x)
            for (int c = 0; c < 3; ++c)
                planar[(static_cast<std::size_t>(c) * raw.height + y) * raw.width + x] =
                    raw.pixels[(static_cast<std::size_t>(y) * raw.width + x) * 3 + c] / 255.0;
    return ImageTensor(out_h, out_w, detail::resize_planar3(planar, raw.height, raw.width, out_h, out_w));
}

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// ---- PNG ----

Rgb8Image decode_png(std::FILE* fp, const std::string& name) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png: allocation failed");
    }
    std::vector<png_bytep> rows;
    Rgb8Image out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("png: failed to decode " + name);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * 3);
    rows.resize(static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = out.pixels.data() + static_cast<std::size_t>(y) * out.width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

// ---- JPEG ----

struct JpegErrorMgr {
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    JpegErrorMgr* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

Rgb8Image decode_jpeg_stream(jpeg_decompress_struct& cinfo, JpegErrorMgr& err, const std::string& name) {
    Rgb8Image out;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw FormatError("jpeg: failed to decode " + name);
    }
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    out.width = static_cast<int>(cinfo.output_width);
    out.height = static_cast<int>(cinfo.output_height);
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = out.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

std::vector<unsigned char> to_rgb8_bytes(const ImageTensor& img) {
    std::vector<unsigned char> bytes(static_cast<std::size_t>(img.height()) * img.width() * 3);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = img.at(y, x, c) * 255.0;
                bytes[(static_cast<std::size_t>(y) * img.width() + x) * 3 + c] =
                    static_cast<unsigned char>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : std::floor(v + 0.5)));
            }
    return bytes;
}

} // namespace

ImageTensor::ImageTensor(int height, int width)
    : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width * 3, 0.0) {
    check_dims();
}

ImageTensor::ImageTensor(int height, int width, std::vector<double> chw_data)
    : height_(height), width_(width), data_(std::move(chw_data)) {
    check_dims();
    if (data_.size() != static_cast<std::size_t>(height_) * width_ * 3)
        throw DomainError("ImageTensor: data size does not match dimensions");
    for (double& v : data_) v = clamp01(v);
}

void ImageTensor::check_dims() const {
    if (height_ < kMinDim || width_ < kMinDim)
        throw DomainError("ImageTensor: dimensions must be at least 8x8");
}

ImageTensor ImageTensor::from_tensor(const nn::Tensor& t) {
    if (t.shape.size() != 3 || t.channels() != 3) throw DomainError("ImageTensor: tensor must be (3,H,W)");
    return ImageTensor(t.height(), t.width(), t.v);
}

ImageTensor load_image(const std::filesystem::path& path, int height, int width) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw NotFoundError("load_image: cannot open " + path.string());

    unsigned char magic[4] = {0, 0, 0, 0};
    const std::size_t got = std::fread(magic, 1, 4, fp.get());
    std::rewind(fp.get());
    if (got >= 4 && magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
        return from_rgb8(decode_png(fp.get(), path.string()), height, width);
    if (got >= 2 && magic[0] == 0xff && magic[1] == 0xd8) {
        jpeg_decompress_struct cinfo;
        JpegErrorMgr err;
        cinfo.err = jpeg_std_error(&err.base);
        err.base.error_exit = jpeg_error_exit;
        jpeg_create_decompress(&cinfo);
        jpeg_stdio_src(&cinfo, fp.get());
        return from_rgb8(decode_jpeg_stream(cinfo, err, path.string()), height, width);
    }
    throw FormatError("load_image: unrecognized image format in " + path.string());
}

void save_image(const ImageTensor& img, const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("save_image: cannot open for write: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png: allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("save_image: write failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::vector<unsigned char> bytes = to_rgb8_bytes(img);
    for (int y = 0; y < img.height(); ++y)
        png_write_row(png, const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * img.width() * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageTensor jpeg_reencode(const ImageTensor& img, int quality) {
    if (quality < 1 || quality > 100) throw DomainError("jpeg_reencode: quality must be in [1,100]");
    const std::vector<unsigned char> rgb = to_rgb8_bytes(img);

    unsigned char* buf = nullptr;
    unsigned long buf_size = 0;
    {
        jpeg_compress_struct cinfo;
        JpegErrorMgr err;
        cinfo.err = jpeg_std_error(&err.base);
        err.base.error_exit = jpeg_error_exit;
        jpeg_create_compress(&cinfo);
        if (setjmp(err.jump)) {
            jpeg_destroy_compress(&cinfo);
            std::free(buf);
            throw IoError("jpeg: encode failed");
        }
        jpeg_mem_dest(&cinfo, &buf, &buf_size);
        cinfo.image_width = static_cast<JDIMENSION>(img.width());
        cinfo.image_height = static_cast<JDIMENSION>(img.height());
        cinfo.input_components = 3;
        cinfo.in_color_space = JCS_RGB;
        jpeg_set_defaults(&cinfo);
        jpeg_set_quality(&cinfo, quality, TRUE);
        jpeg_start_compress(&cinfo, TRUE);
        while (cinfo.next_scanline < cinfo.image_height) {
            const unsigned char* row = rgb.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width() * 3;
            JSAMPROW rows[1] = {const_cast<JSAMPROW>(row)};
            jpeg_write_scanlines(&cinfo, rows, 1);
        }
        jpeg_finish_compress(&cinfo);
        jpeg_destroy_compress(&cinfo);
    }

    Rgb8Image decoded;
    {
        jpeg_decompress_struct cinfo;
        JpegErrorMgr err;
        cinfo.err = jpeg_std_error(&err.base);
        err.base.error_exit = jpeg_error_exit;
        jpeg_create_decompress(&cinfo);
        jpeg_mem_src(&cinfo, buf, buf_size);
        try {
            decoded = decode_jpeg_stream(cinfo, err, "<memory>");
        } catch (...) {
            std::free(buf);
            throw;
        }
    }
    std::free(buf);
    return from_rgb8(decoded, img.height(), img.width());
}

} // namespace dml::imagekit
