#include "vton/core/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <vector>

namespace vton {

void png_write(const std::filesystem::path& path, const Tensor& img) {
    if (img.ndim() != 3 || (img.dim(0) != 1 && img.dim(0) != 3))
        throw ShapeError("png_write: expected {1|3,H,W}, got " + img.shape_str());
    int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw IoError("png_write: cannot open " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("png_write: libpng failure " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // pinned settings so identical pixels give identical bytes
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<size_t>(W) * 3);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            for (int k = 0; k < 3; ++k) {
                float v = img.at(C == 1 ? 0 : k, y, x);
                v = std::min(1.0f, std::max(0.0f, v));
                row[static_cast<size_t>(x) * 3 + k] = static_cast<png_byte>(std::lround(v * 255.0f));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

Tensor png_read(const std::filesystem::path& path) {
    FILE* fp = std::fopen(path.string().c_str(), "rb");
    if (!fp) throw IoError("png_read: cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw IoError("png_read: libpng failure " + path.string());
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    int H = static_cast<int>(png_get_image_height(png, info));
    int W = static_cast<int>(png_get_image_width(png, info));
    std::vector<png_byte> row(static_cast<size_t>(W) * 3);
    Tensor img({3, H, W});
    for (int y = 0; y < H; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < W; ++x)
            for (int k = 0; k < 3; ++k)
                img.at(k, y, x) = static_cast<float>(row[static_cast<size_t>(x) * 3 + k]) / 255.0f;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

Tensor mask_and(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mask_and");
    Tensor out = a;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = (a[i] > 0.5f && b[i] > 0.5f) ? 1.0f : 0.0f;
    return out;
}

Tensor mask_not(const Tensor& a) {
    Tensor out = a;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a[i] > 0.5f ? 0.0f : 1.0f;
    return out;
}

Tensor dilate(const Tensor& mask, int radius) {
    int H = mask.dim(1), W = mask.dim(2);
    Tensor out({1, H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            float v = 0.0f;
            for (int dy = -radius; dy <= radius && v == 0.0f; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    if (yy >= 0 && yy < H && xx >= 0 && xx < W && mask.at(0, yy, xx) > 0.5f) {
                        v = 1.0f;
                        break;
                    }
                }
            out.at(0, y, x) = v;
        }
    return out;
}

int64_t mask_area(const Tensor& mask) {
    int64_t n = 0;
    for (int64_t i = 0; i < mask.numel(); ++i) n += mask[i] > 0.5f;
    return n;
}

Tensor composite(const Tensor& base, const Tensor& overlay, const Tensor& mask) {
    check_same_shape(base, overlay, "composite");
    int C = base.dim(0), H = base.dim(1), W = base.dim(2);
    if (mask.dim(0) != 1 || mask.dim(1) != H || mask.dim(2) != W) throw ShapeError("composite: mask shape");
    Tensor out = base;
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                if (mask.at(0, y, x) > 0.5f) out.at(c, y, x) = overlay.at(c, y, x);
    return out;
}

Tensor fill_region(const Tensor& base, const Tensor& mask, float fill) {
    int C = base.dim(0), H = base.dim(1), W = base.dim(2);
    if (mask.dim(0) != 1 || mask.dim(1) != H || mask.dim(2) != W) throw ShapeError("fill_region: mask shape");
    Tensor out = base;
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                if (mask.at(0, y, x) > 0.5f) out.at(c, y, x) = fill;
    return out;
}

Tensor threshold(const Tensor& x, float t) {
    Tensor out = x;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = x[i] >= t ? 1.0f : 0.0f;
    return out;
}

}  // namespace vton
