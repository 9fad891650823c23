#pragma once
// Disk formats: 8-bit PNG (via libpng), binary PPM/PGM, and a lossless raw
// dump of double samples for numeric comparison of texture layers.
// All decode paths normalize through from_bytes; 16-bit and alpha sources are
// rejected rather than converted.
#include <algorithm>
#include <bit>
#include <cctype>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "errors.hpp"
#include "image.hpp"

namespace ssdt {

enum class ImageFormat { Png, Ppm, Pgm };

/** Infer the container from the file extension (.png/.ppm/.pgm). */
inline ImageFormat format_from_extension(const std::string& path) {
    std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos)
        throw FormatError("no file extension to infer an image format from: '" +
                          path + "'");
    std::string ext = path.substr(dot + 1);
    for (char& c : ext)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == "png")
        return ImageFormat::Png;
    if (ext == "ppm")
        return ImageFormat::Ppm;
    if (ext == "pgm")
        return ImageFormat::Pgm;
    throw FormatError("unsupported image extension '." + ext + "'");
}

namespace detail {

inline std::vector<std::uint8_t> interleave(const std::vector<std::uint8_t>& planar,
                                            int width, int height, int channels) {
    std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::uint8_t> inter(n * channels);
    for (int c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < n; ++i)
            inter[i * channels + c] = planar[static_cast<std::size_t>(c) * n + i];
    return inter;
}

inline std::vector<std::uint8_t> deinterleave(const std::vector<std::uint8_t>& inter,
                                              int width, int height, int channels) {
    std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::uint8_t> planar(n * channels);
    for (int c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < n; ++i)
            planar[static_cast<std::size_t>(c) * n + i] = inter[i * channels + c];
    return planar;
}

struct PngReadHandle {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadHandle() {
        if (png)
            png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp)
            std::fclose(fp);
    }
};

struct PngWriteHandle {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngWriteHandle() {
        if (png)
            png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp)
            std::fclose(fp);
    }
};

inline ChannelImage read_png(const std::string& path) {
    PngReadHandle s;
    s.fp = std::fopen(path.c_str(), "rb");
    if (!s.fp)
        throw IoError("cannot open '" + path + "' for reading");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, s.fp) != 8 || png_sig_cmp(sig, 0, 8))
        throw FormatError("'" + path + "' is not a PNG file");
    s.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                   nullptr);
    if (s.png)
        s.info = png_create_info_struct(s.png);
    if (!s.png || !s.info)
        throw DecodeError("png decoder initialization failed");

    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(s.png)))
        throw DecodeError("corrupt PNG data in '" + path + "'");
    png_init_io(s.png, s.fp);
    png_set_sig_bytes(s.png, 8);
    png_read_info(s.png, s.info);

    if (png_get_bit_depth(s.png, s.info) == 16)
        throw FormatError("16-bit PNG is not supported: '" + path + "'");
    png_byte color = png_get_color_type(s.png, s.info);
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA || color == PNG_COLOR_TYPE_RGB_ALPHA)
        throw FormatError("PNG alpha channels are not supported: '" + path + "'");
    if (png_get_valid(s.png, s.info, PNG_INFO_tRNS))
        throw FormatError("PNG transparency is not supported: '" + path + "'");
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(s.png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(s.png, s.info) < 8)
        png_set_expand_gray_1_2_4_to_8(s.png);
    png_read_update_info(s.png, s.info);

    int width = static_cast<int>(png_get_image_width(s.png, s.info));
    int height = static_cast<int>(png_get_image_height(s.png, s.info));
    int channels = png_get_channels(s.png, s.info);
    if (channels != 1 && channels != 3)
        throw FormatError("PNG channel count must be 1 or 3: '" + path + "'");
    std::size_t rowbytes = png_get_rowbytes(s.png, s.info);
    if (rowbytes != static_cast<std::size_t>(width) * channels)
        throw DecodeError("unexpected PNG row size in '" + path + "'");

    pixels.resize(rowbytes * height);
    rows.resize(height);
    for (int y = 0; y < height; ++y)
        rows[y] = pixels.data() + rowbytes * y;
    png_read_image(s.png, rows.data());
    png_read_end(s.png, nullptr);
    return from_bytes(deinterleave(pixels, width, height, channels), width,
                      height, channels);
}

inline void write_png_bytes(const std::string& path,
                            const std::vector<std::uint8_t>& planar, int width,
                            int height, int channels) {
    PngWriteHandle s;
    s.fp = std::fopen(path.c_str(), "wb");
    if (!s.fp)
        throw IoError("cannot open '" + path + "' for writing");
    s.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                    nullptr);
    if (s.png)
        s.info = png_create_info_struct(s.png);
    if (!s.png || !s.info)
        throw IoError("png encoder initialization failed");

    std::vector<std::uint8_t> inter = interleave(planar, width, height, channels);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = inter.data() + static_cast<std::size_t>(width) * channels * y;
    if (setjmp(png_jmpbuf(s.png)))
        throw IoError("PNG write failed for '" + path + "'");
    png_init_io(s.png, s.fp);
    png_set_IHDR(s.png, s.info, width, height, 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(s.png, s.info);
    png_write_image(s.png, rows.data());
    png_write_end(s.png, s.info);
}

inline ChannelImage read_pnm(const std::string& path,
                             const std::vector<char>& bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space();
        std::size_t start = pos;
        while (pos < bytes.size() &&
               std::isdigit(static_cast<unsigned char>(bytes[pos])))
            ++pos;
        if (pos == start)
            throw DecodeError("malformed header in '" + path + "'");
        return std::stol(std::string(bytes.data() + start, pos - start));
    };

    if (bytes.size() < 2 || bytes[0] != 'P' ||
        (bytes[1] != '5' && bytes[1] != '6'))
        throw FormatError("'" + path + "' is not a binary PPM/PGM file");
    int channels = bytes[1] == '6' ? 3 : 1;
    pos = 2;
    long width = read_int();
    long height = read_int();
    long maxval = read_int();
    if (width < 1 || height < 1)
        throw DecodeError("bad dimensions in '" + path + "'");
    if (maxval != 255)
        throw FormatError("only 8-bit PPM/PGM (maxval 255) is supported: '" +
                          path + "'");
    ++pos; // the single whitespace byte terminating the header
    std::size_t need = static_cast<std::size_t>(width) * height * channels;
    if (pos + need > bytes.size())
        throw DecodeError("truncated pixel data in '" + path + "'");
    std::vector<std::uint8_t> inter(need);
    std::memcpy(inter.data(), bytes.data() + pos, need);
    return from_bytes(deinterleave(inter, static_cast<int>(width),
                                   static_cast<int>(height), channels),
                      static_cast<int>(width), static_cast<int>(height),
                      channels);
}

inline void write_pnm_bytes(const std::string& path,
                            const std::vector<std::uint8_t>& planar, int width,
                            int height, int channels) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << (channels == 3 ? "P6" : "P5") << '\n'
        << width << ' ' << height << '\n'
        << "255\n";
    std::vector<std::uint8_t> inter = interleave(planar, width, height, channels);
    out.write(reinterpret_cast<const char*>(inter.data()),
              static_cast<std::streamsize>(inter.size()));
    if (!out.good())
        throw IoError("write failed for '" + path + "'");
}

inline void write_bytes_as(const std::string& path,
                           const std::vector<std::uint8_t>& planar, int width,
                           int height, int channels, ImageFormat format) {
    switch (format) {
    case ImageFormat::Png:
        write_png_bytes(path, planar, width, height, channels);
        return;
    case ImageFormat::Ppm:
        if (channels != 3)
            throw FormatError("P6 output needs a 3-channel image: '" + path + "'");
        write_pnm_bytes(path, planar, width, height, channels);
        return;
    case ImageFormat::Pgm:
        if (channels != 1)
            throw FormatError("P5 output needs a 1-channel image: '" + path + "'");
        write_pnm_bytes(path, planar, width, height, channels);
        return;
    }
}

} // namespace detail

/** Decode a PNG/PPM/PGM file, dispatching on magic bytes. */
inline ChannelImage read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x89 &&
        bytes[1] == 'P')
        return detail::read_png(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' &&
        (bytes[1] == '5' || bytes[1] == '6'))
        return detail::read_pnm(path, bytes);
    throw FormatError("unrecognized image format in '" + path + "'");
}

/** Quantize to 8 bits and encode. */
inline void write_image(const std::string& path, const ChannelImage& img,
                        ImageFormat format) {
    detail::write_bytes_as(path, to_bytes(img), img.width(), img.height(),
                           img.channels(), format);
}

inline void write_image(const std::string& path, const ChannelImage& img) {
    write_image(path, img, format_from_extension(path));
}

/** Encode a signed texture layer with the display offset convention:
 *  stored byte = round(clamp(v*0.5 + 0.5, 0, 1)*255). */
inline void write_texture_image(const std::string& path, const ChannelImage& v,
                                ImageFormat format) {
    std::vector<std::uint8_t> planar(v.size());
    const double* p = v.data();
    for (std::size_t i = 0; i < planar.size(); ++i)
        planar[i] = to_byte(p[i] * 0.5 + 0.5);
    detail::write_bytes_as(path, planar, v.width(), v.height(), v.channels(),
                           format);
}

inline void write_texture_image(const std::string& path, const ChannelImage& v) {
    write_texture_image(path, v, format_from_extension(path));
}

/** Lossless dump: "SSDT1\n<width> <height> <channels>\n" then row-major
 *  channel-planar doubles, little-endian. */
inline void write_raw_dump(const std::string& path, const ChannelImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << "SSDT1\n"
        << img.width() << ' ' << img.height() << ' ' << img.channels() << '\n';
    std::vector<unsigned char> payload(img.size() * 8);
    const double* src = img.data();
    for (std::size_t i = 0; i < img.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &src[i], 8);
        for (int b = 0; b < 8; ++b)
            payload[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out.good())
        throw IoError("write failed for '" + path + "'");
}

inline ChannelImage read_raw_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    std::string magic;
    if (!std::getline(in, magic) || magic != "SSDT1")
        throw FormatError("'" + path + "' is not a raw dump file");
    std::string header;
    if (!std::getline(in, header))
        throw DecodeError("missing dimension header in '" + path + "'");
    std::istringstream hs(header);
    int width = 0, height = 0, channels = 0;
    if (!(hs >> width >> height >> channels))
        throw DecodeError("malformed dimension header in '" + path + "'");
    if (width < 2 || height < 2 || (channels != 1 && channels != 3))
        throw DecodeError("bad dimensions in '" + path + "'");
    ChannelImage img(width, height, channels);
    std::vector<unsigned char> payload(img.size() * 8);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(in.gcount()) != payload.size())
        throw DecodeError("truncated sample data in '" + path + "'");
    double* dst = img.data();
    for (std::size_t i = 0; i < img.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(payload[i * 8 + b]) << (8 * b);
        std::memcpy(&dst[i], &bits, 8);
    }
    return img;
}

} // namespace ssdt
