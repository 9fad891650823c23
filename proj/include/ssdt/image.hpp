#pragma once
// Dense planar grids: ChannelImage (width x height x channels, channel-planar
// storage) and ScalarField, the single-plane working buffer of the solvers.
// Intensities are doubles, nominally in [0,1]; only finiteness is enforced.
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

namespace ssdt {

class ScalarField {
public:
    ScalarField() = default;
    ScalarField(int width, int height, double fill = 0.0)
        : width_(width), height_(height) {
        if (width < 1 || height < 1)
            throw DimensionError("ScalarField: dimensions must be at least 1x1");
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    // Row-major: at(x, y) addresses column x of row y.
    double& at(int x, int y) { return data_[index(x, y)]; }
    double at(int x, int y) const { return data_[index(x, y)]; }
    bool same_shape(const ScalarField& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

class ChannelImage {
public:
    ChannelImage() = default;
    ChannelImage(int width, int height, int channels, double fill = 0.0)
        : width_(width), height_(height), channels_(channels) {
        if (width < 2 || height < 2)
            throw DimensionError("ChannelImage: needs at least 2 samples per axis");
        if (channels != 1 && channels != 3)
            throw DimensionError("ChannelImage: channel count must be 1 or 3");
        data_.assign(plane_size() * channels, fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t plane_size() const {
        return static_cast<std::size_t>(width_) * height_;
    }
    std::size_t size() const { return data_.size(); }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* plane(int c) { return data_.data() + plane_size() * c; }
    const double* plane(int c) const { return data_.data() + plane_size() * c; }
    double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }
    bool same_shape(const ChannelImage& other) const {
        return width_ == other.width_ && height_ == other.height_ &&
               channels_ == other.channels_;
    }

    ScalarField channel(int c) const {
        ScalarField out(width_, height_);
        const double* src = plane(c);
        std::copy(src, src + plane_size(), out.data());
        return out;
    }

    void set_channel(int c, const ScalarField& plane_in) {
        if (plane_in.width() != width_ || plane_in.height() != height_)
            throw DimensionError("set_channel: plane shape mismatch");
        std::copy(plane_in.data(), plane_in.data() + plane_size(), plane(c));
    }

private:
    std::size_t index(int x, int y, int c) const {
        return plane_size() * c + static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/** Quantize one intensity to a byte: round(clamp(v,0,1)*255). */
inline std::uint8_t to_byte(double v) {
    double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

/** Normalize 8-bit samples (channel-planar, same layout as ChannelImage data)
 *  into [0,1] intensities via byte/255. */
inline ChannelImage from_bytes(const std::vector<std::uint8_t>& raw, int width,
                               int height, int channels) {
    ChannelImage img(width, height, channels);
    if (raw.size() != img.size())
        throw DimensionError("from_bytes: sample count does not match dimensions");
    double* dst = img.data();
    for (std::size_t i = 0; i < raw.size(); ++i)
        dst[i] = raw[i] / 255.0;
    return img;
}

/** Quantize back to 8-bit samples, clamping out-of-range values. */
inline std::vector<std::uint8_t> to_bytes(const ChannelImage& img) {
    std::vector<std::uint8_t> out(img.size());
    const double* src = img.data();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = to_byte(src[i]);
    return out;
}

inline void require_finite(const ChannelImage& img, const std::string& what) {
    const double* p = img.data();
    for (std::size_t i = 0; i < img.size(); ++i)
        if (!std::isfinite(p[i]))
            throw ParameterError(what + ": non-finite sample values");
}

} // namespace ssdt
