#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace aidx {

// H x W x C samples, row-major with interleaved channels, stored as doubles
// in [0, max_value]. 8-bit sources use max_value = 255.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int height, int width, int channels, double max_value, double fill = 0.0);
  ImageBuffer(int height, int width, int channels, double max_value, std::vector<double> samples);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  double max_value() const noexcept { return max_value_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& samples() const noexcept { return data_; }

  double& at(int row, int col, int ch = 0) { return data_[index(row, col, ch)]; }
  double at(int row, int col, int ch = 0) const { return data_[index(row, col, ch)]; }

  std::size_t index(int row, int col, int ch = 0) const noexcept {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(col)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(ch);
  }

  bool same_shape(const ImageBuffer& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  // Throws InvalidArgument if any sample is outside [0, max_value] or non-finite.
  void validate_range() const;

  // Clamp every sample into [0, max_value].
  void clamp_to_range();

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  double max_value_ = 255.0;
  std::vector<double> data_;
};

ImageBuffer load_image(const std::filesystem::path& path);

// PNG when the extension is .png, otherwise P5/P6 by channel count.
// Samples are quantized to 8 bits with round-half-up on the 0..255 scale.
void save_image(const ImageBuffer& img, const std::filesystem::path& path);

ImageBuffer to_grayscale(const ImageBuffer& img);

// Corner-aligned bilinear resampling.
ImageBuffer resize_bilinear(const ImageBuffer& img, int new_height, int new_width);

// Inverted image is resized to the reference dimensions when they differ.
ImageBuffer match_dimensions(const ImageBuffer& img, const ImageBuffer& reference);

// Same shape, scaled to a new declared maximum.
ImageBuffer rescale_range(const ImageBuffer& img, double new_max);

// FNV-1a over shape and sample bits; keys precomputed lookups.
std::uint64_t fingerprint(const ImageBuffer& img);

// Luminance weights (ITU-R BT.601).
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

}  // namespace aidx
