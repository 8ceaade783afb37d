#include "aindex/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "aindex/error.hpp"

namespace aidx {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptStream: return "CorruptStream";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::NonDifferentiableProvider: return "NonDifferentiableProvider";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::DegenerateObjective: return "DegenerateObjective";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NonDifferentiableInverter: return "NonDifferentiableInverter";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LiveInverterRequired: return "LiveInverterRequired";
  }
  return "Unknown";
}

namespace {

void check_shape(int height, int width, int channels, double max_value) {
  if (height <= 0 || width <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::InvalidArgument,
                "channel count must be 1 or 3, got " + std::to_string(channels));
  }
  if (!(max_value > 0.0) || !std::isfinite(max_value)) {
    throw Error(ErrorCode::InvalidArgument, "max_value must be positive and finite");
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int height, int width, int channels, double max_value, double fill)
    : height_(height), width_(width), channels_(channels), max_value_(max_value) {
  check_shape(height, width, channels, max_value);
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

ImageBuffer::ImageBuffer(int height, int width, int channels, double max_value,
                         std::vector<double> samples)
    : height_(height),
      width_(width),
      channels_(channels),
      max_value_(max_value),
      data_(std::move(samples)) {
  check_shape(height, width, channels, max_value);
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw Error(ErrorCode::DimensionMismatch,
                "sample count " + std::to_string(data_.size()) + " does not match " +
                    std::to_string(height) + "x" + std::to_string(width) + "x" +
                    std::to_string(channels));
  }
}

void ImageBuffer::validate_range() const {
  for (double s : data_) {
    if (!std::isfinite(s) || s < 0.0 || s > max_value_) {
      throw Error(ErrorCode::InvalidArgument,
                  "sample " + std::to_string(s) + " outside [0, " + std::to_string(max_value_) + "]");
    }
  }
}

void ImageBuffer::clamp_to_range() {
  for (double& s : data_) s = std::clamp(s, 0.0, max_value_);
}

ImageBuffer to_grayscale(const ImageBuffer& img) {
  if (img.channels() == 1) return img;
  ImageBuffer out(img.height(), img.width(), 1, img.max_value());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const double y = kLumaR * src[3 * p] + kLumaG * src[3 * p + 1] + kLumaB * src[3 * p + 2];
    dst[p] = std::min(y, img.max_value());
  }
  return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int new_height, int new_width) {
  if (new_height < 1 || new_width < 1) {
    throw Error(ErrorCode::InvalidArgument, "resize target must be at least 1x1");
  }
  if (new_height == img.height() && new_width == img.width()) return img;

  const int channels = img.channels();
  ImageBuffer out(new_height, new_width, channels, img.max_value());

  // Corner-aligned: output endpoints map onto input endpoints. A single output
  // sample along an axis maps to the input center.
  auto source_coord = [](int i, int n_out, int n_in) {
    if (n_out == 1) return 0.5 * (n_in - 1);
    return static_cast<double>(i) * (n_in - 1) / (n_out - 1);
  };

  for (int r = 0; r < new_height; ++r) {
    const double sy = source_coord(r, new_height, img.height());
    const int y0 = std::min(static_cast<int>(std::floor(sy)), img.height() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = sy - y0;
    for (int c = 0; c < new_width; ++c) {
      const double sx = source_coord(c, new_width, img.width());
      const int x0 = std::min(static_cast<int>(std::floor(sx)), img.width() - 1);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = sx - x0;
      for (int ch = 0; ch < channels; ++ch) {
        const double top = (1.0 - tx) * img.at(y0, x0, ch) + tx * img.at(y0, x1, ch);
        const double bottom = (1.0 - tx) * img.at(y1, x0, ch) + tx * img.at(y1, x1, ch);
        out.at(r, c, ch) = std::clamp((1.0 - ty) * top + ty * bottom, 0.0, img.max_value());
      }
    }
  }
  return out;
}

ImageBuffer match_dimensions(const ImageBuffer& img, const ImageBuffer& reference) {
  ImageBuffer out = img;
  if (out.max_value() != reference.max_value()) out = rescale_range(out, reference.max_value());
  if (out.height() != reference.height() || out.width() != reference.width()) {
    out = resize_bilinear(out, reference.height(), reference.width());
  }
  if (out.channels() != reference.channels()) {
    if (reference.channels() == 1) {
      out = to_grayscale(out);
    } else {
      ImageBuffer rgb(out.height(), out.width(), 3, out.max_value());
      for (std::size_t p = 0; p < out.pixel_count(); ++p) {
        for (int ch = 0; ch < 3; ++ch) rgb.data()[3 * p + ch] = out.data()[p];
      }
      out = std::move(rgb);
    }
  }
  return out;
}

ImageBuffer rescale_range(const ImageBuffer& img, double new_max) {
  ImageBuffer out(img.height(), img.width(), img.channels(), new_max);
  const double k = new_max / img.max_value();
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::clamp(src[i] * k, 0.0, new_max);
  return out;
}

std::uint64_t fingerprint(const ImageBuffer& img) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFFu;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(img.height()));
  mix(static_cast<std::uint64_t>(img.width()));
  mix(static_cast<std::uint64_t>(img.channels()));
  mix(std::bit_cast<std::uint64_t>(img.max_value()));
  for (double s : img.data()) mix(std::bit_cast<std::uint64_t>(s));
  return h;
}

}  // namespace aidx
