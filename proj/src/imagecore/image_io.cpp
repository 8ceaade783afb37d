#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "aindex/error.hpp"
#include "aindex/image.hpp"

namespace aidx {

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::MissingFile, path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_png_signature(const std::vector<unsigned char>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

ImageBuffer decode_png(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::CorruptStream, path.string() + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": 16-bit PNG");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLORMAP) ||
                     (image.format & PNG_FORMAT_FLAG_COLOR);
  const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  const int channels = color ? 3 : 1;
  const int stored = channels + (alpha ? 1 : 0);
  image.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB)
                       : (alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);

  std::vector<png_byte> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::CorruptStream, path.string() + ": " + msg);
  }

  const int height = static_cast<int>(image.height);
  const int width = static_cast<int>(image.width);
  ImageBuffer out(height, width, channels, 255.0);
  auto dst = out.data();
  // Alpha is dropped rather than composited.
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    for (int ch = 0; ch < channels; ++ch) {
      dst[p * channels + ch] = static_cast<double>(raw[p * stored + ch]);
    }
  }
  return out;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(const std::vector<unsigned char>& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
    tok.push_back(static_cast<char>(bytes[pos++]));
  }
  return tok;
}

ImageBuffer decode_pnm(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  std::size_t pos = 0;
  const std::string magic = pnm_token(bytes, pos);
  const int channels = magic == "P5" ? 1 : (magic == "P6" ? 3 : 0);
  if (channels == 0) throw Error(ErrorCode::UnsupportedFormat, path.string());

  auto number = [&](const char* what) {
    const std::string tok = pnm_token(bytes, pos);
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), ::isdigit)) {
      throw Error(ErrorCode::CorruptStream, path.string() + ": bad " + what);
    }
    return std::stoi(tok);
  };
  const int width = number("width");
  const int height = number("height");
  const int maxval = number("maxval");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::CorruptStream, path.string() + ": empty image");
  if (maxval != 255) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": maxval " + std::to_string(maxval));
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(ErrorCode::CorruptStream, path.string() + ": missing raster");
  }
  ++pos;
  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - pos < n) {
    throw Error(ErrorCode::CorruptStream, path.string() + ": truncated raster");
  }
  std::vector<double> samples(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                              bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return ImageBuffer(height, width, channels, 255.0, std::move(samples));
}

std::vector<unsigned char> quantize(const ImageBuffer& img) {
  std::vector<unsigned char> out(img.size());
  const double k = 255.0 / img.max_value();
  auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = std::floor(std::clamp(src[i] * k, 0.0, 255.0) + 0.5);
    out[i] = static_cast<unsigned char>(std::min(v, 255.0));
  }
  return out;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

ImageBuffer load_image(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  if (has_png_signature(bytes)) return decode_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes, path);
  throw Error(ErrorCode::UnsupportedFormat, path.string());
}

void save_image(const ImageBuffer& img, const std::filesystem::path& path) {
  const auto bytes = quantize(img);
  if (lower_extension(path) == ".png") {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
      throw Error(ErrorCode::IoError, path.string() + ": " + image.message);
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, path.string());
  out << (img.channels() == 3 ? "P6" : "P5") << '\n'
      << img.width() << ' ' << img.height() << '\n'
      << 255 << '\n';
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, path.string());
}

}  // namespace aidx
