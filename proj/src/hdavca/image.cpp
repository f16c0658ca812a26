#include "hdavca/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hdavca/error.hpp"

namespace hdavca {

Raster::Raster(int width, int height, double fill)
    : width_(width), height_(height) {
  Require(width >= 0 && height >= 0, ErrorCode::kInvalidArgument, "negative raster size");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Raster::Raster(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  Require(width >= 0 && height >= 0, ErrorCode::kInvalidArgument, "negative raster size");
  Require(data_.size() == static_cast<std::size_t>(width) * height, ErrorCode::kDimension,
          "raster data length does not match width*height");
}

double Raster::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(x, y);
}

StereoPair::StereoPair(GrayImage left_view, GrayImage right_view)
    : left(std::move(left_view)), right(std::move(right_view)) {
  Require(left.width() == right.width() && left.height() == right.height(),
          ErrorCode::kDimension, "stereo views differ in size");
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "unreadable file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GrayImage decode_png(const std::vector<unsigned char>& bytes, const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    png_image_free(&image);
    Fail(ErrorCode::kIo, "unreadable file: " + path);
  }
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    Fail(ErrorCode::kFormat, "zero-sized image: " + path);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
  // Alpha is composited over black when no background is given.
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    Fail(ErrorCode::kIo, "unreadable file: " + path);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  GrayImage out(w, h);
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const png_byte* p = pixels.data() + i * channels;
    dst[i] = color ? kLumaR * p[0] + kLumaG * p[1] + kLumaB * p[2] : static_cast<double>(p[0]);
  }
  return out;
}

// Header token reader for PNM: skips whitespace and '#' comments.
bool next_token(const std::vector<unsigned char>& bytes, std::size_t& pos, std::string& token) {
  token.clear();
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
    token.push_back(static_cast<char>(bytes[pos++]));
  }
  return !token.empty();
}

GrayImage decode_pgm(const std::vector<unsigned char>& bytes, const std::string& path) {
  std::size_t pos = 2;
  std::string tok;
  long dims[3] = {0, 0, 0};
  for (long& d : dims) {
    if (!next_token(bytes, pos, tok)) Fail(ErrorCode::kIo, "unreadable file: " + path);
    char* end = nullptr;
    d = std::strtol(tok.c_str(), &end, 10);
    if (*end != '\0' || d < 0) Fail(ErrorCode::kIo, "unreadable file: " + path);
  }
  const long w = dims[0], h = dims[1], maxval = dims[2];
  if (w == 0 || h == 0) Fail(ErrorCode::kFormat, "zero-sized image: " + path);
  if (maxval <= 0 || maxval > 255) Fail(ErrorCode::kFormat, "unsupported format: PGM maxval " + tok);
  ++pos;  // single whitespace after maxval
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (pos > bytes.size() || bytes.size() - pos < n) Fail(ErrorCode::kIo, "unreadable file: " + path);
  GrayImage out(static_cast<int>(w), static_cast<int>(h));
  auto dst = out.data();
  const double scale = 255.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = maxval == 255 ? static_cast<double>(bytes[pos + i]) : bytes[pos + i] * scale;
  }
  return out;
}

}  // namespace

GrayImage load_image(const std::string& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes, path);
  if (bytes.empty()) Fail(ErrorCode::kIo, "unreadable file: " + path);
  Fail(ErrorCode::kFormat, "unsupported format: " + path);
}

void save_pgm(const GrayImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write file: " + path);
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> bytes(img.size());
  auto src = img.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::clamp(std::lround(src[i]), 0L, 255L));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorCode::kIo, "cannot write file: " + path);
}

Raster resize_bilinear(const Raster& img, int new_width, int new_height) {
  Require(new_width >= 1 && new_height >= 1, ErrorCode::kInvalidArgument,
          "resize target must be at least 1x1");
  Require(!img.empty(), ErrorCode::kInvalidArgument, "cannot resize an empty raster");
  if (new_width == img.width() && new_height == img.height()) return img;

  struct Tap {
    int i0, i1;
    double f;
  };
  auto taps = [](int src, int dst) {
    std::vector<Tap> t(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
      double s = (i + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, src - 1);
      t[i] = {i0, i1, s - i0};
    }
    return t;
  };
  const auto tx = taps(img.width(), new_width);
  const auto ty = taps(img.height(), new_height);

  Raster out(new_width, new_height);
  for (int y = 0; y < new_height; ++y) {
    const double* r0 = img.row(ty[y].i0);
    const double* r1 = img.row(ty[y].i1);
    const double fy = ty[y].f;
    double* dst = out.row(y);
    for (int x = 0; x < new_width; ++x) {
      const auto& c = tx[x];
      const double top = r0[c.i0] + c.f * (r0[c.i1] - r0[c.i0]);
      const double bottom = r1[c.i0] + c.f * (r1[c.i1] - r1[c.i0]);
      dst[x] = top + fy * (bottom - top);
    }
  }
  return out;
}

std::vector<double> gaussian_kernel_1d(int length, double sigma) {
  std::vector<double> k(length);
  const double center = (length - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < length; ++i) {
    const double d = i - center;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

Raster gaussian_blur(const Raster& img, double sigma) {
  if (sigma <= 0.0 || img.empty()) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  const auto k = gaussian_kernel_1d(2 * radius + 1, sigma);
  const int w = img.width(), h = img.height();

  Raster tmp(w, h);
  std::vector<double> line(w + 2 * radius);
  for (int y = 0; y < h; ++y) {
    const double* src = img.row(y);
    for (int i = 0; i < w + 2 * radius; ++i) line[i] = src[std::clamp(i - radius, 0, w - 1)];
    double* dst = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = 0; t <= 2 * radius; ++t) acc += k[t] * line[x + t];
      dst[x] = acc;
    }
  }

  Raster out(w, h);
  std::vector<double> acc(w);
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int t = 0; t <= 2 * radius; ++t) {
      const double* src = tmp.row(std::clamp(y + t - radius, 0, h - 1));
      const double kt = k[t];
      for (int x = 0; x < w; ++x) acc[x] += kt * src[x];
    }
    std::copy(acc.begin(), acc.end(), out.row(y));
  }
  return out;
}

Raster crop(const Raster& img, int x0, int y0, int width, int height) {
  Require(x0 >= 0 && y0 >= 0 && width >= 0 && height >= 0 && x0 + width <= img.width() &&
              y0 + height <= img.height(),
          ErrorCode::kInvalidArgument, "crop rectangle outside image");
  Raster out(width, height);
  for (int y = 0; y < height; ++y) {
    std::copy_n(img.row(y0 + y) + x0, width, out.row(y));
  }
  return out;
}

}  // namespace hdavca
