#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace weft {

// Row-major interleaved grid of doubles. ppi records physical scan density;
// 0 means unknown.
struct ImageGrid {
  int width = 0;
  int height = 0;
  int channels = 0;
  double ppi = 0.0;
  std::vector<double> data;

  ImageGrid() = default;
  ImageGrid(int w, int h, int c, double dpi = 0.0) : width(w), height(h), channels(c), ppi(dpi) {
    if (w <= 0 || h <= 0 || c <= 0)
      throw std::invalid_argument("image dimensions must be positive");
    data.assign(static_cast<std::size_t>(w) * h * c, 0.0);
  }

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  bool same_shape(const ImageGrid& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

inline ImageGrid constant_image(int w, int h, int c, double value, double ppi = 0.0) {
  ImageGrid img(w, h, c, ppi);
  for (auto& v : img.data) v = value;
  return img;
}

// Rec. 709 luma; single-channel input passes through.
inline ImageGrid luminance(const ImageGrid& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3)
    throw std::invalid_argument("luminance expects 1 or 3 channels");
  ImageGrid out(img.width, img.height, 1, img.ppi);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const double* px = &img.data[p * 3];
    out.data[p] = 0.2126 * px[0] + 0.7152 * px[1] + 0.0722 * px[2];
  }
  return out;
}

inline void check_same_shape(const ImageGrid& a, const ImageGrid& b, const std::string& what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(what + ": shape mismatch");
}

}  // namespace weft
