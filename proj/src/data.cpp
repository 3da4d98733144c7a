#include "rissc/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>

namespace rissc {

namespace fs = std::filesystem;

std::vector<ImageItem> load_cifar10(const std::string& path) {
  constexpr std::size_t kRecord = 3073;
  constexpr std::size_t kPlane = 1024;  // 32*32
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_cifar10: cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.empty() || bytes.size() % kRecord != 0) {
    throw std::runtime_error("load_cifar10: " + path + " has " +
                             std::to_string(bytes.size()) +
                             " bytes, not a multiple of 3073");
  }
  std::vector<ImageItem> items;
  items.reserve(bytes.size() / kRecord);
  for (std::size_t off = 0; off < bytes.size(); off += kRecord) {
    const auto* rec = reinterpret_cast<const std::uint8_t*>(bytes.data() + off);
    const int label = rec[0];
    if (label > 9) {
      throw std::runtime_error("load_cifar10: record " +
                               std::to_string(off / kRecord) + " has label " +
                               std::to_string(label));
    }
    ImageItem item;
    item.h = 32;
    item.w = 32;
    item.c = 3;
    item.label = label;
    item.pixels.resize(3 * kPlane);
    // channel-planar R,G,B -> interleaved
    for (std::size_t p = 0; p < kPlane; ++p) {
      item.pixels[p * 3 + 0] = rec[1 + p];
      item.pixels[p * 3 + 1] = rec[1 + kPlane + p];
      item.pixels[p * 3 + 2] = rec[1 + 2 * kPlane + p];
    }
    items.push_back(std::move(item));
  }
  return items;
}

// -- PPM ----------------------------------------------------------------------

namespace {

// Skips PPM whitespace and '#' comments, then reads one unsigned integer.
std::size_t ppm_read_uint(std::istream& in, const std::string& path) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  if (ch == EOF || !std::isdigit(ch)) {
    throw std::runtime_error("read_ppm: malformed header in " + path);
  }
  std::size_t value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + static_cast<std::size_t>(ch - '0');
    ch = in.get();
  }
  if (ch != EOF) in.unget();
  return value;
}

}  // namespace

ImageItem read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_ppm: cannot open " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '6') {
    throw std::runtime_error("read_ppm: " + path + " is not a P6 file");
  }
  const std::size_t w = ppm_read_uint(in, path);
  const std::size_t h = ppm_read_uint(in, path);
  const std::size_t maxval = ppm_read_uint(in, path);
  if (w == 0 || h == 0) throw std::runtime_error("read_ppm: empty image " + path);
  if (maxval != 255) {
    throw std::runtime_error("read_ppm: only maxval 255 supported, got " +
                             std::to_string(maxval) + " in " + path);
  }
  in.get();  // single whitespace byte after maxval
  ImageItem item;
  item.h = h;
  item.w = w;
  item.c = 3;
  item.pixels.resize(h * w * 3);
  in.read(reinterpret_cast<char*>(item.pixels.data()),
          static_cast<std::streamsize>(item.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != item.pixels.size()) {
    throw std::runtime_error("read_ppm: truncated pixel data in " + path);
  }
  return item;
}

void write_ppm(const std::string& path, const ImageItem& item) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
  out << "P6\n" << item.w << " " << item.h << "\n255\n";
  if (item.c == 3) {
    out.write(reinterpret_cast<const char*>(item.pixels.data()),
              static_cast<std::streamsize>(item.pixels.size()));
  } else {
    std::vector<std::uint8_t> rgb(item.h * item.w * 3);
    for (std::size_t p = 0; p < item.h * item.w; ++p) {
      rgb[p * 3 + 0] = rgb[p * 3 + 1] = rgb[p * 3 + 2] = item.pixels[p];
    }
    out.write(reinterpret_cast<const char*>(rgb.data()),
              static_cast<std::streamsize>(rgb.size()));
  }
  if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

// -- resampling ------------------------------------------------------------------

namespace {

std::uint8_t luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::lround(y));
}

// Bilinear sample of channel ch at fractional position (y, x).
double bilinear(const ImageItem& img, double y, double x, std::size_t ch) {
  const double yc = std::clamp(y, 0.0, static_cast<double>(img.h - 1));
  const double xc = std::clamp(x, 0.0, static_cast<double>(img.w - 1));
  const std::size_t y0 = static_cast<std::size_t>(yc);
  const std::size_t x0 = static_cast<std::size_t>(xc);
  const std::size_t y1 = std::min(y0 + 1, img.h - 1);
  const std::size_t x1 = std::min(x0 + 1, img.w - 1);
  const double fy = yc - static_cast<double>(y0);
  const double fx = xc - static_cast<double>(x0);
  const double v00 = img.at(y0, x0, ch), v01 = img.at(y0, x1, ch);
  const double v10 = img.at(y1, x0, ch), v11 = img.at(y1, x1, ch);
  return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
}

}  // namespace

ImageItem resize_item(const ImageItem& item, std::size_t target_h,
                      std::size_t target_w, bool grayscale) {
  if (target_h == 0 || target_w == 0) {
    throw std::invalid_argument("resize_item: target size must be positive");
  }
  // center crop to the target aspect ratio
  const double target_aspect = static_cast<double>(target_w) / static_cast<double>(target_h);
  double crop_w = static_cast<double>(item.w);
  double crop_h = crop_w / target_aspect;
  if (crop_h > static_cast<double>(item.h)) {
    crop_h = static_cast<double>(item.h);
    crop_w = crop_h * target_aspect;
  }
  const double off_y = (static_cast<double>(item.h) - crop_h) / 2.0;
  const double off_x = (static_cast<double>(item.w) - crop_w) / 2.0;

  ImageItem gray = item;
  if (grayscale && item.c == 3) {
    gray.c = 1;
    gray.pixels.resize(item.h * item.w);
    for (std::size_t p = 0; p < item.h * item.w; ++p) {
      gray.pixels[p] = luma601(item.pixels[p * 3], item.pixels[p * 3 + 1],
                               item.pixels[p * 3 + 2]);
    }
  }
  const ImageItem& src = (grayscale && item.c == 3) ? gray : item;

  ImageItem out;
  out.h = target_h;
  out.w = target_w;
  out.c = src.c;
  out.label = item.label;
  out.pixels.resize(target_h * target_w * out.c);
  for (std::size_t y = 0; y < target_h; ++y) {
    // sample at pixel centers of the cropped region
    const double sy = off_y + (static_cast<double>(y) + 0.5) * crop_h /
                                  static_cast<double>(target_h) - 0.5;
    for (std::size_t x = 0; x < target_w; ++x) {
      const double sx = off_x + (static_cast<double>(x) + 0.5) * crop_w /
                                    static_cast<double>(target_w) - 0.5;
      for (std::size_t ch = 0; ch < out.c; ++ch) {
        out.pixels[(y * target_w + x) * out.c + ch] =
            static_cast<std::uint8_t>(std::lround(
                std::clamp(bilinear(src, sy, sx, ch), 0.0, 255.0)));
      }
    }
  }
  return out;
}

std::vector<ImageItem> load_images(const std::string& dir, std::size_t target_h,
                                   std::size_t target_w, bool grayscale) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("load_images: " + dir + " is not a directory");
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) names.push_back(entry.path().string());
  }
  std::sort(names.begin(), names.end());
  std::vector<ImageItem> items;
  for (const std::string& name : names) {
    try {
      items.push_back(resize_item(read_ppm(name), target_h, target_w, grayscale));
    } catch (const std::exception& e) {
      std::cerr << "load_images: skipping " << name << ": " << e.what() << "\n";
    }
  }
  if (items.empty()) {
    throw std::runtime_error("load_images: no decodable images in " + dir);
  }
  return items;
}

// -- batching --------------------------------------------------------------------

Batcher::Batcher(std::size_t n_items, std::size_t batch_size, std::uint64_t seed)
    : n_items_(n_items), batch_size_(batch_size), seed_(seed) {
  if (batch_size_ < 1) throw std::invalid_argument("Batcher: batch_size must be >= 1");
}

std::vector<std::vector<std::size_t>> Batcher::epoch_batches(std::size_t epoch) const {
  std::vector<std::size_t> order(n_items_);
  for (std::size_t i = 0; i < n_items_; ++i) order[i] = i;
  std::mt19937_64 rng(seed_ + 0x9E3779B97F4A7C15ULL * (epoch + 1));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n_items_; start += batch_size_) {
    const std::size_t end = std::min(start + batch_size_, n_items_);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

// -- surface tiling ----------------------------------------------------------------

std::vector<int> tile_pixels(const ImageItem& item) {
  std::vector<int> out(item.dims());
  const std::size_t tiled_cols = item.w * item.c;
  for (std::size_t y = 0; y < item.h; ++y) {
    for (std::size_t ch = 0; ch < item.c; ++ch) {
      for (std::size_t x = 0; x < item.w; ++x) {
        out[y * tiled_cols + ch * item.w + x] = item.at(y, x, ch);
      }
    }
  }
  return out;
}

ImageItem untile_values(const std::vector<double>& values, std::size_t h,
                        std::size_t w, std::size_t c) {
  if (values.size() != h * w * c) {
    throw std::invalid_argument("untile_values: size mismatch");
  }
  ImageItem item;
  item.h = h;
  item.w = w;
  item.c = c;
  item.pixels.resize(h * w * c);
  const std::size_t tiled_cols = w * c;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t x = 0; x < w; ++x) {
        const double v = std::clamp(values[y * tiled_cols + ch * w + x], 0.0, 1.0);
        item.pixels[(y * w + x) * c + ch] =
            static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return item;
}

}  // namespace rissc
