#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rissc {

/// One source image: H x W x C interleaved bytes, C is 1 or 3.
struct ImageItem {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c = 1;
  std::vector<std::uint8_t> pixels;  // row-major, channel-interleaved
  std::optional<int> label;

  std::size_t dims() const { return h * w * c; }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t ch) const {
    return pixels[(y * w + x) * c + ch];
  }
};

/// Parses one CIFAR-10 binary batch file: 3073-byte records of
/// 1 label byte + 3072 pixel bytes (channel-planar R,G,B, row-major),
/// yielding 32 x 32 x 3 items.
std::vector<ImageItem> load_cifar10(const std::string& path);

/// Loads every decodable image in a directory (PPM P6), center-crops to
/// the target aspect, resamples bilinearly to target_h x target_w, and
/// optionally converts to grayscale via ITU-R 601 luma. Undecodable files
/// are skipped with a warning; an empty result is an error. Files are
/// visited in name order.
std::vector<ImageItem> load_images(const std::string& dir, std::size_t target_h,
                                   std::size_t target_w, bool grayscale);

/// Downscales an item to target size (and optionally grayscale) through
/// the same crop/resample path load_images uses.
ImageItem resize_item(const ImageItem& item, std::size_t target_h,
                      std::size_t target_w, bool grayscale);

/// Epoch batching with a seeded shuffle. Each epoch is a fresh
/// permutation; the final partial batch is kept.
class Batcher {
 public:
  Batcher(std::size_t n_items, std::size_t batch_size, std::uint64_t seed);
  /// Item indices of every batch for one epoch.
  std::vector<std::vector<std::size_t>> epoch_batches(std::size_t epoch) const;

 private:
  std::size_t n_items_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

/// Pixels of an item in surface order: channels tiled side by side into
/// one rows x (w*c) plane, row-major. Values stay 0..255.
std::vector<int> tile_pixels(const ImageItem& item);

/// Inverse of tile_pixels on normalized [0,1] values: rebuilds an
/// H x W x C byte image (values denormalized with rounding).
ImageItem untile_values(const std::vector<double>& values, std::size_t h,
                        std::size_t w, std::size_t c);

// PPM (P6, maxval 255) support used by load_images and image dumps.
ImageItem read_ppm(const std::string& path);
void write_ppm(const std::string& path, const ImageItem& item);

}  // namespace rissc
