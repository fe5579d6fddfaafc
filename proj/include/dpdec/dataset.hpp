#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "dpdec/error.hpp"
#include "dpdec/rng.hpp"

namespace dpdec {

// Flat sample store; features are row-major, one row per sample.
struct LabeledDataset {
  int feature_dim = 0;
  int num_classes = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }

  const double* row(std::size_t i) const {
    return features.data() + i * static_cast<std::size_t>(feature_dim);
  }

  void append_row(const double* src, int label) {
    features.insert(features.end(), src, src + feature_dim);
    labels.push_back(label);
  }
};

namespace detail {

inline std::uint32_t read_be32(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void write_be32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

}  // namespace detail

// Reads an IDX image/label file pair (the MNIST container format: big-endian
// header, unsigned byte payload). Pixel bytes are scaled to [0, 1].
inline LabeledDataset load_idx_dataset(const std::string& images_path,
                                       const std::string& labels_path) {
  auto img = detail::slurp(images_path);
  auto lab = detail::slurp(labels_path);
  if (img.size() < 16 || detail::read_be32(img.data()) != 0x00000803u)
    throw error(errc::bad_magic, images_path + " is not an idx3-ubyte image file");
  if (lab.size() < 8 || detail::read_be32(lab.data()) != 0x00000801u)
    throw error(errc::bad_magic, labels_path + " is not an idx1-ubyte label file");

  std::uint32_t n = detail::read_be32(img.data() + 4);
  std::uint32_t rows = detail::read_be32(img.data() + 8);
  std::uint32_t cols = detail::read_be32(img.data() + 12);
  std::uint32_t n_lab = detail::read_be32(lab.data() + 4);
  if (n != n_lab)
    throw error(errc::count_mismatch, std::to_string(n) + " images vs " + std::to_string(n_lab) +
                                          " labels");
  std::size_t pixels = static_cast<std::size_t>(n) * rows * cols;
  if (img.size() < 16 + pixels) throw error(errc::truncated_file, images_path);
  if (lab.size() < 8 + n) throw error(errc::truncated_file, labels_path);

  LabeledDataset d;
  d.feature_dim = static_cast<int>(rows * cols);
  d.features.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i) d.features[i] = img[16 + i] / 255.0;
  d.labels.resize(n);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    d.labels[i] = lab[8 + i];
    max_label = std::max(max_label, d.labels[i]);
  }
  d.num_classes = max_label + 1;
  return d;
}

inline void save_idx_images(const std::string& path, int rows, int cols,
                            const std::vector<std::uint8_t>& pixels) {
  std::size_t per_image = static_cast<std::size_t>(rows) * cols;
  if (per_image == 0 || pixels.size() % per_image != 0)
    throw std::invalid_argument("pixel buffer is not a whole number of images");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  detail::write_be32(out, 0x00000803u);
  detail::write_be32(out, static_cast<std::uint32_t>(pixels.size() / per_image));
  detail::write_be32(out, static_cast<std::uint32_t>(rows));
  detail::write_be32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

inline void save_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  detail::write_be32(out, 0x00000801u);
  detail::write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

// Deterministic stand-in for a handwritten-digit corpus: each class is a fixed
// blob-mixture template, each sample a shifted, rescaled, noise-corrupted copy.
// Same seed and part give the same bytes on every platform.
struct SyntheticImageConfig {
  int rows = 28;
  int cols = 28;
  int classes = 10;
  std::vector<long> class_counts;  // one entry per class
  double noise_std = 0.22;         // pixel noise on the [0, 1] scale
  int max_shift = 3;
  int part = 0;  // 0 = train, 1 = test; distinct sample draws, shared templates
  std::uint64_t seed = 1;
};

// Per-class label counts of the classic 60k/10k digit corpus, used so that
// synthetic files exercise the same histogram checks as the real ones.
inline const std::vector<long>& canonical_train_counts() {
  static const std::vector<long> c = {5923, 6742, 5958, 6131, 5842, 5421, 5918, 6265, 5851, 5949};
  return c;
}

inline const std::vector<long>& canonical_test_counts() {
  static const std::vector<long> c = {980, 1135, 1032, 1010, 982, 892, 958, 1028, 974, 1009};
  return c;
}

namespace detail {

inline std::vector<double> class_template(const SyntheticImageConfig& cfg, int cls) {
  auto rng = RngStream::keyed(cfg.seed, "template", static_cast<std::uint64_t>(cls));
  struct Blob {
    double cx, cy, r, amp;
  };
  std::vector<Blob> blobs(6);
  for (auto& b : blobs) {
    b.cx = 4.0 + rng.uniform01() * (cfg.cols - 9);
    b.cy = 4.0 + rng.uniform01() * (cfg.rows - 9);
    b.r = 1.5 + rng.uniform01() * 3.0;
    b.amp = 0.5 + rng.uniform01() * 0.5;
  }
  std::vector<double> img(static_cast<std::size_t>(cfg.rows) * cfg.cols, 0.0);
  double peak = 0.0;
  for (int y = 0; y < cfg.rows; ++y) {
    for (int x = 0; x < cfg.cols; ++x) {
      double v = 0.0;
      for (const auto& b : blobs) {
        double dx = x - b.cx, dy = y - b.cy;
        v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.r * b.r));
      }
      img[static_cast<std::size_t>(y) * cfg.cols + x] = v;
      peak = std::max(peak, v);
    }
  }
  for (double& v : img) v /= peak;
  return img;
}

}  // namespace detail

// Renders image bytes and labels. Samples of each class are generated in class
// order and then interleaved by a seeded shuffle so files look natural.
inline std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>> render_synthetic_images(
    const SyntheticImageConfig& cfg) {
  if (static_cast<int>(cfg.class_counts.size()) != cfg.classes)
    throw std::invalid_argument("class_counts must have one entry per class");

  std::vector<std::vector<double>> templates(cfg.classes);
  for (int c = 0; c < cfg.classes; ++c) templates[c] = detail::class_template(cfg, c);

  long total = 0;
  for (long c : cfg.class_counts) total += c;
  std::size_t per_image = static_cast<std::size_t>(cfg.rows) * cfg.cols;

  std::vector<int> order;
  order.reserve(total);
  for (int c = 0; c < cfg.classes; ++c)
    order.insert(order.end(), cfg.class_counts[c], c);
  auto shuffle_rng = RngStream::keyed(cfg.seed, "arrange", static_cast<std::uint64_t>(cfg.part));
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[shuffle_rng.below(i + 1)]);

  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(total) * per_image);
  std::vector<std::uint8_t> labels(total);
  std::vector<long> drawn(cfg.classes, 0);
  for (long i = 0; i < total; ++i) {
    int c = order[i];
    long idx = drawn[c]++;
    auto rng = RngStream::keyed(cfg.seed, "image", static_cast<std::uint64_t>(cfg.part),
                                static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(idx));
    int dx = static_cast<int>(rng.below(2 * cfg.max_shift + 1)) - cfg.max_shift;
    int dy = static_cast<int>(rng.below(2 * cfg.max_shift + 1)) - cfg.max_shift;
    double amp = 0.75 + rng.uniform01() * 0.4;
    const auto& tpl = templates[c];
    std::uint8_t* out = pixels.data() + i * per_image;
    for (int y = 0; y < cfg.rows; ++y) {
      for (int x = 0; x < cfg.cols; ++x) {
        int sx = x - dx, sy = y - dy;
        double v = 0.0;
        if (sx >= 0 && sx < cfg.cols && sy >= 0 && sy < cfg.rows)
          v = tpl[static_cast<std::size_t>(sy) * cfg.cols + sx];
        v = v * amp + cfg.noise_std * rng.normal();
        v = std::clamp(v, 0.0, 1.0);
        out[static_cast<std::size_t>(y) * cfg.cols + x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
    labels[i] = static_cast<std::uint8_t>(c);
  }
  return {std::move(pixels), std::move(labels)};
}

inline LabeledDataset make_synthetic_dataset(const SyntheticImageConfig& cfg) {
  auto [pixels, labels] = render_synthetic_images(cfg);
  LabeledDataset d;
  d.feature_dim = cfg.rows * cfg.cols;
  d.num_classes = cfg.classes;
  d.features.resize(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) d.features[i] = pixels[i] / 255.0;
  d.labels.assign(labels.begin(), labels.end());
  return d;
}

}  // namespace dpdec
