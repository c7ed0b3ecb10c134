// Copyright 2026 The ldpfed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LDPFED_DATASET_HPP
#define LDPFED_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ldpfed/errors.hpp"
#include "ldpfed/rng.hpp"

namespace ldpfed {

/// A labeled dataset with features normalized to [0, 1].
struct Dataset {
  size_t width = 0;              // feature dimension d
  std::vector<double> features;  // row-major, size() * width entries
  std::vector<int> labels;       // class index per example
  int class_count = 0;

  size_t size() const { return labels.size(); }

  const double* row(size_t i) const { return features.data() + i * width; }

  void validate() const {
    if (features.size() != labels.size() * width)
      throw shape_error("dataset: feature matrix does not match label count");
    for (int y : labels)
      if (y < 0 || y >= class_count)
        throw shape_error("dataset: label outside [0, class_count)");
  }
};

// ---------------------------------------------------------------------------
// Synthetic Gaussian blobs
// ---------------------------------------------------------------------------

/// Generates `classes` Gaussian blobs in `width` dimensions. Class means sit
/// on a sphere of radius `separation`; features have unit variance and are
/// affinely rescaled into [0, 1] (clipping the far tails). `sample_stream`
/// selects an independent draw with the same class means, which is how a
/// matching held-out test set is produced.
inline Dataset synth_dataset(int classes, int per_class, int width,
                             double separation, uint64_t seed,
                             uint64_t sample_stream = 0) {
  if (classes <= 0 || per_class <= 0 || width <= 0 || separation < 0)
    throw config_error("synth_dataset: classes, per_class, width must be positive");

  Stream means_rng(derive_seed(seed, {stream_tag::kBlobMeans}));
  std::vector<double> means(static_cast<size_t>(classes) * width);
  for (int c = 0; c < classes; ++c) {
    double norm2 = 0.0;
    for (int j = 0; j < width; ++j) {
      double g = means_rng.gaussian();
      means[static_cast<size_t>(c) * width + j] = g;
      norm2 += g * g;
    }
    double norm = std::sqrt(norm2);
    if (norm == 0.0) norm = 1.0;
    for (int j = 0; j < width; ++j)
      means[static_cast<size_t>(c) * width + j] *= separation / norm;
  }

  // Map the typical range [-(sep+3), sep+3] onto [0, 1], then clip.
  const double half_range = separation + 3.0;
  Stream noise_rng(derive_seed(seed, {stream_tag::kBlobNoise, sample_stream}));

  Dataset out;
  out.width = static_cast<size_t>(width);
  out.class_count = classes;
  out.labels.reserve(static_cast<size_t>(classes) * per_class);
  out.features.reserve(static_cast<size_t>(classes) * per_class * width);
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      out.labels.push_back(c);
      for (int j = 0; j < width; ++j) {
        double x = means[static_cast<size_t>(c) * width + j] + noise_rng.gaussian();
        double scaled = (x + half_range) / (2.0 * half_range);
        out.features.push_back(std::clamp(scaled, 0.0, 1.0));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// IID partitioning
// ---------------------------------------------------------------------------

/// Shuffled contiguous split into `parts` shards whose sizes differ by at
/// most one. The union of the shards is the input multiset.
inline std::vector<Dataset> partition(const Dataset& data, int parts, uint64_t seed) {
  if (parts <= 0) throw config_error("partition: parts must be positive");
  if (data.size() < static_cast<size_t>(parts))
    throw config_error("partition: fewer examples than shards (" +
                       std::to_string(data.size()) + " < " + std::to_string(parts) + ")");

  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Stream rng(derive_seed(seed, {stream_tag::kPartition}));
  rng.shuffle(order);

  size_t base = data.size() / parts;
  size_t extra = data.size() % parts;
  std::vector<Dataset> shards;
  shards.reserve(parts);
  size_t pos = 0;
  for (int p = 0; p < parts; ++p) {
    size_t count = base + (static_cast<size_t>(p) < extra ? 1 : 0);
    Dataset shard;
    shard.width = data.width;
    shard.class_count = data.class_count;
    shard.labels.reserve(count);
    shard.features.reserve(count * data.width);
    for (size_t i = 0; i < count; ++i) {
      size_t src = order[pos++];
      shard.labels.push_back(data.labels[src]);
      const double* r = data.row(src);
      shard.features.insert(shard.features.end(), r, r + data.width);
    }
    shards.push_back(std::move(shard));
  }
  return shards;
}

// ---------------------------------------------------------------------------
// IDX binary format
// ---------------------------------------------------------------------------

namespace idx_detail {

inline constexpr uint32_t kImageMagic = 0x00000803;
inline constexpr uint32_t kLabelMagic = 0x00000801;

inline uint32_t read_u32_be(std::istream& in, const std::string& path, size_t offset) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw format_error(path + ": truncated at byte " + std::to_string(offset));
  return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) | (uint32_t{b[2]} << 8) |
         uint32_t{b[3]};
}

inline void write_u32_be(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<char*>(b), 4);
}

}  // namespace idx_detail

/// Parses an IDX image/label file pair (the FashionMNIST/MNIST container:
/// big-endian magic, dimension sizes, unsigned-byte payload). Pixels are
/// scaled by 1/255. Throws format_error with the byte offset on any
/// structural problem; never returns a partial dataset.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  using namespace idx_detail;

  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw data_error("cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw data_error("cannot open " + labels_path);

  uint32_t magic = read_u32_be(img, images_path, 0);
  if (magic != kImageMagic) {
    std::ostringstream os;
    os << images_path << ": bad magic 0x" << std::hex << magic << " at offset 0";
    throw format_error(os.str());
  }
  uint32_t n = read_u32_be(img, images_path, 4);
  uint32_t rows = read_u32_be(img, images_path, 8);
  uint32_t cols = read_u32_be(img, images_path, 12);

  uint32_t lmagic = read_u32_be(lab, labels_path, 0);
  if (lmagic != kLabelMagic) {
    std::ostringstream os;
    os << labels_path << ": bad magic 0x" << std::hex << lmagic << " at offset 0";
    throw format_error(os.str());
  }
  uint32_t ln = read_u32_be(lab, labels_path, 4);
  if (ln != n)
    throw format_error(images_path + ": image count " + std::to_string(n) +
                       " does not match label count " + std::to_string(ln));

  size_t d = static_cast<size_t>(rows) * cols;
  std::vector<unsigned char> pixels(static_cast<size_t>(n) * d);
  if (!img.read(reinterpret_cast<char*>(pixels.data()), pixels.size()))
    throw format_error(images_path + ": truncated at byte " +
                       std::to_string(16 + img.gcount()));

  std::vector<unsigned char> raw_labels(n);
  if (!lab.read(reinterpret_cast<char*>(raw_labels.data()), raw_labels.size()))
    throw format_error(labels_path + ": truncated at byte " +
                       std::to_string(8 + lab.gcount()));

  Dataset out;
  out.width = d;
  out.features.resize(pixels.size());
  for (size_t i = 0; i < pixels.size(); ++i) out.features[i] = pixels[i] / 255.0;
  out.labels.assign(raw_labels.begin(), raw_labels.end());
  int max_label = 0;
  for (int y : out.labels) max_label = std::max(max_label, y);
  out.class_count = max_label + 1;
  return out;
}

/// Writes a dataset as an IDX image/label file pair (single-row images of
/// width d). Pixel bytes are round(v * 255), so load_idx(write_idx(ds))
/// reproduces a byte-grid dataset exactly.
inline void write_idx(const Dataset& data, const std::string& images_path,
                      const std::string& labels_path) {
  using namespace idx_detail;

  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw data_error("cannot create " + images_path);
  write_u32_be(img, kImageMagic);
  write_u32_be(img, static_cast<uint32_t>(data.size()));
  write_u32_be(img, 1);
  write_u32_be(img, static_cast<uint32_t>(data.width));
  for (double v : data.features) {
    auto byte = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    img.put(static_cast<char>(byte));
  }
  if (!img) throw data_error("write failed: " + images_path);

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw data_error("cannot create " + labels_path);
  write_u32_be(lab, kLabelMagic);
  write_u32_be(lab, static_cast<uint32_t>(data.size()));
  for (int y : data.labels) lab.put(static_cast<char>(static_cast<unsigned char>(y)));
  if (!lab) throw data_error("write failed: " + labels_path);
}

}  // namespace ldpfed

#endif  // LDPFED_DATASET_HPP
