#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdn/augment.hpp"
#include "bdn/color.hpp"
#include "bdn/image.hpp"
#include "bdn/image_io.hpp"
#include "bdn/ops.hpp"
#include "bdn/rating.hpp"
#include "bdn/rng.hpp"
#include "bdn/tensor.hpp"

namespace bdn {

/// The 14 style attribute columns, in the canonical order.
inline const std::array<std::string, 14> kStyleNames = {
    "complementary_colors", "duotones",      "high_dynamic_range",
    "image_grain",          "light_on_white", "long_exposure",
    "macro",                "motion_blur",    "negative_image",
    "rule_of_thirds",       "shallow_dof",    "silhouettes",
    "soft_focus",           "vanishing_point"};

struct ManifestRecord {
  std::string image_id;
  std::string image_path;  // relative to the manifest's directory
  RatingHistogram ratings;
  std::array<std::uint8_t, 14> style_flags{};
};

struct DatasetManifest {
  std::filesystem::path base_dir;  // resolves relative image paths
  std::vector<ManifestRecord> records;

  std::string resolve(const ManifestRecord& r) const {
    const std::filesystem::path p(r.image_path);
    return p.is_absolute() ? p.string() : (base_dir / p).string();
  }
};

/// One record per line, comma separated, with a fixed header naming every
/// column; chosen for diff-ability and hand editing in tests.
inline std::string manifest_header() {
  std::string h = "image_id,image_path";
  for (int i = 1; i <= 10; ++i) h += ",c" + std::to_string(i);
  for (const auto& s : kStyleNames) h += "," + s;
  return h;
}

inline void write_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_manifest: cannot open " + path);
  f << manifest_header() << "\n";
  for (const ManifestRecord& r : m.records) {
    f << r.image_id << "," << r.image_path;
    for (int i = 0; i < 10; ++i) f << "," << r.ratings.counts[i];
    for (int i = 0; i < 14; ++i) f << "," << int(r.style_flags[i]);
    f << "\n";
  }
  if (!f) throw std::runtime_error("write_manifest: short write to " + path);
}

inline DatasetManifest load_manifest(const std::string& path,
                                     bool check_files = true) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_manifest: cannot open " + path);
  DatasetManifest m;
  m.base_dir = std::filesystem::path(path).parent_path();
  std::string line;
  int line_no = 0;
  const auto fail = [&](const std::string& why) {
    throw std::runtime_error("load_manifest: " + path + ":" +
                             std::to_string(line_no) + ": " + why);
  };
  if (!std::getline(f, line)) fail("missing header");
  ++line_no;
  if (line == manifest_header() + "\r") line.pop_back();
  if (line != manifest_header()) fail("unexpected header '" + line + "'");
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    if (fields.size() != 2 + 10 + 14)
      fail("expected 26 fields, got " + std::to_string(fields.size()));
    ManifestRecord r;
    r.image_id = fields[0];
    r.image_path = fields[1];
    if (r.image_id.empty()) fail("empty image_id");
    for (int i = 0; i < 10; ++i) {
      long long v = 0;
      try {
        v = std::stoll(fields[2 + i]);
      } catch (...) {
        fail("bad rating count '" + fields[2 + i] + "'");
      }
      if (v < 0) fail("negative rating count");
      r.ratings.counts[i] = v;
    }
    for (int i = 0; i < 14; ++i) {
      const std::string& s = fields[12 + i];
      if (s != "0" && s != "1") fail("style flag must be 0 or 1, got '" + s + "'");
      r.style_flags[i] = s == "1" ? 1 : 0;
    }
    if (check_files && !std::filesystem::exists(m.resolve(r)))
      fail("image file not found: " + m.resolve(r));
    m.records.push_back(std::move(r));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Synthetic dataset
// ---------------------------------------------------------------------------

/// Procedural stand-in for a photo corpus. Four base visual factors are
/// rendered (bright field, color tint, dark blob, grain), the style flags
/// are *computed from the rendered pixels* by the rules below (so a
/// rule-based classifier recovers them perfectly), and the mean rating is a
/// weighted sum of the first four flags. Flags 4..13 cycle through the same
/// four rules.
struct SyntheticTaskSpec {
  int image_size = 64;
  int raters = 200;
  double rating_base = 2.0;
  double rating_span = 7.0;
  std::array<double, 4> weights{0.4, 0.3, 0.2, 0.1};
  double sigma_base = 0.5;
  double sigma_slope = 0.25;
  double sigma_mid = 5.5;
  std::string image_format = "png";  // or "braw" for the raw fixture format
};

namespace synth {

/// Luminance / saturation statistics on an 8x8-block-averaged image plus a
/// 4x4 version for the blob rule; full-resolution gradient for grain.
struct ImageStats {
  double mean_luma8 = 0.0;
  double mean_sat8 = 0.0;
  double dark_frac4 = 0.0;
  double grad_full = 0.0;
};

inline ImageStats image_stats(const RgbImage& img) {
  const int h = img.height, w = img.width;
  const auto block_stats = [&](int bs, double& mean_luma, double& mean_sat,
                               double& dark_frac) {
    const int bh = (h + bs - 1) / bs, bw = (w + bs - 1) / bs;
    double luma_acc = 0.0, sat_acc = 0.0;
    int dark = 0;
    for (int by = 0; by < bh; ++by)
      for (int bx = 0; bx < bw; ++bx) {
        double c[3] = {0, 0, 0};
        int count = 0;
        for (int y = by * bs; y < std::min((by + 1) * bs, h); ++y)
          for (int x = bx * bs; x < std::min((bx + 1) * bs, w); ++x) {
            for (int ch = 0; ch < 3; ++ch) c[ch] += img.at(ch, y, x);
            ++count;
          }
        for (int ch = 0; ch < 3; ++ch) c[ch] /= count;
        const double mx = std::max({c[0], c[1], c[2]});
        const double mn = std::min({c[0], c[1], c[2]});
        const double luma = (c[0] + c[1] + c[2]) / 3.0;
        luma_acc += luma;
        sat_acc += mx > 0.0 ? (mx - mn) / mx : 0.0;
        if (luma < 60.0) ++dark;
      }
    mean_luma = luma_acc / (bh * bw);
    mean_sat = sat_acc / (bh * bw);
    dark_frac = static_cast<double>(dark) / (bh * bw);
  };
  ImageStats st;
  double unused;
  block_stats(8, st.mean_luma8, st.mean_sat8, unused);
  double l4, s4;
  block_stats(4, l4, s4, st.dark_frac4);
  double acc = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x + 1 < w; ++x) {
      const double a =
          (img.at(0, y, x) + img.at(1, y, x) + img.at(2, y, x)) / 3.0;
      const double b =
          (img.at(0, y, x + 1) + img.at(1, y, x + 1) + img.at(2, y, x + 1)) / 3.0;
      acc += std::abs(a - b);
    }
  st.grad_full = acc / (static_cast<double>(h) * (w - 1));
  return st;
}

/// The four base style rules; styles beyond 3 reuse them cyclically.
inline bool style_rule(const RgbImage& img, int style_index) {
  const ImageStats st = image_stats(img);
  switch (style_index % 4) {
    case 0: return st.mean_luma8 > 160.0;   // bright field
    case 1: return st.mean_sat8 > 0.25;     // strong tint
    case 2: return st.dark_frac4 > 0.05;    // dark blob
    default: return st.grad_full > 20.0;    // grain
  }
}

}  // namespace synth

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<RgbImage> images;  // parallel to manifest.records
};

/// Renders `n_images` deterministic images, derives all 14 style flags from
/// the pixels, assigns the rating distribution from the first four flags,
/// and (when `out_dir` is non-empty) writes image files plus manifest.csv.
inline SyntheticDataset generate_synthetic(const SyntheticTaskSpec& spec,
                                           int n_images, std::uint64_t seed,
                                           const std::string& out_dir = "") {
  if (n_images <= 0)
    throw std::invalid_argument("generate_synthetic: need a positive count");
  if (spec.image_size < 16)
    throw std::invalid_argument("generate_synthetic: image_size below 16");
  SyntheticDataset ds;
  const bool write = !out_dir.empty();
  if (write) std::filesystem::create_directories(out_dir);
  ds.manifest.base_dir = out_dir;
  Rng root(seed);
  const int sz = spec.image_size;
  for (int idx = 0; idx < n_images; ++idx) {
    Rng rng = root.child(static_cast<std::uint64_t>(idx));
    const bool bright = rng.bernoulli(0.5);
    const bool tint = rng.bernoulli(0.5);
    const bool blob = rng.bernoulli(0.5);
    const bool grain = rng.bernoulli(0.5);

    const double base = (bright ? 215.0 : 110.0) + rng.uniform(-10.0, 10.0);
    double mult[3];
    if (tint) {
      mult[0] = 1.35;
      mult[1] = 0.85;
      mult[2] = 0.80;
    } else {
      mult[0] = 1.02;
      mult[1] = 1.00;
      mult[2] = 0.98;
    }
    // random channel permutation so the tint hue varies
    const int perm = static_cast<int>(rng.uniform_index(3));
    std::swap(mult[0], mult[perm]);

    const double cy = sz / 2.0 + rng.uniform(-6.0, 6.0);
    const double cx = sz / 2.0 + rng.uniform(-6.0, 6.0);
    const double radius = rng.uniform(12.0, 16.0);
    const double noise_sigma = grain ? 40.0 : 4.0;

    RgbImage img(sz, sz);
    for (int y = 0; y < sz; ++y)
      for (int x = 0; x < sz; ++x) {
        const double d = std::hypot(y - cy, x - cx);
        const bool in_blob = blob && d < radius;
        for (int c = 0; c < 3; ++c) {
          double v = in_blob ? 28.0 : base * mult[c];
          v += noise_sigma * rng.gaussian();
          img.at(c, y, x) = std::round(clamp255(v));
        }
      }

    ManifestRecord rec;
    rec.image_id = "img" + std::to_string(idx);
    rec.image_path = rec.image_id + "." + spec.image_format;
    for (int s = 0; s < 14; ++s)
      rec.style_flags[s] = synth::style_rule(img, s) ? 1 : 0;

    double score = 0.0;
    for (int s = 0; s < 4; ++s)
      if (rec.style_flags[s]) score += spec.weights[s];
    const double mu = spec.rating_base + spec.rating_span * score;
    const double sigma =
        spec.sigma_base + spec.sigma_slope * std::abs(mu - spec.sigma_mid);
    for (int r = 0; r < spec.raters; ++r) {
      const double draw = rng.gaussian(mu, sigma);
      const int bin =
          std::clamp(static_cast<int>(std::lround(draw)), 1, 10) - 1;
      ++rec.ratings.counts[bin];
    }

    if (write) write_image(img, (std::filesystem::path(out_dir) / rec.image_path).string());
    ds.manifest.records.push_back(std::move(rec));
    ds.images.push_back(std::move(img));
  }
  if (write)
    write_manifest(ds.manifest,
                   (std::filesystem::path(out_dir) / "manifest.csv").string());
  return ds;
}

// ---------------------------------------------------------------------------
// Batch iteration
// ---------------------------------------------------------------------------

struct Batch {
  std::vector<int> indices;      // positions in the manifest
  std::vector<RgbImage> images;  // augmented in train mode, raw otherwise
};

/// Packs a batch into one (n, 3, H, W) tensor in [0, 1]; images are
/// reflect-padded to the batch's maximum extent rounded up to a multiple
/// of 4 (minimum 16) so the batch is rectangular.
inline Tensor pack_batch(std::span<const RgbImage> images) {
  if (images.empty()) throw std::invalid_argument("pack_batch: empty batch");
  int max_h = 16, max_w = 16;
  for (const RgbImage& img : images) {
    max_h = std::max(max_h, img.height);
    max_w = std::max(max_w, img.width);
  }
  max_h = (max_h + 3) / 4 * 4;
  max_w = (max_w + 3) / 4 * 4;
  Tensor out(Shape{static_cast<int>(images.size()), 3, max_h, max_w});
  for (std::size_t i = 0; i < images.size(); ++i) {
    Tensor one = reflect_pad(image_to_tensor01(images[i]), max_h, max_w);
    std::copy(one.data.begin(), one.data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(i) * one.size());
  }
  return out;
}

/// Shuffled epoch iteration with deterministic per-image augmentation.
/// Images are cached in memory after the first load. In eval mode the
/// streamed images are byte-identical to their stored sources.
class BatchIterator {
 public:
  BatchIterator(const DatasetManifest& manifest, int batch_size,
                std::vector<AugmentOp> pipeline, std::uint64_t seed,
                bool training)
      : manifest_(&manifest),
        batch_size_(batch_size),
        pipeline_(std::move(pipeline)),
        seed_(seed),
        training_(training),
        order_(manifest.records.size()) {
    if (batch_size <= 0)
      throw std::invalid_argument("BatchIterator: batch_size must be >= 1");
    std::iota(order_.begin(), order_.end(), 0);
    cache_.resize(manifest.records.size());
    loaded_.assign(manifest.records.size(), false);
  }

  /// Restricts iteration to a subset of manifest positions (validation
  /// splits, delta-filtered training sets).
  void restrict_to(std::vector<int> indices) {
    order_ = std::move(indices);
    cursor_ = 0;
  }

  void start_epoch(int epoch) {
    cursor_ = 0;
    epoch_ = epoch;
    if (training_) {
      Rng rng(Rng::mix(seed_, 0x50000000ULL + static_cast<std::uint64_t>(epoch)));
      for (std::size_t i = order_.size(); i > 1; --i)
        std::swap(order_[i - 1], order_[rng.uniform_index(i)]);
    }
  }

  bool next(Batch& out) {
    if (cursor_ >= order_.size()) return false;
    const std::size_t end =
        std::min(cursor_ + static_cast<std::size_t>(batch_size_), order_.size());
    out.indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                       order_.begin() + static_cast<std::ptrdiff_t>(end));
    out.images.clear();
    for (int idx : out.indices) {
      const RgbImage& src = load(idx);
      if (training_ && !pipeline_.empty()) {
        const std::uint64_t aug_seed =
            Rng::mix(Rng::mix(seed_, static_cast<std::uint64_t>(epoch_)),
                     static_cast<std::uint64_t>(idx));
        out.images.push_back(augment_pipeline(src, pipeline_, aug_seed));
      } else {
        out.images.push_back(src);
      }
    }
    cursor_ = end;
    return true;
  }

  std::size_t epoch_size() const { return order_.size(); }

  const RgbImage& load(int idx) {
    if (!loaded_[idx]) {
      cache_[idx] = read_image(manifest_->resolve(manifest_->records[idx]));
      loaded_[idx] = true;
    }
    return cache_[idx];
  }

 private:
  const DatasetManifest* manifest_;
  int batch_size_;
  std::vector<AugmentOp> pipeline_;
  std::uint64_t seed_;
  bool training_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
  int epoch_ = 0;
  std::vector<RgbImage> cache_;
  std::vector<bool> loaded_;
};

}  // namespace bdn
