#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bdn/arch.hpp"
#include "bdn/color.hpp"
#include "bdn/image.hpp"
#include "bdn/net.hpp"
#include "bdn/ops.hpp"

namespace bdn {

enum class Variant { Bdn, Bfcn, BdnWp, BdnSoftD, BdnKlD };
enum class Head { Binary, Gaussian, Dist10 };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Bdn: return "bdn";
    case Variant::Bfcn: return "bfcn";
    case Variant::BdnWp: return "bdn-wp";
    case Variant::BdnSoftD: return "bdn-soft-d";
    case Variant::BdnKlD: return "bdn-kl-d";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "bdn") return Variant::Bdn;
  if (s == "bfcn") return Variant::Bfcn;
  if (s == "bdn-wp") return Variant::BdnWp;
  if (s == "bdn-soft-d") return Variant::BdnSoftD;
  if (s == "bdn-kl-d") return Variant::BdnKlD;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

inline const char* head_name(Head h) {
  switch (h) {
    case Head::Binary: return "binary";
    case Head::Gaussian: return "gaussian";
    case Head::Dist10: return "dist10";
  }
  return "?";
}

inline Head parse_head(const std::string& s) {
  if (s == "binary") return Head::Binary;
  if (s == "gaussian") return Head::Gaussian;
  if (s == "dist10") return Head::Dist10;
  throw std::invalid_argument("unknown head '" + s + "'");
}

/// Head width implied by a (variant, head) pair. The distribution variants
/// force the 10-channel head.
inline int head_channels(Variant v, Head h) {
  if (v == Variant::BdnSoftD || v == Variant::BdnKlD) return 10;
  return h == Head::Dist10 ? 10 : 2;
}

/// The assembled model: the attribute stacks (14 supervised pathways for
/// BDN; the same-capacity unsupervised/composite stacks for BFCN / BDN-WP,
/// kept as parallel groups so the conv1-conv3 parameter capacity is
/// identical by construction) plus the synthesis network.
class BdnModel {
 public:
  Variant variant = Variant::Bdn;
  Head head = Head::Binary;
  Profile profile;
  std::vector<Net> pathways;  // headless attribute stacks, one per style
  Net synthesis;
  bool frozen_pathways = false;

  BdnModel() = default;

  static BdnModel build(Variant variant, Head head, const Profile& profile,
                        Rng& rng) {
    BdnModel m;
    m.variant = variant;
    m.head = head;
    m.profile = profile;
    for (int i = 0; i < profile.n_styles; ++i) {
      Net p(pathway_headless_spec("pathway" + std::to_string(i), 3,
                                  profile.pathway_channels));
      p.init(rng);
      m.pathways.push_back(std::move(p));
    }
    m.synthesis = build_synthesis(profile, rng, head_channels(variant, head));
    return m;
  }

  /// Reflect-pads both sides up to the next multiple of 4. Inputs smaller
  /// than 16x16 are rejected.
  static Tensor pad_input(const Tensor& rgb01) {
    if (rgb01.shape.h < kMinInputSide || rgb01.shape.w < kMinInputSide)
      throw std::invalid_argument("BdnModel: input " + rgb01.shape.str() +
                                  " is below the minimum accepted size 16x16");
    const auto round_up = [](int v) {
      return (v + kSizeMultiple - 1) / kSizeMultiple * kSizeMultiple;
    };
    return reflect_pad(rgb01, round_up(rgb01.shape.h), round_up(rgb01.shape.w));
  }

  /// Feed-forward pass on a padded batch: runs every pathway to conv3,
  /// channel-concatenates with the HSV planes (all at input/4), then the
  /// synthesis network. Returns the (n, head, 1, 1) GAP output.
  Tensor forward(const Tensor& rgb01_padded, bool training, Rng* rng) {
    const Shape& s = rgb01_padded.shape;
    if (s.h % kSizeMultiple || s.w % kSizeMultiple || s.h < kMinInputSide ||
        s.w < kMinInputSide)
      throw std::invalid_argument(
          "BdnModel::forward: input " + s.str() +
          " must be padded to a multiple of 4 and at least 16x16");
    Tensor hsv = hsv_planes_tensor(rgb01_padded);
    std::vector<Tensor> feats;
    feats.reserve(pathways.size());
    for (Net& p : pathways)
      feats.push_back(p.forward(rgb01_padded, training, rng));
    std::vector<const Tensor*> parts{&hsv};
    for (const Tensor& f : feats) parts.push_back(&f);
    concat_cache_ = concat_channels(parts);
    return synthesis.forward(concat_cache_, training, rng);
  }

  /// Image-level convenience wrapper (batch of one).
  Tensor forward_image(const RgbImage& img, bool training, Rng* rng) {
    return forward(pad_input(image_to_tensor01(img)), training, rng);
  }

  /// Backprop from the head gradient. Pathway gradients are skipped
  /// entirely when the pathways are frozen.
  void backward(const Tensor& grad_head) {
    Tensor g = synthesis.backward(grad_head);
    if (frozen_pathways) return;
    int c_off = 3;  // HSV planes carry no parameters
    for (Net& p : pathways) {
      Tensor slice = slice_channels(g, c_off, profile.pathway_channels);
      p.backward(slice);
      c_off += profile.pathway_channels;
    }
  }

  std::vector<ParamView> pathway_params() {
    std::vector<ParamView> out;
    for (Net& p : pathways)
      for (ParamView& v : p.params()) out.push_back(std::move(v));
    return out;
  }
  std::vector<ParamView> synthesis_params() { return synthesis.params(); }

  void zero_grad() {
    for (Net& p : pathways) p.zero_grad();
    synthesis.zero_grad();
  }

  /// Parameter count of the conv1-conv3 attribute stage — the quantity that
  /// must agree across BDN, BFCN and BDN-WP.
  std::size_t attribute_param_count() const {
    std::size_t n = 0;
    for (const Net& p : pathways) n += p.param_count();
    return n;
  }

  std::size_t param_count() const {
    return attribute_param_count() + synthesis.param_count();
  }

 private:
  Tensor concat_cache_;
};

/// conv1-conv4 + GAP + softmax over 2 classes for one style pathway.
inline std::vector<double> pathway_predict_style(Net& pathway,
                                                 const RgbImage& img) {
  Tensor out = pathway.forward(BdnModel::pad_input(image_to_tensor01(img)),
                               /*training=*/false, nullptr);
  if (out.shape.c < 2 || out.shape.h != 1 || out.shape.w != 1)
    throw std::invalid_argument(
        "pathway_predict_style: net does not end in a class head");
  std::vector<double> probs(out.shape.c);
  double mx = out.data[0];
  for (double v : out.data) mx = std::max(mx, v);
  double z = 0.0;
  for (int i = 0; i < out.shape.c; ++i) {
    probs[i] = std::exp(out.data[i] - mx);
    z += probs[i];
  }
  for (double& p : probs) p /= z;
  return probs;
}

}  // namespace bdn
