#pragma once

#include <stdexcept>
#include <string>

#include "bdn/net.hpp"
#include "bdn/rng.hpp"

namespace bdn {

/// Channel-count profile. `full` is the published configuration (64-channel
/// pathways, 128-channel synthesis, 14 styles); `desk` scales the channels
/// by 1/4 and uses a 4-style subset so the whole protocol runs in CI.
struct Profile {
  int pathway_channels = 64;
  int synthesis_channels = 128;
  int n_styles = 14;

  static Profile full() { return {64, 128, 14}; }
  static Profile desk() { return {16, 32, 4}; }

  bool operator==(const Profile&) const = default;
};

inline constexpr double kDropoutRate = 0.5;

/// Minimum input side accepted by the networks; inputs are padded up to a
/// multiple of this stride product so the attribute maps align at size/4.
inline constexpr int kMinInputSide = 16;
inline constexpr int kSizeMultiple = 4;

/// conv1 5x5/s2, conv2 3x3/s2, conv3 3x3/s1, dropout, conv4 1x1 to the class
/// count, GAP. Paddings make conv3's map exactly input/4 for multiple-of-4
/// inputs, matching the downsampled HSV planes.
inline NetSpec pathway_spec(const std::string& name, int in_ch, int channels,
                            int n_classes) {
  NetSpec s;
  s.name = name;
  s.layers = {
      LayerSpec::conv("conv1", in_ch, channels, 5, 2, 2),
      LayerSpec::relu("relu1"),
      LayerSpec::conv("conv2", channels, channels, 3, 2, 1),
      LayerSpec::relu("relu2"),
      LayerSpec::conv("conv3", channels, channels, 3, 1, 1),
      LayerSpec::relu("relu3"),
      LayerSpec::dropout("drop3", kDropoutRate),
      LayerSpec::conv("conv4", channels, n_classes, 1, 1, 0),
      LayerSpec::gap("gap"),
  };
  return s;
}

/// Index of the first node past conv3's ReLU: the headless attribute stack.
inline constexpr std::size_t kPathwayHeadlessNodes = 6;

inline NetSpec pathway_headless_spec(const std::string& name, int in_ch,
                                     int channels) {
  NetSpec full = pathway_spec(name, in_ch, channels, 2);
  full.name = name;
  full.layers.resize(kPathwayHeadlessNodes);
  return full;
}

/// 4-layer stacked convolutional autoencoder: conv1/conv2 as in the pathway,
/// then the mirror-symmetric deconvolutions back to the input channels.
/// Output-padding 1 inverts the stride-2 maps exactly on even-sized inputs.
inline NetSpec scae_spec(const std::string& name, int in_ch, int channels) {
  NetSpec s;
  s.name = name;
  s.layers = {
      LayerSpec::conv("conv1", in_ch, channels, 5, 2, 2),
      LayerSpec::relu("relu1"),
      LayerSpec::conv("conv2", channels, channels, 3, 2, 1),
      LayerSpec::relu("relu2"),
      LayerSpec::deconv("deconv2", channels, channels, 3, 2, 1, 1),
      LayerSpec::relu("relu_d2"),
      LayerSpec::deconv("deconv1", channels, in_ch, 5, 2, 2, 1),
  };
  return s;
}

/// Same layer pattern as a pathway but wider, consuming the concatenated
/// HSV planes plus all pathway attributes; the head is 2- or 10-channel.
inline NetSpec synthesis_spec(const std::string& name, int in_ch, int channels,
                              int head_channels) {
  NetSpec s = pathway_spec(name, in_ch, channels, head_channels);
  s.name = name;
  return s;
}

inline int synthesis_input_channels(const Profile& p) {
  return 3 + p.n_styles * p.pathway_channels;
}

inline Net build_pathway(const Profile& p, Rng& rng, const std::string& name,
                         int n_classes = 2) {
  Net net(pathway_spec(name, 3, p.pathway_channels, n_classes));
  net.init(rng);
  return net;
}

inline Net build_scae(const Profile& p, Rng& rng,
                      const std::string& name = "scae") {
  Net net(scae_spec(name, 3, p.pathway_channels));
  net.init(rng);
  return net;
}

inline Net build_synthesis(const Profile& p, Rng& rng, int head_channels,
                           const std::string& name = "synthesis") {
  Net net(synthesis_spec(name, synthesis_input_channels(p),
                         p.synthesis_channels, head_channels));
  net.init(rng);
  return net;
}

/// Copies the SCAE encoder (conv1, conv2) into a pathway's first two convs.
inline void transfer_scae_encoder(const Net& scae, Net& pathway) {
  const auto copy = [](const ConvLayer& src, ConvLayer& dst,
                       const char* which) {
    if (!(src.weights.shape == dst.weights.shape))
      throw std::invalid_argument(std::string("transfer_scae_encoder: ") +
                                  which + " shape mismatch " +
                                  src.weights.shape.str() + " vs " +
                                  dst.weights.shape.str());
    dst.weights.data = src.weights.data;
    dst.bias = src.bias;
  };
  copy(scae.conv_at(0), pathway.conv_at(0), "conv1");
  copy(scae.conv_at(2), pathway.conv_at(2), "conv2");
}

}  // namespace bdn
