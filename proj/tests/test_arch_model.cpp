#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "bdn/arch.hpp"
#include "bdn/checkpoint.hpp"
#include "bdn/image.hpp"
#include "bdn/model.hpp"
#include "bdn/net.hpp"
#include "bdn/rng.hpp"

using namespace bdn;

namespace {

Tensor random_tensor(Shape s, Rng& rng, double scale = 1.0) {
  Tensor t(s);
  for (double& v : t.data) v = scale * rng.gaussian();
  return t;
}

RgbImage random_image(int h, int w, Rng& rng) {
  RgbImage img(h, w);
  for (double& v : img.data) v = std::floor(rng.uniform(0.0, 256.0));
  return img;
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Arch, PathwayShapesOn64Input) {
  Rng rng(1);
  const Profile p = Profile::full();
  Net pathway = build_pathway(p, rng, "pw");
  // conv3 activation: truncate after relu3 and run
  Net headless = pathway.truncated(kPathwayHeadlessNodes, "pw_headless");
  Tensor x = random_tensor(Shape{1, 3, 64, 64}, rng, 0.3);
  Tensor attr = headless.forward(x, false, nullptr);
  EXPECT_EQ(attr.shape, (Shape{1, 64, 16, 16}));
  Tensor head = pathway.forward(x, false, nullptr);
  EXPECT_EQ(head.shape, (Shape{1, 2, 1, 1}));
}

TEST(Arch, SynthesisInputChannels) {
  EXPECT_EQ(synthesis_input_channels(Profile::full()), 899);  // 3 + 14*64
  EXPECT_EQ(synthesis_input_channels(Profile::desk()), 67);   // 3 + 4*16
}

TEST(Arch, MergedStackChannelArithmetic) {
  // Binding the pathways horizontally gives 64 x 14 = 896 channels per
  // attribute layer; the per-group capacity is unchanged.
  const Profile p = Profile::full();
  EXPECT_EQ(p.pathway_channels * p.n_styles, 896);
}

TEST(Arch, ScaeReconstructsInputShape) {
  Rng rng(2);
  Net scae = build_scae(Profile::desk(), rng);
  for (int size : {16, 32, 64}) {
    Tensor x = random_tensor(Shape{1, 3, size, size}, rng, 0.3);
    Tensor recon = scae.forward(x, false, nullptr);
    EXPECT_EQ(recon.shape, x.shape) << size;
  }
}

TEST(Arch, ScaeEncoderTransferIsBitExact) {
  Rng rng(3);
  const Profile p = Profile::desk();
  Net scae = build_scae(p, rng);
  Net pw1 = build_pathway(p, rng, "pw1");
  Net pw2 = build_pathway(p, rng, "pw2");
  transfer_scae_encoder(scae, pw1);
  transfer_scae_encoder(scae, pw2);
  EXPECT_EQ(pw1.conv_at(0).weights.data, pw2.conv_at(0).weights.data);
  EXPECT_EQ(pw1.conv_at(2).weights.data, scae.conv_at(2).weights.data);
  // conv3 stays independently initialized
  EXPECT_NE(pw1.conv_at(4).weights.data, pw2.conv_at(4).weights.data);
}

TEST(Model, HeadLengthsPerVariant) {
  Rng rng(4);
  const Profile p = Profile::desk();
  for (auto [variant, head, want] :
       {std::tuple{Variant::Bdn, Head::Binary, 2},
        {Variant::Bfcn, Head::Binary, 2},
        {Variant::BdnWp, Head::Binary, 2},
        {Variant::Bdn, Head::Gaussian, 2},
        {Variant::BdnSoftD, Head::Dist10, 10},
        {Variant::BdnKlD, Head::Dist10, 10}}) {
    BdnModel m = BdnModel::build(variant, head, p, rng);
    Tensor x = random_tensor(Shape{1, 3, 32, 32}, rng, 0.2);
    Tensor out = m.forward(x, false, nullptr);
    EXPECT_EQ(out.shape.c, want) << variant_name(variant);
    EXPECT_EQ(out.shape.h, 1);
    EXPECT_EQ(out.shape.w, 1);
  }
}

TEST(Model, FullyConvolutionalAcrossInputSizes) {
  Rng rng(5);
  BdnModel m = BdnModel::build(Variant::Bdn, Head::Binary, Profile::desk(), rng);
  for (auto [h, w] : {std::pair{64, 64}, {96, 64}, {16, 16}, {36, 52}}) {
    Tensor x = random_tensor(Shape{1, 3, h, w}, rng, 0.2);
    Tensor out = m.forward(x, false, nullptr);
    EXPECT_EQ(out.shape, (Shape{1, 2, 1, 1})) << h << "x" << w;
  }
}

TEST(Model, AttributeBlocksShareSpatialSize) {
  Rng rng(6);
  const Profile p = Profile::desk();
  Net headless(pathway_headless_spec("pw", 3, p.pathway_channels));
  headless.init(rng);
  for (auto [h, w] : {std::pair{64, 64}, {96, 64}}) {
    Tensor x = random_tensor(Shape{2, 3, h, w}, rng, 0.2);
    Tensor attr = headless.forward(x, false, nullptr);
    Tensor hsv = hsv_planes_tensor(x);
    EXPECT_EQ(attr.shape.h, h / 4);
    EXPECT_EQ(attr.shape.w, w / 4);
    EXPECT_EQ(hsv.shape.h, attr.shape.h);
    EXPECT_EQ(hsv.shape.w, attr.shape.w);
  }
}

TEST(Model, PadInputRules) {
  Tensor ok(Shape{1, 3, 16, 16});
  EXPECT_EQ(BdnModel::pad_input(ok).shape, (Shape{1, 3, 16, 16}));
  Tensor odd(Shape{1, 3, 18, 21});
  EXPECT_EQ(BdnModel::pad_input(odd).shape, (Shape{1, 3, 20, 24}));
  Tensor small(Shape{1, 3, 15, 20});
  EXPECT_THROW(BdnModel::pad_input(small), std::invalid_argument);
}

TEST(Model, InferenceIsDeterministic) {
  Rng rng(7);
  BdnModel m = BdnModel::build(Variant::Bdn, Head::Binary, Profile::desk(), rng);
  Tensor x = random_tensor(Shape{1, 3, 32, 32}, rng, 0.2);
  Tensor a = m.forward(x, false, nullptr);
  Tensor b = m.forward(x, false, nullptr);
  EXPECT_EQ(a.data, b.data);
}

TEST(Model, PathwayPredictStyleSumsToOne) {
  Rng rng(8);
  double dev_acc = 0.0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    Net pathway = build_pathway(Profile::desk(), rng, "pw");
    RgbImage img = random_image(48, 48, rng);
    const auto probs = pathway_predict_style(pathway, img);
    ASSERT_EQ(probs.size(), 2u);
    ASSERT_NEAR(probs[0] + probs[1], 1.0, 1e-12);
    dev_acc += std::abs(probs[0] - 0.5);
  }
  // untrained networks answer near-uniformly on average
  EXPECT_LT(dev_acc / trials, 0.2);
}

TEST(Model, ParameterCapacityParityAcrossVariants) {
  Rng rng(9);
  const Profile p = Profile::desk();
  BdnModel bdn = BdnModel::build(Variant::Bdn, Head::Binary, p, rng);
  BdnModel bfcn = BdnModel::build(Variant::Bfcn, Head::Binary, p, rng);
  BdnModel wp = BdnModel::build(Variant::BdnWp, Head::Binary, p, rng);
  EXPECT_EQ(bdn.attribute_param_count(), bfcn.attribute_param_count());
  EXPECT_EQ(bdn.attribute_param_count(), wp.attribute_param_count());
}

TEST(Checkpoint, NetRoundTripBitExact) {
  Rng rng(10);
  const Profile p = Profile::desk();
  Net scae = build_scae(p, rng);
  const std::string path = tmp_path("bdn_scae_test.ckpt");
  save_net_checkpoint(scae, "scae", p, path);
  Profile loaded_profile;
  Net back = load_net_checkpoint(path, "scae", &loaded_profile);
  EXPECT_EQ(loaded_profile, p);
  EXPECT_EQ(back.flat_params(), scae.flat_params());
  // forward agreement, bit for bit
  Tensor x = random_tensor(Shape{1, 3, 16, 16}, rng, 0.3);
  EXPECT_EQ(back.forward(x, false, nullptr).data,
            scae.forward(x, false, nullptr).data);
  std::filesystem::remove(path);
}

TEST(Checkpoint, KindMismatchRejected) {
  Rng rng(11);
  const Profile p = Profile::desk();
  Net scae = build_scae(p, rng);
  const std::string path = tmp_path("bdn_kind_test.ckpt");
  save_net_checkpoint(scae, "scae", p, path);
  EXPECT_THROW(load_net_checkpoint(path, "pathway"), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(Checkpoint, ModelRoundTripAndVariantCheck) {
  Rng rng(12);
  BdnModel m = BdnModel::build(Variant::Bdn, Head::Binary, Profile::desk(), rng);
  const std::string path = tmp_path("bdn_model_test.ckpt");
  save_model(m, path);

  BdnModel back = load_model(path, "bdn");
  Tensor x = random_tensor(Shape{1, 3, 32, 32}, rng, 0.2);
  EXPECT_EQ(back.forward(x, false, nullptr).data,
            m.forward(x, false, nullptr).data);

  EXPECT_THROW(load_model(path, "bfcn"), std::runtime_error);

  const CheckpointInfo info = peek_checkpoint(path);
  EXPECT_EQ(info.kind, "bdn");
  EXPECT_EQ(info.variant, "bdn");
  EXPECT_EQ(info.param_count, m.param_count());
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptFileRejected) {
  const std::string path = tmp_path("bdn_corrupt_test.ckpt");
  std::ofstream(path) << "not a checkpoint";
  EXPECT_THROW(load_model(path), std::runtime_error);
  std::filesystem::remove(path);
}
