#include <gtest/gtest.h>

#include <filesystem>
#include <vector>

#include "bdn/checkpoint.hpp"
#include "bdn/data.hpp"
#include "bdn/model.hpp"
#include "bdn/optim.hpp"
#include "bdn/train.hpp"

using namespace bdn;
namespace fs = std::filesystem;

namespace {

// Tiny profile and dataset so the training-protocol contracts can be
// exercised in milliseconds; the desk-scale run lives in the acceptance
// suite.
Profile tiny_profile() { return {4, 8, 2}; }

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string str() const { return path_.string(); }
  fs::path path() const { return path_; }

 private:
  fs::path path_;
};

DatasetManifest tiny_dataset(TempDir& dir, int n = 24, std::uint64_t seed = 1) {
  SyntheticTaskSpec spec;
  spec.image_size = 16;
  spec.raters = 60;
  generate_synthetic(spec, n, seed, dir.str());
  return load_manifest((dir.path() / "manifest.csv").string());
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.batch_size = 8;
  c.epochs_scae = 3;
  c.epochs_pathway = 3;
  c.epochs_finetune = 3;
  c.val_fraction = 0.25;
  c.seed = 9;
  return c;
}

std::vector<Net> fresh_pathways(const Profile& p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Net> out;
  for (int i = 0; i < p.n_styles; ++i) {
    Net net(pathway_headless_spec("pathway" + std::to_string(i), 3,
                                  p.pathway_channels));
    net.init(rng);
    out.push_back(std::move(net));
  }
  return out;
}

}  // namespace

TEST(Plateau, StrictDecreaseNeverFires) {
  PlateauDetector d(3, 1e-3);
  for (double loss = 1.0; loss > 0.1; loss -= 0.1)
    EXPECT_FALSE(d.observe(loss));
  EXPECT_EQ(d.fires(), 0);
}

TEST(Plateau, ConstantLossesFireOnceAfterPatience) {
  PlateauDetector d(3, 1e-3);
  EXPECT_FALSE(d.observe(0.5));
  EXPECT_FALSE(d.observe(0.5));
  EXPECT_FALSE(d.observe(0.5));
  EXPECT_TRUE(d.observe(0.5));  // patience+1-th epoch
  EXPECT_EQ(d.fires(), 1);
}

TEST(Plateau, RuleTraceFromFixedLosses) {
  // losses (1.0, 0.9, 0.9, 0.9, 0.9), patience 3, min_delta 1e-3:
  // fires exactly at epoch 5.
  PlateauDetector d(3, 1e-3);
  const double losses[] = {1.0, 0.9, 0.9, 0.9, 0.9};
  std::vector<int> fired_at;
  for (int i = 0; i < 5; ++i)
    if (d.observe(losses[i])) fired_at.push_back(i + 1);
  ASSERT_EQ(fired_at.size(), 1u);
  EXPECT_EQ(fired_at[0], 5);
}

TEST(Plateau, AtMostTwoFires) {
  PlateauDetector d(1, 1e9);
  int fires = 0;
  for (int i = 0; i < 10; ++i) fires += d.observe(1.0);
  EXPECT_EQ(fires, 2);
}

TEST(Scae, ReconstructionLossDropsAndLrConstant) {
  TempDir dir("bdn_train_scae");
  DatasetManifest m = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  c.epochs_scae = 5;
  TrainLog log;
  Net scae = pretrain_scae(m, c, tiny_profile(), &log);
  ASSERT_EQ(log.rows.size(), 5u);
  EXPECT_LT(log.rows.back().train_loss, log.rows.front().train_loss);
  for (const auto& row : log.rows) {
    EXPECT_EQ(row.stage, "scae");
    EXPECT_DOUBLE_EQ(row.lr_pathway, 0.05);
    EXPECT_DOUBLE_EQ(row.lr_synthesis, 0.05);
    EXPECT_TRUE(row.event.empty());
  }
}

TEST(Scae, RejectsEmptyDataset) {
  DatasetManifest empty;
  EXPECT_THROW(pretrain_scae(empty, tiny_config(), tiny_profile()),
               std::invalid_argument);
}

TEST(Pathway, TrainsAndDiscardsHead) {
  TempDir dir("bdn_train_pathway");
  DatasetManifest m = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  const Profile p = tiny_profile();
  Rng rng(c.seed);
  Net scae = build_scae(p, rng);
  Net pathway = train_pathway(m, 0, scae, c, p);
  EXPECT_EQ(pathway.spec().layers.size(), 9u);
  Net headless = pathway.truncated(kPathwayHeadlessNodes, "pathway0");
  EXPECT_EQ(headless.spec().layers.size(), kPathwayHeadlessNodes);
  EXPECT_EQ(headless.spec().layers.back().kind, LayerSpec::Kind::Relu);
  // conv1-conv3 parameters carry over exactly
  EXPECT_EQ(headless.conv_at(0).weights.data, pathway.conv_at(0).weights.data);
  EXPECT_EQ(headless.conv_at(4).weights.data, pathway.conv_at(4).weights.data);
}

TEST(Pathway, RejectsStyleWithNoPositives) {
  TempDir dir("bdn_train_nopos");
  DatasetManifest m = tiny_dataset(dir);
  for (ManifestRecord& r : m.records) r.style_flags[2] = 0;
  TrainConfig c = tiny_config();
  Rng rng(c.seed);
  Net scae = build_scae(tiny_profile(), rng);
  EXPECT_THROW(train_pathway(m, 2, scae, c, tiny_profile()),
               std::invalid_argument);
}

TEST(Finetune, FrozenPathwaysStayBitIdentical) {
  TempDir dir("bdn_train_frozen");
  DatasetManifest m = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  const Profile p = tiny_profile();
  std::vector<Net> states = fresh_pathways(p, 33);
  std::vector<std::vector<double>> before;
  for (const Net& n : states) before.push_back(n.flat_params());
  BdnModel model = finetune_bdn(m, std::move(states), c, p, Variant::Bdn,
                                Head::Binary, /*frozen=*/true);
  for (std::size_t i = 0; i < model.pathways.size(); ++i)
    EXPECT_EQ(model.pathways[i].flat_params(), before[i]) << "pathway " << i;
}

TEST(Finetune, UnfrozenPathwaysMove) {
  TempDir dir("bdn_train_unfrozen");
  DatasetManifest m = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  const Profile p = tiny_profile();
  std::vector<Net> states = fresh_pathways(p, 33);
  const std::vector<double> before = states[0].flat_params();
  BdnModel model = finetune_bdn(m, std::move(states), c, p, Variant::Bdn,
                                Head::Binary, /*frozen=*/false);
  EXPECT_NE(model.pathways[0].flat_params(), before);
}

TEST(Finetune, AnnealsRhoByTenAtMostTwice) {
  TempDir dir("bdn_train_anneal");
  DatasetManifest m = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  c.epochs_finetune = 8;
  c.plateau_patience = 1;
  c.plateau_min_delta = 1e9;  // every epoch counts as a plateau
  TrainLog log;
  finetune_bdn(m, fresh_pathways(tiny_profile(), 33), c, tiny_profile(),
               Variant::Bdn, Head::Binary, false, nullptr, &log);
  std::vector<double> rho_seq;
  int anneals = 0;
  for (const auto& row : log.rows) {
    if (rho_seq.empty() || rho_seq.back() != row.lr_synthesis)
      rho_seq.push_back(row.lr_synthesis);
    anneals += row.event == "anneal";
  }
  EXPECT_EQ(anneals, 2);
  ASSERT_EQ(rho_seq.size(), 3u);
  EXPECT_DOUBLE_EQ(rho_seq[0], 0.01);
  EXPECT_DOUBLE_EQ(rho_seq[1], 0.001);
  EXPECT_DOUBLE_EQ(rho_seq[2], 0.0001);
}

TEST(Finetune, LearningRateLedgerSingleStep) {
  // One batch, one epoch: with zero initial momentum the parameter delta is
  // exactly -lr * grad for both groups, with the recorded gradients still in
  // the buffers.
  TempDir dir("bdn_train_ledger");
  DatasetManifest m = tiny_dataset(dir, 12);
  TrainConfig c = tiny_config();
  c.batch_size = 64;  // one step per epoch
  c.epochs_finetune = 1;
  c.val_fraction = 0.0;
  c.augment = "none";
  const Profile p = tiny_profile();
  BdnModel init;
  BdnModel model =
      finetune_bdn(m, fresh_pathways(p, 33), c, p, Variant::Bdn, Head::Binary,
                   false, nullptr, nullptr, &init);
  const auto check_group = [&](std::vector<ParamView> after,
                               std::vector<ParamView> start, double lr) {
    ASSERT_EQ(after.size(), start.size());
    for (std::size_t i = 0; i < after.size(); ++i)
      for (std::size_t j = 0; j < after[i].value.size(); ++j) {
        const double delta = after[i].value[j] - start[i].value[j];
        ASSERT_NEAR(delta, -lr * after[i].grad[j], 1e-12)
            << after[i].name << "[" << j << "]";
      }
  };
  check_group(model.pathway_params(), init.pathway_params(), c.eta_prime);
  check_group(model.synthesis_params(), init.synthesis_params(), c.rho);
}

TEST(Finetune, RejectsWrongPathwayStates) {
  TempDir dir("bdn_train_badstates");
  DatasetManifest m = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  const Profile p = tiny_profile();
  // wrong count
  EXPECT_THROW(finetune_bdn(m, fresh_pathways(p, 1), c,
                            Profile{4, 8, 3}, Variant::Bdn, Head::Binary, false),
               std::invalid_argument);
  // a full pathway (head not discarded) is not a valid attribute stack
  Rng rng(5);
  std::vector<Net> with_head;
  with_head.push_back(build_pathway(p, rng, "pathway0"));
  with_head.push_back(build_pathway(p, rng, "pathway1"));
  EXPECT_THROW(finetune_bdn(m, std::move(with_head), c, p, Variant::Bdn,
                            Head::Binary, false),
               std::invalid_argument);
  // head/variant mismatch
  EXPECT_THROW(finetune_bdn(m, fresh_pathways(p, 2), c, p, Variant::BdnSoftD,
                            Head::Binary, false),
               std::invalid_argument);
  EXPECT_THROW(finetune_bdn(m, fresh_pathways(p, 2), c, p, Variant::Bdn,
                            Head::Dist10, false),
               std::invalid_argument);
}

TEST(Finetune, WarmStartCopiesSynthesisTrunk) {
  TempDir dir("bdn_train_warm");
  DatasetManifest m = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  c.epochs_finetune = 1;
  const Profile p = tiny_profile();
  BdnModel binary = finetune_bdn(m, fresh_pathways(p, 33), c, p, Variant::Bdn,
                                 Head::Binary, false);
  BdnModel init;
  finetune_bdn(m, fresh_pathways(p, 33), c, p, Variant::Bdn, Head::Gaussian,
               true, &binary, nullptr, &init);
  EXPECT_EQ(init.synthesis.conv_at(0).weights.data,
            binary.synthesis.conv_at(0).weights.data);
  EXPECT_EQ(init.synthesis.conv_at(4).weights.data,
            binary.synthesis.conv_at(4).weights.data);
  // the head layer is freshly initialized, not copied
  EXPECT_NE(init.synthesis.conv_at(7).weights.data,
            binary.synthesis.conv_at(7).weights.data);
}

TEST(Training, DeterministicUnderSeeds) {
  TempDir dir("bdn_train_det");
  DatasetManifest m = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  const Profile p = tiny_profile();
  const auto run = [&]() {
    Net scae = pretrain_scae(m, c, p);
    Net pw = train_pathway(m, 0, scae, c, p);
    std::vector<Net> states;
    states.push_back(pw.truncated(kPathwayHeadlessNodes, "pathway0"));
    Net pw1 = train_pathway(m, 1, scae, c, p);
    states.push_back(pw1.truncated(kPathwayHeadlessNodes, "pathway1"));
    BdnModel model = finetune_bdn(m, std::move(states), c, p, Variant::Bdn,
                                  Head::Binary, false);
    std::vector<double> all = model.synthesis.flat_params();
    for (const Net& n : model.pathways) {
      const auto f = n.flat_params();
      all.insert(all.end(), f.begin(), f.end());
    }
    return all;
  };
  EXPECT_EQ(run(), run());
}

TEST(Training, CompositeStageRuns) {
  TempDir dir("bdn_train_composite");
  DatasetManifest m = tiny_dataset(dir);
  TrainConfig c = tiny_config();
  const Profile p = tiny_profile();
  Rng rng(c.seed);
  Net scae = build_scae(p, rng);
  TrainLog log;
  std::vector<Net> stacks = train_composite(m, scae, c, p, &log);
  EXPECT_EQ(stacks.size(), 2u);
  EXPECT_EQ(log.rows.size(), 3u);
  // the stacks feed finetune directly
  BdnModel model = finetune_bdn(m, std::move(stacks), c, p, Variant::BdnWp,
                                Head::Binary, false);
  EXPECT_EQ(model.pathways.size(), 2u);
}

TEST(TrainLog, WritesCsv) {
  TrainLog log;
  log.append({"scae", 0, 0.05, 0.05, 1.25, 1.5, "", 12.0});
  log.append({"finetune", 3, 0.001, 0.01, 0.5, 0.6, "anneal", 30.0});
  TempDir dir("bdn_trainlog");
  const std::string path = (dir.path() / "log.csv").string();
  log.write(path);
  std::ifstream f(path);
  std::string header, l1, l2;
  std::getline(f, header);
  std::getline(f, l1);
  std::getline(f, l2);
  EXPECT_EQ(header,
            "stage,epoch,lr_pathway,lr_synthesis,train_loss,val_loss,event,"
            "wall_ms");
  EXPECT_EQ(l1, "scae,0,0.05,0.05,1.25,1.5,,12");
  EXPECT_EQ(l2, "finetune,3,0.001,0.01,0.5,0.6,anneal,30");
}
