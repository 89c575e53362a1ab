// Exercises the external command-line surface through the installed binary:
// exit codes, file formats, and a miniature full-pipeline run.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bdn/data.hpp"
#include "bdn/image_io.hpp"
#include "bdn/metrics.hpp"

using namespace bdn;
namespace fs = std::filesystem;

namespace {

const char* kCli = BDN_CLI_PATH;

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out_file = dir / "cli_out.txt";
  const std::string cmd = std::string(kCli) + " " + args + " >" +
                          out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream f(out_file);
  std::stringstream ss;
  ss << f.rdbuf();
  return {WEXITSTATUS(status), ss.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "bdn_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream cfg(dir_ / "cfg");
    cfg << "epochs_scae = 2\nepochs_pathway = 2\nepochs_finetune = 2\n"
        << "batch_size = 16\nseed = 5\n";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UnknownFlagFailsNonzero) {
  const RunResult r = run_cli("gen-data --out " + p("d") + " --bogus 1", dir_);
  EXPECT_NE(r.exit_code, 0);
}

TEST_F(CliTest, MissingFileFailsWithDiagnostic) {
  const RunResult r =
      run_cli("pretrain --data " + p("nope.csv") + " --out " + p("s.ckpt"), dir_);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.out.find("error:"), std::string::npos) << r.out;
}

TEST_F(CliTest, GenDataWritesLoadableManifest) {
  ASSERT_EQ(run_cli("gen-data --out " + p("data") + " --n 12 --size 16", dir_)
                .exit_code,
            0);
  DatasetManifest m = load_manifest(p("data") + "/manifest.csv");
  EXPECT_EQ(m.records.size(), 12u);
}

TEST_F(CliTest, FullPipelineMiniRun) {
  ASSERT_EQ(run_cli("gen-data --out " + p("data") + " --n 24 --size 16 --seed 5",
                    dir_).exit_code,
            0);
  const std::string data = p("data") + "/manifest.csv";
  ASSERT_EQ(run_cli("pretrain --data " + data + " --out " + p("scae.ckpt") +
                    " --config " + p("cfg") + " --log " + p("scae_log.csv"),
                    dir_).exit_code,
            0);
  for (int s = 0; s < 4; ++s)
    ASSERT_EQ(run_cli("train-pathway --data " + data + " --style " +
                      std::to_string(s) + " --scae " + p("scae.ckpt") +
                      " --out " + p("pw" + std::to_string(s) + ".ckpt") +
                      " --config " + p("cfg"),
                      dir_).exit_code,
              0)
        << "style " << s;
  std::string pathways;
  for (int s = 0; s < 4; ++s)
    pathways += " " + p("pw" + std::to_string(s) + ".ckpt.headless");
  ASSERT_EQ(run_cli("train-bdn --data " + data + " --out " + p("bdn.ckpt") +
                    " --variant bdn --head binary --pathways" + pathways +
                    " --config " + p("cfg"),
                    dir_).exit_code,
            0);
  ASSERT_EQ(run_cli("predict --model " + p("bdn.ckpt") + " --data " + data +
                    " --out " + p("preds.csv"),
                    dir_).exit_code,
            0);
  const RunResult ev = run_cli("eval --preds " + p("preds.csv") + " --data " +
                               data + " --delta 0 --out " + p("report.csv"),
                               dir_);
  ASSERT_EQ(ev.exit_code, 0);
  EXPECT_NE(ev.out.find("binary accuracy"), std::string::npos) << ev.out;

  // prediction format: one image_id,label,p_high line per input
  PredictionSet preds = read_predictions(p("preds.csv"));
  EXPECT_EQ(preds.head, Head::Binary);
  EXPECT_EQ(preds.ids.size(), 24u);
  // report file holds key,value lines
  std::ifstream rf(p("report.csv"));
  std::string first;
  std::getline(rf, first);
  EXPECT_EQ(first, "head,binary");
  // training log written
  std::ifstream lf(p("scae_log.csv"));
  std::string header;
  std::getline(lf, header);
  EXPECT_EQ(header.rfind("stage,epoch", 0), 0u);
}

TEST_F(CliTest, HeadVariantMismatchRejected) {
  ASSERT_EQ(run_cli("gen-data --out " + p("data") + " --n 12 --size 16", dir_)
                .exit_code,
            0);
  const std::string data = p("data") + "/manifest.csv";
  ASSERT_EQ(run_cli("pretrain --data " + data + " --out " + p("scae.ckpt") +
                    " --config " + p("cfg"),
                    dir_).exit_code,
            0);
  // dist10 head with the plain bdn variant is a contract violation
  const RunResult r = run_cli(
      "train-bdn --data " + data + " --out " + p("x.ckpt") +
      " --variant bdn --head dist10 --scae " + p("scae.ckpt") + " --config " +
      p("cfg"),
      dir_);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.out.find("error:"), std::string::npos);
}

TEST_F(CliTest, BtFitEmitsSortedLpFactors) {
  {
    std::ofstream f(p("comps.csv"));
    f << "item_a,item_b,winner\n";
    for (int i = 0; i < 9; ++i) f << "groundtruth,flip,groundtruth\n";
    for (int i = 0; i < 3; ++i) f << "flip,groundtruth,flip\n";
    for (int i = 0; i < 8; ++i) f << "flip,crop,flip\n";
    for (int i = 0; i < 2; ++i) f << "crop,flip,crop\n";
    for (int i = 0; i < 7; ++i) f << "groundtruth,crop,groundtruth\n";
    f << "crop,groundtruth,crop\n";
  }
  const RunResult r = run_cli("bt-fit --in " + p("comps.csv"), dir_);
  ASSERT_EQ(r.exit_code, 0) << r.out;
  std::stringstream ss(r.out);
  std::string l1, l2, l3;
  std::getline(ss, l1);
  std::getline(ss, l2);
  std::getline(ss, l3);
  EXPECT_EQ(l1.rfind("groundtruth,1", 0), 0u) << r.out;
  EXPECT_EQ(l2.rfind("flip,", 0), 0u) << r.out;
  EXPECT_EQ(l3.rfind("crop,", 0), 0u) << r.out;
}

TEST_F(CliTest, BtFitRejectsDisconnectedGraph) {
  {
    std::ofstream f(p("comps.csv"));
    f << "a,b,a\nc,d,c\na,b,b\nc,d,d\n";
  }
  const RunResult r =
      run_cli("bt-fit --in " + p("comps.csv") + " --ground-truth a", dir_);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.out.find("disconnected"), std::string::npos) << r.out;
}

TEST_F(CliTest, AugmentAppliesNamedPipeline) {
  RgbImage img(20, 20);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<double>((i * 37) % 256);
  write_png_image(img, p("in.png"));
  ASSERT_EQ(run_cli("augment --in " + p("in.png") + " --out " + p("out.png") +
                    " --pipeline reflect --seed 1",
                    dir_).exit_code,
            0);
  RgbImage out = read_png_image(p("out.png"));
  EXPECT_TRUE(out.same_content(reflect(img)));

  // raw fixture format round-trips through the same command
  write_raw_image(img, p("in.braw"));
  ASSERT_EQ(run_cli("augment --in " + p("in.braw") + " --out " + p("out.braw") +
                    " --pipeline none",
                    dir_).exit_code,
            0);
  EXPECT_TRUE(read_raw_image(p("out.braw")).same_content(img));
}
