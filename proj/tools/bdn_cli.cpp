// Command-line entry points for the whole pipeline: synthetic data
// generation, SCAE pretraining, pathway training, joint fine-tuning,
// prediction, evaluation, Bradley-Terry fitting and augmentation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bdn/bdn.hpp"

namespace fs = std::filesystem;
using namespace bdn;

namespace {

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string profile = "desk";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "key = value config file");
  cmd->add_option("--seed", o.seed, "RNG seed (overrides the config file)")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--profile", o.profile, "channel profile")
      ->check(CLI::IsMember({"desk", "full"}));
}

TrainConfig resolve_config(const CommonOpts& o) {
  TrainConfig c = o.config_path.empty() ? TrainConfig{} : load_config(o.config_path);
  if (o.seed_set) c.seed = o.seed;
  return c;
}

Profile resolve_profile(const CommonOpts& o) {
  return o.profile == "full" ? Profile::full() : Profile::desk();
}

Net to_headless(const Net& net, const std::string& name) {
  const std::size_t keep =
      std::min(net.spec().layers.size(), kPathwayHeadlessNodes);
  return net.truncated(keep, name);
}

/// Headless stacks for the style-unsupervised variants: SCAE encoder into
/// conv1/conv2, fresh conv3.
std::vector<Net> stacks_from_scae(const Net& scae, const Profile& profile,
                                  std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0xbfc0));
  std::vector<Net> stacks;
  for (int i = 0; i < profile.n_styles; ++i) {
    Net s(pathway_headless_spec("pathway" + std::to_string(i), 3,
                                profile.pathway_channels));
    s.init(rng);
    transfer_scae_encoder(scae, s);
    stacks.push_back(std::move(s));
  }
  return stacks;
}

std::vector<Comparison> read_comparisons(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("bt-fit: cannot open " + path);
  std::vector<Comparison> out;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == "item_a,item_b,winner") continue;
    std::stringstream ss(line);
    std::string a, b, w;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') ||
        !std::getline(ss, w, ','))
      throw std::runtime_error("bt-fit: " + path + ":" +
                               std::to_string(line_no) +
                               ": expected item_a,item_b,winner");
    out.push_back({a, b, w});
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Brain-inspired deep network for image aesthetics"};
  app.require_subcommand(1);

  // ---- gen-data ----
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gen_out;
  int gen_n = 500;
  SyntheticTaskSpec gen_spec;
  CommonOpts gen_common;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--n", gen_n, "number of images");
  gen->add_option("--size", gen_spec.image_size, "image side length");
  gen->add_option("--raters", gen_spec.raters, "ratings per image");
  gen->add_option("--format", gen_spec.image_format, "png or braw")
      ->check(CLI::IsMember({"png", "braw"}));
  add_common(gen, gen_common);

  // ---- pretrain ----
  auto* pre = app.add_subcommand("pretrain", "unsupervised SCAE pretraining");
  std::string pre_data, pre_out, pre_log;
  CommonOpts pre_common;
  pre->add_option("--data", pre_data, "manifest.csv")->required();
  pre->add_option("--out", pre_out, "SCAE checkpoint")->required();
  pre->add_option("--log", pre_log, "training log CSV");
  add_common(pre, pre_common);

  // ---- train-pathway ----
  auto* tp = app.add_subcommand("train-pathway",
                                "supervised pathway training for one style");
  std::string tp_data, tp_scae, tp_out, tp_log;
  int tp_style = 0;
  CommonOpts tp_common;
  tp->add_option("--data", tp_data, "manifest.csv")->required();
  tp->add_option("--style", tp_style, "style index (0-13)")->required();
  tp->add_option("--scae", tp_scae, "SCAE checkpoint")->required();
  tp->add_option("--out", tp_out, "pathway checkpoint")->required();
  tp->add_option("--log", tp_log, "training log CSV");
  add_common(tp, tp_common);

  // ---- train-bdn ----
  auto* tb = app.add_subcommand("train-bdn", "joint fine-tuning");
  std::string tb_data, tb_out, tb_scae, tb_warm, tb_log;
  std::vector<std::string> tb_pathways;
  std::string tb_variant = "bdn", tb_head = "binary";
  bool tb_frozen = false;
  CommonOpts tb_common;
  tb->add_option("--data", tb_data, "manifest.csv")->required();
  tb->add_option("--out", tb_out, "model checkpoint")->required();
  tb->add_option("--pathways", tb_pathways,
                 "pathway checkpoints, one per style (bdn variant)");
  tb->add_option("--scae", tb_scae, "SCAE checkpoint (bfcn / bdn-wp variants)");
  tb->add_option("--variant", tb_variant, "model variant")
      ->check(CLI::IsMember({"bdn", "bfcn", "bdn-wp", "bdn-soft-d", "bdn-kl-d"}));
  tb->add_option("--head", tb_head, "prediction head")
      ->check(CLI::IsMember({"binary", "gaussian", "dist10"}));
  tb->add_flag("--frozen-pathways", tb_frozen,
               "train the synthesis network only (eta' = 0)");
  tb->add_option("--warm-start", tb_warm, "binary-model checkpoint to start from");
  tb->add_option("--log", tb_log, "training log CSV");
  add_common(tb, tb_common);

  // ---- predict ----
  auto* pr = app.add_subcommand("predict", "run a saved model over a dataset");
  std::string pr_model, pr_data, pr_out;
  pr->add_option("--model", pr_model, "model checkpoint")->required();
  pr->add_option("--data", pr_data, "manifest.csv")->required();
  pr->add_option("--out", pr_out, "predictions CSV")->required();

  // ---- eval ----
  auto* ev = app.add_subcommand("eval", "score predictions against a manifest");
  std::string ev_preds, ev_data, ev_out;
  double ev_delta = 0.0;
  ev->add_option("--preds", ev_preds, "predictions CSV")->required();
  ev->add_option("--data", ev_data, "manifest.csv")->required();
  ev->add_option("--delta", ev_delta, "binary exclusion half-width")
      ->check(CLI::NonNegativeNumber);
  ev->add_option("--out", ev_out, "report as key,value lines");

  // ---- bt-fit ----
  auto* bt = app.add_subcommand("bt-fit", "Bradley-Terry LP-factor fit");
  std::string bt_in, bt_out, bt_anchor = "groundtruth";
  bool bt_virtual = false;
  bt->add_option("--in", bt_in, "comparisons CSV (item_a,item_b,winner)")
      ->required();
  bt->add_option("--ground-truth", bt_anchor, "anchor item (lp_factor 1)");
  bt->add_flag("--virtual-ties", bt_virtual,
               "add half a win each way against the anchor");
  bt->add_option("--out", bt_out,
                 "write item,lp_factor lines here instead of stdout");

  // ---- augment ----
  auto* au = app.add_subcommand("augment", "apply a named pipeline to an image");
  std::string au_in, au_out, au_pipeline = "default";
  std::uint64_t au_seed = 0;
  au->add_option("--in", au_in, "input image (.png or .braw)")->required();
  au->add_option("--out", au_out, "output image")->required();
  au->add_option("--pipeline", au_pipeline,
                 "default, none, or comma list "
                 "(reflect,reflect50,scale,noise5,noise30,alter-rgb,rotate,squeeze)");
  au->add_option("--seed", au_seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  if (*gen) {
    TrainConfig c = resolve_config(gen_common);
    generate_synthetic(gen_spec, gen_n,
                       gen_common.seed_set ? gen_common.seed : c.seed, gen_out);
    std::cout << "wrote " << gen_n << " images + manifest.csv to " << gen_out
              << "\n";
  } else if (*pre) {
    TrainConfig c = resolve_config(pre_common);
    const Profile profile = resolve_profile(pre_common);
    DatasetManifest m = load_manifest(pre_data);
    TrainLog log;
    Net scae = pretrain_scae(m, c, profile, &log);
    save_net_checkpoint(scae, "scae", profile, pre_out);
    if (!pre_log.empty()) log.write(pre_log);
    std::cout << "scae: final reconstruction loss "
              << log.rows.back().train_loss << ", saved to " << pre_out << "\n";
  } else if (*tp) {
    TrainConfig c = resolve_config(tp_common);
    const Profile profile = resolve_profile(tp_common);
    DatasetManifest m = load_manifest(tp_data);
    Net scae = load_net_checkpoint(tp_scae, "scae");
    TrainLog log;
    Net pathway = train_pathway(m, tp_style, scae, c, profile, &log);
    save_net_checkpoint(pathway, "pathway", profile, tp_out);
    // the headless (conv1-conv3) form alongside, ready for assembly
    save_net_checkpoint(
        to_headless(pathway, "pathway" + std::to_string(tp_style)),
        "pathway_headless", profile, tp_out + ".headless");
    if (!tp_log.empty()) log.write(tp_log);
    std::cout << "pathway " << tp_style << " (" << kStyleNames[tp_style]
              << "): final loss " << log.rows.back().train_loss
              << ", saved to " << tp_out << " (+ .headless)\n";
  } else if (*tb) {
    TrainConfig c = resolve_config(tb_common);
    const Profile profile = resolve_profile(tb_common);
    DatasetManifest m = load_manifest(tb_data);
    const Variant variant = parse_variant(tb_variant);
    Head head = parse_head(tb_head);
    if (variant == Variant::BdnSoftD || variant == Variant::BdnKlD)
      head = Head::Dist10;

    std::vector<Net> states;
    if (variant == Variant::Bdn || variant == Variant::BdnSoftD ||
        variant == Variant::BdnKlD) {
      if (tb_warm.empty() || !tb_pathways.empty()) {
        if (static_cast<int>(tb_pathways.size()) != profile.n_styles)
          throw std::runtime_error(
              "train-bdn: need " + std::to_string(profile.n_styles) +
              " --pathways checkpoints for this profile, got " +
              std::to_string(tb_pathways.size()));
        for (std::size_t i = 0; i < tb_pathways.size(); ++i) {
          const CheckpointInfo info = peek_checkpoint(tb_pathways[i]);
          if (info.kind != "pathway" && info.kind != "pathway_headless")
            throw std::runtime_error("train-bdn: " + tb_pathways[i] +
                                     " is not a pathway checkpoint");
          Net net = load_net_checkpoint(tb_pathways[i], info.kind);
          states.push_back(
              to_headless(net, "pathway" + std::to_string(i)));
        }
      }
    } else {
      if (tb_scae.empty())
        throw std::runtime_error("train-bdn: variant " + tb_variant +
                                 " needs --scae");
      Net scae = load_net_checkpoint(tb_scae, "scae");
      if (variant == Variant::Bfcn) {
        states = stacks_from_scae(scae, profile, c.seed);
      } else {  // bdn-wp: composite-label attribute stage first
        states = train_composite(m, scae, c, profile);
      }
    }

    BdnModel warm;
    const BdnModel* warm_ptr = nullptr;
    if (!tb_warm.empty()) {
      warm = load_model(tb_warm);
      warm_ptr = c.head_warm_start ? &warm : nullptr;
      if (states.empty())
        for (const Net& p : warm.pathways) states.push_back(p);
    }

    TrainLog log;
    BdnModel model = finetune_bdn(m, std::move(states), c, profile, variant,
                                  head, tb_frozen, warm_ptr, &log);
    save_model(model, tb_out);
    if (!tb_log.empty()) log.write(tb_log);
    std::cout << variant_name(variant) << " (" << head_name(model.head)
              << " head): final train loss " << log.rows.back().train_loss
              << ", saved to " << tb_out << "\n";
  } else if (*pr) {
    BdnModel model = load_model(pr_model);
    DatasetManifest m = load_manifest(pr_data);
    PredictionSet preds = predict_all(model, m);
    write_predictions(preds, pr_out);
    std::cout << "wrote " << preds.ids.size() << " predictions ("
              << head_name(preds.head) << " head) to " << pr_out << "\n";
  } else if (*ev) {
    PredictionSet preds = read_predictions(ev_preds);
    DatasetManifest m = load_manifest(ev_data, /*check_files=*/false);
    EvalReport report = compute_metrics(preds, m, ev_delta);
    std::cout << report_to_text(report);
    if (!ev_out.empty()) {
      std::ofstream f(ev_out);
      if (!f) throw std::runtime_error("eval: cannot open " + ev_out);
      f << report_to_kv(report);
    }
  } else if (*bt) {
    const auto comps = read_comparisons(bt_in);
    BtOptions opts;
    opts.anchor = bt_anchor;
    opts.virtual_ties = bt_virtual;
    BtScores scores = bt_fit(comps, opts);
    std::vector<std::size_t> order(scores.items.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores.lp_factors[a] > scores.lp_factors[b];
    });
    std::ostringstream os;
    for (std::size_t i : order)
      os << scores.items[i] << "," << scores.lp_factors[i] << "\n";
    if (bt_out.empty()) {
      std::cout << os.str();
    } else {
      std::ofstream f(bt_out);
      if (!f) throw std::runtime_error("bt-fit: cannot open " + bt_out);
      f << os.str();
    }
  } else if (*au) {
    RgbImage img = read_image(au_in);
    RgbImage out = augment_pipeline(img, parse_pipeline(au_pipeline), au_seed);
    write_image(out, au_out);
    std::cout << "wrote " << out.height << "x" << out.width << " image to "
              << au_out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
