#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdn/arch.hpp"
#include "bdn/config.hpp"
#include "bdn/data.hpp"
#include "bdn/losses.hpp"
#include "bdn/model.hpp"
#include "bdn/net.hpp"
#include "bdn/optim.hpp"
#include "bdn/rating.hpp"

namespace bdn {

/// Append-only per-epoch record of every stage.
struct TrainLog {
  struct Row {
    std::string stage;
    int epoch = 0;
    double lr_pathway = 0.0;   // eta / eta' side ("low" road)
    double lr_synthesis = 0.0; // rho side; equals lr_pathway for stage 1/2
    double train_loss = 0.0;
    double val_loss = 0.0;
    std::string event;  // "anneal" when rho was divided by 10
    double wall_ms = 0.0;
  };
  std::vector<Row> rows;

  void append(Row r) { rows.push_back(std::move(r)); }

  void write(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("TrainLog: cannot open " + path);
    f << "stage,epoch,lr_pathway,lr_synthesis,train_loss,val_loss,event,wall_ms\n";
    for (const Row& r : rows)
      f << r.stage << ',' << r.epoch << ',' << r.lr_pathway << ','
        << r.lr_synthesis << ',' << r.train_loss << ',' << r.val_loss << ','
        << r.event << ',' << r.wall_ms << "\n";
  }
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Deterministic train/validation split of [0, n).
inline std::pair<std::vector<int>, std::vector<int>> split_indices(
    int n, double val_fraction, std::uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(Rng::mix(seed, 0x7a1));
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
  const int n_val = static_cast<int>(std::lround(val_fraction * n));
  std::vector<int> val(idx.begin(), idx.begin() + n_val);
  std::vector<int> train(idx.begin() + n_val, idx.end());
  return {std::move(train), std::move(val)};
}

}  // namespace detail

/// Unsupervised SCAE pretraining: MSE reconstruction at a constant eta,
/// labels ignored, no augmentation. Returns the trained autoencoder; its
/// conv1/conv2 initialize every pathway.
inline Net pretrain_scae(const DatasetManifest& manifest,
                         const TrainConfig& config, const Profile& profile,
                         TrainLog* log = nullptr) {
  if (manifest.records.empty())
    throw std::invalid_argument("pretrain_scae: empty dataset");
  config.validate();
  Rng rng(Rng::mix(config.seed, 0x5cae));
  Net scae = build_scae(profile, rng);
  SgdMomentum opt(config.momentum);
  auto [train_idx, val_idx] =
      detail::split_indices(static_cast<int>(manifest.records.size()),
                            config.val_fraction, config.seed);
  BatchIterator train_it(manifest, config.batch_size, {}, config.seed, true);
  BatchIterator val_it(manifest, config.batch_size, {}, config.seed, false);
  val_it.restrict_to(val_idx);

  for (int epoch = 0; epoch < config.epochs_scae; ++epoch) {
    detail::Stopwatch watch;
    train_it.restrict_to(train_idx);
    train_it.start_epoch(epoch);
    Batch batch;
    double loss_acc = 0.0;
    std::size_t n_batches = 0;
    while (train_it.next(batch)) {
      Tensor x = pack_batch(batch.images);
      scae.zero_grad();
      Tensor recon = scae.forward(x, true, &rng);
      LossGrad lg = mse_loss(recon, x);
      scae.backward(lg.grad);
      opt.step(scae.params(), config.eta_scae);
      loss_acc += lg.loss;
      ++n_batches;
    }
    double val_loss = 0.0;
    if (!val_idx.empty()) {
      val_it.restrict_to(val_idx);
      val_it.start_epoch(0);
      std::size_t n_val_batches = 0;
      while (val_it.next(batch)) {
        Tensor x = pack_batch(batch.images);
        val_loss += mse_loss(scae.forward(x, false, nullptr), x).loss;
        ++n_val_batches;
      }
      val_loss /= std::max<std::size_t>(n_val_batches, 1);
    }
    if (log)
      log->append({"scae", epoch, config.eta_scae, config.eta_scae,
                   loss_acc / std::max<std::size_t>(n_batches, 1), val_loss,
                   "", watch.ms()});
  }
  return scae;
}

/// Supervised pathway training on one style's binary individual labels:
/// conv1/conv2 from the SCAE, conv3/conv4 fresh, constant eta. Returns the
/// full pathway (with head); callers discard the head with
/// `pathway.truncated(kPathwayHeadlessNodes, ...)`.
inline Net train_pathway(const DatasetManifest& manifest, int style_index,
                         const Net& scae, const TrainConfig& config,
                         const Profile& profile, TrainLog* log = nullptr) {
  if (style_index < 0 || style_index >= 14)
    throw std::invalid_argument("train_pathway: style index out of range");
  config.validate();
  int positives = 0;
  for (const ManifestRecord& r : manifest.records)
    positives += r.style_flags[style_index];
  if (positives == 0)
    throw std::invalid_argument("train_pathway: style '" +
                                kStyleNames[style_index] +
                                "' has no positive examples");

  Rng rng(Rng::mix(config.seed, 0x9a70 + static_cast<std::uint64_t>(style_index)));
  Net pathway = build_pathway(profile, rng,
                              "pathway" + std::to_string(style_index));
  transfer_scae_encoder(scae, pathway);

  SgdMomentum opt(config.momentum);
  auto [train_idx, val_idx] =
      detail::split_indices(static_cast<int>(manifest.records.size()),
                            config.val_fraction, config.seed);
  BatchIterator train_it(manifest, config.batch_size,
                         parse_pipeline(config.augment), config.seed, true);
  BatchIterator val_it(manifest, config.batch_size, {}, config.seed, false);

  const std::string stage = "pathway" + std::to_string(style_index);
  for (int epoch = 0; epoch < config.epochs_pathway; ++epoch) {
    detail::Stopwatch watch;
    train_it.restrict_to(train_idx);
    train_it.start_epoch(epoch);
    Batch batch;
    double loss_acc = 0.0;
    std::size_t n_batches = 0;
    while (train_it.next(batch)) {
      Tensor x = pack_batch(batch.images);
      std::vector<int> labels;
      labels.reserve(batch.indices.size());
      for (int idx : batch.indices)
        labels.push_back(manifest.records[idx].style_flags[style_index]);
      pathway.zero_grad();
      Tensor logits = pathway.forward(x, true, &rng);
      LossGrad lg = softmax_xent(logits, labels);
      pathway.backward(lg.grad);
      opt.step(pathway.params(), config.eta_pathway);
      loss_acc += lg.loss;
      ++n_batches;
    }
    double val_loss = 0.0;
    if (!val_idx.empty()) {
      val_it.restrict_to(val_idx);
      val_it.start_epoch(0);
      std::size_t n_val_batches = 0;
      while (val_it.next(batch)) {
        Tensor x = pack_batch(batch.images);
        std::vector<int> labels;
        for (int idx : batch.indices)
          labels.push_back(manifest.records[idx].style_flags[style_index]);
        val_loss += softmax_xent(pathway.forward(x, false, nullptr), labels).loss;
        ++n_val_batches;
      }
      val_loss /= std::max<std::size_t>(n_val_batches, 1);
    }
    if (log)
      log->append({stage, epoch, config.eta_pathway, config.eta_pathway,
                   loss_acc / std::max<std::size_t>(n_batches, 1), val_loss,
                   "", watch.ms()});
  }
  return pathway;
}

/// Composite-label attribute training (the BDN-WP baseline): the per-style
/// stacks are tuned jointly under one dense 2*n_styles-channel head instead
/// of individual per-pathway heads.
inline std::vector<Net> train_composite(const DatasetManifest& manifest,
                                        const Net& scae,
                                        const TrainConfig& config,
                                        const Profile& profile,
                                        TrainLog* log = nullptr) {
  config.validate();
  Rng rng(Rng::mix(config.seed, 0xc0b0));
  std::vector<Net> stacks;
  for (int i = 0; i < profile.n_styles; ++i) {
    Net s(pathway_headless_spec("pathway" + std::to_string(i), 3,
                                profile.pathway_channels));
    s.init(rng);
    transfer_scae_encoder(scae, s);
    stacks.push_back(std::move(s));
  }
  const int stack_ch = profile.n_styles * profile.pathway_channels;
  Net head(NetSpec{"composite_head",
                   {LayerSpec::dropout("drop3", kDropoutRate),
                    LayerSpec::conv("conv4", stack_ch, 2 * profile.n_styles, 1, 1, 0),
                    LayerSpec::gap("gap")}});
  head.init(rng);

  SgdMomentum opt(config.momentum);
  auto [train_idx, val_idx] =
      detail::split_indices(static_cast<int>(manifest.records.size()),
                            config.val_fraction, config.seed);
  BatchIterator train_it(manifest, config.batch_size,
                         parse_pipeline(config.augment), config.seed, true);
  for (int epoch = 0; epoch < config.epochs_pathway; ++epoch) {
    detail::Stopwatch watch;
    train_it.restrict_to(train_idx);
    train_it.start_epoch(epoch);
    Batch batch;
    double loss_acc = 0.0;
    std::size_t n_batches = 0;
    while (train_it.next(batch)) {
      Tensor x = pack_batch(batch.images);
      std::vector<std::uint8_t> flags;
      for (int idx : batch.indices)
        for (int s = 0; s < profile.n_styles; ++s)
          flags.push_back(manifest.records[idx].style_flags[s]);
      for (Net& s : stacks) s.zero_grad();
      head.zero_grad();
      std::vector<Tensor> feats;
      feats.reserve(stacks.size());
      for (Net& s : stacks) feats.push_back(s.forward(x, true, &rng));
      std::vector<const Tensor*> parts;
      for (const Tensor& f : feats) parts.push_back(&f);
      Tensor cat = concat_channels(parts);
      Tensor logits = head.forward(cat, true, &rng);
      LossGrad lg = composite_label_loss(logits, flags, profile.n_styles);
      Tensor gcat = head.backward(lg.grad);
      for (std::size_t s = 0; s < stacks.size(); ++s)
        stacks[s].backward(slice_channels(
            gcat, static_cast<int>(s) * profile.pathway_channels,
            profile.pathway_channels));
      std::vector<ParamView> params = head.params();
      for (Net& s : stacks)
        for (ParamView& v : s.params()) params.push_back(std::move(v));
      opt.step(params, config.eta_pathway);
      loss_acc += lg.loss;
      ++n_batches;
    }
    if (log)
      log->append({"composite", epoch, config.eta_pathway, config.eta_pathway,
                   loss_acc / std::max<std::size_t>(n_batches, 1), 0.0, "",
                   watch.ms()});
  }
  return stacks;
}

/// Per-head supervision targets resolved once from the manifest.
struct FinetuneTargets {
  std::vector<int> binary;               // -1 where excluded by delta
  std::vector<RatingGaussian> gaussians;
  std::vector<RatingHistogram> hists;
};

inline FinetuneTargets make_targets(const DatasetManifest& manifest,
                                    double delta) {
  FinetuneTargets t;
  for (const ManifestRecord& r : manifest.records) {
    const double mean = mean_rating(r.ratings);
    const BinaryLabel l = quantize_binary(mean, delta);
    t.binary.push_back(l == BinaryLabel::Excluded ? -1
                       : l == BinaryLabel::High   ? 1
                                                  : 0);
    t.gaussians.push_back(fit_gaussian(r.ratings));
    t.hists.push_back(r.ratings);
  }
  return t;
}

/// Joint fine-tuning of the assembled model: the synthesis network at rho
/// (annealed /10 on validation plateau, at most max_anneals times) and the
/// pathway stacks at eta_prime — or not at all when frozen_pathways is set.
///
/// `pathway_states` must be headless conv1-conv3 stacks of the profile's
/// shape; anything else is rejected.
inline BdnModel finetune_bdn(const DatasetManifest& manifest,
                             std::vector<Net> pathway_states,
                             const TrainConfig& config, const Profile& profile,
                             Variant variant, Head head, bool frozen_pathways,
                             const BdnModel* warm_start = nullptr,
                             TrainLog* log = nullptr,
                             BdnModel* init_out = nullptr) {
  config.validate();
  if (static_cast<int>(pathway_states.size()) != profile.n_styles)
    throw std::invalid_argument(
        "finetune_bdn: expected " + std::to_string(profile.n_styles) +
        " pathway states, got " + std::to_string(pathway_states.size()));
  for (std::size_t i = 0; i < pathway_states.size(); ++i) {
    const NetSpec want = pathway_headless_spec(
        pathway_states[i].spec().name, 3, profile.pathway_channels);
    if (!(pathway_states[i].spec().layers == want.layers))
      throw std::invalid_argument(
          "finetune_bdn: pathway state " + std::to_string(i) +
          " does not match the headless conv1-conv3 stack of this profile");
  }
  if ((variant == Variant::BdnSoftD || variant == Variant::BdnKlD) !=
      (head == Head::Dist10))
    throw std::invalid_argument(
        "finetune_bdn: 10-bin heads pair exactly with the bdn-soft-d / "
        "bdn-kl-d variants");

  Rng rng(Rng::mix(config.seed, 0xf17e));
  BdnModel model;
  model.variant = variant;
  model.head = head;
  model.profile = profile;
  model.pathways = std::move(pathway_states);
  model.synthesis = build_synthesis(profile, rng, head_channels(variant, head));
  model.frozen_pathways = frozen_pathways;
  if (warm_start) {
    // Warm start: copy the synthesis trunk (conv1-conv3); the head layer
    // keeps its fresh init since its meaning changes with the loss.
    for (std::size_t i = 0; i < kPathwayHeadlessNodes; ++i) {
      const LayerSpec& l = model.synthesis.spec().layers[i];
      if (l.kind != LayerSpec::Kind::Conv) continue;
      model.synthesis.conv_at(i).weights.data =
          warm_start->synthesis.conv_at(i).weights.data;
      model.synthesis.conv_at(i).bias = warm_start->synthesis.conv_at(i).bias;
    }
  }

  if (init_out) *init_out = model;  // pre-training snapshot

  const FinetuneTargets targets = make_targets(manifest, config.delta);
  std::vector<int> usable;
  for (int i = 0; i < static_cast<int>(manifest.records.size()); ++i) {
    if (head == Head::Binary && targets.binary[i] < 0) continue;
    usable.push_back(i);
  }
  if (usable.empty())
    throw std::invalid_argument("finetune_bdn: no usable training images");
  auto [train_pos, val_pos] = detail::split_indices(
      static_cast<int>(usable.size()), config.val_fraction, config.seed);
  std::vector<int> train_idx, val_idx;
  for (int p : train_pos) train_idx.push_back(usable[p]);
  for (int p : val_pos) val_idx.push_back(usable[p]);

  BatchIterator train_it(manifest, config.batch_size,
                         parse_pipeline(config.augment), config.seed, true);
  BatchIterator val_it(manifest, config.batch_size, {}, config.seed, false);

  const auto batch_loss = [&](const Batch& batch,
                              Tensor& out) -> std::pair<double, Tensor> {
    switch (head) {
      case Head::Binary: {
        std::vector<int> labels;
        for (int idx : batch.indices) labels.push_back(targets.binary[idx]);
        LossGrad lg = softmax_xent(out, labels);
        return {lg.loss, std::move(lg.grad)};
      }
      case Head::Gaussian: {
        std::vector<RatingGaussian> g;
        for (int idx : batch.indices) g.push_back(targets.gaussians[idx]);
        GaussianHeadLoss r = kl_loss_and_grad(out, g);
        return {r.loss, std::move(r.grad)};
      }
      case Head::Dist10: {
        std::vector<RatingHistogram> hs;
        for (int idx : batch.indices) hs.push_back(targets.hists[idx]);
        if (variant == Variant::BdnSoftD)
          return distribution_softmax_loss_batch(out, hs);
        return distribution_kl_loss_batch(out, hs);
      }
    }
    throw std::logic_error("finetune_bdn: unhandled head");
  };

  SgdMomentum path_opt(config.momentum);
  SgdMomentum synth_opt(config.momentum);
  PlateauDetector plateau(config.plateau_patience, config.plateau_min_delta,
                          config.max_anneals);
  double rho = config.rho;

  for (int epoch = 0; epoch < config.epochs_finetune; ++epoch) {
    detail::Stopwatch watch;
    train_it.restrict_to(train_idx);
    train_it.start_epoch(epoch);
    Batch batch;
    double loss_acc = 0.0;
    std::size_t n_batches = 0;
    while (train_it.next(batch)) {
      Tensor x = pack_batch(batch.images);
      model.zero_grad();
      Tensor out = model.forward(x, true, &rng);
      auto [loss, grad] = batch_loss(batch, out);
      model.backward(grad);
      if (!frozen_pathways && config.eta_prime > 0.0)
        path_opt.step(model.pathway_params(), config.eta_prime);
      synth_opt.step(model.synthesis_params(), rho);
      loss_acc += loss;
      ++n_batches;
    }
    double val_loss = 0.0;
    if (!val_idx.empty()) {
      val_it.restrict_to(val_idx);
      val_it.start_epoch(0);
      std::size_t n_val = 0;
      while (val_it.next(batch)) {
        Tensor x = pack_batch(batch.images);
        Tensor out = model.forward(x, false, nullptr);
        val_loss += batch_loss(batch, out).first;
        ++n_val;
      }
      val_loss /= std::max<std::size_t>(n_val, 1);
    }
    std::string event;
    if (!val_idx.empty() && plateau.observe(val_loss)) {
      rho /= 10.0;
      event = "anneal";
    }
    if (log)
      log->append({"finetune", epoch, frozen_pathways ? 0.0 : config.eta_prime,
                   event.empty() ? rho : rho * 10.0, loss_acc / std::max<std::size_t>(n_batches, 1),
                   val_loss, event, watch.ms()});
  }
  return model;
}

}  // namespace bdn
