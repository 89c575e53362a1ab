#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdn/data.hpp"
#include "bdn/model.hpp"
#include "bdn/rating.hpp"

namespace bdn {

/// Model outputs for a set of images, tagged by head type.
struct PredictionSet {
  Head head = Head::Binary;
  std::vector<std::string> ids;
  // binary head
  std::vector<int> labels;      // 0 = low, 1 = high
  std::vector<double> p_high;
  // gaussian head (also filled for dist10 via moment matching)
  std::vector<RatingGaussian> gaussians;
  // dist10 head
  std::vector<std::array<double, 10>> dists;
};

struct EvalReport {
  double delta = 0.0;
  std::string head;
  int n_images = 0;     // predictions matched against the manifest
  int n_binary = 0;     // ground truth outside the exclusion band
  double binary_accuracy = std::numeric_limits<double>::quiet_NaN();
  int tp = 0, tn = 0, fp = 0, fn = 0;
  double avg_kl = std::numeric_limits<double>::quiet_NaN();
  double frac_mu_within_1 = std::numeric_limits<double>::quiet_NaN();
  double rebin_accuracy = std::numeric_limits<double>::quiet_NaN();
};

/// Accuracy, average corrected-form Gaussian KL, |mu_hat - mu| < 1 fraction
/// and re-binarized accuracy. Ground-truth images inside the delta band are
/// excluded from every accuracy denominator.
inline EvalReport compute_metrics(const PredictionSet& preds,
                                  const DatasetManifest& manifest,
                                  double delta) {
  std::map<std::string, const ManifestRecord*> by_id;
  for (const ManifestRecord& r : manifest.records) by_id[r.image_id] = &r;

  EvalReport rep;
  rep.delta = delta;
  rep.head = head_name(preds.head);
  double kl_acc = 0.0;
  int mu_close = 0, rebin_correct = 0, rebin_total = 0;

  for (std::size_t i = 0; i < preds.ids.size(); ++i) {
    const auto it = by_id.find(preds.ids[i]);
    if (it == by_id.end())
      throw std::invalid_argument("compute_metrics: prediction for unknown image '" +
                                  preds.ids[i] + "'");
    const ManifestRecord& rec = *it->second;
    ++rep.n_images;
    const double gt_mean = mean_rating(rec.ratings);
    const BinaryLabel gt = quantize_binary(gt_mean, delta);

    if (preds.head == Head::Binary) {
      if (gt == BinaryLabel::Excluded) continue;
      ++rep.n_binary;
      const bool want_high = gt == BinaryLabel::High;
      const bool got_high = preds.labels[i] == 1;
      if (want_high && got_high) ++rep.tp;
      else if (!want_high && !got_high) ++rep.tn;
      else if (!want_high && got_high) ++rep.fp;
      else ++rep.fn;
    } else {
      const RatingGaussian gt_fit = fit_gaussian(rec.ratings);
      const RatingGaussian& pred = preds.gaussians[i];
      kl_acc += kl_gaussian(gt_fit, pred);
      if (std::abs(pred.mu - gt_mean) < 1.0) ++mu_close;
      if (gt != BinaryLabel::Excluded) {
        ++rebin_total;
        if (quantize_binary(pred.mu, delta) == gt) ++rebin_correct;
      }
    }
  }

  if (preds.head == Head::Binary) {
    if (rep.n_binary > 0)
      rep.binary_accuracy =
          static_cast<double>(rep.tp + rep.tn) / rep.n_binary;
  } else if (rep.n_images > 0) {
    rep.avg_kl = kl_acc / rep.n_images;
    rep.frac_mu_within_1 = static_cast<double>(mu_close) / rep.n_images;
    rep.n_binary = rebin_total;
    if (rebin_total > 0)
      rep.rebin_accuracy = static_cast<double>(rebin_correct) / rebin_total;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Prediction / report files
// ---------------------------------------------------------------------------

inline void write_predictions(const PredictionSet& p, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_predictions: cannot open " + path);
  switch (p.head) {
    case Head::Binary:
      f << "image_id,label,p_high\n";
      for (std::size_t i = 0; i < p.ids.size(); ++i)
        f << p.ids[i] << ',' << (p.labels[i] == 1 ? "high" : "low") << ','
          << p.p_high[i] << "\n";
      break;
    case Head::Gaussian:
      f << "image_id,mu,sigma\n";
      for (std::size_t i = 0; i < p.ids.size(); ++i)
        f << p.ids[i] << ',' << p.gaussians[i].mu << ',' << p.gaussians[i].sigma
          << "\n";
      break;
    case Head::Dist10: {
      f << "image_id";
      for (int k = 1; k <= 10; ++k) f << ",p" << k;
      f << "\n";
      for (std::size_t i = 0; i < p.ids.size(); ++i) {
        f << p.ids[i];
        for (int k = 0; k < 10; ++k) f << ',' << p.dists[i][k];
        f << "\n";
      }
      break;
    }
  }
  if (!f) throw std::runtime_error("write_predictions: short write to " + path);
}

inline PredictionSet read_predictions(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_predictions: cannot open " + path);
  std::string header;
  if (!std::getline(f, header))
    throw std::runtime_error("read_predictions: empty file " + path);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  PredictionSet p;
  if (header == "image_id,label,p_high")
    p.head = Head::Binary;
  else if (header == "image_id,mu,sigma")
    p.head = Head::Gaussian;
  else if (header.rfind("image_id,p1,", 0) == 0)
    p.head = Head::Dist10;
  else
    throw std::runtime_error("read_predictions: unknown header '" + header +
                             "' in " + path);
  std::string line;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    const auto fail = [&](const std::string& why) {
      throw std::runtime_error("read_predictions: " + path + ":" +
                               std::to_string(line_no) + ": " + why);
    };
    try {
      if (p.head == Head::Binary) {
        if (fields.size() != 3) fail("expected 3 fields");
        p.ids.push_back(fields[0]);
        if (fields[1] != "high" && fields[1] != "low") fail("bad label");
        p.labels.push_back(fields[1] == "high" ? 1 : 0);
        p.p_high.push_back(std::stod(fields[2]));
      } else if (p.head == Head::Gaussian) {
        if (fields.size() != 3) fail("expected 3 fields");
        p.ids.push_back(fields[0]);
        p.gaussians.push_back({std::stod(fields[1]), std::stod(fields[2])});
      } else {
        if (fields.size() != 11) fail("expected 11 fields");
        p.ids.push_back(fields[0]);
        std::array<double, 10> d{};
        for (int k = 0; k < 10; ++k) d[k] = std::stod(fields[1 + k]);
        p.dists.push_back(d);
        p.gaussians.push_back(fit_gaussian_weights(d));
      }
    } catch (const std::runtime_error&) {
      throw;
    } catch (...) {
      fail("unparsable numeric field");
    }
  }
  return p;
}

inline std::string report_to_kv(const EvalReport& r) {
  std::ostringstream os;
  os << "head," << r.head << "\n";
  os << "delta," << r.delta << "\n";
  os << "n_images," << r.n_images << "\n";
  os << "n_binary," << r.n_binary << "\n";
  if (r.head == "binary") {
    os << "binary_accuracy," << r.binary_accuracy << "\n";
    os << "tp," << r.tp << "\ntn," << r.tn << "\nfp," << r.fp << "\nfn," << r.fn
       << "\n";
  } else {
    os << "avg_kl," << r.avg_kl << "\n";
    os << "frac_mu_within_1," << r.frac_mu_within_1 << "\n";
    os << "rebin_accuracy," << r.rebin_accuracy << "\n";
  }
  return os.str();
}

inline std::string report_to_text(const EvalReport& r) {
  std::ostringstream os;
  os << "Evaluation (" << r.head << " head, delta = " << r.delta << ")\n";
  os << "  images evaluated:   " << r.n_images << "\n";
  if (r.head == "binary") {
    os << "  outside delta band: " << r.n_binary << "\n";
    os << "  binary accuracy:    " << r.binary_accuracy << "\n";
    os << "  confusion (tp/tn/fp/fn): " << r.tp << "/" << r.tn << "/" << r.fp
       << "/" << r.fn << "\n";
  } else {
    os << "  average KL:         " << r.avg_kl << "\n";
    os << "  |mu_hat - mu| < 1:  " << r.frac_mu_within_1 << "\n";
    os << "  re-binarized acc:   " << r.rebin_accuracy << " (over "
       << r.n_binary << ")\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Inference over a manifest
// ---------------------------------------------------------------------------

/// Runs the model on every manifest image (inference mode, unaugmented) and
/// collects a PredictionSet matching the model's head.
inline PredictionSet predict_all(BdnModel& model,
                                 const DatasetManifest& manifest) {
  PredictionSet out;
  out.head = model.head;
  BatchIterator it(manifest, 16, {}, 0, false);
  it.start_epoch(0);
  Batch batch;
  while (it.next(batch)) {
    // per-image forward: test images may all differ in size
    for (std::size_t bi = 0; bi < batch.images.size(); ++bi) {
      const int idx = batch.indices[bi];
      Tensor head_out = model.forward_image(batch.images[bi], false, nullptr);
      out.ids.push_back(manifest.records[idx].image_id);
      if (model.head == Head::Binary) {
        const double a = head_out.data[0], b = head_out.data[1];
        const double m = std::max(a, b);
        const double pa = std::exp(a - m), pb = std::exp(b - m);
        const double p_high = pb / (pa + pb);
        out.p_high.push_back(p_high);
        out.labels.push_back(p_high > 0.5 ? 1 : 0);
      } else if (model.head == Head::Gaussian) {
        out.gaussians.push_back(
            decode_gaussian_head(head_out.data[0], head_out.data[1]));
      } else {
        std::array<double, 10> p{};
        double mx = head_out.data[0];
        for (int k = 0; k < 10; ++k) mx = std::max(mx, head_out.data[k]);
        double z = 0.0;
        for (int k = 0; k < 10; ++k) {
          p[k] = std::exp(head_out.data[k] - mx);
          z += p[k];
        }
        for (int k = 0; k < 10; ++k) p[k] /= z;
        out.dists.push_back(p);
        out.gaussians.push_back(fit_gaussian_weights(p));
      }
    }
  }
  return out;
}

}  // namespace bdn
