#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bdn {

/// Hyperparameters of the staged protocol. The learning-rate constants are
/// the published ones: eta for the pathway stages (0.05 unsupervised / 0.01
/// supervised, never annealed), eta_prime and rho for the joint fine-tune
/// (0.001 / 0.01, rho divided by 10 on plateau at most twice).
struct TrainConfig {
  int batch_size = 128;
  double eta_scae = 0.05;
  double eta_pathway = 0.01;
  double eta_prime = 0.001;
  double rho = 0.01;
  double momentum = 0.9;
  int plateau_patience = 5;
  double plateau_min_delta = 1e-3;
  int max_anneals = 2;
  int epochs_scae = 20;
  int epochs_pathway = 30;
  int epochs_finetune = 50;
  double val_fraction = 0.1;
  double delta = 0.0;          // binary quantization half-width
  std::string augment = "default";
  bool head_warm_start = true;
  std::uint64_t seed = 1;

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (eta_scae <= 0 || eta_pathway <= 0 || eta_prime < 0 || rho <= 0)
      throw std::invalid_argument("config: learning rates must be positive");
    if (momentum < 0 || momentum >= 1)
      throw std::invalid_argument("config: momentum must be in [0, 1)");
    if (val_fraction < 0 || val_fraction >= 1)
      throw std::invalid_argument("config: val_fraction must be in [0, 1)");
    if (delta < 0) throw std::invalid_argument("config: delta must be >= 0");
  }
};

/// key = value file, one pair per line, '#' comments. Unknown keys are
/// rejected so typos fail loudly.
inline TrainConfig parse_config(std::istream& in, const std::string& origin) {
  TrainConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "batch_size") c.batch_size = std::stoi(val);
      else if (key == "eta_scae") c.eta_scae = std::stod(val);
      else if (key == "eta_pathway") c.eta_pathway = std::stod(val);
      else if (key == "eta_prime") c.eta_prime = std::stod(val);
      else if (key == "rho") c.rho = std::stod(val);
      else if (key == "momentum") c.momentum = std::stod(val);
      else if (key == "plateau_patience") c.plateau_patience = std::stoi(val);
      else if (key == "plateau_min_delta") c.plateau_min_delta = std::stod(val);
      else if (key == "max_anneals") c.max_anneals = std::stoi(val);
      else if (key == "epochs_scae") c.epochs_scae = std::stoi(val);
      else if (key == "epochs_pathway") c.epochs_pathway = std::stoi(val);
      else if (key == "epochs_finetune") c.epochs_finetune = std::stoi(val);
      else if (key == "val_fraction") c.val_fraction = std::stod(val);
      else if (key == "delta") c.delta = std::stod(val);
      else if (key == "augment") c.augment = val;
      else if (key == "head_warm_start") c.head_warm_start = val == "1" || val == "true";
      else if (key == "seed") c.seed = std::stoull(val);
      else
        throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                    ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw;
    } catch (...) {
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                  ": bad value '" + val + "' for " + key);
    }
  }
  c.validate();
  return c;
}

inline TrainConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open " + path);
  return parse_config(f, path);
}

}  // namespace bdn
