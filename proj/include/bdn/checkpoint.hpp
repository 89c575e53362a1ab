#pragma once

// Checkpoint container, shared by the SCAE, pathway and full-model files:
//
//   bytes 0..7   magic "BDNCKPT1"
//   u32          format version (1)
//   string       kind: "scae" | "pathway" | "pathway_headless" | "bdn"
//   string       variant tag ("-" for single nets)
//   string       head tag ("-" for single nets)
//   u32          pathway count (0 for single nets)
//   3 x u32      profile: pathway_channels, synthesis_channels, n_styles
//   u64          total parameter count (audited on load)
//   nets         one serialized Net per stack, synthesis last for "bdn"
//
// Each net: name, layer manifest (kind, name, hyperparameters), then per
// layer the raw parameter data as little-endian float64. Strings are u32
// length + bytes. Multi-byte values are written in the host's (little-endian)
// byte order.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdn/model.hpp"
#include "bdn/net.hpp"

namespace bdn {

inline constexpr char kCkptMagic[8] = {'B', 'D', 'N', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCkptVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
inline void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline void put_doubles(std::ostream& os, const std::vector<double>& v) {
  put_u64(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated u32");
  return v;
}
inline std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated u64");
  return v;
}
inline std::string get_string(std::istream& is) {
  const std::uint32_t n = get_u32(is);
  if (n > (1u << 20)) throw std::runtime_error("checkpoint: oversized string");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("checkpoint: truncated string");
  return s;
}
inline std::vector<double> get_doubles(std::istream& is) {
  const std::uint64_t n = get_u64(is);
  if (n > (1ull << 32)) throw std::runtime_error("checkpoint: oversized blob");
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated parameter data");
  return v;
}

inline void put_net(std::ostream& os, const Net& net) {
  const NetSpec& spec = net.spec();
  put_string(os, spec.name);
  put_u32(os, static_cast<std::uint32_t>(spec.layers.size()));
  for (const LayerSpec& l : spec.layers) {
    put_u32(os, static_cast<std::uint32_t>(l.kind));
    put_string(os, l.name);
    for (int v : {l.in_ch, l.out_ch, l.kh, l.kw, l.sh, l.sw, l.ph, l.pw,
                  l.oph, l.opw})
      put_u32(os, static_cast<std::uint32_t>(v));
    os.write(reinterpret_cast<const char*>(&l.rate), sizeof(double));
  }
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind == LayerSpec::Kind::Conv) {
      put_doubles(os, net.conv_at(i).weights.data);
      put_doubles(os, net.conv_at(i).bias);
    } else if (spec.layers[i].kind == LayerSpec::Kind::Deconv) {
      put_doubles(os, net.deconv_at(i).weights.data);
      put_doubles(os, net.deconv_at(i).bias);
    }
  }
}

inline Net get_net(std::istream& is) {
  NetSpec spec;
  spec.name = get_string(is);
  const std::uint32_t n_layers = get_u32(is);
  if (n_layers > 1024) throw std::runtime_error("checkpoint: absurd layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    const std::uint32_t kind = get_u32(is);
    if (kind > static_cast<std::uint32_t>(LayerSpec::Kind::Gap))
      throw std::runtime_error("checkpoint: unknown layer kind");
    l.kind = static_cast<LayerSpec::Kind>(kind);
    l.name = get_string(is);
    int* fields[] = {&l.in_ch, &l.out_ch, &l.kh, &l.kw, &l.sh,
                     &l.sw,    &l.ph,     &l.pw, &l.oph, &l.opw};
    for (int* f : fields) *f = static_cast<int>(get_u32(is));
    is.read(reinterpret_cast<char*>(&l.rate), sizeof(double));
    if (!is) throw std::runtime_error("checkpoint: truncated layer spec");
    spec.layers.push_back(std::move(l));
  }
  Net net(spec);
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    if (spec.layers[i].kind == LayerSpec::Kind::Conv) {
      auto w = get_doubles(is);
      auto b = get_doubles(is);
      if (w.size() != net.conv_at(i).weights.size() ||
          b.size() != net.conv_at(i).bias.size())
        throw std::runtime_error("checkpoint: parameter size mismatch in " +
                                 spec.layers[i].name);
      net.conv_at(i).weights.data = std::move(w);
      net.conv_at(i).bias = std::move(b);
    } else if (spec.layers[i].kind == LayerSpec::Kind::Deconv) {
      auto w = get_doubles(is);
      auto b = get_doubles(is);
      if (w.size() != net.deconv_at(i).weights.size() ||
          b.size() != net.deconv_at(i).bias.size())
        throw std::runtime_error("checkpoint: parameter size mismatch in " +
                                 spec.layers[i].name);
      net.deconv_at(i).weights.data = std::move(w);
      net.deconv_at(i).bias = std::move(b);
    }
  }
  return net;
}

struct CkptHeader {
  std::string kind;
  std::string variant;
  std::string head;
  std::uint32_t n_pathways = 0;
  Profile profile;
  std::uint64_t param_count = 0;
};

inline void put_header(std::ostream& os, const CkptHeader& h) {
  os.write(kCkptMagic, 8);
  put_u32(os, kCkptVersion);
  put_string(os, h.kind);
  put_string(os, h.variant);
  put_string(os, h.head);
  put_u32(os, h.n_pathways);
  put_u32(os, static_cast<std::uint32_t>(h.profile.pathway_channels));
  put_u32(os, static_cast<std::uint32_t>(h.profile.synthesis_channels));
  put_u32(os, static_cast<std::uint32_t>(h.profile.n_styles));
  put_u64(os, h.param_count);
}

inline CkptHeader get_header(std::istream& is, const std::string& path) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const std::uint32_t version = get_u32(is);
  if (version != kCkptVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version) + " in " + path);
  CkptHeader h;
  h.kind = get_string(is);
  h.variant = get_string(is);
  h.head = get_string(is);
  h.n_pathways = get_u32(is);
  h.profile.pathway_channels = static_cast<int>(get_u32(is));
  h.profile.synthesis_channels = static_cast<int>(get_u32(is));
  h.profile.n_styles = static_cast<int>(get_u32(is));
  h.param_count = get_u64(is);
  return h;
}

}  // namespace detail

/// Header peek without loading parameters (CLI `predict` uses this to pick
/// the right loader; tests audit the parameter count).
struct CheckpointInfo {
  std::string kind;
  std::string variant;
  std::string head;
  std::uint32_t n_pathways = 0;
  Profile profile;
  std::uint64_t param_count = 0;
};

inline CheckpointInfo peek_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  const detail::CkptHeader h = detail::get_header(f, path);
  return {h.kind, h.variant, h.head, h.n_pathways, h.profile, h.param_count};
}

/// Single-net checkpoints (SCAE, trained pathway, headless pathway).
inline void save_net_checkpoint(const Net& net, const std::string& kind,
                                const Profile& profile,
                                const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  detail::CkptHeader h;
  h.kind = kind;
  h.variant = "-";
  h.head = "-";
  h.n_pathways = 0;
  h.profile = profile;
  h.param_count = net.param_count();
  detail::put_header(f, h);
  detail::put_net(f, net);
  if (!f) throw std::runtime_error("checkpoint: short write to " + path);
}

inline Net load_net_checkpoint(const std::string& path,
                               const std::string& expected_kind,
                               Profile* profile_out = nullptr) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  const detail::CkptHeader h = detail::get_header(f, path);
  if (h.kind != expected_kind)
    throw std::runtime_error("checkpoint: " + path + " holds a '" + h.kind +
                             "' model, expected '" + expected_kind + "'");
  Net net = detail::get_net(f);
  if (net.param_count() != h.param_count)
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  if (profile_out) *profile_out = h.profile;
  return net;
}

inline void save_model(const BdnModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  detail::CkptHeader h;
  h.kind = "bdn";
  h.variant = variant_name(model.variant);
  h.head = head_name(model.head);
  h.n_pathways = static_cast<std::uint32_t>(model.pathways.size());
  h.profile = model.profile;
  h.param_count = model.param_count();
  detail::put_header(f, h);
  for (const Net& p : model.pathways) detail::put_net(f, p);
  detail::put_net(f, model.synthesis);
  if (!f) throw std::runtime_error("checkpoint: short write to " + path);
}

/// Loads a full model; when `expected_variant` is non-empty a tag mismatch
/// is rejected.
inline BdnModel load_model(const std::string& path,
                           const std::string& expected_variant = "") {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  const detail::CkptHeader h = detail::get_header(f, path);
  if (h.kind != "bdn")
    throw std::runtime_error("checkpoint: " + path + " holds a '" + h.kind +
                             "' model, expected 'bdn'");
  if (!expected_variant.empty() && h.variant != expected_variant)
    throw std::runtime_error("checkpoint: " + path + " is variant '" +
                             h.variant + "', expected '" + expected_variant +
                             "'");
  BdnModel m;
  m.variant = parse_variant(h.variant);
  m.head = parse_head(h.head);
  m.profile = h.profile;
  for (std::uint32_t i = 0; i < h.n_pathways; ++i)
    m.pathways.push_back(detail::get_net(f));
  m.synthesis = detail::get_net(f);
  if (m.param_count() != h.param_count)
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  return m;
}

}  // namespace bdn
