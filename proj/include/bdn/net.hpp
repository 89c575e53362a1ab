#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdn/conv.hpp"
#include "bdn/ops.hpp"
#include "bdn/optim.hpp"
#include "bdn/rng.hpp"
#include "bdn/tensor.hpp"

namespace bdn {

/// Declarative description of one layer; a NetSpec is an ordered list of
/// these and fully determines the network topology.
struct LayerSpec {
  enum class Kind { Conv, Deconv, Relu, Dropout, Gap };
  Kind kind = Kind::Relu;
  std::string name;
  int in_ch = 0, out_ch = 0;
  int kh = 1, kw = 1, sh = 1, sw = 1, ph = 0, pw = 0, oph = 0, opw = 0;
  double rate = 0.0;  // dropout

  static LayerSpec conv(std::string name, int in_ch, int out_ch, int k, int s,
                        int p) {
    LayerSpec l;
    l.kind = Kind::Conv;
    l.name = std::move(name);
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.kh = l.kw = k;
    l.sh = l.sw = s;
    l.ph = l.pw = p;
    return l;
  }
  static LayerSpec deconv(std::string name, int in_ch, int out_ch, int k,
                          int s, int p, int op) {
    LayerSpec l;
    l.kind = Kind::Deconv;
    l.name = std::move(name);
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.kh = l.kw = k;
    l.sh = l.sw = s;
    l.ph = l.pw = p;
    l.oph = l.opw = op;
    return l;
  }
  static LayerSpec relu(std::string name) {
    LayerSpec l;
    l.kind = Kind::Relu;
    l.name = std::move(name);
    return l;
  }
  static LayerSpec dropout(std::string name, double rate) {
    LayerSpec l;
    l.kind = Kind::Dropout;
    l.name = std::move(name);
    l.rate = rate;
    return l;
  }
  static LayerSpec gap(std::string name) {
    LayerSpec l;
    l.kind = Kind::Gap;
    l.name = std::move(name);
    return l;
  }

  bool operator==(const LayerSpec&) const = default;
};

struct NetSpec {
  std::string name;
  std::vector<LayerSpec> layers;

  bool operator==(const NetSpec&) const = default;
};

/// A stack of layers with parameters and per-node forward caches. Value
/// semantics: copying a Net copies its parameters (used for warm starts and
/// for the bit-identity assertions around frozen training).
class Net {
 public:
  Net() = default;
  explicit Net(NetSpec spec) : spec_(std::move(spec)) {
    nodes_.resize(spec_.layers.size());
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const LayerSpec& l = spec_.layers[i];
      switch (l.kind) {
        case LayerSpec::Kind::Conv:
          nodes_[i].conv = ConvLayer(l.in_ch, l.out_ch, l.kh, l.kw, l.sh, l.sw,
                                     l.ph, l.pw);
          nodes_[i].conv.weights.ensure_grad();
          break;
        case LayerSpec::Kind::Deconv:
          nodes_[i].deconv = DeconvLayer(l.in_ch, l.out_ch, l.kh, l.kw, l.sh,
                                         l.sw, l.ph, l.pw, l.oph, l.opw);
          nodes_[i].deconv.weights.ensure_grad();
          break;
        case LayerSpec::Kind::Dropout:
          if (l.rate < 0.0 || l.rate >= 1.0)
            throw std::invalid_argument("Net: dropout rate out of range");
          break;
        default:
          break;
      }
    }
  }

  const NetSpec& spec() const { return spec_; }
  bool empty() const { return nodes_.empty(); }

  void init(Rng& rng) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (spec_.layers[i].kind == LayerSpec::Kind::Conv)
        nodes_[i].conv.init(rng);
      else if (spec_.layers[i].kind == LayerSpec::Kind::Deconv)
        nodes_[i].deconv.init(rng);
    }
  }

  /// `rng` is required whenever training mode reaches a dropout layer.
  Tensor forward(const Tensor& x, bool training, Rng* rng) {
    Tensor cur = x;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      Node& node = nodes_[i];
      const LayerSpec& l = spec_.layers[i];
      switch (l.kind) {
        case LayerSpec::Kind::Conv:
          node.cached_input = cur;
          cur = conv_forward(cur, node.conv);
          break;
        case LayerSpec::Kind::Deconv:
          node.cached_input = cur;
          cur = deconv_forward(cur, node.deconv);
          break;
        case LayerSpec::Kind::Relu:
          node.cached_input = cur;
          cur = relu_forward(cur);
          break;
        case LayerSpec::Kind::Dropout: {
          if (training && !rng)
            throw std::invalid_argument("Net::forward: dropout in training mode needs an rng");
          Rng dummy(0);
          DropoutResult r =
              dropout_forward(cur, l.rate, training ? *rng : dummy, training);
          node.cached_mask = std::move(r.mask);
          cur = std::move(r.output);
          break;
        }
        case LayerSpec::Kind::Gap:
          node.cached_shape = cur.shape;
          cur = gap_forward(cur);
          break;
      }
    }
    return cur;
  }

  /// Accumulates parameter gradients (adds onto existing ones) and returns
  /// the gradient w.r.t. the network input. Requires a preceding forward.
  Tensor backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (std::size_t ri = nodes_.size(); ri-- > 0;) {
      Node& node = nodes_[ri];
      const LayerSpec& l = spec_.layers[ri];
      switch (l.kind) {
        case LayerSpec::Kind::Conv: {
          ConvGrads cg = conv_backward(node.cached_input, node.conv, g);
          node.conv.weights.ensure_grad();
          for (std::size_t i = 0; i < cg.weights.data.size(); ++i)
            node.conv.weights.grad[i] += cg.weights.data[i];
          for (std::size_t i = 0; i < cg.bias.size(); ++i)
            node.conv.bias_grad[i] += cg.bias[i];
          g = std::move(cg.input);
          break;
        }
        case LayerSpec::Kind::Deconv: {
          ConvGrads cg = deconv_backward(node.cached_input, node.deconv, g);
          node.deconv.weights.ensure_grad();
          for (std::size_t i = 0; i < cg.weights.data.size(); ++i)
            node.deconv.weights.grad[i] += cg.weights.data[i];
          for (std::size_t i = 0; i < cg.bias.size(); ++i)
            node.deconv.bias_grad[i] += cg.bias[i];
          g = std::move(cg.input);
          break;
        }
        case LayerSpec::Kind::Relu:
          g = relu_backward(node.cached_input, g);
          break;
        case LayerSpec::Kind::Dropout:
          g = dropout_backward(node.cached_mask, g);
          break;
        case LayerSpec::Kind::Gap:
          g = gap_backward(node.cached_shape, g);
          break;
      }
    }
    return g;
  }

  std::vector<ParamView> params() {
    std::vector<ParamView> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const LayerSpec& l = spec_.layers[i];
      if (l.kind == LayerSpec::Kind::Conv) {
        ConvLayer& c = nodes_[i].conv;
        c.weights.ensure_grad();
        out.push_back({spec_.name + "/" + l.name + "/w",
                       std::span<double>(c.weights.data),
                       std::span<double>(c.weights.grad)});
        out.push_back({spec_.name + "/" + l.name + "/b",
                       std::span<double>(c.bias), std::span<double>(c.bias_grad)});
      } else if (l.kind == LayerSpec::Kind::Deconv) {
        DeconvLayer& d = nodes_[i].deconv;
        d.weights.ensure_grad();
        out.push_back({spec_.name + "/" + l.name + "/w",
                       std::span<double>(d.weights.data),
                       std::span<double>(d.weights.grad)});
        out.push_back({spec_.name + "/" + l.name + "/b",
                       std::span<double>(d.bias), std::span<double>(d.bias_grad)});
      }
    }
    return out;
  }

  void zero_grad() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (spec_.layers[i].kind == LayerSpec::Kind::Conv) {
        nodes_[i].conv.weights.zero_grad();
        std::fill(nodes_[i].conv.bias_grad.begin(),
                  nodes_[i].conv.bias_grad.end(), 0.0);
      } else if (spec_.layers[i].kind == LayerSpec::Kind::Deconv) {
        nodes_[i].deconv.weights.zero_grad();
        std::fill(nodes_[i].deconv.bias_grad.begin(),
                  nodes_[i].deconv.bias_grad.end(), 0.0);
      }
    }
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (spec_.layers[i].kind == LayerSpec::Kind::Conv)
        n += nodes_[i].conv.weights.size() + nodes_[i].conv.bias.size();
      else if (spec_.layers[i].kind == LayerSpec::Kind::Deconv)
        n += nodes_[i].deconv.weights.size() + nodes_[i].deconv.bias.size();
    }
    return n;
  }

  /// Copy of the first `node_count` layers with their parameters — used to
  /// discard a pathway's supervision head while keeping conv1-conv3.
  Net truncated(std::size_t node_count, std::string new_name) const {
    if (node_count > nodes_.size())
      throw std::invalid_argument("Net::truncated: slice longer than net");
    NetSpec s;
    s.name = std::move(new_name);
    s.layers.assign(spec_.layers.begin(),
                    spec_.layers.begin() + static_cast<std::ptrdiff_t>(node_count));
    Net out(s);
    for (std::size_t i = 0; i < node_count; ++i) {
      out.nodes_[i].conv.weights.data = nodes_[i].conv.weights.data;
      out.nodes_[i].conv.bias = nodes_[i].conv.bias;
      out.nodes_[i].deconv.weights.data = nodes_[i].deconv.weights.data;
      out.nodes_[i].deconv.bias = nodes_[i].deconv.bias;
    }
    return out;
  }

  /// Direct access to one layer's parameters (checkpointing, SCAE transfer).
  ConvLayer& conv_at(std::size_t i) {
    check_kind(i, LayerSpec::Kind::Conv);
    return nodes_[i].conv;
  }
  const ConvLayer& conv_at(std::size_t i) const {
    check_kind(i, LayerSpec::Kind::Conv);
    return nodes_[i].conv;
  }
  DeconvLayer& deconv_at(std::size_t i) {
    check_kind(i, LayerSpec::Kind::Deconv);
    return nodes_[i].deconv;
  }
  const DeconvLayer& deconv_at(std::size_t i) const {
    check_kind(i, LayerSpec::Kind::Deconv);
    return nodes_[i].deconv;
  }

  /// Flat copy of all parameter values, in parameter-view order.
  std::vector<double> flat_params() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (spec_.layers[i].kind == LayerSpec::Kind::Conv) {
        const ConvLayer& c = nodes_[i].conv;
        out.insert(out.end(), c.weights.data.begin(), c.weights.data.end());
        out.insert(out.end(), c.bias.begin(), c.bias.end());
      } else if (spec_.layers[i].kind == LayerSpec::Kind::Deconv) {
        const DeconvLayer& d = nodes_[i].deconv;
        out.insert(out.end(), d.weights.data.begin(), d.weights.data.end());
        out.insert(out.end(), d.bias.begin(), d.bias.end());
      }
    }
    return out;
  }

 private:
  struct Node {
    ConvLayer conv;
    DeconvLayer deconv;
    Tensor cached_input;
    Tensor cached_mask;
    Shape cached_shape;
  };

  void check_kind(std::size_t i, LayerSpec::Kind want) const {
    if (i >= nodes_.size() || spec_.layers[i].kind != want)
      throw std::invalid_argument("Net: layer " + std::to_string(i) +
                                  " is not of the requested kind");
  }

  NetSpec spec_;
  std::vector<Node> nodes_;
};

}  // namespace bdn
