// Copyright 2026 The Otter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "otter/model.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>

namespace otter {

std::string to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::kRandom: return "random";
    case InitStrategy::kNormal: return "normal";
    case InitStrategy::kCopy: return "copy";
  }
  return "unknown";
}

InitStrategy parse_init_strategy(const std::string& name) {
  if (name == "random") return InitStrategy::kRandom;
  if (name == "normal") return InitStrategy::kNormal;
  if (name == "copy") return InitStrategy::kCopy;
  throw ConfigError("unknown init strategy '" + name + "'");
}

void OtterConfig::validate() const {
  if (d_ext < 0 || d_inner_ext < 0 || n_ext_heads < 0) {
    throw ConfigError("otter config '" + name + "': negative extension size");
  }
  if (d_ext == 0 && d_inner_ext == 0 && n_ext_heads == 0) {
    throw ConfigError("otter config '" + name + "': empty extension");
  }
  if (d_ext == 0) {
    throw ConfigError("otter config '" + name +
                      "': d_ext must be >= 1 so added heads and FFN units "
                      "have residual coordinates to write into");
  }
  if (!(reg_lambda >= 0.0)) {
    throw ConfigError("otter config '" + name + "': reg_lambda must be >= 0");
  }
}

template <typename T>
std::size_t Model<T>::width() const {
  std::size_t w = static_cast<std::size_t>(config.d_model);
  for (const auto& e : extensions) w += static_cast<std::size_t>(e.d_ext);
  return w;
}

template <typename T>
std::size_t Model<T>::inner() const {
  std::size_t w = static_cast<std::size_t>(config.d_inner);
  for (const auto& e : extensions) w += static_cast<std::size_t>(e.d_inner_ext);
  return w;
}

template <typename T>
std::size_t Model<T>::total_heads() const {
  std::size_t w = static_cast<std::size_t>(config.n_heads);
  for (const auto& e : extensions) w += static_cast<std::size_t>(e.n_ext_heads);
  return w;
}

template <typename T>
std::size_t Model<T>::ext_offset(int k) const {
  if (k < 1 || k > num_extensions()) {
    throw ConfigError("no extension with index " + std::to_string(k));
  }
  std::size_t off = static_cast<std::size_t>(config.d_model);
  for (int j = 1; j < k; ++j) off += static_cast<std::size_t>(extensions[j - 1].d_ext);
  return off;
}

template <typename T>
std::size_t Model<T>::ext_width(int k) const {
  if (k < 1 || k > num_extensions()) {
    throw ConfigError("no extension with index " + std::to_string(k));
  }
  return static_cast<std::size_t>(extensions[k - 1].d_ext);
}

template <typename T>
ForwardDims Model<T>::dims() const {
  ForwardDims d = base_dims(config);
  d.width = width();
  d.inner = inner();
  d.n_heads = total_heads();
  return d;
}

template <typename T>
void Model<T>::set_trainable_group(int group) {
  trainable_group = group;
  for_each_parameter([group](Parameter<T>& p) { p.set_trainable_group(group); });
}

template <typename T>
ForwardTrace<T> Model<T>::forward(Tape<T>& tape, std::span<const int> tokens) const {
  for (int t : tokens) {
    if (t < 0 || t >= config.vocab_size) {
      throw InputError("token " + std::to_string(t) + " outside vocabulary of " +
                       std::to_string(config.vocab_size));
    }
  }
  return transformer_forward(tape, weights, dims(), tokens);
}

template <typename T>
Tensor<T> Model<T>::logits(std::span<const int> tokens) const {
  Tape<T> tape(false);
  return forward(tape, tokens).logits.value();
}

template <typename T>
Model<T> make_base_model(const ModelConfig& config, std::uint64_t seed) {
  Model<T> m;
  m.config = config;
  m.weights = make_base_weights<T>(config, seed);
  m.set_trainable_group(kBaseGroup);
  return m;
}

template <typename T>
Tensor<T> ExpandedLinear<T>::apply(const Tensor<T>& x) const {
  Tape<T> tape(false);
  return ops::linear(tape.constant(x), tape.parameter(weight), tape.parameter(bias))
      .value();
}

template <typename T>
ExpandedLinear<T> expand_linear(const Tensor<T>& weight, const Tensor<T>& bias,
                                int d_in_ext, int d_out_ext) {
  if (d_in_ext < 0 || d_out_ext < 0) {
    throw ConfigError("expand_linear: negative extension size");
  }
  if (weight.rank() != 2 || bias.size() != weight.rows()) {
    throw ConfigError("expand_linear: expected weight [out, in] and bias [out]");
  }
  const std::size_t out = weight.rows(), in = weight.cols();
  auto w = make_parameter<T>("weight", {out, in}, {out}, {in});
  auto b = make_parameter<T>("bias", {out}, {out}, {});
  w.value = weight;
  b.value = Tensor<T>({out}, bias.storage());
  ExpandedLinear<T> e{grow_parameter(w, static_cast<std::size_t>(d_out_ext),
                                     static_cast<std::size_t>(d_in_ext), T(0)),
                      grow_parameter(b, static_cast<std::size_t>(d_out_ext), 0, T(0))};
  e.weight.set_trainable_group(1);
  e.bias.set_trainable_group(1);
  return e;
}

template <typename T>
Parameter<T> grow_parameter(const Parameter<T>& p, std::size_t add_rows,
                            std::size_t add_cols, T fill) {
  const std::size_t rows = p.num_rows(), cols = p.num_cols();
  const std::size_t new_rows = rows + (p.row_groups.empty() ? 0 : add_rows);
  const std::size_t new_cols = cols + (p.col_groups.empty() ? 0 : add_cols);
  Parameter<T> out;
  out.name = p.name;
  out.base_owner = p.base_owner;
  out.row_groups = p.row_groups;
  out.col_groups = p.col_groups;
  if (!out.row_groups.empty()) out.row_groups.push_back(add_rows);
  if (!out.col_groups.empty()) out.col_groups.push_back(add_cols);
  Shape shape = p.value.rank() == 1 ? Shape{new_rows} : Shape{new_rows, new_cols};
  out.value = Tensor<T>(std::move(shape), fill);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(p.value.storage().begin() + r * cols, cols,
                out.value.storage().begin() + r * new_cols);
  }
  out.rebuild_blocks();
  out.rezero();
  out.set_trainable_group(kNoGroup);
  return out;
}

namespace {

// Removes the newest group from every partitioned axis.
template <typename T>
Parameter<T> shrink_parameter(const Parameter<T>& p) {
  Parameter<T> out;
  out.name = p.name;
  out.base_owner = p.base_owner;
  out.row_groups = p.row_groups;
  out.col_groups = p.col_groups;
  const std::size_t cols = p.num_cols();
  std::size_t new_rows = p.num_rows(), new_cols = cols;
  if (!out.row_groups.empty()) {
    new_rows -= out.row_groups.back();
    out.row_groups.pop_back();
  }
  if (!out.col_groups.empty()) {
    new_cols -= out.col_groups.back();
    out.col_groups.pop_back();
  }
  Shape shape = p.value.rank() == 1 ? Shape{new_rows} : Shape{new_rows, new_cols};
  out.value = Tensor<T>(std::move(shape));
  for (std::size_t r = 0; r < new_rows; ++r) {
    std::copy_n(p.value.storage().begin() + r * cols, new_cols,
                out.value.storage().begin() + r * new_cols);
  }
  out.rebuild_blocks();
  out.set_trainable_group(kNoGroup);
  return out;
}

}  // namespace

template <typename T>
Model<T> expand_model(const Model<T>& model, const OtterConfig& cfg) {
  cfg.validate();
  if (model.trainable_group >= 1) {
    throw SequencingError("cannot stack '" + cfg.name + "' while extension " +
                          std::to_string(model.trainable_group) +
                          " is still trainable; freeze it first");
  }
  const std::size_t de = cfg.d_ext, di = cfg.d_inner_ext;
  const std::size_t da = static_cast<std::size_t>(cfg.n_ext_heads) * model.config.head_dim;
  Model<T> out;
  out.config = model.config;
  out.extensions = model.extensions;
  out.extensions.push_back(cfg);
  out.heads = model.heads;
  const Weights<T>& w = model.weights;
  out.weights.embedding = grow_parameter(w.embedding, 0, de, T(0));
  for (const LayerWeights<T>& l : w.layers) {
    LayerWeights<T> n;
    n.attn_norm = grow_parameter(l.attn_norm, de, 0, T(1));
    n.wq = grow_parameter(l.wq, da, de, T(0));
    n.wk = grow_parameter(l.wk, da, de, T(0));
    n.wv = grow_parameter(l.wv, da, de, T(0));
    n.wo = grow_parameter(l.wo, de, da, T(0));
    n.ffn_norm = grow_parameter(l.ffn_norm, de, 0, T(1));
    n.wg = grow_parameter(l.wg, di, de, T(0));
    n.bg = grow_parameter(l.bg, di, 0, T(0));
    n.wu = grow_parameter(l.wu, di, de, T(0));
    n.bu = grow_parameter(l.bu, di, 0, T(0));
    n.wd = grow_parameter(l.wd, de, di, T(0));
    n.bd = grow_parameter(l.bd, de, 0, T(0));
    out.weights.layers.push_back(std::move(n));
  }
  out.weights.final_norm = grow_parameter(w.final_norm, de, 0, T(1));
  out.weights.lm_head = w.lm_head;
  out.set_trainable_group(out.num_extensions());
  return out;
}

template <typename T>
Model<T> remove_last_extension(const Model<T>& model) {
  if (model.extensions.empty()) throw ConfigError("model has no extension to remove");
  const int k = model.num_extensions();
  Model<T> out;
  out.config = model.config;
  out.extensions = model.extensions;
  out.extensions.pop_back();
  for (const auto& h : model.heads) {
    if (h.extension != k) out.heads.push_back(h);
  }
  const Weights<T>& w = model.weights;
  out.weights.embedding = shrink_parameter(w.embedding);
  for (const LayerWeights<T>& l : w.layers) {
    LayerWeights<T> n;
    n.attn_norm = shrink_parameter(l.attn_norm);
    n.wq = shrink_parameter(l.wq);
    n.wk = shrink_parameter(l.wk);
    n.wv = shrink_parameter(l.wv);
    n.wo = shrink_parameter(l.wo);
    n.ffn_norm = shrink_parameter(l.ffn_norm);
    n.wg = shrink_parameter(l.wg);
    n.bg = shrink_parameter(l.bg);
    n.wu = shrink_parameter(l.wu);
    n.bu = shrink_parameter(l.bu);
    n.wd = shrink_parameter(l.wd);
    n.bd = shrink_parameter(l.bd);
    out.weights.layers.push_back(std::move(n));
  }
  out.weights.final_norm = shrink_parameter(w.final_norm);
  out.weights.lm_head = w.lm_head;
  out.set_trainable_group(model.trainable_group < k ? model.trainable_group : kNoGroup);
  return out;
}

namespace {

using IndexFn = std::function<std::size_t(std::size_t)>;

// Source indices for `count` new slots drawn from `range` originals:
// without replacement while possible, then cycling through fresh shuffles.
std::vector<std::size_t> sample_map(std::size_t count, std::size_t range,
                                    std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  out.reserve(count);
  std::vector<std::size_t> perm(range);
  while (out.size() < count && range > 0) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < range && out.size() < count; ++i) out.push_back(perm[i]);
  }
  return out;
}

IndexFn extend_map(std::size_t base, std::vector<std::size_t> map) {
  return [base, map = std::move(map)](std::size_t i) {
    return i < base ? i : map[i - base];
  };
}

IndexFn identity_map() {
  return [](std::size_t i) { return i; };
}

// Base-group extent of an axis: the first group, or the whole axis.
template <typename T>
std::size_t base_rows(const Parameter<T>& p) {
  return p.row_groups.empty() ? p.num_rows() : p.row_groups.front();
}
template <typename T>
std::size_t base_cols(const Parameter<T>& p) {
  return p.col_groups.empty() ? p.num_cols() : p.col_groups.front();
}

template <typename T, typename F>
void for_each_new_element(Parameter<T>& p, int k, F&& f) {
  const std::size_t nc = p.num_cols();
  for (const Block& b : p.blocks) {
    if (b.owner != k || b.structural_zero) continue;
    for (std::size_t r = b.row_begin; r < b.row_end; ++r) {
      for (std::size_t c = b.col_begin; c < b.col_end; ++c) f(p.value[r * nc + c], r, c);
    }
  }
}

template <typename T>
class Initializer {
 public:
  Initializer(InitStrategy strategy, int k, std::uint64_t seed, InitReport& report)
      : strategy_(strategy), k_(k), rng_(seed), report_(report) {}

  std::mt19937_64& rng() { return rng_; }

  void norm(Parameter<T>& p) {
    for_each_new_element(p, k_, [](T& v, std::size_t, std::size_t) { v = T(1); });
  }

  void weight(Parameter<T>& p, const IndexFn& row_src, const IndexFn& col_src) {
    const std::size_t br = base_rows(p), bc = base_cols(p);
    InitStrategy s = strategy_;
    if (s == InitStrategy::kCopy && (br == 0 || bc == 0)) {
      report_.fallbacks.push_back(p.name);
      s = InitStrategy::kNormal;
    }
    switch (s) {
      case InitStrategy::kRandom: {
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        for_each_new_element(p, k_, [&](T& v, std::size_t, std::size_t) {
          v = static_cast<T>(u(rng_));
        });
        break;
      }
      case InitStrategy::kNormal: {
        double mean = 0.0, var = 0.0;
        moments(p, br, bc, mean, var);
        std::normal_distribution<double> n(mean, std::sqrt(var));
        for_each_new_element(p, k_, [&](T& v, std::size_t, std::size_t) {
          v = var > 0.0 ? static_cast<T>(n(rng_)) : static_cast<T>(mean);
        });
        break;
      }
      case InitStrategy::kCopy: {
        const std::size_t nc = p.num_cols();
        std::vector<T> snapshot = p.value.storage();
        for_each_new_element(p, k_, [&](T& v, std::size_t r, std::size_t c) {
          v = snapshot[row_src(r) * nc + col_src(c)];
        });
        break;
      }
    }
  }

 private:
  static void moments(const Parameter<T>& p, std::size_t br, std::size_t bc,
                      double& mean, double& var) {
    const std::size_t nc = p.num_cols();
    const double n = static_cast<double>(br * bc);
    if (n == 0) {
      mean = 0.0;
      var = 1.0 / static_cast<double>(std::max<std::size_t>(nc, 1));
      return;
    }
    double sum = 0.0;
    for (std::size_t r = 0; r < br; ++r)
      for (std::size_t c = 0; c < bc; ++c) sum += p.value[r * nc + c];
    mean = sum / n;
    double sq = 0.0;
    for (std::size_t r = 0; r < br; ++r)
      for (std::size_t c = 0; c < bc; ++c) {
        const double d = p.value[r * nc + c] - mean;
        sq += d * d;
      }
    var = sq / n;
  }

  InitStrategy strategy_;
  int k_;
  std::mt19937_64 rng_;
  InitReport& report_;
};

}  // namespace

template <typename T>
InitReport init_params(Model<T>& model, int k, InitStrategy strategy,
                       std::uint64_t seed) {
  if (k < 1 || k > model.num_extensions()) {
    throw ConfigError("init_params: no extension with index " + std::to_string(k));
  }
  InitReport report;
  report.strategy = strategy;
  Initializer<T> init(strategy, k, seed, report);
  const std::size_t d = model.config.d_model, di = model.config.d_inner;
  const std::size_t nh = model.config.n_heads, hd = model.config.head_dim;
  const std::size_t width = model.width(), inner = model.inner();
  const std::size_t heads = model.total_heads();

  const IndexFn id = identity_map();
  const IndexFn res = extend_map(d, sample_map(width - d, d, init.rng()));
  Weights<T>& w = model.weights;
  init.weight(w.embedding, id, res);
  for (LayerWeights<T>& l : w.layers) {
    const IndexFn inn = extend_map(di, sample_map(inner - di, di, init.rng()));
    const std::vector<std::size_t> hmap = sample_map(heads - nh, nh, init.rng());
    const IndexFn head = [nh, hd, hmap](std::size_t i) {
      const std::size_t h = i / hd;
      return h < nh ? i : hmap[h - nh] * hd + i % hd;
    };
    init.norm(l.attn_norm);
    init.weight(l.wq, head, res);
    init.weight(l.wk, head, res);
    init.weight(l.wv, head, res);
    init.weight(l.wo, res, head);
    init.norm(l.ffn_norm);
    init.weight(l.wg, inn, res);
    init.weight(l.bg, inn, id);
    init.weight(l.wu, inn, res);
    init.weight(l.bu, inn, id);
    init.weight(l.wd, res, inn);
    init.weight(l.bd, res, id);
  }
  init.norm(w.final_norm);
  return report;
}

template <typename T>
Tensor<T> restricted_rmsnorm(const Tensor<T>& h, std::size_t d_orig,
                             const Tensor<T>& gamma, T eps) {
  Tape<T> tape(false);
  return ops::rmsnorm(tape.constant(h), tape.constant(gamma), d_orig, eps).value();
}

namespace {

template <typename T>
std::vector<const Parameter<T>*> weight_list(const Model<T>& m) {
  std::vector<const Parameter<T>*> out;
  m.weights.for_each([&out](const Parameter<T>& p) { out.push_back(&p); });
  return out;
}

template <typename T>
double max_abs_diff_cols(const Tensor<T>& a, const Tensor<T>& b, std::size_t cols) {
  double worst = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = std::abs(static_cast<double>(a.at(r, c)) - b.at(r, c));
      if (!(d <= worst)) worst = d;  // NaN propagates as a failure
    }
  }
  return worst;
}

std::string site_name(std::size_t site, std::size_t n_layers) {
  if (site == 2 * n_layers) return "final_norm";
  return "layers." + std::to_string(site / 2) + (site % 2 == 0 ? ".attn" : ".ffn");
}

}  // namespace

template <typename T>
NonDisruptionReport verify_non_disruption(
    const Model<T>& base, const Model<T>& otter,
    const std::vector<std::vector<int>>& prompts, double tol) {
  if (!(base.config == otter.config)) {
    throw ConfigError("verify: otter model was not built from this base");
  }
  if (!base.extensions.empty()) {
    throw ConfigError("verify: reference model must have no extensions");
  }
  for (const Parameter<T>* p : weight_list(otter)) {
    const long bad = p->first_nonzero_structural();
    if (bad >= 0) {
      throw VerificationError("structural zero element " + std::to_string(bad) +
                                  " of " + p->name + " is nonzero",
                              -1, p->name);
    }
  }
  const auto bw = weight_list(base);
  const auto ow = weight_list(otter);
  for (std::size_t i = 0; i < bw.size(); ++i) {
    const Parameter<T>& b = *bw[i];
    const Parameter<T>& o = *ow[i];
    const std::size_t nc = b.num_cols(), onc = o.num_cols();
    for (std::size_t r = 0; r < b.num_rows(); ++r) {
      for (std::size_t c = 0; c < nc; ++c) {
        if (b.value[r * nc + c] != o.value[r * onc + c]) {
          throw VerificationError("base block of " + o.name + " differs from base", -1,
                                  o.name);
        }
      }
    }
  }
  NonDisruptionReport report;
  report.tol = tol;
  const std::size_t d = base.config.d_model;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    Tape<T> bt(false), ot(false);
    const ForwardTrace<T> btr = base.forward(bt, prompts[i]);
    const ForwardTrace<T> otr = otter.forward(ot, prompts[i]);
    const double dev = max_abs_diff_cols(btr.logits.value(), otr.logits.value(),
                                         btr.logits.value().cols());
    report.per_prompt.push_back(dev);
    report.max_deviation = std::max(report.max_deviation, dev);
    if (!(dev <= tol)) {
      std::string where = "logits";
      for (std::size_t s = 0; s < btr.hidden_sites.size(); ++s) {
        const double hd = max_abs_diff_cols(btr.hidden_sites[s].post.value(),
                                            otr.hidden_sites[s].post.value(), d);
        if (!(hd <= tol)) {
          where = site_name(s, base.weights.layers.size());
          break;
        }
      }
      throw VerificationError("prompt " + std::to_string(i) + ": logit deviation " +
                                  std::to_string(dev) + " exceeds tolerance " +
                                  std::to_string(tol) + " (first divergence at " +
                                  where + ")",
                              static_cast<int>(i), where);
    }
  }
  return report;
}

std::int64_t analytic_base_count(const ModelConfig& c) {
  const std::int64_t V = c.vocab_size, d = c.d_model, I = c.d_inner;
  const std::int64_t A = static_cast<std::int64_t>(c.n_heads) * c.head_dim;
  const std::int64_t per_layer = 3 * A * d + d * A + 3 * I * d + 2 * I + d + 2 * d;
  return V * d + c.n_layers * per_layer + d + V * d;
}

std::int64_t analytic_added_count(const ModelConfig& c,
                                  const std::vector<OtterConfig>& exts,
                                  std::int64_t head_params) {
  std::int64_t D = c.d_model, I = c.d_inner;
  std::int64_t A = static_cast<std::int64_t>(c.n_heads) * c.head_dim;
  std::int64_t added = 0;
  for (const OtterConfig& e : exts) {
    const std::int64_t de = e.d_ext, die = e.d_inner_ext;
    const std::int64_t dae = static_cast<std::int64_t>(e.n_ext_heads) * c.head_dim;
    const std::int64_t per_layer = 2 * die * (D + de) + de * (I + die) +
                                   3 * dae * (D + de) + de * (A + dae) +
                                   (2 * die + de) + 2 * de;
    added += c.n_layers * per_layer + c.vocab_size * de + de;
    D += de;
    I += die;
    A += dae;
  }
  return added + head_params;
}

template <typename T>
ParamCount count_params(const Model<T>& model) {
  ParamCount out;
  std::int64_t head_params = 0;
  auto visit = [&](const Parameter<T>& p) {
    out.allocated += static_cast<std::int64_t>(p.value.size());
    for (const Block& b : p.blocks) {
      if (b.owner == kBaseGroup) {
        out.base += static_cast<std::int64_t>(b.size());
      } else if (!b.structural_zero) {
        out.added_enumerated += static_cast<std::int64_t>(b.size());
      }
    }
  };
  model.weights.for_each(visit);
  for (const auto& h : model.heads) {
    visit(h.weight);
    head_params += static_cast<std::int64_t>(h.weight.value.size());
  }
  out.added_analytic = analytic_added_count(model.config, model.extensions, head_params);
  out.ratio = out.base > 0
                  ? static_cast<double>(out.base + out.added_enumerated) / out.base
                  : 0.0;
  return out;
}

ScaleReport llama7b_report() {
  ModelConfig c;
  c.vocab_size = 32000;
  c.d_model = 4096;
  c.d_inner = 11008;
  c.n_layers = 32;
  c.n_heads = 32;
  c.head_dim = 128;
  c.max_seq_len = 4096;
  OtterConfig e;
  e.d_ext = 256;
  e.d_inner_ext = 512;
  e.n_ext_heads = 16;
  ScaleReport r;
  r.base = analytic_base_count(c);
  r.total = r.base + analytic_added_count(c, {e}, e.d_ext);
  return r;
}

#define OTTER_INSTANTIATE_MODEL(T)                                                  \
  template struct Model<T>;                                                         \
  template struct ExpandedLinear<T>;                                                \
  template Model<T> make_base_model<T>(const ModelConfig&, std::uint64_t);          \
  template ExpandedLinear<T> expand_linear(const Tensor<T>&, const Tensor<T>&, int, \
                                           int);                                    \
  template Parameter<T> grow_parameter(const Parameter<T>&, std::size_t,            \
                                       std::size_t, T);                             \
  template Model<T> expand_model(const Model<T>&, const OtterConfig&);              \
  template Model<T> remove_last_extension(const Model<T>&);                         \
  template InitReport init_params(Model<T>&, int, InitStrategy, std::uint64_t);     \
  template Tensor<T> restricted_rmsnorm(const Tensor<T>&, std::size_t,              \
                                        const Tensor<T>&, T);                       \
  template NonDisruptionReport verify_non_disruption(                               \
      const Model<T>&, const Model<T>&, const std::vector<std::vector<int>>&,       \
      double);                                                                      \
  template ParamCount count_params(const Model<T>&);

OTTER_INSTANTIATE_MODEL(float)
OTTER_INSTANTIATE_MODEL(double)
OTTER_INSTANTIATE_MODEL(long double)
#undef OTTER_INSTANTIATE_MODEL

}  // namespace otter
