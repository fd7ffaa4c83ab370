#include "gldepth/model.hpp"

#include <cmath>

namespace gldepth {

namespace {

double leaky_gain(double slope) { return std::sqrt(2.0 / (1.0 + slope * slope)); }

void kaiming_uniform(Tensor& w, long fan_in, double gain, Rng& rng) {
  const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
  for (auto& v : w.data) v = rng.uniform(-bound, bound);
}

double tensor_std(const Tensor& t) {
  double mean = 0;
  for (double v : t.data) mean += v;
  mean /= static_cast<double>(t.numel());
  double var = 0;
  for (double v : t.data) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(t.numel()));
}

void copy_channels(Tensor& dst, int& at, const Tensor& src) {
  std::copy(src.data.begin(), src.data.end(),
            dst.data.begin() + static_cast<long>(at) * dst.dim(1) * dst.dim(2));
  at += src.dim(0);
}

}  // namespace

Tensor coord_channels(int height, int width) {
  Tensor c({2, height, width});
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      c(0, y, x) = width > 1 ? 2.0 * x / (width - 1) - 1.0 : 0.0;
      c(1, y, x) = height > 1 ? 2.0 * y / (height - 1) - 1.0 : 0.0;
    }
  return c;
}

GlobalLocalModel::GlobalLocalModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  plan_.c_in = cfg_.local_in_channels();
  coords_ = coord_channels(cfg_.height, cfg_.width);

  Rng rng = Rng::stream(seed, 0x6d0de1);
  const double gain = leaky_gain(cfg_.leaky_slope);

  if (cfg_.use_global_module) {
    const int enc_ch[6] = {16, 32, 64, 128, 256, kGlobalParams};
    int in_ch = cfg_.global_in_channels();
    for (int l = 0; l < 6; ++l) {
      Param& w = params_.add("enc" + std::to_string(l + 1) + ".w", {enc_ch[l], in_ch, 3, 3});
      kaiming_uniform(w.value, static_cast<long>(in_ch) * 9, gain, rng);
      params_.add("enc" + std::to_string(l + 1) + ".b", {enc_ch[l]});
      in_ch = enc_ch[l];
    }

    // The perceptron maps g to filter banks. Rows are scaled so generated
    // banks come out at their banks' Kaiming fan-in scale for g of roughly
    // unit size; rows that generate bank biases start near zero.
    Param& lpw = params_.add("lp.w", {plan_.total(), kGlobalParams});
    long row = 0;
    for (int b = 0; b < 3; ++b) {
      const double sigma = gain / std::sqrt(static_cast<double>(plan_.in_channels(b)) * 9.0);
      for (int i = 0; i < plan_.weight_count(b); ++i, ++row)
        for (int j = 0; j < kGlobalParams; ++j)
          lpw.value(static_cast<int>(row), j) = rng.uniform(-sigma, sigma);
      for (int i = 0; i < plan_.bias_count(b); ++i, ++row)
        for (int j = 0; j < kGlobalParams; ++j)
          lpw.value(static_cast<int>(row), j) = rng.uniform(-0.1 * sigma, 0.1 * sigma);
    }
    params_.add("lp.b", {plan_.total()});
  } else {
    for (int b = 0; b < 3; ++b) {
      Param& w = params_.add("bank" + std::to_string(b + 1) + ".w",
                             {BankPlan::kBankOut[b], plan_.in_channels(b), 3, 3});
      kaiming_uniform(w.value, static_cast<long>(plan_.in_channels(b)) * 9, gain, rng);
      params_.add("bank" + std::to_string(b + 1) + ".b", {BankPlan::kBankOut[b]});
    }
  }

  Param& head = params_.add("head.w", {1, BankPlan::kBankOut[2], 3, 3});
  kaiming_uniform(head.value, static_cast<long>(BankPlan::kBankOut[2]) * 9, gain, rng);
  params_.add("head.b", {1});
}

std::array<long, 6> GlobalLocalModel::bank_offsets() const {
  std::array<long, 6> offs{};
  long at = 0;
  for (int b = 0; b < 3; ++b) {
    offs[2 * b] = at;
    at += plan_.weight_count(b);
    offs[2 * b + 1] = at;
    at += plan_.bias_count(b);
  }
  return offs;
}

Tensor GlobalLocalModel::assemble_global_input(const RenderedPair& s) const {
  const int h = cfg_.height, w = cfg_.width;
  Tensor in({cfg_.global_in_channels(), h, w});
  int at = 0;
  if (cfg_.use_image_pair) {
    copy_channels(in, at, s.image1);
    copy_channels(in, at, s.image2);
  }
  copy_channels(in, at, s.flow);
  return in;
}

Tensor GlobalLocalModel::assemble_local_input(const RenderedPair& s) const {
  const int h = cfg_.height, w = cfg_.width;
  Tensor in({cfg_.local_in_channels(), h, w});
  int at = 0;
  if (cfg_.local_source == LocalSource::flow) {
    copy_channels(in, at, s.flow);
  } else {
    copy_channels(in, at, s.image1);
    copy_channels(in, at, s.image2);
  }
  if (cfg_.use_coordconv) copy_channels(in, at, coords_);
  return in;
}

Var GlobalLocalModel::global_forward(Tape& t, const RenderedPair& s, bool train) const {
  if (!cfg_.use_global_module)
    throw UsageError("global_forward: the global module is ablated in this configuration");
  auto leafp = [&](const char* name) {
    const Param* p = const_cast<ParamSet&>(params_).find(name);
    return t.leaf_ref(&p->value, train);
  };
  const int strides[6] = {2, 2, 2, 2, 1, 1};
  Var x = t.leaf(assemble_global_input(s), false);
  for (int l = 0; l < 6; ++l) {
    const std::string base = "enc" + std::to_string(l + 1);
    x = t.conv2d(x, leafp((base + ".w").c_str()), leafp((base + ".b").c_str()), strides[l]);
    if (l < 5) x = t.leaky_relu(x, cfg_.leaky_slope);
  }
  return t.global_avg_pool(x);
}

GlobalLocalModel::ForwardResult GlobalLocalModel::forward(Tape& t, const RenderedPair& s,
                                                          bool train) const {
  auto leafp = [&](const char* name) {
    const Param* p = const_cast<ParamSet&>(params_).find(name);
    return t.leaf_ref(&p->value, train);
  };

  ForwardResult r;
  if (cfg_.use_global_module) {
    r.g = global_forward(t, s, train);
    Var lp_out = t.linear(r.g, leafp("lp.w"), leafp("lp.b"));
    const auto offs = bank_offsets();
    for (int b = 0; b < 3; ++b) {
      r.banks[2 * b] = t.reshape(t.slice(lp_out, offs[2 * b], plan_.weight_count(b)),
                                 {BankPlan::kBankOut[b], plan_.in_channels(b), 3, 3});
      r.banks[2 * b + 1] = t.slice(lp_out, offs[2 * b + 1], plan_.bias_count(b));
    }
  } else {
    for (int b = 0; b < 3; ++b) {
      r.banks[2 * b] = leafp(("bank" + std::to_string(b + 1) + ".w").c_str());
      r.banks[2 * b + 1] = leafp(("bank" + std::to_string(b + 1) + ".b").c_str());
    }
  }

  Var x = t.leaf(assemble_local_input(s), false);
  for (int b = 0; b < 3; ++b)
    x = t.leaky_relu(t.conv2d(x, r.banks[2 * b], r.banks[2 * b + 1], 1), cfg_.leaky_slope);
  r.z = t.conv2d(x, leafp("head.w"), leafp("head.b"), 1);
  return r;
}

Var GlobalLocalModel::forward_z(Tape& t, const RenderedPair& s, bool train) const {
  return forward(t, s, train).z;
}

Tensor GlobalLocalModel::dump_filters(const RenderedPair& s) const {
  if (!cfg_.use_global_module)
    throw UsageError("dump_filters: requires the global module");
  Tape t;
  Var g = global_forward(t, s, false);
  const Param* lpw = const_cast<ParamSet&>(params_).find("lp.w");
  const Param* lpb = const_cast<ParamSet&>(params_).find("lp.b");
  Var out = t.linear(g, t.leaf_ref(&lpw->value, false), t.leaf_ref(&lpb->value, false));
  return t.value(out);
}

std::vector<std::pair<std::string, double>> GlobalLocalModel::activation_stds(
    const RenderedPair& s) const {
  std::vector<std::pair<std::string, double>> out;
  Tape t;
  auto leafp = [&](const std::string& name) {
    const Param* p = const_cast<ParamSet&>(params_).find(name);
    return t.leaf_ref(&p->value, false);
  };
  if (cfg_.use_global_module) {
    const int strides[6] = {2, 2, 2, 2, 1, 1};
    Var x = t.leaf(assemble_global_input(s), false);
    for (int l = 0; l < 6; ++l) {
      const std::string base = "enc" + std::to_string(l + 1);
      x = t.conv2d(x, leafp(base + ".w"), leafp(base + ".b"), strides[l]);
      if (l < 5) x = t.leaky_relu(x, cfg_.leaky_slope);
      out.push_back({base, tensor_std(t.value(x))});
    }
  }
  const ForwardResult r = forward(t, s, false);
  // Recompute the bank activations for reporting.
  Var x = t.leaf(assemble_local_input(s), false);
  for (int b = 0; b < 3; ++b) {
    x = t.leaky_relu(t.conv2d(x, r.banks[2 * b], r.banks[2 * b + 1], 1), cfg_.leaky_slope);
    out.push_back({"bank" + std::to_string(b + 1), tensor_std(t.value(x))});
  }
  out.push_back({"z", tensor_std(t.value(r.z))});
  return out;
}

SmallEncDec::SmallEncDec(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = Rng::stream(seed, 0x5ed);
  const double gain = leaky_gain(cfg_.leaky_slope);
  const auto& ch = cfg_.encdec_channels;
  const int ksize[4] = {7, 5, 3, 3};

  int in_ch = 2 * cfg_.image_channels + 2;
  for (int l = 0; l < 4; ++l) {
    Param& w = params_.add("e" + std::to_string(l + 1) + ".w", {ch[static_cast<size_t>(l)], in_ch, ksize[l], ksize[l]});
    kaiming_uniform(w.value, static_cast<long>(in_ch) * ksize[l] * ksize[l], gain, rng);
    params_.add("e" + std::to_string(l + 1) + ".b", {ch[static_cast<size_t>(l)]});
    in_ch = ch[static_cast<size_t>(l)];
  }

  // Decoder inputs concatenate the upsampled deeper feature with the
  // matching-resolution encoder feature; the last level has no skip.
  const int dec_out[4] = {128, 64, 32, 16};
  const int dec_in[4] = {ch[3] + ch[2], 128 + ch[1], 64 + ch[0], 32};
  for (int l = 0; l < 4; ++l) {
    Param& w = params_.add("d" + std::to_string(l + 1) + ".w", {dec_out[l], dec_in[l], 3, 3});
    kaiming_uniform(w.value, static_cast<long>(dec_in[l]) * 9, gain, rng);
    params_.add("d" + std::to_string(l + 1) + ".b", {dec_out[l]});
  }

  Param& out = params_.add("out.w", {1, 16, 3, 3});
  kaiming_uniform(out.value, 16 * 9, gain, rng);
  params_.add("out.b", {1});
}

Tensor SmallEncDec::assemble_input(const RenderedPair& s) const {
  Tensor in({2 * cfg_.image_channels + 2, cfg_.height, cfg_.width});
  int at = 0;
  copy_channels(in, at, s.image1);
  copy_channels(in, at, s.image2);
  copy_channels(in, at, s.flow);
  return in;
}

Var SmallEncDec::forward_z(Tape& t, const RenderedPair& s, bool train) const {
  auto leafp = [&](const std::string& name) {
    const Param* p = const_cast<ParamSet&>(params_).find(name);
    return t.leaf_ref(&p->value, train);
  };
  Var x = t.leaf(assemble_input(s), false);
  std::array<Var, 4> enc;
  for (int l = 0; l < 4; ++l) {
    const std::string base = "e" + std::to_string(l + 1);
    x = t.leaky_relu(t.conv2d(x, leafp(base + ".w"), leafp(base + ".b"), 2), cfg_.leaky_slope);
    enc[static_cast<size_t>(l)] = x;
  }
  for (int l = 0; l < 4; ++l) {
    const std::string base = "d" + std::to_string(l + 1);
    Var up = t.upsample_nearest2(x);
    Var in = l < 3 ? t.concat_channels({up, enc[static_cast<size_t>(2 - l)]}) : up;
    x = t.leaky_relu(t.conv2d(in, leafp(base + ".w"), leafp(base + ".b"), 1), cfg_.leaky_slope);
  }
  return t.conv2d(x, leafp("out.w"), leafp("out.b"), 1);
}

std::vector<std::pair<std::string, double>> SmallEncDec::activation_stds(
    const RenderedPair& s) const {
  std::vector<std::pair<std::string, double>> out;
  Tape t;
  auto leafp = [&](const std::string& name) {
    const Param* p = const_cast<ParamSet&>(params_).find(name);
    return t.leaf_ref(&p->value, false);
  };
  Var x = t.leaf(assemble_input(s), false);
  std::array<Var, 4> enc;
  for (int l = 0; l < 4; ++l) {
    const std::string base = "e" + std::to_string(l + 1);
    x = t.leaky_relu(t.conv2d(x, leafp(base + ".w"), leafp(base + ".b"), 2), cfg_.leaky_slope);
    enc[static_cast<size_t>(l)] = x;
    out.push_back({base, tensor_std(t.value(x))});
  }
  for (int l = 0; l < 4; ++l) {
    const std::string base = "d" + std::to_string(l + 1);
    Var up = t.upsample_nearest2(x);
    Var in = l < 3 ? t.concat_channels({up, enc[static_cast<size_t>(2 - l)]}) : up;
    x = t.leaky_relu(t.conv2d(in, leafp(base + ".w"), leafp(base + ".b"), 1), cfg_.leaky_slope);
    out.push_back({base, tensor_std(t.value(x))});
  }
  Var z = t.conv2d(x, leafp("out.w"), leafp("out.b"), 1);
  out.push_back({"z", tensor_std(t.value(z))});
  return out;
}

std::unique_ptr<DepthEstimator> make_model(const std::string& kind, const ModelConfig& cfg,
                                           uint64_t seed) {
  if (kind == "global-local") return std::make_unique<GlobalLocalModel>(cfg, seed);
  if (kind == "small-encdec") return std::make_unique<SmallEncDec>(cfg, seed);
  throw ConfigError("make_model: unknown model kind '" + kind + "'");
}

}  // namespace gldepth
