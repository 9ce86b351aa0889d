#include "ramp/encoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include <Eigen/Core>

#include "ramp/error.hpp"
#include "ramp/parallel.hpp"
#include "ramp/rng.hpp"

namespace ramp {
namespace {

const char* sensor_tag(Sensor s) { return s == Sensor::kEvents ? "ev" : "img"; }
const char* head_tag(FusionHead h) { return h == FusionHead::kMatching ? "match" : "ctx"; }

inline float sigmoidf(float v) { return 1.0f / (1.0f + std::exp(-v)); }

int conv_out_dim(int in, int k, int stride) {
  const int pad = (k - 1) / 2;
  return (in + 2 * pad - k) / stride + 1;
}

struct ConvRef {
  const float* w = nullptr;
  const float* b = nullptr;
  int cout = 0, cin = 0, k = 1, stride = 1;
};

struct LstmRef {
  const float* w_ih = nullptr;
  const float* w_hh = nullptr;
  const float* b = nullptr;
};

struct FuseRef {
  const float* w = nullptr;
  const float* b = nullptr;
};

struct MsfRef {
  ConvRef conv7;
  ConvRef res[4][2];
  ConvRef down;
  ConvRef out;
};

// im2col over a block of output rows, then one Eigen GEMM per block:
// out[co, block] = W(cout x cin*k*k) * P(cin*k*k x block_px) + bias.
void conv2d(const Tensor3& in, const ConvRef& cw, Tensor3& out) {
  const int oh = conv_out_dim(in.h, cw.k, cw.stride);
  const int ow = conv_out_dim(in.w, cw.k, cw.stride);
  if (out.c != cw.cout || out.h != oh || out.w != ow) out = Tensor3(cw.cout, oh, ow);
  const int pad = (cw.k - 1) / 2;
  const int k = cw.k, stride = cw.stride, cin = cw.cin, cout = cw.cout;
  const int ih = in.h, iw = in.w;
  const int patch_len = cin * k * k;

  const Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      wmat(cw.w, cout, patch_len);
  const Eigen::Map<const Eigen::VectorXf> bias(cw.b, cout);

  // Block height keeps the patch matrix inside L2 while giving the GEMM
  // enough columns to amortize; cap it so the row range still splits into
  // enough blocks to occupy every worker. The decomposition depends only on
  // shapes, so results do not change with the worker count.
  const int rows_cache = std::max(1, (1 << 18) / std::max(1, patch_len * ow));
  const int rows_per_block = std::max(1, std::min({oh, rows_cache, std::max(1, oh / 32)}));
  const int n_blocks = (oh + rows_per_block - 1) / rows_per_block;

  parallel_for(0, n_blocks, [&](std::int64_t blo, std::int64_t bhi) {
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor> patches;
    for (std::int64_t b = blo; b < bhi; ++b) {
      const int oy0 = static_cast<int>(b) * rows_per_block;
      const int oy1 = std::min(oh, oy0 + rows_per_block);
      const int cols = (oy1 - oy0) * ow;
      patches.resize(patch_len, cols);

      for (int oy = oy0; oy < oy1; ++oy) {
        float* colbase = patches.data() + static_cast<std::size_t>(oy - oy0) * ow * patch_len;
        for (int ci = 0; ci < cin; ++ci) {
          const float* plane = in.channel(ci);
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride + ky - pad;
            float* dst = colbase + (static_cast<std::size_t>(ci) * k + ky) * k;
            if (iy < 0 || iy >= ih) {
              for (int ox = 0; ox < ow; ++ox)
                std::memset(dst + static_cast<std::size_t>(ox) * patch_len, 0,
                            sizeof(float) * k);
              continue;
            }
            const float* in_row = plane + static_cast<std::size_t>(iy) * iw;
            for (int ox = 0; ox < ow; ++ox) {
              float* cell = dst + static_cast<std::size_t>(ox) * patch_len;
              const int ix0 = ox * stride - pad;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ix0 + kx;
                cell[kx] = (ix < 0 || ix >= iw) ? 0.0f : in_row[ix];
              }
            }
          }
        }
      }

      Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> prod;
      prod.noalias() = wmat * patches;
      prod.colwise() += bias;
      for (int co = 0; co < cout; ++co)
        std::memcpy(out.channel(co) + static_cast<std::size_t>(oy0) * ow,
                    prod.data() + static_cast<std::size_t>(co) * cols,
                    sizeof(float) * static_cast<std::size_t>(cols));
    }
  });
}

void relu_inplace(Tensor3& t) {
  parallel_for(0, static_cast<std::int64_t>(t.v.size()),
               [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      if (t.v[i] < 0) t.v[i] = 0;
    }
  });
}

Tensor3 resblock(const Tensor3& x, const ConvRef& c1, const ConvRef& c2) {
  Tensor3 a = x;
  relu_inplace(a);
  Tensor3 mid;
  conv2d(a, c1, mid);
  relu_inplace(mid);
  Tensor3 y;
  conv2d(mid, c2, y);
  parallel_for(0, static_cast<std::int64_t>(y.v.size()),
               [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) y.v[i] += x.v[i];
  });
  return y;
}

Tensor3 concat_channels(const Tensor3& a, const Tensor3& b) {
  if (a.h != b.h || a.w != b.w) throw Error("channel concat: spatial mismatch");
  Tensor3 out(a.c + b.c, a.h, a.w);
  std::memcpy(out.v.data(), a.v.data(), a.v.size() * sizeof(float));
  std::memcpy(out.v.data() + a.v.size(), b.v.data(), b.v.size() * sizeof(float));
  return out;
}

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

SensorSample SensorSample::frame(double t, Tensor3 image) {
  SensorSample s;
  s.timestamp = t;
  s.sensor = Sensor::kImage;
  s.payload = std::move(image);
  return s;
}

SensorSample SensorSample::stack(double t, const EventStack& st) {
  SensorSample s;
  s.timestamp = t;
  s.sensor = Sensor::kEvents;
  s.payload = Tensor3(EventStack::kBins, st.height, st.width);
  std::memcpy(s.payload.v.data(), st.data.data(), st.data.size() * sizeof(float));
  return s;
}

std::vector<ParamSpec> encoder_param_specs(const EncoderConfig& cfg) {
  const auto u = [](int v) { return static_cast<std::uint32_t>(v); };
  const int C = cfg.channels;
  std::vector<ParamSpec> specs;
  const int kernel[3] = {1, 3, 5};

  for (Sensor sensor : {Sensor::kEvents, Sensor::kImage}) {
    const std::string sn = sensor_tag(sensor);
    const int cin = sensor == Sensor::kEvents ? EventStack::kBins : cfg.frame_channels;
    for (int s = 0; s < 3; ++s) {
      const std::string base = "enc." + sn + ".s" + std::to_string(s) + ".conv";
      specs.push_back({base + ".w", {u(C), u(cin), u(kernel[s]), u(kernel[s])}});
      specs.push_back({base + ".b", {u(C)}});
    }
    for (int s = 0; s < 3; ++s) {
      const std::string base = "lstm." + sn + ".s" + std::to_string(s);
      specs.push_back({base + ".w_ih", {u(4 * C), u(C)}});
      specs.push_back({base + ".w_hh", {u(4 * C), u(C)}});
      specs.push_back({base + ".b", {u(4 * C)}});
    }
    for (int s = 0; s < 3; ++s) {
      const std::string base = "fuse." + sn + ".s" + std::to_string(s);
      specs.push_back({base + ".w", {u(C), u(2 * C)}});
      specs.push_back({base + ".b", {u(C)}});
    }
  }

  for (FusionHead head : {FusionHead::kMatching, FusionHead::kContext}) {
    const std::string hd = std::string("msf.") + head_tag(head);
    const int out_c =
        head == FusionHead::kMatching ? cfg.matching_channels : cfg.context_channels;
    specs.push_back({hd + ".conv7.w", {u(cfg.msf_half), u(C), 7, 7}});
    specs.push_back({hd + ".conv7.b", {u(cfg.msf_half)}});
    for (int rb = 1; rb <= 2; ++rb) {
      for (int cc = 1; cc <= 2; ++cc) {
        const std::string base =
            hd + ".res" + std::to_string(rb) + ".conv" + std::to_string(cc);
        specs.push_back({base + ".w", {u(cfg.msf_half), u(cfg.msf_half), 3, 3}});
        specs.push_back({base + ".b", {u(cfg.msf_half)}});
      }
    }
    specs.push_back({hd + ".down.w", {u(cfg.msf_quarter), u(cfg.msf_half + C), 3, 3}});
    specs.push_back({hd + ".down.b", {u(cfg.msf_quarter)}});
    for (int rb = 3; rb <= 4; ++rb) {
      for (int cc = 1; cc <= 2; ++cc) {
        const std::string base =
            hd + ".res" + std::to_string(rb) + ".conv" + std::to_string(cc);
        specs.push_back({base + ".w", {u(cfg.msf_quarter), u(cfg.msf_quarter), 3, 3}});
        specs.push_back({base + ".b", {u(cfg.msf_quarter)}});
      }
    }
    specs.push_back({hd + ".out.w", {u(out_c), u(cfg.msf_quarter + C), 1, 1}});
    specs.push_back({hd + ".out.b", {u(out_c)}});
  }
  return specs;
}

struct Encoder::Impl {
  ConvRef enc[2][3];
  LstmRef lstm[2][3];
  FuseRef fuse[2][3];
  MsfRef msf[2];
};

namespace {

void validate_config(const EncoderConfig& cfg) {
  if (cfg.channels < 1 || cfg.msf_half < 1 || cfg.msf_quarter < 1 ||
      cfg.matching_channels < 1 || cfg.context_channels < 1)
    throw Error("encoder channel widths must be positive");
  if (cfg.frame_channels != 1 && cfg.frame_channels != 3)
    throw Error("frame_channels must be 1 or 3");
  if (cfg.height < 4 || cfg.width < 4 || cfg.height % 4 != 0 || cfg.width % 4 != 0)
    throw Error("encoder H and W must be positive and divisible by 4");
}

// Untrained weights must still yield feature maps that stay comparable
// across samples, so the random init damps the recurrent paths: the LSTM
// hidden-to-hidden block and the sigma-carry half of the fusion mix get a
// reduced range, keeping features driven by current sensor content.
constexpr double kRecurrentGain = 0.25;
constexpr double kCarryGain = 0.25;

WeightArchive random_archive(const EncoderConfig& cfg) {
  Rng rng(cfg.init_seed);
  WeightArchive archive;
  const int C = cfg.channels;
  for (const ParamSpec& spec : encoder_param_specs(cfg)) {
    std::size_t n = 1;
    for (auto d : spec.shape) n *= d;
    std::vector<float> data(n);
    for (auto& v : data)
      v = static_cast<float>(rng.uniform(-cfg.init_range, cfg.init_range));
    if (spec.name.find(".w_hh") != std::string::npos) {
      for (auto& v : data) v = static_cast<float>(v * kRecurrentGain);
    } else if (spec.name.rfind("fuse.", 0) == 0 && spec.name.back() == 'w') {
      for (std::size_t row = 0; row < n / (2 * C); ++row)
        for (int ci = C; ci < 2 * C; ++ci)
          data[row * 2 * C + ci] = static_cast<float>(data[row * 2 * C + ci] * kCarryGain);
    }
    archive.add(spec.name, spec.shape, std::move(data));
  }
  return archive;
}

void validate_archive(const EncoderConfig& cfg, const WeightArchive& archive) {
  const auto specs = encoder_param_specs(cfg);
  std::string problems;
  for (const ParamSpec& spec : specs) {
    if (!archive.contains(spec.name)) {
      problems += " missing '" + spec.name + "';";
      continue;
    }
    if (archive.get(spec.name).shape != spec.shape)
      problems += " shape mismatch for '" + spec.name + "';";
  }
  if (archive.size() != specs.size()) {
    for (const auto& [name, tensor] : archive.tensors()) {
      bool expected = false;
      for (const ParamSpec& spec : specs) {
        if (spec.name == name) {
          expected = true;
          break;
        }
      }
      if (!expected) problems += " unexpected tensor '" + name + "';";
    }
  }
  if (!problems.empty()) throw Error("weight archive rejected:" + problems);
}

}  // namespace

namespace {

std::shared_ptr<Encoder::Impl> bind_weights(const EncoderConfig& cfg,
                                            const WeightArchive& a);

}  // namespace

Encoder::Encoder(const EncoderConfig& cfg) : cfg_(cfg) {
  validate_config(cfg);
  weights_ = std::make_shared<WeightArchive>(random_archive(cfg));
  impl_ = bind_weights(cfg, *weights_);
}

Encoder::Encoder(const EncoderConfig& cfg, const WeightArchive& archive) : cfg_(cfg) {
  validate_config(cfg);
  validate_archive(cfg, archive);
  weights_ = std::make_shared<WeightArchive>(archive);
  impl_ = bind_weights(cfg, *weights_);
}

namespace {

std::shared_ptr<Encoder::Impl> bind_weights(const EncoderConfig& cfg,
                                            const WeightArchive& a) {
  auto impl = std::make_shared<Encoder::Impl>();
  const int kernel[3] = {1, 3, 5};
  const int stride[3] = {1, 2, 4};
  for (int sen = 0; sen < 2; ++sen) {
    const std::string sn = sensor_tag(static_cast<Sensor>(sen));
    const int cin = sen == 0 ? EventStack::kBins : cfg.frame_channels;
    for (int s = 0; s < 3; ++s) {
      const std::string ebase = "enc." + sn + ".s" + std::to_string(s) + ".conv";
      impl->enc[sen][s] = {a.get(ebase + ".w").data.data(), a.get(ebase + ".b").data.data(),
                           cfg.channels, cin, kernel[s], stride[s]};
      const std::string lbase = "lstm." + sn + ".s" + std::to_string(s);
      impl->lstm[sen][s] = {a.get(lbase + ".w_ih").data.data(),
                            a.get(lbase + ".w_hh").data.data(),
                            a.get(lbase + ".b").data.data()};
      const std::string fbase = "fuse." + sn + ".s" + std::to_string(s);
      impl->fuse[sen][s] = {a.get(fbase + ".w").data.data(),
                            a.get(fbase + ".b").data.data()};
    }
  }
  for (int hd = 0; hd < 2; ++hd) {
    const std::string base = std::string("msf.") + head_tag(static_cast<FusionHead>(hd));
    const int out_c = hd == 0 ? cfg.matching_channels : cfg.context_channels;
    MsfRef& m = impl->msf[hd];
    m.conv7 = {a.get(base + ".conv7.w").data.data(), a.get(base + ".conv7.b").data.data(),
               cfg.msf_half, cfg.channels, 7, 2};
    for (int rb = 0; rb < 4; ++rb) {
      const int width = rb < 2 ? cfg.msf_half : cfg.msf_quarter;
      for (int cc = 0; cc < 2; ++cc) {
        const std::string rbase = base + ".res" + std::to_string(rb + 1) + ".conv" +
                                  std::to_string(cc + 1);
        m.res[rb][cc] = {a.get(rbase + ".w").data.data(), a.get(rbase + ".b").data.data(),
                         width, width, 3, 1};
      }
    }
    m.down = {a.get(base + ".down.w").data.data(), a.get(base + ".down.b").data.data(),
              cfg.msf_quarter, cfg.msf_half + cfg.channels, 3, 2};
    m.out = {a.get(base + ".out.w").data.data(), a.get(base + ".out.b").data.data(),
             out_c, cfg.msf_quarter + cfg.channels, 1, 1};
  }
  return impl;
}

}  // namespace

FusionState Encoder::make_state() const {
  FusionState st;
  const int kernel[3] = {1, 3, 5};
  for (int s = 0; s < 3; ++s) {
    const int h = conv_out_dim(cfg_.height, kernel[s], 1 << s);
    const int w = conv_out_dim(cfg_.width, kernel[s], 1 << s);
    for (int sen = 0; sen < 2; ++sen) {
      st.h[sen][s] = Tensor3(cfg_.channels, h, w);
      st.c[sen][s] = Tensor3(cfg_.channels, h, w);
    }
    st.sigma[s] = Tensor3(cfg_.channels, h, w);
  }
  st.last_timestamp = 0;
  st.empty = true;
  return st;
}

std::array<Tensor3, 3> Encoder::sensor_encode(const SensorSample& sample) const {
  const int sen = static_cast<int>(sample.sensor);
  const int expect_c =
      sample.sensor == Sensor::kEvents ? EventStack::kBins : cfg_.frame_channels;
  if (sample.payload.c != expect_c) {
    throw Error(std::string("sensor_encode: payload channels ") +
                std::to_string(sample.payload.c) + " do not match tensor 'enc." +
                sensor_tag(sample.sensor) + ".s0.conv.w' input width " +
                std::to_string(expect_c));
  }
  if (sample.payload.h != cfg_.height || sample.payload.w != cfg_.width)
    throw Error("sensor_encode: payload spatial dims do not match configuration");

  std::array<Tensor3, 3> out;
  for (int s = 0; s < 3; ++s) conv2d(sample.payload, impl_->enc[sen][s], out[s]);
  return out;
}

void Encoder::intra_sensor_fuse(FusionState& state, Sensor sensor,
                                const std::array<Tensor3, 3>& f) const {
  const int sen = static_cast<int>(sensor);
  const int C = cfg_.channels;
  for (int s = 0; s < 3; ++s) {
    Tensor3& h = state.h[sen][s];
    Tensor3& c = state.c[sen][s];
    if (!f[s].same_shape(h))
      throw Error("intra_sensor_fuse: input shape does not match state at scale " +
                  std::to_string(s));
    const LstmRef& lw = impl_->lstm[sen][s];
    const std::size_t plane = static_cast<std::size_t>(h.h) * h.w;
    const float* fin = f[s].v.data();
    float* hv = h.v.data();
    float* cv = c.v.data();

    using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MapRM = Eigen::Map<const MatRM, 0, Eigen::OuterStride<>>;
    const Eigen::Map<const MatRM> w_ih(lw.w_ih, 4 * C, C);
    const Eigen::Map<const MatRM> w_hh(lw.w_hh, 4 * C, C);
    const Eigen::Map<const Eigen::VectorXf> bias(lw.b, 4 * C);
    const Eigen::OuterStride<> pstride(static_cast<Eigen::Index>(plane));

    // Gate pre-activations for a fixed-width pixel block come from two GEMMs
    // over the channel-major planes; the block width never depends on the
    // worker count, so outputs are reproducible under any parallelism.
    constexpr int kPxBlock = 4096;
    const int n_blocks = static_cast<int>((plane + kPxBlock - 1) / kPxBlock);
    parallel_for(0, n_blocks, [&](std::int64_t blo, std::int64_t bhi) {
      MatRM gates;
      for (std::int64_t b = blo; b < bhi; ++b) {
        const std::size_t p0 = static_cast<std::size_t>(b) * kPxBlock;
        const int n = static_cast<int>(std::min<std::size_t>(kPxBlock, plane - p0));
        const MapRM x(fin + p0, C, n, pstride);
        const MapRM hx(hv + p0, C, n, pstride);
        gates.noalias() = w_ih * x + w_hh * hx;
        gates.colwise() += bias;
        using ArrMap = Eigen::Map<Eigen::ArrayXf>;
        for (int ci = 0; ci < C; ++ci) {
          ArrMap gi(gates.data() + static_cast<std::size_t>(ci) * n, n);
          ArrMap gf(gates.data() + static_cast<std::size_t>(C + ci) * n, n);
          ArrMap gg(gates.data() + static_cast<std::size_t>(2 * C + ci) * n, n);
          ArrMap go(gates.data() + static_cast<std::size_t>(3 * C + ci) * n, n);
          ArrMap crow(cv + static_cast<std::size_t>(ci) * plane + p0, n);
          ArrMap hrow(hv + static_cast<std::size_t>(ci) * plane + p0, n);
          gi = ((-gi).exp() + 1.0f).inverse();
          gf = ((-gf).exp() + 1.0f).inverse();
          go = ((-go).exp() + 1.0f).inverse();
          crow = gf * crow + gi * gg.tanh();
          hrow = go * crow.tanh();
        }
      }
    });
  }
}

void Encoder::inter_sensor_fuse(FusionState& state, Sensor sensor) const {
  const int sen = static_cast<int>(sensor);
  const int C = cfg_.channels;
  for (int s = 0; s < 3; ++s) {
    const Tensor3& h = state.h[sen][s];
    Tensor3& sig = state.sigma[s];
    if (!h.same_shape(sig))
      throw Error("inter_sensor_fuse: state shapes disagree at scale " + std::to_string(s));
    const FuseRef& fw = impl_->fuse[sen][s];
    const std::size_t plane = static_cast<std::size_t>(h.h) * h.w;
    const float* hv = h.v.data();
    float* sv = sig.v.data();

    using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MapRM = Eigen::Map<const MatRM, 0, Eigen::OuterStride<>>;
    const Eigen::Map<const MatRM> w(fw.w, C, 2 * C);
    const Eigen::Map<const Eigen::VectorXf> bias(fw.b, C);
    const Eigen::OuterStride<> pstride(static_cast<Eigen::Index>(plane));

    constexpr int kPxBlock = 4096;
    const int n_blocks = static_cast<int>((plane + kPxBlock - 1) / kPxBlock);
    parallel_for(0, n_blocks, [&](std::int64_t blo, std::int64_t bhi) {
      MatRM pre;
      for (std::int64_t b = blo; b < bhi; ++b) {
        const std::size_t p0 = static_cast<std::size_t>(b) * kPxBlock;
        const int n = static_cast<int>(std::min<std::size_t>(kPxBlock, plane - p0));
        const MapRM hb(hv + p0, C, n, pstride);
        const MapRM sb(sv + p0, C, n, pstride);
        pre.noalias() = w.leftCols(C) * hb + w.rightCols(C) * sb;
        pre.colwise() += bias;
        for (int ci = 0; ci < C; ++ci) {
          const Eigen::Map<const Eigen::ArrayXf> prow(
              pre.data() + static_cast<std::size_t>(ci) * n, n);
          Eigen::Map<Eigen::ArrayXf> srow(sv + static_cast<std::size_t>(ci) * plane + p0, n);
          srow = prow.tanh();
        }
      }
    });
  }
}

Tensor3 Encoder::multiscale_fuse(const Tensor3& s0, const Tensor3& s1,
                                 const Tensor3& s2, FusionHead head) const {
  if (s0.h % 2 != 0 || s0.w % 2 != 0 || s0.h / 2 != s1.h || s0.w / 2 != s1.w)
    throw Error("multiscale_fuse: scale-1 spatial dims must be half of scale 0");
  if (s1.h % 2 != 0 || s1.w % 2 != 0 || s1.h / 2 != s2.h || s1.w / 2 != s2.w)
    throw Error("multiscale_fuse: scale-2 spatial dims must be half of scale 1");
  const MsfRef& m = impl_->msf[static_cast<int>(head)];

  Tensor3 a;
  conv2d(s0, m.conv7, a);
  a = resblock(a, m.res[0][0], m.res[0][1]);
  a = resblock(a, m.res[1][0], m.res[1][1]);
  Tensor3 cat1 = concat_channels(a, s1);
  Tensor3 t;
  conv2d(cat1, m.down, t);
  t = resblock(t, m.res[2][0], m.res[2][1]);
  t = resblock(t, m.res[3][0], m.res[3][1]);
  Tensor3 cat2 = concat_channels(t, s2);
  Tensor3 out;
  conv2d(cat2, m.out, out);
  return out;
}

FeatureMaps Encoder::encode_next(FusionState& state, const SensorSample& sample,
                                 StageTimes* times) const {
  if (!state.empty && sample.timestamp < state.last_timestamp)
    throw Error("encode_next: sample timestamp " + std::to_string(sample.timestamp) +
                " precedes state timestamp " + std::to_string(state.last_timestamp));

  const double t0 = now_ms();
  const auto f = sensor_encode(sample);
  const double t1 = now_ms();
  intra_sensor_fuse(state, sample.sensor, f);
  const double t2 = now_ms();
  inter_sensor_fuse(state, sample.sensor);
  const double t3 = now_ms();
  FeatureMaps maps;
  maps.matching = multiscale_fuse(state.sigma[0], state.sigma[1], state.sigma[2],
                                  FusionHead::kMatching);
  maps.context = multiscale_fuse(state.sigma[0], state.sigma[1], state.sigma[2],
                                 FusionHead::kContext);
  maps.timestamp = sample.timestamp;
  const double t4 = now_ms();

  state.last_timestamp = sample.timestamp;
  state.empty = false;
  if (times != nullptr) {
    times->sensor_encode_ms = t1 - t0;
    times->intra_ms = t2 - t1;
    times->inter_ms = t3 - t2;
    times->msf_ms = t4 - t3;
    times->total_ms = t4 - t0;
  }
  return maps;
}

BenchReport bench_encoder(const EncoderConfig& cfg, int n_samples, int workers) {
  if (workers < 1) throw Error("bench_encoder: workers must be >= 1");
  if (n_samples < 1) throw Error("bench_encoder: n_samples must be >= 1");

  Encoder enc(cfg);
  Rng rng(cfg.init_seed + 1);
  std::vector<SensorSample> samples;
  samples.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double t = 0.01 * (i + 1);
    if (i % 2 == 0) {
      Tensor3 payload(EventStack::kBins, cfg.height, cfg.width);
      for (auto& v : payload.v)
        v = static_cast<float>(rng.uniform_int(-2, 2));
      SensorSample s;
      s.timestamp = t;
      s.sensor = Sensor::kEvents;
      s.payload = std::move(payload);
      samples.push_back(std::move(s));
    } else {
      Tensor3 payload(cfg.frame_channels, cfg.height, cfg.width);
      for (auto& v : payload.v) v = static_cast<float>(rng.uniform01());
      samples.push_back(SensorSample::frame(t, std::move(payload)));
    }
  }

  const int prev_workers = worker_count();
  BenchReport report;
  report.workers = workers;
  report.n_samples = n_samples;

  double stage_sums[4] = {0, 0, 0, 0};
  {
    set_worker_count(workers);
    FusionState state = enc.make_state();
    enc.encode_next(state, samples[0]);  // warm caches and the pool
    state = enc.make_state();
    StageTimes st;
    const double tick = now_ms();
    for (const auto& s : samples) {
      enc.encode_next(state, s, &st);
      stage_sums[0] += st.sensor_encode_ms;
      stage_sums[1] += st.intra_ms;
      stage_sums[2] += st.inter_ms;
      stage_sums[3] += st.msf_ms;
    }
    report.parallel_ms_per_sample = (now_ms() - tick) / n_samples;
  }
  {
    set_worker_count(1);
    FusionState state = enc.make_state();
    const double tick = now_ms();
    for (const auto& s : samples) enc.encode_next(state, s);
    report.sequential_ms_per_sample = (now_ms() - tick) / n_samples;
  }
  set_worker_count(prev_workers);

  report.speedup = report.parallel_ms_per_sample > 0
                       ? report.sequential_ms_per_sample / report.parallel_ms_per_sample
                       : 0;
  const char* names[4] = {"sensor_encode", "intra_sensor_fuse", "inter_sensor_fuse",
                          "multiscale_fuse"};
  for (int i = 0; i < 4; ++i)
    report.stages.push_back({names[i], stage_sums[i] / n_samples});
  return report;
}

}  // namespace ramp
