#include "tcct/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace tcct {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config

AttentionSpec ModelConfig::encoder_attention_spec() const {
  return AttentionSpec{inner, csp, false, heads, int(d_model), sampling_factor};
}
AttentionSpec ModelConfig::decoder_self_attention_spec() const {
  return AttentionSpec{inner, csp, true, heads, int(d_model), sampling_factor};
}
AttentionSpec ModelConfig::cross_attention_spec() const {
  return AttentionSpec{AttnKind::Canonical, false, false, heads, int(d_model),
                       sampling_factor};
}
ConnectorConfig ModelConfig::connector_config() const {
  return ConnectorConfig{3, dilated ? ConnectorMode::DilatedCausal
                                    : ConnectorMode::CanonicalConv};
}

void ModelConfig::validate() const {
  TCCT_CHECK_CFG(input_len >= 1 && pred_len >= 1, "input_len and pred_len must be >= 1");
  TCCT_CHECK_CFG(n_series >= 1, "n_series must be >= 1");
  TCCT_CHECK_CFG(enc_blocks >= 1 && dec_layers >= 1, "need at least one block and layer");
  const long tok = effective_token_len();
  TCCT_CHECK_CFG(tok >= 1 && tok <= input_len, "token_len must be in [1, input_len]");
  TCCT_CHECK_CFG(!(full_distilling && passthrough),
                 "full_distilling and passthrough are mutually exclusive fusion strategies");
  if (full_distilling)
    TCCT_CHECK_CFG(enc_blocks >= 2, "full distilling needs at least 2 encoder blocks");
  const long halvings = 1L << (enc_blocks - 1);
  TCCT_CHECK_CFG(input_len % halvings == 0, "input_len ", input_len,
                 " must be divisible by 2^(enc_blocks-1) = ", halvings);
  encoder_attention_spec().validate();
  decoder_self_attention_spec().validate();
  cross_attention_spec().validate();
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::Informer,  Variant::InformerPlus,
                                      Variant::TCCT_I,    Variant::TCCT_II,
                                      Variant::TCCT_III,  Variant::TCCT_IV,
                                      Variant::TCCT_V,    Variant::TCCT_VI};
  return v;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Informer: return "Informer";
    case Variant::InformerPlus: return "Informer+";
    case Variant::TCCT_I: return "TCCT_I";
    case Variant::TCCT_II: return "TCCT_II";
    case Variant::TCCT_III: return "TCCT_III";
    case Variant::TCCT_IV: return "TCCT_IV";
    case Variant::TCCT_V: return "TCCT_V";
    case Variant::TCCT_VI: return "TCCT_VI";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  for (Variant v : all_variants())
    if (name == variant_name(v)) return v;
  throw ConfigError("unknown variant '" + name +
                    "' (expected Informer, Informer+, TCCT_I..TCCT_VI)");
}

void apply_variant(ModelConfig& cfg, Variant v) {
  cfg.inner = AttnKind::ProbSparse;
  cfg.csp = v == Variant::TCCT_I || v == Variant::TCCT_II || v == Variant::TCCT_III;
  cfg.dilated = v == Variant::TCCT_II || v == Variant::TCCT_III || v == Variant::TCCT_IV ||
                v == Variant::TCCT_VI;
  cfg.passthrough = v == Variant::TCCT_III || v == Variant::TCCT_V || v == Variant::TCCT_VI;
  cfg.full_distilling = v == Variant::InformerPlus;
}

// ---------------------------------------------------------------------------
// embedding

std::vector<Scalar> sinusoidal_encoding(long len, long dim) {
  std::vector<Scalar> pe(len * dim, Scalar(0));
  for (long pos = 0; pos < len; ++pos)
    for (long i = 0; i < dim; ++i) {
      const double angle = pos / std::pow(10000.0, double(2 * (i / 2)) / double(dim));
      pe[pos * dim + i] = Scalar(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  return pe;
}

Embedding Embedding::init(const std::string& name, long n_in, long n_marks, long d,
                          bool positional, Rng& rng) {
  Embedding e;
  e.positional = positional;
  e.value_w = Param(name + ".value_w", n_in, d);
  xavier_init(e.value_w, rng);
  if (n_marks > 0) {
    e.mark_w = Param(name + ".mark_w", n_marks, d);
    xavier_init(*e.mark_w, rng);
  }
  return e;
}

Tensor Embedding::forward(Graph& g, Tensor values, std::optional<Tensor> marks) {
  Tensor out = g.matmul(values, g.leaf(value_w));
  if (positional) {
    const long L = values.shape().len, d = value_w.shape.dim;
    out = g.add(out, g.constant({1, L, d}, sinusoidal_encoding(L, d)));
  }
  if (mark_w && marks) out = g.add(out, g.matmul(*marks, g.leaf(*mark_w)));
  return out;
}

std::vector<Param*> Embedding::params() {
  std::vector<Param*> out{&value_w};
  if (mark_w) out.push_back(&*mark_w);
  return out;
}

// ---------------------------------------------------------------------------
// blocks

namespace {
Param ln_gamma(const std::string& name, long d) {
  Param p(name, 1, d);
  std::fill(p.value.begin(), p.value.end(), Scalar(1));
  return p;
}

void prefix_params(const std::string& prefix, const std::vector<Param*>& params) {
  for (Param* p : params) p->name = prefix + "." + p->name;
}

Tensor ffn_forward(Graph& g, Tensor x, Param& w1, Param& w2, std::optional<Param>& b1,
                   std::optional<Param>& b2) {
  Tensor h = g.matmul(x, g.leaf(w1));
  if (b1) h = g.add(h, g.leaf(*b1));
  h = g.elu(h);
  Tensor out = g.matmul(h, g.leaf(w2));
  if (b2) out = g.add(out, g.leaf(*b2));
  return out;
}
}  // namespace

EncoderBlock EncoderBlock::init(const std::string& name, const AttentionSpec& spec,
                                long ff_dim, bool residual, bool biases, Rng& rng) {
  EncoderBlock b;
  b.spec = spec;
  b.residual = residual;
  const long d = spec.model_dim;
  b.ln1_g = ln_gamma(name + ".ln1_g", d);
  b.ln1_b = Param(name + ".ln1_b", 1, d);
  b.ln2_g = ln_gamma(name + ".ln2_g", d);
  b.ln2_b = Param(name + ".ln2_b", 1, d);
  b.attn = AttentionWeights::init(spec, rng, biases);
  prefix_params(name + ".attn", b.attn.params());
  b.ff_w1 = Param(name + ".ff_w1", d, ff_dim);
  b.ff_w2 = Param(name + ".ff_w2", ff_dim, d);
  xavier_init(b.ff_w1, rng);
  xavier_init(b.ff_w2, rng);
  if (biases) {
    b.ff_b1 = Param(name + ".ff_b1", 1, ff_dim);
    b.ff_b2 = Param(name + ".ff_b2", 1, d);
  }
  return b;
}

Tensor EncoderBlock::forward(Graph& g, Tensor x, std::uint64_t seed) {
  Tensor h = g.layer_norm(x, g.leaf(ln1_g), g.leaf(ln1_b));
  Tensor a;
  {
    Graph::Scope sc(g, "attn");
    a = attention_forward(g, h, attn, spec, seed);
  }
  Tensor x1 = residual ? g.add(x, a) : a;
  Tensor h2 = g.layer_norm(x1, g.leaf(ln2_g), g.leaf(ln2_b));
  Tensor f = ffn_forward(g, h2, ff_w1, ff_w2, ff_b1, ff_b2);
  return residual ? g.add(x1, f) : f;
}

std::vector<Param*> EncoderBlock::params() {
  std::vector<Param*> out{&ln1_g, &ln1_b, &ln2_g, &ln2_b};
  for (Param* p : attn.params()) out.push_back(p);
  out.push_back(&ff_w1);
  out.push_back(&ff_w2);
  if (ff_b1) out.push_back(&*ff_b1);
  if (ff_b2) out.push_back(&*ff_b2);
  return out;
}

DecoderLayer DecoderLayer::init(const std::string& name, const AttentionSpec& self_spec,
                                const AttentionSpec& cross_spec, long ff_dim, bool residual,
                                bool biases, Rng& rng) {
  DecoderLayer l;
  l.self_spec = self_spec;
  l.cross_spec = cross_spec;
  l.residual = residual;
  const long d = self_spec.model_dim;
  l.ln1_g = ln_gamma(name + ".ln1_g", d);
  l.ln1_b = Param(name + ".ln1_b", 1, d);
  l.ln2_g = ln_gamma(name + ".ln2_g", d);
  l.ln2_b = Param(name + ".ln2_b", 1, d);
  l.ln3_g = ln_gamma(name + ".ln3_g", d);
  l.ln3_b = Param(name + ".ln3_b", 1, d);
  l.self_attn = AttentionWeights::init(self_spec, rng, biases);
  prefix_params(name + ".self_attn", l.self_attn.params());
  l.cross_attn = AttentionWeights::init(cross_spec, rng, biases);
  prefix_params(name + ".cross_attn", l.cross_attn.params());
  l.ff_w1 = Param(name + ".ff_w1", d, ff_dim);
  l.ff_w2 = Param(name + ".ff_w2", ff_dim, d);
  xavier_init(l.ff_w1, rng);
  xavier_init(l.ff_w2, rng);
  if (biases) {
    l.ff_b1 = Param(name + ".ff_b1", 1, ff_dim);
    l.ff_b2 = Param(name + ".ff_b2", 1, d);
  }
  return l;
}

Tensor DecoderLayer::forward(Graph& g, Tensor x, Tensor enc_out, std::uint64_t seed) {
  Tensor h1 = g.layer_norm(x, g.leaf(ln1_g), g.leaf(ln1_b));
  Tensor a;
  {
    Graph::Scope sc(g, "self_attn");
    a = attention_forward(g, h1, self_attn, self_spec, mix_seed(seed, 1));
  }
  Tensor x1 = residual ? g.add(x, a) : a;
  Tensor h2 = g.layer_norm(x1, g.leaf(ln2_g), g.leaf(ln2_b));
  Tensor c;
  {
    Graph::Scope sc(g, "cross_attn");
    c = multi_head_attention(g, h2, enc_out, cross_attn, cross_spec, mix_seed(seed, 2));
  }
  Tensor x2 = residual ? g.add(x1, c) : c;
  Tensor h3 = g.layer_norm(x2, g.leaf(ln3_g), g.leaf(ln3_b));
  Tensor f = ffn_forward(g, h3, ff_w1, ff_w2, ff_b1, ff_b2);
  return residual ? g.add(x2, f) : f;
}

std::vector<Param*> DecoderLayer::params() {
  std::vector<Param*> out{&ln1_g, &ln1_b, &ln2_g, &ln2_b, &ln3_g, &ln3_b};
  for (Param* p : self_attn.params()) out.push_back(p);
  for (Param* p : cross_attn.params()) out.push_back(p);
  out.push_back(&ff_w1);
  out.push_back(&ff_w2);
  if (ff_b1) out.push_back(&*ff_b1);
  if (ff_b2) out.push_back(&*ff_b2);
  return out;
}

Tensor EncoderStack::forward(Graph& g, Tensor x, std::uint64_t seed,
                             std::vector<Tensor>* pyramid) {
  for (size_t i = 0; i < blocks.size(); ++i) {
    {
      Graph::Scope sc(g, "block" + std::to_string(i));
      x = blocks[i].forward(g, x, mix_seed(seed, i));
    }
    if (pyramid) pyramid->push_back(x);
    if (i + 1 < blocks.size()) {
      Graph::Scope sc(g, "conn" + std::to_string(i));
      x = stages[i].forward(g, x);
    }
  }
  return x;
}

std::vector<Param*> EncoderStack::params() {
  std::vector<Param*> out;
  for (auto& b : blocks)
    for (Param* p : b.params()) out.push_back(p);
  for (auto& s : stages)
    for (Param* p : s.params()) out.push_back(p);
  return out;
}

// ---------------------------------------------------------------------------
// model

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(mix_seed(cfg_.seed, 0x6d6f64656cULL));
  build(rng);
}

namespace {
EncoderStack build_stack(const std::string& name, int blocks, const ModelConfig& cfg,
                         Rng& rng) {
  EncoderStack s;
  const AttentionSpec spec = cfg.encoder_attention_spec();
  for (int b = 0; b < blocks; ++b)
    s.blocks.push_back(EncoderBlock::init(name + ".block" + std::to_string(b), spec,
                                          cfg.effective_ff_dim(), cfg.residual, cfg.biases,
                                          rng));
  for (int i = 1; i < blocks; ++i) {
    auto st = DistillStage::init(i, cfg.d_model, cfg.connector_config(), rng, cfg.biases);
    prefix_params(name, st.params());
    s.stages.push_back(std::move(st));
  }
  return s;
}
}  // namespace

void Model::build(Rng& rng) {
  enc_embed_ = Embedding::init("enc_embed", cfg_.n_series, cfg_.n_marks, cfg_.d_model,
                               cfg_.positional_encoding, rng);
  dec_embed_ = Embedding::init("dec_embed", cfg_.n_series, cfg_.n_marks, cfg_.d_model,
                               cfg_.positional_encoding, rng);
  main_encoder_ = build_stack("enc", cfg_.enc_blocks, cfg_, rng);
  if (cfg_.full_distilling)
    for (int i = 1; i < cfg_.enc_blocks; ++i)
      extra_encoders_.push_back(
          build_stack("extra" + std::to_string(i), cfg_.enc_blocks - i, cfg_, rng));
  if (cfg_.passthrough) {
    const long in_dim = ((1L << cfg_.enc_blocks) - 1) * cfg_.d_model;
    fuse_transition_ = TransitionLayer::init(in_dim, cfg_.d_model, rng);
  } else if (cfg_.full_distilling) {
    fuse_transition_ = TransitionLayer::init(cfg_.enc_blocks * cfg_.d_model, cfg_.d_model, rng);
  }
  if (fuse_transition_) fuse_transition_->w.name = "fuse.transition.w";
  enc_ln_g_ = ln_gamma("enc.final_ln_g", cfg_.d_model);
  enc_ln_b_ = Param("enc.final_ln_b", 1, cfg_.d_model);
  for (int l = 0; l < cfg_.dec_layers; ++l)
    dec_layers_.push_back(DecoderLayer::init(
        "dec.layer" + std::to_string(l), cfg_.decoder_self_attention_spec(),
        cfg_.cross_attention_spec(), cfg_.effective_ff_dim(), cfg_.residual, cfg_.biases,
        rng));
  dec_ln_g_ = ln_gamma("dec.final_ln_g", cfg_.d_model);
  dec_ln_b_ = Param("dec.final_ln_b", 1, cfg_.d_model);
  out_proj_ = Param("out_proj", cfg_.d_model, cfg_.n_series);
  xavier_init(out_proj_, rng);
}

Tensor Model::embed_encoder(Graph& g, Tensor values, std::optional<Tensor> marks) {
  Graph::Scope sc(g, "enc_embed");
  return enc_embed_.forward(g, values, std::move(marks));
}

Tensor Model::embed_decoder(Graph& g, Tensor values, std::optional<Tensor> marks) {
  Graph::Scope sc(g, "dec_embed");
  return dec_embed_.forward(g, values, std::move(marks));
}

Tensor Model::encoder_forward(Graph& g, Tensor x, std::uint64_t seed) {
  TCCT_CHECK_DIM(x.shape().len == cfg_.input_len, "encoder input length ", x.shape().len,
                 " != configured ", cfg_.input_len);
  Graph::Scope sc(g, "enc");
  Tensor out;
  if (cfg_.passthrough) {
    std::vector<Tensor> pyramid;
    main_encoder_.forward(g, x, seed, &pyramid);
    Tensor fused = passthrough_fuse(g, pyramid);
    out = fuse_transition_->forward(g, fused);
  } else {
    out = main_encoder_.forward(g, x, seed);
  }
  return g.layer_norm(out, g.leaf(enc_ln_g_), g.leaf(enc_ln_b_));
}

Tensor Model::full_distilling_forward(Graph& g, Tensor x, std::uint64_t seed) {
  TCCT_CHECK_CFG(cfg_.full_distilling, "model not configured for full distilling");
  Graph::Scope sc(g, "enc");
  const long L = x.shape().len;
  std::vector<Tensor> outs;
  outs.push_back(main_encoder_.forward(g, x, seed));
  for (size_t i = 1; i <= extra_encoders_.size(); ++i) {
    const long slice = L >> i;  // the last 1/2^i of the input
    Tensor xi = g.slice_len(x, L - slice, slice);
    outs.push_back(extra_encoders_[i - 1].forward(g, xi, mix_seed(seed, 0xe0 + i)));
  }
  Tensor fused = g.concat_dim(outs);
  Tensor out = fuse_transition_->forward(g, fused);
  return g.layer_norm(out, g.leaf(enc_ln_g_), g.leaf(enc_ln_b_));
}

Tensor Model::decoder_forward(Graph& g, Tensor dec_in, Tensor enc_out, std::uint64_t seed) {
  TCCT_CHECK_DIM(enc_out.shape().dim == cfg_.d_model, "encoder output dim ",
                 enc_out.shape().dim, " != d_model ", cfg_.d_model);
  Graph::Scope sc(g, "dec");
  Tensor x = dec_in;
  for (size_t l = 0; l < dec_layers_.size(); ++l) {
    Graph::Scope lsc(g, "layer" + std::to_string(l));
    x = dec_layers_[l].forward(g, x, enc_out, mix_seed(seed, 0xd0 + l));
  }
  return g.layer_norm(x, g.leaf(dec_ln_g_), g.leaf(dec_ln_b_));
}

Tensor Model::forward(Graph& g, const WindowBatch& batch, std::uint64_t seed) {
  TCCT_CHECK_DIM(batch.input_len == cfg_.input_len && batch.pred_len == cfg_.pred_len &&
                     batch.token_len == cfg_.effective_token_len() &&
                     batch.n_series == cfg_.n_series,
                 "batch geometry does not match model config");
  const long B = batch.batch, t0 = batch.input_len, T = batch.pred_len,
             tok = batch.token_len, N = batch.n_series;
  Tensor enc_vals = g.constant({B, t0, N}, batch.enc_values);
  std::optional<Tensor> enc_marks, dec_marks;
  if (cfg_.n_marks > 0) {
    TCCT_CHECK_DIM(batch.n_marks == cfg_.n_marks, "batch marks mismatch");
    enc_marks = g.constant({B, t0, cfg_.n_marks}, batch.enc_marks);
    dec_marks = g.constant({B, tok + T, cfg_.n_marks}, batch.dec_marks);
  }
  Tensor x = embed_encoder(g, enc_vals, enc_marks);
  Tensor enc_out = cfg_.full_distilling ? full_distilling_forward(g, x, mix_seed(seed, 0xa))
                                        : encoder_forward(g, x, mix_seed(seed, 0xa));
  Tensor dec_vals = g.constant({B, tok + T, N}, batch.dec_values);
  Tensor d = embed_decoder(g, dec_vals, dec_marks);
  Tensor dec_out = decoder_forward(g, d, enc_out, mix_seed(seed, 0xb));
  Tensor all = g.matmul(dec_out, g.leaf(out_proj_));
  return g.slice_len(all, tok, T);
}

std::vector<Scalar> Model::rolling_predict(const SeriesFrame& frame, long horizon,
                                           std::uint64_t seed) {
  TCCT_CHECK_CFG(horizon >= cfg_.pred_len, "horizon must be >= pred_len");
  const long steps = horizon / cfg_.pred_len;  // trailing partial window truncated
  WindowSpec spec;
  spec.input_len = cfg_.input_len;
  spec.pred_len = cfg_.pred_len;
  spec.stride = cfg_.pred_len;
  spec.mode = (cfg_.n_series == 1 && frame.n_series() > 1) ? SeriesMode::Univariate
                                                           : SeriesMode::Multivariate;
  WindowSet ws(frame, spec);
  TCCT_CHECK_DATA(ws.count() >= steps, "series too short for ", steps, " rolling steps");
  std::vector<Scalar> out;
  out.reserve(steps * cfg_.pred_len * cfg_.n_series);
  for (long s = 0; s < steps; ++s) {
    WindowBatch batch = make_batch(ws, cfg_.effective_token_len(), {s});
    Graph g(&counter_);
    Tensor pred = forward(g, batch, mix_seed(seed, s));
    const auto& v = pred.value();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

std::vector<Param*> Model::params() {
  std::vector<Param*> out;
  for (Param* p : enc_embed_.params()) out.push_back(p);
  for (Param* p : dec_embed_.params()) out.push_back(p);
  for (Param* p : main_encoder_.params()) out.push_back(p);
  for (auto& e : extra_encoders_)
    for (Param* p : e.params()) out.push_back(p);
  if (fuse_transition_) out.push_back(&fuse_transition_->w);
  out.push_back(&enc_ln_g_);
  out.push_back(&enc_ln_b_);
  for (auto& l : dec_layers_)
    for (Param* p : l.params()) out.push_back(p);
  out.push_back(&dec_ln_g_);
  out.push_back(&dec_ln_b_);
  out.push_back(&out_proj_);
  return out;
}

void Model::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

long Model::param_count() {
  long n = 0;
  for (Param* p : params()) n += p->size();
  return n;
}

// ---------------------------------------------------------------------------
// checkpoint: JSON manifest + raw little-endian 64-bit weights

namespace {
void require_little_endian() {
  const std::uint16_t probe = 1;
  if (*reinterpret_cast<const std::uint8_t*>(&probe) != 1)
    throw DataError("checkpoint format requires a little-endian host");
}

json config_to_json(const ModelConfig& c) {
  return json{{"input_len", c.input_len},
              {"pred_len", c.pred_len},
              {"token_len", c.token_len},
              {"n_series", c.n_series},
              {"n_marks", c.n_marks},
              {"d_model", c.d_model},
              {"heads", c.heads},
              {"enc_blocks", c.enc_blocks},
              {"dec_layers", c.dec_layers},
              {"feedforward_dim", c.feedforward_dim},
              {"csp", c.csp},
              {"dilated", c.dilated},
              {"passthrough", c.passthrough},
              {"full_distilling", c.full_distilling},
              {"inner", attn_kind_name(c.inner)},
              {"sampling_factor", c.sampling_factor},
              {"biases", c.biases},
              {"residual", c.residual},
              {"positional_encoding", c.positional_encoding},
              {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.input_len = j.at("input_len").get<long>();
  c.pred_len = j.at("pred_len").get<long>();
  c.token_len = j.at("token_len").get<long>();
  c.n_series = j.at("n_series").get<long>();
  c.n_marks = j.at("n_marks").get<long>();
  c.d_model = j.at("d_model").get<long>();
  c.heads = j.at("heads").get<int>();
  c.enc_blocks = j.at("enc_blocks").get<int>();
  c.dec_layers = j.at("dec_layers").get<int>();
  c.feedforward_dim = j.at("feedforward_dim").get<long>();
  c.csp = j.at("csp").get<bool>();
  c.dilated = j.at("dilated").get<bool>();
  c.passthrough = j.at("passthrough").get<bool>();
  c.full_distilling = j.at("full_distilling").get<bool>();
  c.inner = attn_kind_from_name(j.at("inner").get<std::string>());
  c.sampling_factor = j.at("sampling_factor").get<double>();
  c.biases = j.at("biases").get<bool>();
  c.residual = j.at("residual").get<bool>();
  c.positional_encoding = j.at("positional_encoding").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

constexpr char kMagic[9] = "TCCTCKPT";
}  // namespace

void Model::save(const std::string& path, const std::string& manifest_extra_json) {
  require_little_endian();
  json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = config_to_json(cfg_);
  manifest["extra"] = json::parse(manifest_extra_json);
  json index = json::array();
  long offset = 0;
  auto ps = params();
  for (Param* p : ps) {
    index.push_back({{"name", p->name},
                     {"shape", {p->shape.batch, p->shape.len, p->shape.dim}},
                     {"offset", offset}});
    offset += p->size();
  }
  manifest["params"] = std::move(index);
  const std::string mtext = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  TCCT_CHECK_DATA(out.good(), "cannot write checkpoint '", path, "'");
  out.write(kMagic, 8);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint64_t mlen = mtext.size();
  out.write(reinterpret_cast<const char*>(&mlen), 8);
  out.write(mtext.data(), std::streamsize(mtext.size()));
  for (Param* p : ps)
    for (Scalar v : p->value) {
      const double d = double(v);
      out.write(reinterpret_cast<const char*>(&d), 8);
    }
  TCCT_CHECK_DATA(out.good(), "failed writing checkpoint '", path, "'");
}

Model Model::load(const std::string& path) {
  require_little_endian();
  std::ifstream in(path, std::ios::binary);
  TCCT_CHECK_DATA(in.good(), "cannot open checkpoint '", path, "'");
  char magic[8];
  in.read(magic, 8);
  TCCT_CHECK_DATA(in.good() && std::memcmp(magic, kMagic, 8) == 0,
                  "'", path, "' is not a tcct checkpoint");
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  TCCT_CHECK_DATA(version == 1, "unsupported checkpoint version ", version);
  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), 8);
  std::string mtext(mlen, '\0');
  in.read(mtext.data(), std::streamsize(mlen));
  TCCT_CHECK_DATA(in.good(), "truncated checkpoint manifest");
  const json manifest = json::parse(mtext);

  Model model(config_from_json(manifest.at("config")));
  auto ps = model.params();
  const auto& index = manifest.at("params");
  TCCT_CHECK_DATA(index.size() == ps.size(), "checkpoint parameter count mismatch");
  for (size_t i = 0; i < ps.size(); ++i) {
    TCCT_CHECK_DATA(index[i].at("name").get<std::string>() == ps[i]->name,
                    "checkpoint parameter order mismatch at '", ps[i]->name, "'");
    for (long j = 0; j < ps[i]->size(); ++j) {
      double d = 0;
      in.read(reinterpret_cast<char*>(&d), 8);
      ps[i]->value[j] = Scalar(d);
    }
  }
  TCCT_CHECK_DATA(in.good(), "truncated checkpoint weights");
  return model;
}

}  // namespace tcct
