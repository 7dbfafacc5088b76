#pragma once

#include <string>
#include <vector>

#include "tcct/attention.hpp"
#include "tcct/connectors.hpp"
#include "tcct/data.hpp"
#include "tcct/tensor.hpp"

namespace tcct {

// Full architecture description. Variant flags map one-to-one to the eight
// method presets.
struct ModelConfig {
  long input_len = 96;   // t_0, encoder window
  long pred_len = 24;    // T, forecast horizon
  long token_len = -1;   // decoder start token; -1 means input_len
  long n_series = 1;     // N input channels
  long n_marks = SeriesFrame::kNumMarks;  // 0 disables time-feature embedding
  long d_model = 32;
  int heads = 2;
  int enc_blocks = 3;
  int dec_layers = 2;
  long feedforward_dim = -1;  // -1 means 4 * d_model

  bool csp = false;
  bool dilated = false;
  bool passthrough = false;
  bool full_distilling = false;
  AttnKind inner = AttnKind::ProbSparse;
  double sampling_factor = 5.0;

  bool biases = false;
  bool residual = true;
  bool positional_encoding = true;
  std::uint64_t seed = 0;

  long effective_token_len() const { return token_len < 0 ? input_len : token_len; }
  long effective_ff_dim() const { return feedforward_dim < 0 ? 4 * d_model : feedforward_dim; }
  AttentionSpec encoder_attention_spec() const;
  AttentionSpec decoder_self_attention_spec() const;
  AttentionSpec cross_attention_spec() const;
  ConnectorConfig connector_config() const;
  void validate() const;
};

enum class Variant {
  Informer,
  InformerPlus,
  TCCT_I,
  TCCT_II,
  TCCT_III,
  TCCT_IV,
  TCCT_V,
  TCCT_VI,
};

const std::vector<Variant>& all_variants();
const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);
// Sets the four architecture flags (and ProbSparse inner) for the preset.
void apply_variant(ModelConfig& cfg, Variant v);

// Value projection + fixed sinusoidal positional encoding + optional
// time-feature projection.
struct Embedding {
  Param value_w;                 // (n_in x d)
  std::optional<Param> mark_w;   // (n_marks x d)
  bool positional = true;
  static Embedding init(const std::string& name, long n_in, long n_marks, long d, bool positional,
                        Rng& rng);
  Tensor forward(Graph& g, Tensor values, std::optional<Tensor> marks);
  std::vector<Param*> params();
};

std::vector<Scalar> sinusoidal_encoding(long len, long dim);

// Pre-norm residual block: x + Attn(LN(x)), then x + FFN(LN(x)).
struct EncoderBlock {
  Param ln1_g, ln1_b, ln2_g, ln2_b;
  AttentionWeights attn;
  Param ff_w1, ff_w2;
  std::optional<Param> ff_b1, ff_b2;
  AttentionSpec spec;
  bool residual = true;

  static EncoderBlock init(const std::string& name, const AttentionSpec& spec, long ff_dim,
                           bool residual, bool biases, Rng& rng);
  Tensor forward(Graph& g, Tensor x, std::uint64_t seed);
  std::vector<Param*> params();
};

struct DecoderLayer {
  Param ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
  AttentionWeights self_attn;
  AttentionWeights cross_attn;
  Param ff_w1, ff_w2;
  std::optional<Param> ff_b1, ff_b2;
  AttentionSpec self_spec, cross_spec;
  bool residual = true;

  static DecoderLayer init(const std::string& name, const AttentionSpec& self_spec,
                           const AttentionSpec& cross_spec, long ff_dim, bool residual,
                           bool biases, Rng& rng);
  Tensor forward(Graph& g, Tensor x, Tensor enc_out, std::uint64_t seed);
  std::vector<Param*> params();
};

// One stack of attention blocks joined by distilling connectors.
struct EncoderStack {
  std::vector<EncoderBlock> blocks;
  std::vector<DistillStage> stages;  // blocks.size() - 1

  // Returns the final map; when `pyramid` is non-null it receives every
  // block's output (the feature pyramid for the passthrough path).
  Tensor forward(Graph& g, Tensor x, std::uint64_t seed, std::vector<Tensor>* pyramid = nullptr);
  std::vector<Param*> params();
};

struct TrainSnapshot;  // forward decl (train.hpp)

class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  MultiplyCounter& counter() { return counter_; }

  // Embedded-input entry points (exposed for tests).
  Tensor embed_encoder(Graph& g, Tensor values, std::optional<Tensor> marks);
  Tensor embed_decoder(Graph& g, Tensor values, std::optional<Tensor> marks);
  Tensor encoder_forward(Graph& g, Tensor x, std::uint64_t seed);
  Tensor full_distilling_forward(Graph& g, Tensor x, std::uint64_t seed);
  Tensor decoder_forward(Graph& g, Tensor dec_in, Tensor enc_out, std::uint64_t seed);

  // Whole-model pass over a materialized batch; returns (B, T, N).
  Tensor forward(Graph& g, const WindowBatch& batch, std::uint64_t seed);

  // Forecast `horizon` rows starting right after the first input window of
  // a (normalized) series; windows advance by pred_len and always read
  // ground-truth inputs. A trailing partial window is truncated.
  std::vector<Scalar> rolling_predict(const SeriesFrame& frame, long horizon,
                                      std::uint64_t seed = 0);

  std::vector<Param*> params();
  void zero_grad();
  long param_count();

  void save(const std::string& path, const std::string& manifest_extra_json = "{}");
  static Model load(const std::string& path);

 private:
  ModelConfig cfg_;
  MultiplyCounter counter_;

  Embedding enc_embed_, dec_embed_;
  EncoderStack main_encoder_;
  std::vector<EncoderStack> extra_encoders_;  // full distilling
  std::optional<TransitionLayer> fuse_transition_;
  Param enc_ln_g_, enc_ln_b_, dec_ln_g_, dec_ln_b_;
  std::vector<DecoderLayer> dec_layers_;
  Param out_proj_;

  void build(Rng& rng);
};

}  // namespace tcct
