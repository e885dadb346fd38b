/* Copyright 2026 The ATD Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ATD_MODEL_TRANSFORMER_HPP_
#define ATD_MODEL_TRANSFORMER_HPP_

// Pre-norm character transformer over a single unpadded sequence.
//
//   encoder:  x = tok[t] + pos[p];  x += Attn(LN(x));  x += FFN(LN(x));  LN
//   decoder:  y = label[y_prev] + pos'[p];  y += CausalAttn(LN(y));
//             y += CrossAttn(LN(y), encoder);  y += FFN(LN(y));  LN
//
// Heads: BERT projects encoder states to the vocabulary, EO projects them to
// the 15 diacritic classes, ED projects decoder states to the classes.
// Padding is handled by the batch layer, which strips PAD positions before
// calling in here; `positions` keeps each token's original column.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "atd/error.hpp"
#include "atd/model/config.hpp"
#include "atd/model/layers.hpp"
#include "atd/model/parameters.hpp"

namespace atd::model {

struct SequenceInput {
  std::vector<int> tokens;
  std::vector<int> positions;
  std::vector<int> prefix;  // ED only: decoder inputs, BOS-shifted labels
};

template <typename Scalar>
class Transformer {
 public:
  using MatrixType = Matrix<Scalar>;

  struct EncoderLayerCache {
    NormCache<Scalar> attn_norm;
    AttentionCache<Scalar> attn;
    MatrixType attn_dropout;
    NormCache<Scalar> ffn_norm;
    FfnCache<Scalar> ffn;
    MatrixType ffn_dropout;
  };

  struct DecoderLayerCache {
    NormCache<Scalar> self_norm;
    AttentionCache<Scalar> self_attn;
    MatrixType self_dropout;
    NormCache<Scalar> cross_norm;
    AttentionCache<Scalar> cross_attn;
    MatrixType cross_dropout;
    NormCache<Scalar> ffn_norm;
    FfnCache<Scalar> ffn;
    MatrixType ffn_dropout;
  };

  struct SequenceCache {
    SequenceInput input;
    MatrixType embed_dropout;
    std::vector<EncoderLayerCache> encoder;
    NormCache<Scalar> encoder_final;
    MatrixType encoder_out;
    MatrixType decoder_embed_dropout;
    std::vector<DecoderLayerCache> decoder;
    NormCache<Scalar> decoder_final;
    MatrixType head_input;
  };

  Transformer(const ModelConfig& config, const Parameters<Scalar>& params)
      : config_(config), p_(params) {
    config_.Validate();
    token_embed_ = p_.IndexOf("embed.token");
    position_embed_ = p_.IndexOf("embed.position");
    for (int l = 0; l < config_.n_layers_encoder; ++l) {
      const std::string pre = "encoder." + std::to_string(l);
      encoder_.push_back({NormRef::Resolve(p_, pre + ".attn_norm"),
                          AttentionRef::Resolve(p_, pre + ".self_attn"),
                          NormRef::Resolve(p_, pre + ".ffn_norm"),
                          FfnRef::Resolve(p_, pre + ".ffn")});
    }
    encoder_final_ = NormRef::Resolve(p_, "encoder.final_norm");
    if (config_.arch == Arch::kBert) {
      head_ = LinearRef::Resolve(p_, "mlm_head");
    } else {
      head_ = LinearRef::Resolve(p_, "diacritic_head");
    }
    if (config_.arch == Arch::kEncoderDecoder) {
      label_embed_ = p_.IndexOf("decoder.embed.label");
      decoder_position_embed_ = p_.IndexOf("decoder.embed.position");
      for (int l = 0; l < config_.n_layers_decoder; ++l) {
        const std::string pre = "decoder." + std::to_string(l);
        decoder_.push_back({NormRef::Resolve(p_, pre + ".self_attn_norm"),
                            AttentionRef::Resolve(p_, pre + ".self_attn"),
                            NormRef::Resolve(p_, pre + ".cross_attn_norm"),
                            AttentionRef::Resolve(p_, pre + ".cross_attn"),
                            NormRef::Resolve(p_, pre + ".ffn_norm"),
                            FfnRef::Resolve(p_, pre + ".ffn")});
      }
      decoder_final_ = NormRef::Resolve(p_, "decoder.final_norm");
    }
  }

  const ModelConfig& config() const { return config_; }
  int output_size() const {
    return config_.arch == Arch::kBert ? config_.vocab_size : config_.n_classes;
  }

  // Final-normed encoder states, [n x d_model]. `rng` enables dropout.
  MatrixType Encode(const SequenceInput& in, std::mt19937_64* rng, SequenceCache* cache) const {
    CheckInput(in);
    const auto n = static_cast<Eigen::Index>(in.tokens.size());
    MatrixType x(n, config_.d_model);
    for (Eigen::Index i = 0; i < n; ++i) {
      x.row(i) = p_[token_embed_].row(in.tokens[static_cast<std::size_t>(i)]) +
                 p_[position_embed_].row(in.positions[static_cast<std::size_t>(i)]);
    }
    MatrixType mask = DropoutMask<Scalar>(x.rows(), x.cols(), config_.dropout, rng);
    ApplyMask(x, mask);
    if (cache) {
      cache->embed_dropout = std::move(mask);
      cache->encoder.resize(encoder_.size());
    }
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
      x = EncoderLayerForward(encoder_[l], x, rng, cache ? &cache->encoder[l] : nullptr);
    }
    return LayerNormForward(p_, encoder_final_, x, cache ? &cache->encoder_final : nullptr);
  }

  // Logits [n x output_size()] for one sequence.
  MatrixType Forward(const SequenceInput& in, std::mt19937_64* rng, SequenceCache* cache) const {
    if (cache) cache->input = in;
    MatrixType states = Encode(in, rng, cache);
    if (config_.arch == Arch::kEncoderDecoder) {
      if (cache) cache->encoder_out = states;
      states = Decode(in, states, rng, cache);
    }
    MatrixType logits = LinearForward(p_, head_, states);
    if (cache) cache->head_input = std::move(states);
    return logits;
  }

  void Backward(const SequenceCache& cache, const MatrixType& dlogits,
                Parameters<Scalar>& grads) const {
    MatrixType dstates = LinearBackward(p_, grads, head_, cache.head_input, dlogits);
    if (config_.arch == Arch::kEncoderDecoder) {
      dstates = DecodeBackward(cache, dstates, grads);
    }
    MatrixType dx = LayerNormBackward(p_, grads, encoder_final_, cache.encoder_final, dstates);
    for (std::size_t l = encoder_.size(); l-- > 0;) {
      dx = EncoderLayerBackward(encoder_[l], cache.encoder[l], dx, grads);
    }
    ApplyMask(dx, cache.embed_dropout);
    const auto& in = cache.input;
    for (Eigen::Index i = 0; i < dx.rows(); ++i) {
      grads[token_embed_].row(in.tokens[static_cast<std::size_t>(i)]) += dx.row(i);
      grads[position_embed_].row(in.positions[static_cast<std::size_t>(i)]) += dx.row(i);
    }
  }

  struct GreedyResult {
    std::vector<int> labels;
    MatrixType logits;  // step logits, row t computed from the prefix up to t
  };

  // Step-by-step decoding with cached keys/values; eval mode only. Entries
  // of `forced` that are >= 0 override the argmax at that step.
  GreedyResult GreedyDecode(const SequenceInput& in, const std::vector<int>* forced) const {
    if (config_.arch != Arch::kEncoderDecoder) {
      throw Error(ErrorKind::kInvalidConfig, "greedy decoding needs an encoder-decoder model");
    }
    const MatrixType enc = Encode(in, nullptr, nullptr);
    const auto n = enc.rows();
    const int heads = config_.n_heads;
    const Eigen::Index hd = config_.head_dim();
    const Scalar scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(hd)));

    struct LayerState {
      MatrixType self_k, self_v, cross_k, cross_v;
    };
    std::vector<LayerState> state(decoder_.size());
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
      state[l].self_k = MatrixType::Zero(n, config_.d_model);
      state[l].self_v = MatrixType::Zero(n, config_.d_model);
      state[l].cross_k = LinearForward(p_, decoder_[l].cross_attn.key, enc);
      state[l].cross_v = LinearForward(p_, decoder_[l].cross_attn.value, enc);
    }

    auto attend = [&](const MatrixType& q, const MatrixType& keys, const MatrixType& values,
                      Eigen::Index visible) {
      MatrixType ctx(1, config_.d_model);
      for (int h = 0; h < heads; ++h) {
        const Eigen::Index off = h * hd;
        MatrixType s = q.middleCols(off, hd) * keys.topRows(visible).middleCols(off, hd).transpose();
        s *= scale;
        SoftmaxRows(s);
        ctx.middleCols(off, hd).noalias() = s * values.topRows(visible).middleCols(off, hd);
      }
      return ctx;
    };

    GreedyResult result;
    result.labels.resize(static_cast<std::size_t>(n));
    result.logits.resize(n, config_.n_classes);
    int previous = kDecoderBos;
    for (Eigen::Index t = 0; t < n; ++t) {
      MatrixType x = p_[label_embed_].row(previous) +
                     p_[decoder_position_embed_].row(in.positions[static_cast<std::size_t>(t)]);
      for (std::size_t l = 0; l < decoder_.size(); ++l) {
        const auto& L = decoder_[l];
        auto& S = state[l];
        MatrixType a = LayerNormForward<Scalar>(p_, L.self_norm, x, nullptr);
        S.self_k.row(t) = LinearForward(p_, L.self_attn.key, a);
        S.self_v.row(t) = LinearForward(p_, L.self_attn.value, a);
        MatrixType q = LinearForward(p_, L.self_attn.query, a);
        x += LinearForward(p_, L.self_attn.output, attend(q, S.self_k, S.self_v, t + 1));
        MatrixType b = LayerNormForward<Scalar>(p_, L.cross_norm, x, nullptr);
        q = LinearForward(p_, L.cross_attn.query, b);
        x += LinearForward(p_, L.cross_attn.output, attend(q, S.cross_k, S.cross_v, n));
        MatrixType e = LayerNormForward<Scalar>(p_, L.ffn_norm, x, nullptr);
        x += FfnForward<Scalar>(p_, L.ffn, e, nullptr);
      }
      const MatrixType h = LayerNormForward<Scalar>(p_, decoder_final_, x, nullptr);
      result.logits.row(t) = LinearForward(p_, head_, h);
      int label = 0;
      for (int c = 1; c < config_.n_classes; ++c) {
        if (result.logits(t, c) > result.logits(t, label)) label = c;
      }
      if (forced && (*forced)[static_cast<std::size_t>(t)] >= 0) {
        label = (*forced)[static_cast<std::size_t>(t)];
      }
      result.labels[static_cast<std::size_t>(t)] = label;
      previous = label;
    }
    return result;
  }

 private:
  struct EncoderLayerRef {
    NormRef attn_norm;
    AttentionRef attn;
    NormRef ffn_norm;
    FfnRef ffn;
  };

  struct DecoderLayerRef {
    NormRef self_norm;
    AttentionRef self_attn;
    NormRef cross_norm;
    AttentionRef cross_attn;
    NormRef ffn_norm;
    FfnRef ffn;
  };

  void CheckInput(const SequenceInput& in) const {
    if (in.tokens.size() > static_cast<std::size_t>(config_.max_len)) {
      throw Error(ErrorKind::kLengthExceeded, "sequence of " + std::to_string(in.tokens.size()) +
                                                  " positions exceeds max_len " +
                                                  std::to_string(config_.max_len));
    }
    if (in.positions.size() != in.tokens.size()) {
      throw Error(ErrorKind::kShapeMismatch, "positions and tokens differ in length");
    }
    for (std::size_t i = 0; i < in.tokens.size(); ++i) {
      if (in.tokens[i] < 0 || in.tokens[i] >= config_.vocab_size) {
        throw Error(ErrorKind::kShapeMismatch, "token id " + std::to_string(in.tokens[i]) +
                                                   " outside vocabulary");
      }
      if (in.positions[i] < 0 || in.positions[i] >= config_.max_len) {
        throw Error(ErrorKind::kLengthExceeded, "position beyond max_len");
      }
    }
    if (config_.arch == Arch::kEncoderDecoder && !in.prefix.empty()) {
      if (in.prefix.size() != in.tokens.size()) {
        throw Error(ErrorKind::kPrefixLengthMismatch, "label prefix length differs from input");
      }
      for (int y : in.prefix) {
        if (y < 0 || y >= kDecoderVocab) {
          throw Error(ErrorKind::kShapeMismatch, "decoder input id out of range");
        }
      }
    }
  }

  MatrixType EncoderLayerForward(const EncoderLayerRef& L, const MatrixType& x,
                                 std::mt19937_64* rng, EncoderLayerCache* c) const {
    const MatrixType a = LayerNormForward(p_, L.attn_norm, x, c ? &c->attn_norm : nullptr);
    MatrixType s = AttentionForward(p_, L.attn, config_.n_heads, false, a, a, c ? &c->attn : nullptr);
    MatrixType m1 = DropoutMask<Scalar>(s.rows(), s.cols(), config_.dropout, rng);
    ApplyMask(s, m1);
    const MatrixType h = x + s;
    const MatrixType b = LayerNormForward(p_, L.ffn_norm, h, c ? &c->ffn_norm : nullptr);
    MatrixType f = FfnForward(p_, L.ffn, b, c ? &c->ffn : nullptr);
    MatrixType m2 = DropoutMask<Scalar>(f.rows(), f.cols(), config_.dropout, rng);
    ApplyMask(f, m2);
    if (c) {
      c->attn_dropout = std::move(m1);
      c->ffn_dropout = std::move(m2);
    }
    return h + f;
  }

  MatrixType EncoderLayerBackward(const EncoderLayerRef& L, const EncoderLayerCache& c,
                                  const MatrixType& dout, Parameters<Scalar>& g) const {
    MatrixType df = dout;
    ApplyMask(df, c.ffn_dropout);
    const MatrixType db = FfnBackward(p_, g, L.ffn, c.ffn, df);
    const MatrixType dh = dout + LayerNormBackward(p_, g, L.ffn_norm, c.ffn_norm, db);
    MatrixType ds = dh;
    ApplyMask(ds, c.attn_dropout);
    MatrixType dq, dkv;
    AttentionBackward(p_, g, L.attn, config_.n_heads, c.attn, ds, &dq, &dkv);
    dq += dkv;
    return dh + LayerNormBackward(p_, g, L.attn_norm, c.attn_norm, dq);
  }

  MatrixType Decode(const SequenceInput& in, const MatrixType& enc, std::mt19937_64* rng,
                    SequenceCache* cache) const {
    if (in.prefix.size() != in.tokens.size()) {
      throw Error(ErrorKind::kPrefixLengthMismatch, "label prefix length differs from input");
    }
    const auto n = static_cast<Eigen::Index>(in.prefix.size());
    MatrixType y(n, config_.d_model);
    for (Eigen::Index i = 0; i < n; ++i) {
      y.row(i) = p_[label_embed_].row(in.prefix[static_cast<std::size_t>(i)]) +
                 p_[decoder_position_embed_].row(in.positions[static_cast<std::size_t>(i)]);
    }
    MatrixType mask = DropoutMask<Scalar>(y.rows(), y.cols(), config_.dropout, rng);
    ApplyMask(y, mask);
    if (cache) {
      cache->decoder_embed_dropout = std::move(mask);
      cache->decoder.resize(decoder_.size());
    }
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
      y = DecoderLayerForward(decoder_[l], y, enc, rng, cache ? &cache->decoder[l] : nullptr);
    }
    return LayerNormForward(p_, decoder_final_, y, cache ? &cache->decoder_final : nullptr);
  }

  // Returns the gradient with respect to the encoder output.
  MatrixType DecodeBackward(const SequenceCache& cache, const MatrixType& dout,
                            Parameters<Scalar>& g) const {
    MatrixType denc = MatrixType::Zero(cache.encoder_out.rows(), cache.encoder_out.cols());
    MatrixType dy = LayerNormBackward(p_, g, decoder_final_, cache.decoder_final, dout);
    for (std::size_t l = decoder_.size(); l-- > 0;) {
      dy = DecoderLayerBackward(decoder_[l], cache.decoder[l], dy, g, denc);
    }
    ApplyMask(dy, cache.decoder_embed_dropout);
    const auto& in = cache.input;
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
      g[label_embed_].row(in.prefix[static_cast<std::size_t>(i)]) += dy.row(i);
      g[decoder_position_embed_].row(in.positions[static_cast<std::size_t>(i)]) += dy.row(i);
    }
    return denc;
  }

  MatrixType DecoderLayerForward(const DecoderLayerRef& L, const MatrixType& x,
                                 const MatrixType& enc, std::mt19937_64* rng,
                                 DecoderLayerCache* c) const {
    const MatrixType a = LayerNormForward(p_, L.self_norm, x, c ? &c->self_norm : nullptr);
    MatrixType s = AttentionForward(p_, L.self_attn, config_.n_heads, true, a, a,
                                    c ? &c->self_attn : nullptr);
    MatrixType m1 = DropoutMask<Scalar>(s.rows(), s.cols(), config_.dropout, rng);
    ApplyMask(s, m1);
    const MatrixType h1 = x + s;
    const MatrixType b = LayerNormForward(p_, L.cross_norm, h1, c ? &c->cross_norm : nullptr);
    MatrixType r = AttentionForward(p_, L.cross_attn, config_.n_heads, false, b, enc,
                                    c ? &c->cross_attn : nullptr);
    MatrixType m2 = DropoutMask<Scalar>(r.rows(), r.cols(), config_.dropout, rng);
    ApplyMask(r, m2);
    const MatrixType h2 = h1 + r;
    const MatrixType e = LayerNormForward(p_, L.ffn_norm, h2, c ? &c->ffn_norm : nullptr);
    MatrixType f = FfnForward(p_, L.ffn, e, c ? &c->ffn : nullptr);
    MatrixType m3 = DropoutMask<Scalar>(f.rows(), f.cols(), config_.dropout, rng);
    ApplyMask(f, m3);
    if (c) {
      c->self_dropout = std::move(m1);
      c->cross_dropout = std::move(m2);
      c->ffn_dropout = std::move(m3);
    }
    return h2 + f;
  }

  MatrixType DecoderLayerBackward(const DecoderLayerRef& L, const DecoderLayerCache& c,
                                  const MatrixType& dout, Parameters<Scalar>& g,
                                  MatrixType& denc) const {
    MatrixType df = dout;
    ApplyMask(df, c.ffn_dropout);
    const MatrixType de = FfnBackward(p_, g, L.ffn, c.ffn, df);
    const MatrixType dh2 = dout + LayerNormBackward(p_, g, L.ffn_norm, c.ffn_norm, de);
    MatrixType dr = dh2;
    ApplyMask(dr, c.cross_dropout);
    MatrixType dq, dkv;
    AttentionBackward(p_, g, L.cross_attn, config_.n_heads, c.cross_attn, dr, &dq, &dkv);
    denc += dkv;
    const MatrixType dh1 = dh2 + LayerNormBackward(p_, g, L.cross_norm, c.cross_norm, dq);
    MatrixType ds = dh1;
    ApplyMask(ds, c.self_dropout);
    AttentionBackward(p_, g, L.self_attn, config_.n_heads, c.self_attn, ds, &dq, &dkv);
    dq += dkv;
    return dh1 + LayerNormBackward(p_, g, L.self_norm, c.self_norm, dq);
  }

  ModelConfig config_;
  const Parameters<Scalar>& p_;
  std::size_t token_embed_ = 0;
  std::size_t position_embed_ = 0;
  std::vector<EncoderLayerRef> encoder_;
  NormRef encoder_final_;
  LinearRef head_;
  std::size_t label_embed_ = 0;
  std::size_t decoder_position_embed_ = 0;
  std::vector<DecoderLayerRef> decoder_;
  NormRef decoder_final_;
};

}  // namespace atd::model

#endif  // ATD_MODEL_TRANSFORMER_HPP_
