// Copyright 2026 The ldpfed Authors
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

#ifndef LDPFED_NN_HPP
#define LDPFED_NN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ldpfed/dataset.hpp"
#include "ldpfed/errors.hpp"
#include "ldpfed/rng.hpp"

namespace ldpfed {

// Minimal dense network: fully connected layers, rectifier hidden units,
// softmax with cross-entropy at the output. Models and gradients are
// immutable values; every operation is a pure function of its inputs (plus
// an explicit seed where randomness is involved), accumulated in fixed index
// order so results are bit-reproducible.

/// Network shape: [input width, hidden widths..., output width].
struct ArchSpec {
  std::vector<int> layer_sizes;
  std::string activation = "relu";  // only rectifier hidden units

  void validate() const {
    if (layer_sizes.size() < 2)
      throw config_error("arch: need at least input and output widths");
    for (int w : layer_sizes)
      if (w < 1) throw config_error("arch: every layer width must be >= 1");
    if (activation != "relu")
      throw config_error("arch: unsupported activation '" + activation + "'");
  }

  int input_width() const { return layer_sizes.front(); }
  int output_width() const { return layer_sizes.back(); }
  /// Number of dense layers (weight matrices).
  size_t depth() const { return layer_sizes.size() - 1; }
};

/// One named contiguous slice of the flat parameter vector.
struct LayerSegment {
  std::string name;
  size_t offset = 0;
  size_t length = 0;

  bool operator==(const LayerSegment&) const = default;
};

/// Flat parameter list partitioned into named layers, input side first.
/// Layer i ("dense<i>") stores its weight matrix row-major [out][in]
/// followed by the bias vector [out].
struct ParameterVector {
  std::vector<double> values;
  std::vector<LayerSegment> layout;

  bool same_layout(const ParameterVector& other) const {
    return layout == other.layout && values.size() == other.values.size();
  }

  const LayerSegment& segment(const std::string& name) const {
    for (const auto& s : layout)
      if (s.name == name) return s;
    throw shape_error("no layer segment named '" + name + "'");
  }
};

inline std::vector<LayerSegment> make_layout(const ArchSpec& arch) {
  std::vector<LayerSegment> layout;
  size_t offset = 0;
  for (size_t l = 0; l < arch.depth(); ++l) {
    size_t fan_in = static_cast<size_t>(arch.layer_sizes[l]);
    size_t fan_out = static_cast<size_t>(arch.layer_sizes[l + 1]);
    size_t len = fan_in * fan_out + fan_out;
    layout.push_back({"dense" + std::to_string(l), offset, len});
    offset += len;
  }
  return layout;
}

inline size_t param_count(const ArchSpec& arch) {
  size_t total = 0;
  for (size_t l = 0; l < arch.depth(); ++l)
    total += static_cast<size_t>(arch.layer_sizes[l]) * arch.layer_sizes[l + 1] +
             arch.layer_sizes[l + 1];
  return total;
}

struct Model {
  ArchSpec arch;
  ParameterVector params;
};

/// A training minibatch: |B| rows of input plus one class label per row.
struct Minibatch {
  size_t width = 0;
  std::vector<double> inputs;  // row-major |B| x width
  std::vector<int> labels;

  size_t size() const { return labels.size(); }
};

inline Minibatch make_minibatch(const Dataset& data, size_t start, size_t count) {
  if (start + count > data.size())
    throw shape_error("minibatch range exceeds dataset size");
  Minibatch b;
  b.width = data.width;
  b.inputs.assign(data.features.begin() + start * data.width,
                  data.features.begin() + (start + count) * data.width);
  b.labels.assign(data.labels.begin() + start, data.labels.begin() + start + count);
  return b;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Weights uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
/// Deterministic given (arch, seed).
inline Model init_model(const ArchSpec& arch, uint64_t seed) {
  arch.validate();
  Model m;
  m.arch = arch;
  m.params.layout = make_layout(arch);
  m.params.values.assign(param_count(arch), 0.0);

  Stream rng(derive_seed(seed, {stream_tag::kModelInit}));
  for (size_t l = 0; l < arch.depth(); ++l) {
    const LayerSegment& seg = m.params.layout[l];
    size_t fan_in = static_cast<size_t>(arch.layer_sizes[l]);
    size_t fan_out = static_cast<size_t>(arch.layer_sizes[l + 1]);
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    double* w = m.params.values.data() + seg.offset;
    for (size_t i = 0; i < fan_in * fan_out; ++i) w[i] = rng.uniform(-bound, bound);
    // biases stay zero
  }
  return m;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace nn_detail {

/// Per-layer preactivations and activations for one example.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;   // z per layer
  std::vector<std::vector<double>> post;  // relu(z), logits for last layer
};

inline void forward_example(const Model& m, const double* x, ForwardTrace& t) {
  const ArchSpec& arch = m.arch;
  size_t depth = arch.depth();
  t.pre.resize(depth);
  t.post.resize(depth);

  const double* input = x;
  size_t in_width = static_cast<size_t>(arch.input_width());
  for (size_t l = 0; l < depth; ++l) {
    size_t fan_in = static_cast<size_t>(arch.layer_sizes[l]);
    size_t fan_out = static_cast<size_t>(arch.layer_sizes[l + 1]);
    const LayerSegment& seg = m.params.layout[l];
    const double* w = m.params.values.data() + seg.offset;
    const double* b = w + fan_in * fan_out;

    t.pre[l].assign(fan_out, 0.0);
    for (size_t o = 0; o < fan_out; ++o) {
      const double* row = w + o * fan_in;
      double acc = b[o];
      for (size_t i = 0; i < fan_in; ++i) acc += row[i] * input[i];
      t.pre[l][o] = acc;
    }
    if (l + 1 < depth) {
      t.post[l].resize(fan_out);
      for (size_t o = 0; o < fan_out; ++o) t.post[l][o] = std::max(0.0, t.pre[l][o]);
    } else {
      t.post[l] = t.pre[l];  // raw logits; softmax handled by the loss
    }
    input = t.post[l].data();
    in_width = fan_out;
  }
  (void)in_width;
}

/// Cross-entropy of one example from its logits, with the softmax folded in.
inline double softmax_xent(const std::vector<double>& logits, int label,
                           std::vector<double>* probs) {
  double mx = logits[0];
  for (double z : logits) mx = std::max(mx, z);
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  double lse = mx + std::log(sum);
  if (!std::isfinite(lse)) throw numeric_error("non-finite logits in output layer");
  if (probs) {
    probs->resize(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) (*probs)[i] = std::exp(logits[i] - lse);
  }
  return lse - logits[label];
}

}  // namespace nn_detail

/// Mean cross-entropy over a whole dataset.
inline double average_loss(const Model& m, const Dataset& data) {
  if (data.size() == 0) throw config_error("average_loss: empty dataset");
  if (data.width != static_cast<size_t>(m.arch.input_width()))
    throw shape_error("average_loss: dataset width " + std::to_string(data.width) +
                      " does not match input width " +
                      std::to_string(m.arch.input_width()));
  if (data.class_count > m.arch.output_width())
    throw shape_error("average_loss: more classes than output units");

  nn_detail::ForwardTrace trace;
  double total = 0.0;
  for (size_t i = 0; i < data.size(); ++i) {
    nn_detail::forward_example(m, data.row(i), trace);
    total += nn_detail::softmax_xent(trace.post.back(), data.labels[i], nullptr);
  }
  return total / static_cast<double>(data.size());
}

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and top-1 accuracy on a dataset.
inline EvalResult evaluate(const Model& m, const Dataset& data) {
  if (data.size() == 0) throw config_error("evaluate: empty dataset");
  nn_detail::ForwardTrace trace;
  double total = 0.0;
  size_t correct = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    nn_detail::forward_example(m, data.row(i), trace);
    const std::vector<double>& logits = trace.post.back();
    total += nn_detail::softmax_xent(logits, data.labels[i], nullptr);
    size_t arg = 0;
    for (size_t k = 1; k < logits.size(); ++k)
      if (logits[k] > logits[arg]) arg = k;
    if (static_cast<int>(arg) == data.labels[i]) ++correct;
  }
  return {total / static_cast<double>(data.size()),
          static_cast<double>(correct) / static_cast<double>(data.size())};
}

/// Average gradient of the minibatch loss, same layout as the parameters.
/// Per-example contributions are summed in batch index order.
inline ParameterVector minibatch_gradient(const Model& m, const Minibatch& batch) {
  if (batch.size() == 0) throw config_error("minibatch_gradient: empty batch");
  if (batch.width != static_cast<size_t>(m.arch.input_width()))
    throw shape_error("minibatch_gradient: batch width mismatch");
  for (int y : batch.labels)
    if (y < 0 || y >= m.arch.output_width())
      throw shape_error("minibatch_gradient: label outside output width");

  const ArchSpec& arch = m.arch;
  size_t depth = arch.depth();

  ParameterVector grad;
  grad.layout = m.params.layout;
  grad.values.assign(m.params.values.size(), 0.0);

  nn_detail::ForwardTrace trace;
  std::vector<double> probs;
  std::vector<double> delta, delta_prev;

  for (size_t ex = 0; ex < batch.size(); ++ex) {
    const double* x = batch.inputs.data() + ex * batch.width;
    nn_detail::forward_example(m, x, trace);
    nn_detail::softmax_xent(trace.post.back(), batch.labels[ex], &probs);

    // dL/dz at the output: softmax - onehot
    delta = probs;
    delta[batch.labels[ex]] -= 1.0;

    for (size_t l = depth; l-- > 0;) {
      size_t fan_in = static_cast<size_t>(arch.layer_sizes[l]);
      size_t fan_out = static_cast<size_t>(arch.layer_sizes[l + 1]);
      const LayerSegment& seg = m.params.layout[l];
      const double* w = m.params.values.data() + seg.offset;
      double* gw = grad.values.data() + seg.offset;
      double* gb = gw + fan_in * fan_out;
      const double* below = (l == 0) ? x : trace.post[l - 1].data();

      for (size_t o = 0; o < fan_out; ++o) {
        double d = delta[o];
        double* grow = gw + o * fan_in;
        for (size_t i = 0; i < fan_in; ++i) grow[i] += d * below[i];
        gb[o] += d;
      }

      if (l > 0) {
        delta_prev.assign(fan_in, 0.0);
        for (size_t o = 0; o < fan_out; ++o) {
          double d = delta[o];
          const double* row = w + o * fan_in;
          for (size_t i = 0; i < fan_in; ++i) delta_prev[i] += row[i] * d;
        }
        // rectifier gate
        for (size_t i = 0; i < fan_in; ++i)
          if (trace.pre[l - 1][i] <= 0.0) delta_prev[i] = 0.0;
        std::swap(delta, delta_prev);
      }
    }
  }

  double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad.values) g *= inv;

  for (const auto& seg : grad.layout)
    for (size_t i = seg.offset; i < seg.offset + seg.length; ++i)
      if (!std::isfinite(grad.values[i]))
        throw numeric_error("non-finite gradient in " + seg.name);
  return grad;
}

/// One plain SGD update: params - lr * grad.
inline Model sgd_step(const Model& m, const ParameterVector& grad, double lr) {
  if (!m.params.same_layout(grad))
    throw shape_error("sgd_step: gradient layout does not match model");
  Model next = m;
  for (size_t i = 0; i < next.params.values.size(); ++i)
    next.params.values[i] -= lr * grad.values[i];
  return next;
}

/// (layer name, parameter count) per layer in network order.
inline std::vector<std::pair<std::string, size_t>> layer_partition(const Model& m) {
  std::vector<std::pair<std::string, size_t>> parts;
  for (const auto& seg : m.params.layout) parts.emplace_back(seg.name, seg.length);
  return parts;
}

/// One full pass over the shard in consecutive minibatches (no reshuffle;
/// shard order is already randomized by the IID partition).
inline Model train_one_epoch(Model m, const Dataset& shard, double lr, int batch_size) {
  if (batch_size < 1) throw config_error("train_one_epoch: batch_size must be >= 1");
  for (size_t start = 0; start < shard.size(); start += batch_size) {
    size_t count = std::min(static_cast<size_t>(batch_size), shard.size() - start);
    Minibatch b = make_minibatch(shard, start, count);
    ParameterVector g = minibatch_gradient(m, b);
    m = sgd_step(m, g, lr);
  }
  return m;
}

}  // namespace ldpfed

#endif  // LDPFED_NN_HPP
