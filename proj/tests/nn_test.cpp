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

#include "ldpfed/nn.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ldpfed/dataset.hpp"
#include "ldpfed/errors.hpp"

namespace ldpfed {
namespace {

TEST(Layout, ParameterCountsPerLayer) {
  Model m = init_model({{2, 3, 2}}, 1);
  auto parts = layer_partition(m);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].first, "dense0");
  EXPECT_EQ(parts[0].second, 9u);  // 2*3 weights + 3 biases
  EXPECT_EQ(parts[1].first, "dense1");
  EXPECT_EQ(parts[1].second, 8u);  // 3*2 weights + 2 biases
}

TEST(Layout, TotalCounts) {
  EXPECT_EQ(param_count({{784, 64, 10}}), 50890u);
  EXPECT_EQ(param_count({{4, 2}}), 10u);
  EXPECT_EQ(param_count({{32, 64, 10}}), 2762u);
}

TEST(Layout, SegmentsAreContiguous) {
  Model m = init_model({{5, 7, 4, 3}}, 2);
  size_t expected_offset = 0;
  for (const auto& seg : m.params.layout) {
    EXPECT_EQ(seg.offset, expected_offset);
    expected_offset += seg.length;
  }
  EXPECT_EQ(expected_offset, m.params.values.size());
}

TEST(InitModel, WeightsBoundedBiasesZero) {
  ArchSpec arch{{100, 50, 10}};
  Model m = init_model(arch, 3);
  const auto& layout = m.params.layout;
  for (size_t l = 0; l < layout.size(); ++l) {
    size_t fan_in = static_cast<size_t>(arch.layer_sizes[l]);
    size_t fan_out = static_cast<size_t>(arch.layer_sizes[l + 1]);
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const double* w = m.params.values.data() + layout[l].offset;
    for (size_t i = 0; i < fan_in * fan_out; ++i) {
      ASSERT_GE(w[i], -bound);
      ASSERT_LT(w[i], bound);
    }
    const double* b = w + fan_in * fan_out;
    for (size_t i = 0; i < fan_out; ++i) ASSERT_EQ(b[i], 0.0);
  }
}

TEST(InitModel, DeterministicPerSeed) {
  Model a = init_model({{8, 4, 2}}, 5);
  Model b = init_model({{8, 4, 2}}, 5);
  Model c = init_model({{8, 4, 2}}, 6);
  EXPECT_EQ(a.params.values, b.params.values);
  EXPECT_NE(a.params.values, c.params.values);
}

TEST(AverageLoss, UniformLogitsGiveLogClassCount) {
  // Zero weights and biases produce all-zero logits, so the softmax is
  // uniform and the loss is ln(output width) regardless of labels.
  ArchSpec arch{{4, 10}};
  Model m;
  m.arch = arch;
  m.params.layout = make_layout(arch);
  m.params.values.assign(param_count(arch), 0.0);

  Dataset ds = synth_dataset(10, 30, 4, 2.0, 1);
  EXPECT_NEAR(average_loss(m, ds), std::log(10.0), 1e-12);
}

TEST(AverageLoss, RejectsShapeMismatches) {
  Model m = init_model({{4, 2}}, 1);
  Dataset wrong_width = synth_dataset(2, 10, 5, 2.0, 1);
  EXPECT_THROW(average_loss(m, wrong_width), shape_error);
  Dataset too_many_classes = synth_dataset(3, 10, 4, 2.0, 1);
  EXPECT_THROW(average_loss(m, too_many_classes), shape_error);
}

TEST(Gradient, MatchesCentralFiniteDifference) {
  Dataset ds = synth_dataset(3, 8, 5, 2.0, 21);
  Model m = init_model({{5, 6, 3}}, 9);
  Minibatch batch = make_minibatch(ds, 0, ds.size());
  ParameterVector grad = minibatch_gradient(m, batch);

  const double h = 1e-6;
  for (size_t idx = 0; idx < m.params.values.size(); idx += 7) {
    Model plus = m, minus = m;
    plus.params.values[idx] += h;
    minus.params.values[idx] -= h;
    double fd = (average_loss(plus, ds) - average_loss(minus, ds)) / (2 * h);
    ASSERT_NEAR(grad.values[idx], fd, 1e-6 + 1e-5 * std::abs(fd))
        << "component " << idx;
  }
}

TEST(Gradient, AccumulationOrderIsFixed) {
  Dataset ds = synth_dataset(4, 16, 6, 2.0, 33);
  Model m = init_model({{6, 8, 4}}, 4);
  Minibatch batch = make_minibatch(ds, 0, 32);
  ParameterVector g1 = minibatch_gradient(m, batch);
  ParameterVector g2 = minibatch_gradient(m, batch);
  EXPECT_EQ(g1.values, g2.values);
}

TEST(Gradient, RejectsBadLabels) {
  Model m = init_model({{3, 2}}, 1);
  Minibatch batch;
  batch.width = 3;
  batch.inputs = {0.1, 0.2, 0.3};
  batch.labels = {5};
  EXPECT_THROW(minibatch_gradient(m, batch), shape_error);
}

TEST(SgdStep, MovesAgainstGradient) {
  Model m = init_model({{2, 2}}, 1);
  ParameterVector grad;
  grad.layout = m.params.layout;
  grad.values.assign(m.params.values.size(), 1.0);
  Model next = sgd_step(m, grad, 0.1);
  for (size_t i = 0; i < next.params.values.size(); ++i)
    EXPECT_DOUBLE_EQ(next.params.values[i], m.params.values[i] - 0.1);
}

TEST(SgdStep, RejectsLayoutMismatch) {
  Model m = init_model({{2, 2}}, 1);
  ParameterVector grad;  // empty layout
  EXPECT_THROW(sgd_step(m, grad, 0.1), shape_error);
}

TEST(TrainOneEpoch, DeterministicAndLearns) {
  // Blob rows come back grouped by class; shuffle before minibatching.
  Dataset train = partition(synth_dataset(4, 100, 8, 4.0, 17), 1, 17)[0];
  Dataset test = synth_dataset(4, 50, 8, 4.0, 17, 1);
  Model m = init_model({{8, 16, 4}}, 17);

  EvalResult before = evaluate(m, test);
  Model a = m, b = m;
  for (int epoch = 0; epoch < 10; ++epoch) {
    a = train_one_epoch(std::move(a), train, 0.1, 16);
    b = train_one_epoch(std::move(b), train, 0.1, 16);
  }
  EXPECT_EQ(a.params.values, b.params.values);
  EvalResult after = evaluate(a, test);
  EXPECT_GT(after.accuracy, before.accuracy);
  EXPECT_GT(after.accuracy, 0.9);
  EXPECT_LT(after.loss, before.loss);
}

TEST(Evaluate, PerfectSeparationOnEasyData) {
  // Single strongly separated pair of blobs: a trained model should be
  // nearly perfect, and accuracy must lie in [0, 1].
  Dataset train = partition(synth_dataset(2, 200, 4, 6.0, 23), 1, 23)[0];
  Model m = init_model({{4, 8, 2}}, 23);
  for (int epoch = 0; epoch < 5; ++epoch)
    m = train_one_epoch(std::move(m), train, 0.2, 16);
  EvalResult ev = evaluate(m, train);
  EXPECT_GE(ev.accuracy, 0.99);
  EXPECT_LE(ev.accuracy, 1.0);
}

TEST(ArchSpec, Validation) {
  EXPECT_THROW(ArchSpec({{5}}).validate(), config_error);
  EXPECT_THROW(ArchSpec({{5, 0, 2}}).validate(), config_error);
  EXPECT_THROW(ArchSpec({{5, 2}, "tanh"}).validate(), config_error);
  EXPECT_NO_THROW(ArchSpec({{5, 2}}).validate());
}

}  // namespace
}  // namespace ldpfed
