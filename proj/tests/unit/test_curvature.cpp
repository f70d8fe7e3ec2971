// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "fisherlab/curvature.hpp"
#include "support.hpp"

using namespace fisherlab;
using namespace fltest;

namespace {

// Linear model with logits +-50 x_0 apart: predictions are one-hot to machine precision.
std::pair<ModelSpec, ParamVector> saturated_model() {
  const ModelSpec spec = linear_spec(2, 2);
  ParamVector t(make_layout(spec), {50.0, 0.0, -50.0, 0.0, 0.0, 0.0});
  return {spec, t};
}

Dataset saturated_data(bool correct_labels) {
  Dataset d;
  d.classes = 2;
  d.inputs = Tensor(Shape{8, 2});
  for (std::size_t i = 0; i < 8; ++i) {
    const double s = i % 2 ? 1.0 : -1.0;
    d.inputs.at(i, 0) = s;
    d.inputs.at(i, 1) = 0.1 * static_cast<double>(i);
    d.labels.push_back(correct_labels ? (s > 0 ? 0 : 1) : static_cast<int>(i % 2));
  }
  return d;
}

// Full Hessian by central differences of gradients, column by column.
std::vector<double> full_hessian(const GradOracle& oracle, const ParamVector& theta, double h) {
  const std::size_t p = theta.size();
  std::vector<double> hess(p * p);
  for (std::size_t j = 0; j < p; ++j) {
    ParamVector up = theta, down = theta;
    up[j] += h;
    down[j] -= h;
    const ParamVector gu = oracle(up).grad, gd = oracle(down).grad;
    for (std::size_t i = 0; i < p; ++i) hess[i * p + j] = (gu[i] - gd[i]) / (2 * h);
  }
  return hess;
}

}  // namespace

TEST(HvpFd, DiagonalQuadratic) {
  const auto oracle = diag_quadratic({1.0, 2.0, 3.0});
  const ParamVector theta = flat_like(oracle, {0.3, -0.7, 1.1});
  const ParamVector hv = hvp_fd(oracle, theta, flat_like(oracle, {1.0, 1.0, 1.0}));
  EXPECT_LT(max_relative_error(hv.values(), std::vector<double>{1.0, 2.0, 3.0}), 1e-6);
  const ParamVector hv10 = hvp_fd(oracle, theta, flat_like(oracle, {10.0, 10.0, 10.0}));
  EXPECT_LT(max_relative_error(hv10, scaled(hv, 10.0)), 1e-5);
}

TEST(HvpFd, ZeroDirectionRejected) {
  const auto oracle = diag_quadratic({1.0, 2.0});
  EXPECT_THROW(hvp_fd(oracle, flat_like(oracle, {1.0, 1.0}), flat_like(oracle, {0.0, 0.0})), Error);
}

TEST(HvpFd, MatchesFullHessianOnSmallMlp) {
  const ModelSpec spec = mlp_spec(3, {5}, 3, Activation::tanh);
  const ParamVector theta = init_params(spec, InitScheme::he_normal, 4);
  const Dataset d = random_dataset(spec, 10, 5);
  const auto oracle = make_model_oracle(spec, d.inputs, d.labels);
  const std::vector<double> hess = full_hessian(oracle, theta, 1e-5);
  Rng rng(6);
  ParamVector v = theta.zeros_like();
  for (double& x : v.data()) x = rng.normal();
  const ParamVector hv = hvp_fd(oracle, theta, v);
  std::vector<double> ref(theta.size(), 0.0);
  for (std::size_t i = 0; i < theta.size(); ++i)
    for (std::size_t j = 0; j < theta.size(); ++j) ref[i] += hess[i * theta.size() + j] * v[j];
  EXPECT_LT(max_relative_error(hv.values(), ref), 1e-3);
}

TEST(TrHHutchinson, DiagonalQuadraticM2000) {
  const auto oracle = diag_quadratic({1.0, 2.0, 3.0});
  const auto est = tr_h_hutchinson(oracle, flat_like(oracle, {0.5, 0.5, 0.5}), 2000, 17);
  EXPECT_EQ(est.kind, CurvatureKind::tr_h_hutchinson);
  EXPECT_EQ(est.n_samples, 2000u);
  EXPECT_GT(est.std_error, 0.0);
  EXPECT_LE(std::abs(est.value - 6.0), 3 * est.std_error);
}

TEST(TrHHutchinson, DeterministicInSeed) {
  const auto oracle = diag_quadratic({1.0, 2.0, 3.0});
  const ParamVector theta = flat_like(oracle, {0.5, 0.5, 0.5});
  EXPECT_EQ(tr_h_hutchinson(oracle, theta, 30, 1).value, tr_h_hutchinson(oracle, theta, 30, 1).value);
  EXPECT_NE(tr_h_hutchinson(oracle, theta, 30, 1).value, tr_h_hutchinson(oracle, theta, 30, 2).value);
  EXPECT_THROW(tr_h_hutchinson(oracle, theta, 0, 1), Error);
}

TEST(TrHHutchinson, UnbiasedOverManySingleProbeEstimates) {
  const auto oracle = diag_quadratic({1.0, 2.0, 3.0});
  const ParamVector theta = flat_like(oracle, {0.2, 0.1, -0.3});
  std::vector<double> xs;
  for (std::uint64_t s = 0; s < 500; ++s) xs.push_back(tr_h_hutchinson(oracle, theta, 1, 1000 + s).value);
  const auto [m, se] = detail::mean_and_se(xs);
  EXPECT_LE(std::abs(m - 6.0), 4 * se);
}

TEST(TrHHutchinson, TinyMlpAgreesWithExactTrace) {
  const ModelSpec spec = mlp_spec(3, {6}, 3, Activation::tanh);
  const ParamVector theta = init_params(spec, InitScheme::he_normal, 8);
  ASSERT_LE(theta.size(), 200u);
  const Dataset d = random_dataset(spec, 12, 9);
  const auto oracle = make_model_oracle(spec, d.inputs, d.labels);
  const auto exact = tr_h_exact_small(oracle, theta);
  const auto est = tr_h_hutchinson(oracle, theta, 500, 10);
  EXPECT_LE(std::abs(est.value - exact.value), 3 * est.std_error);
}

TEST(TrHExactSmall, DiagonalQuadratic) {
  const auto oracle = diag_quadratic({1.0, 2.0, 3.0});
  const auto est = tr_h_exact_small(oracle, flat_like(oracle, {1.0, -2.0, 0.5}));
  EXPECT_NEAR(est.value, 6.0, 1e-8);
  EXPECT_EQ(est.kind, CurvatureKind::tr_h_exact);
  EXPECT_EQ(est.std_error, 0.0);
}

TEST(TrHExactSmall, LinearLeastSquaresTraceIsSquaredInputNorm) {
  const std::vector<double> x{0.5, -1.5, 2.0};
  const double target = 0.3;
  auto layout = ParamVector::flat(std::vector<double>(3, 0.0)).layout();
  const GradOracle oracle(layout, 1, [=](const ParamVector& w, std::span<const std::size_t>) {
    double r = -target;
    for (std::size_t i = 0; i < 3; ++i) r += w[i] * x[i];
    LossGrad out{0.5 * r * r, ParamVector(layout)};
    for (std::size_t i = 0; i < 3; ++i) out.grad[i] = r * x[i];
    return out;
  });
  const auto est = tr_h_exact_small(oracle, ParamVector(layout, {0.1, 0.2, 0.3}));
  EXPECT_NEAR(est.value, 0.25 + 2.25 + 4.0, 1e-8);
}

TEST(TrHExactSmall, EvaluationOrderDoesNotChangeTheSum) {
  const ModelSpec spec = mlp_spec(2, {3}, 2, Activation::tanh);
  const ParamVector theta = init_params(spec, InitScheme::he_normal, 12);
  const Dataset d = random_dataset(spec, 6, 13);
  const auto oracle = make_model_oracle(spec, d.inputs, d.labels);
  const auto perm = Rng(14).permutation(theta.size());
  EXPECT_EQ(tr_h_exact_small(oracle, theta).value, tr_h_exact_small(oracle, theta, {}, 2000, perm).value);
}

TEST(TrHExactSmall, CapExceeded) {
  const auto oracle = diag_quadratic(std::vector<double>(10, 1.0));
  try {
    tr_h_exact_small(oracle, flat_like(oracle, std::vector<double>(10, 0.0)), {}, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::cap_exceeded);
  }
}

TEST(TrFMc, SaturatedModelIsNearZero) {
  auto [spec, theta] = saturated_model();
  const auto est = tr_f_mc(spec, theta, saturated_data(true), 8, 4, 1);
  EXPECT_LT(est.value, 1e-6);
  EXPECT_EQ(est.n_samples, 32u);
}

TEST(TrFMc, LogisticAveragedOverSeedsMatchesExact) {
  const ModelSpec spec = linear_spec(3, 2);
  const ParamVector theta = init_params(spec, InitScheme::he_normal, 20);
  const Dataset d = random_dataset(spec, 64, 21);
  const double exact = tr_f_exact(spec, theta, d).value;
  double mean = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) mean += tr_f_mc(spec, theta, d, 64, 64, 500 + s).value;
  mean /= 20.0;
  EXPECT_NEAR(mean, exact, 0.02 * exact);
}

TEST(TrFMc, ConvergesToExactWithinTwoStandardErrors) {
  const ModelSpec spec = mlp_spec(3, {8}, 4, Activation::tanh);
  const ParamVector theta = init_params(spec, InitScheme::he_normal, 30);
  const Dataset d = random_dataset(spec, 128, 31);
  const double exact = tr_f_exact(spec, theta, d).value;
  int pass = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto est = tr_f_mc(spec, theta, d, 128, 32, 900 + s);
    EXPECT_EQ(est.n_samples, 4096u);
    pass += std::abs(est.value - exact) <= 2 * est.std_error;
  }
  EXPECT_GE(pass, 17);
}

TEST(TrFMc, Preconditions) {
  const ModelSpec spec = linear_spec(2, 2);
  const ParamVector theta = init_params(spec, InitScheme::he_normal, 1);
  const Dataset d = random_dataset(spec, 4, 2);
  EXPECT_THROW(tr_f_mc(spec, theta, d, 5, 1, 0), Error);
  EXPECT_THROW(tr_f_mc(spec, theta, d, 4, 0, 0), Error);
  EXPECT_THROW(tr_f_mc(spec, theta, d, 0, 1, 0), Error);
}

TEST(TrFExact, SingleExampleLogisticClosedForm) {
  const ModelSpec spec = linear_spec(2, 2);
  const ParamVector theta(make_layout(spec), {0.3, -0.2, -0.5, 0.8, 0.1, -0.1});
  Dataset d;
  d.classes = 2;
  d.inputs = Tensor::from_data({1, 2}, {1.5, -0.5});
  d.labels = {0};
  const Tensor p = softmax(forward_logits(spec, theta, d.inputs));
  // per-label |g|^2 = |p - e_y|^2 (|x|^2 + 1); with C = 2 the sum over y is 2 p0 p1 (|x|^2 + 1)
  const double expected = 2.0 * p[0] * p[1] * (1.5 * 1.5 + 0.25 + 1.0);
  const auto est = tr_f_exact(spec, theta, d);
  EXPECT_NEAR(est.value, expected, 1e-14);
  EXPECT_EQ(est.kind, CurvatureKind::tr_f_exact);
  EXPECT_EQ(est.std_error, 0.0);
}

TEST(TrFExact, SaturatedAndDuplicationInvariant) {
  auto [spec, theta] = saturated_model();
  EXPECT_LT(tr_f_exact(spec, theta, saturated_data(true)).value, 1e-6);
  const ModelSpec s2 = mlp_spec(3, {4}, 3);
  const ParamVector t2 = init_params(s2, InitScheme::he_normal, 2);
  const Dataset d = random_dataset(s2, 10, 3);
  std::vector<std::size_t> twice;
  for (std::size_t i = 0; i < 10; ++i) twice.insert(twice.end(), {i, i});
  const double a = tr_f_exact(s2, t2, d).value, b = tr_f_exact(s2, t2, subset(d, twice)).value;
  EXPECT_NEAR(a, b, 1e-13 * a);
}

TEST(TrFExact, CapExceeded) {
  const ModelSpec spec = linear_spec(2, 3);
  const Dataset d = random_dataset(spec, 10, 3);
  EXPECT_THROW(tr_f_exact(spec, init_params(spec, InitScheme::he_normal, 0), d, 29), Error);
}

TEST(TrFMinibatch, SingleExampleEqualsOneSampleTerm) {
  const ModelSpec spec = mlp_spec(3, {4}, 3);
  const ParamVector theta = init_params(spec, InitScheme::he_normal, 5);
  const Dataset d = random_dataset(spec, 1, 6);
  const auto est = tr_f_minibatch(spec, theta, d.inputs, 77);
  const auto y = sample_labels(forward_logits(spec, theta, d.inputs), LabelSource::model, {}, 77);
  const auto g = per_label_param_grads(spec, theta, d.inputs.row(0), y);
  EXPECT_NEAR(est.value, squared_norm(g[0]), 1e-14 * est.value);
  EXPECT_EQ(est.kind, CurvatureKind::tr_f_minibatch);
}

TEST(TrFMinibatch, JensenBoundHoldsForManyBatchesAndSeeds) {
  const ModelSpec spec = mlp_spec(3, {5}, 3, Activation::relu);
  for (std::uint64_t s = 0; s < 40; ++s) {
    const ParamVector theta = init_params(spec, InitScheme::he_normal, s);
    const Dataset d = random_dataset(spec, 1 + s % 9, 100 + s);
    const double fb = tr_f_minibatch(spec, theta, d.inputs, s).value;
    const auto y = sample_labels(forward_logits(spec, theta, d.inputs), LabelSource::model, {}, s);
    const Tensor rows = per_example_param_grads(make_model_oracle(spec, d.inputs, y), theta);
    double mean_sq = 0.0;
    for (std::size_t i = 0; i < rows.dim(0); ++i)
      for (double v : rows.row(i)) mean_sq += v * v;
    mean_sq /= static_cast<double>(rows.dim(0));
    EXPECT_LE(fb, mean_sq * (1 + 1e-12));
    EXPECT_GE(fb, 0.0);
  }
}

TEST(EmpiricalFisher, PerfectFitIsZeroAndMatchesExactWhenSaturated) {
  auto [spec, theta] = saturated_model();
  const Dataset d = saturated_data(true);
  const auto ef = empirical_fisher_trace(spec, theta, d);
  EXPECT_LT(ef.value, 1e-12);
  EXPECT_NEAR(ef.value, tr_f_exact(spec, theta, d).value, 1e-6);
}

TEST(EmpiricalFisher, EqualsMeanSquaredPerExampleRows) {
  const ModelSpec spec = mlp_spec(3, {6}, 3, Activation::tanh);
  const ParamVector theta = init_params(spec, InitScheme::he_normal, 40);
  const Dataset d = random_dataset(spec, 32, 41);
  const Tensor rows = per_example_param_grads(make_model_oracle(spec, d.inputs, d.labels), theta);
  double m = 0.0;
  for (std::size_t i = 0; i < 32; ++i)
    for (double v : rows.row(i)) m += v * v;
  m /= 32.0;
  const auto ef = empirical_fisher_trace(spec, theta, d);
  EXPECT_NEAR(ef.value, m, 1e-12 * m);
  EXPECT_EQ(ef.n_samples, 32u);
  EXPECT_GT(ef.std_error, 0.0);
}

TEST(Probes, NeverMutateTheta) {
  const ModelSpec spec = mlp_spec(3, {6}, 3, Activation::tanh);
  const ParamVector theta = init_params(spec, InitScheme::he_normal, 50);
  const ParamVector copy = theta;
  const Dataset d = random_dataset(spec, 16, 51);
  const auto oracle = make_model_oracle(spec, d.inputs, d.labels);
  const double values[] = {tr_f_mc(spec, theta, d, 16, 2, 1).value, tr_f_exact(spec, theta, d).value,
                           tr_f_minibatch(spec, theta, d.inputs, 1).value, empirical_fisher_trace(spec, theta, d).value,
                           tr_h_hutchinson(oracle, theta, 5, 1).value};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_GE(values[i], 0.0);
  EXPECT_EQ(theta, copy);
}
