/* Copyright 2026 The DeltaInfer Authors. All Rights Reserved.

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

#include "deltainfer/tuner.hpp"

#include <cmath>

#include "deltainfer/error.hpp"
#include "deltainfer/io.hpp"
#include "deltainfer/oracle.hpp"

namespace deltainfer {

void TuneConfig::validate() const {
  if (!(total_budget >= 0.0) || !std::isfinite(total_budget)) {
    throw ParamError("tune: total_budget must be finite and non-negative");
  }
  if (!(start_epsilon > 0.0f) || !std::isfinite(start_epsilon)) {
    throw ParamError("tune: start_epsilon must be positive");
  }
  if (!(step_factor > 1.0f) || !std::isfinite(step_factor)) throw ParamError("tune: step_factor must exceed 1");
  if (!(max_epsilon >= start_epsilon) || !std::isfinite(max_epsilon)) {
    throw ParamError("tune: max_epsilon must be finite and at least start_epsilon");
  }
  if (!(accuracy_gain_cap >= 0.0)) throw ParamError("tune: accuracy_gain_cap must be non-negative");
}

double mean_relative_l1(std::span<const FeatureTensor> delta, std::span<const FeatureTensor> dense) {
  if (delta.size() != dense.size() || delta.empty()) throw ValueError("loss: frame count mismatch");
  double total = 0.0;
  for (std::size_t f = 0; f < delta.size(); ++f) {
    const auto d = delta[f].data();
    const auto o = dense[f].data();
    if (d.size() != o.size()) throw ShapeError("loss: output size mismatch");
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      diff += std::fabs(static_cast<double>(d[i]) - o[i]);
      norm += std::fabs(static_cast<double>(o[i]));
    }
    total += diff / (norm + 1e-12);
  }
  return total / static_cast<double>(delta.size());
}

namespace {

class Evaluator {
 public:
  Evaluator(const ModelGraph& graph, const std::vector<std::vector<FeatureTensor>>& calibration,
            const LossFn& loss)
      : graph_(graph), calibration_(calibration), loss_(loss) {
    graph_.options().dense_mode = false;
    for (const auto& seq : calibration_) {
      for (const auto& frame : seq) dense_.push_back(oracle::dense_run_frame(graph_, frame));
    }
  }

  std::size_t frames() const { return dense_.size(); }
  std::size_t evaluations() const { return evaluations_; }

  // Returns the loss; density receives the mean output density of `layer`.
  double run(const std::vector<float>& eps, std::size_t layer, double* density) {
    graph_.set_truncation_epsilons(eps);
    std::vector<FeatureTensor> outputs;
    outputs.reserve(dense_.size());
    double dsum = 0.0;
    std::size_t dcount = 0;
    for (const auto& seq : calibration_) {
      graph_.reset_buffers();
      for (std::size_t f = 0; f < seq.size(); ++f) {
        outputs.push_back(graph_.run_frame(seq[f]).output);
        if (f > 0 || seq.size() == 1) {
          dsum += graph_.layer_output(layer).mask.density();
          ++dcount;
        }
      }
    }
    ++evaluations_;
    const double l = loss_(outputs, dense_);
    if (!std::isfinite(l) || l < 0.0) throw ValueError("tune: loss must be finite and non-negative");
    if (density) *density = dcount ? dsum / static_cast<double>(dcount) : 0.0;
    return l;
  }

 private:
  ModelGraph graph_;
  const std::vector<std::vector<FeatureTensor>>& calibration_;
  const LossFn& loss_;
  std::vector<FeatureTensor> dense_;
  std::size_t evaluations_ = 0;
};

}  // namespace

TuneResult tune(const ModelGraph& graph, const TuneConfig& config,
                const std::vector<std::vector<FeatureTensor>>& calibration, const LossFn& loss) {
  config.validate();
  std::size_t frames = 0;
  for (const auto& seq : calibration) frames += seq.size();
  if (frames == 0) throw ValueError("tune: calibration sequences are empty");

  Evaluator eval(graph, calibration, loss);
  const std::vector<std::size_t> trunc = graph.truncation_layers();
  std::vector<float> eps(trunc.size(), 0.0f);

  TuneResult result;
  TuneReport& rep = result.report;
  rep.total_budget = config.total_budget;
  rep.per_layer_budget = trunc.empty() ? 0.0 : config.total_budget / static_cast<double>(trunc.size());
  rep.calibration_frames = frames;
  rep.baseline_loss = eval.run(eps, graph.layers().size() - 1, nullptr);
  double reference = rep.baseline_loss;

  for (std::size_t k = 0; k < trunc.size(); ++k) {
    LayerTuneResult lr;
    lr.layer = trunc[k];
    lr.name = graph.layer(trunc[k]).name;
    lr.reference_loss = reference;

    auto trial = [&](float e) {
      TuneTrial t;
      t.epsilon = e;
      eps[k] = e;
      t.loss = eval.run(eps, trunc[k], &t.density);
      t.increase = t.loss - reference;
      t.passed = t.increase <= rep.per_layer_budget && -t.increase <= config.accuracy_gain_cap;
      lr.trajectory.push_back(t);
      return t;
    };

    std::optional<TuneTrial> pass;
    std::optional<float> fail;
    for (float e = config.start_epsilon;; e *= config.step_factor) {
      const float cand = std::min(e, config.max_epsilon);
      const TuneTrial t = trial(cand);
      if (!t.passed) {
        fail = cand;
        break;
      }
      pass = t;
      if (cand >= config.max_epsilon) break;
    }
    if (pass && fail) {
      const float mid = 0.5f * (pass->epsilon + *fail);
      if (mid > pass->epsilon && mid < *fail) {
        const TuneTrial t = trial(mid);
        if (t.passed) pass = t;
      }
    }
    if (pass) {
      lr.epsilon = pass->epsilon;
      lr.final_loss = pass->loss;
      lr.density = pass->density;
    } else {
      // Even the smallest step costs too much: the layer stays exact.
      lr.epsilon = 0.0f;
      eps[k] = 0.0f;
      lr.final_loss = eval.run(eps, trunc[k], &lr.density);
    }
    eps[k] = lr.epsilon;
    reference = lr.final_loss;
    rep.layers.push_back(std::move(lr));
  }
  rep.final_loss = reference;
  rep.evaluations = eval.evaluations();
  result.epsilons = eps;
  return result;
}

TuneResult tune(const ModelGraph& graph, const TuneConfig& config, const LossFn& loss) {
  if (config.calibration.empty()) throw ValueError("tune: no calibration sources");
  std::vector<std::vector<FeatureTensor>> seqs;
  for (const auto& src : config.calibration) seqs.push_back(io::ingest_frames(src));
  return tune(graph, config, seqs, loss);
}

}  // namespace deltainfer
