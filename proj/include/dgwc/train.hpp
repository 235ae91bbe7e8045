#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgwc/data.hpp"
#include "dgwc/model.hpp"

namespace dgwc {

// Mean over the mask of -Z[i, label_i].
double nll_loss(const DenseMatrix& log_probs, const std::vector<int>& labels,
                const std::vector<std::uint32_t>& mask);

// Fraction of masked nodes whose argmax class (ties to the lowest index)
// matches the label.
double accuracy(const DenseMatrix& log_probs, const std::vector<int>& labels,
                const std::vector<std::uint32_t>& mask);

// Analytic gradients of nll_loss w.r.t. every weight matrix, written into
// the gradient slots of params. The trace must come from a train-mode
// forward; dropout masks and ReLU gates are replayed from it.
void backward(const ForwardTrace& trace, const std::vector<int>& labels,
              const std::vector<std::uint32_t>& mask, ModelParameters& params,
              const ModelConfig& config, const PropagationOperator& op);

struct OptimizerState {
    std::size_t step = 0;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 5e-4;  // added to gradients as lambda * w

    DenseMatrix m_input, v_input;
    std::vector<DenseMatrix> m_layers, v_layers;
    DenseMatrix m_output, v_output;

    static OptimizerState create(const ModelParameters& params, double learning_rate,
                                 double weight_decay);
};

// Bias-corrected Adam update from the gradient slots of params.
void adam_step(OptimizerState& state, ModelParameters& params);

struct TrainSchedule {
    std::size_t max_epochs = 1500;
    std::size_t patience = 100;  // epochs without a validation improvement
};

struct TrainOptions {
    double learning_rate = 0.001;
    double weight_decay = 5e-4;
    std::uint64_t seed = 42;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double validation_accuracy = 0.0;
    double test_accuracy = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;                 // first occurrence of the max
    double best_validation_accuracy = 0.0;
    double test_accuracy = 0.0;                 // at the best-validation checkpoint
    double wall_time_seconds = 0.0;
    double weight_decay = 0.0;                  // provenance
};

struct TrainResult {
    TrainReport report;
    ModelParameters best_parameters;
};

// Core loop over a prebuilt operator. Features must already be preprocessed
// (row normalization is the caller's concern).
TrainResult train_with_operator(const DenseMatrix& features, const std::vector<int>& labels,
                                const PropagationOperator& op, const DatasetSplit& split,
                                const ModelConfig& config, const TrainSchedule& schedule,
                                const TrainOptions& options);

// Convenience wrapper: builds the Laplacian bundle, the exact wavelet basis
// (when gamma > 0) and the operator from the graph, then trains.
TrainResult train(const Graph& g, const DatasetSplit& split, ModelConfig config,
                  const TrainSchedule& schedule, const TrainOptions& options);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    std::size_t samples = 0;
};

// Central finite differences against backward() over sampled weight
// coordinates on the given instance. `corrupt` perturbs one analytic
// gradient entry to prove the check can fail.
GradCheckReport gradient_check(const DenseMatrix& features, const std::vector<int>& labels,
                               const std::vector<std::uint32_t>& mask,
                               const PropagationOperator& op, const ModelConfig& config,
                               std::uint64_t seed, std::size_t samples, double step_h,
                               bool corrupt = false);

}  // namespace dgwc
