#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgwc/dense.hpp"
#include "dgwc/propagation.hpp"

namespace dgwc {

enum class BetaOverride { none, zero, one };

enum class ReductionMode { gcn, gwnn, appnp_like, gcnii_like, deepgwc };
const char* reduction_mode_name(ReductionMode mode);

struct ModelConfig {
    std::size_t layers = 64;
    std::size_t hidden_dim = 64;
    double alpha = 0.3;        // initial-residual ratio
    double eta = 0.8;          // identity-mapping schedule strength
    double gamma = 0.4;        // wavelet share of the propagation operator
    double filter_f = 0.4;     // static filter constant
    double scale_s = 1.0;      // wavelet scale
    double threshold_t = 1e-4; // wavelet sparsification threshold
    double dropout_rate = 0.6;
    std::size_t classes = 0;
    std::size_t input_dim = 0;
    // Forces beta_l to exactly 0 or 1; the log schedule cannot reach either,
    // and the reduced forms (plain GCN / GWNN layers) need them exactly.
    BetaOverride beta_override = BetaOverride::none;

    void validate() const;
    double beta_for_layer(std::size_t l) const;
};

// ln(1 + eta/l); the identity-mapping weight of layer l >= 1.
double beta_schedule(double eta, std::size_t l);

// Classifies which known architecture this configuration collapses to.
ReductionMode reduction_mode(const ModelConfig& config);

struct ModelParameters {
    DenseMatrix input_weights;               // p x d
    std::vector<DenseMatrix> layer_weights;  // L of d x d
    DenseMatrix output_weights;              // d x C

    DenseMatrix input_grad;
    std::vector<DenseMatrix> layer_grads;
    DenseMatrix output_grad;

    static ModelParameters glorot(const ModelConfig& config, std::uint64_t seed);
    void zero_grads();
    bool shapes_match(const ModelConfig& config) const;
};

enum class RunMode { train, eval };

struct ForwardTrace {
    DenseMatrix h0;          // post input projection, ReLU and (train) dropout
    DenseMatrix input_relu;  // ReLU(X W_in) before dropout, for the backward gate
    // recorded only in train mode
    std::vector<DenseMatrix> layer_inputs;   // S_l = (1-a) P' h + a h0, l = 1..L
    std::vector<DenseMatrix> layer_outputs;  // H^l after ReLU, l = 1..L
    DenseMatrix final_hidden;                // H^L (also in eval mode)
    DenseMatrix logits;                      // Y = H^L W_out
    DenseMatrix log_probs;                   // Z, rows of exp sum to 1

    bool training = false;
    double dropout_rate = 0.0;
    std::uint64_t dropout_root = 0;          // per-tensor mask streams derive from this
    const DenseMatrix* features = nullptr;   // borrowed from the forward call
};

// One graph-convolution layer: ReLU(((1-alpha) P' h + alpha h0)(beta w + (1-beta) I)).
DenseMatrix layer_forward(const DenseMatrix& h, const DenseMatrix& h0,
                          const PropagationOperator& op, const DenseMatrix& w, double alpha,
                          double beta);

// Full pass: input projection, L layers with dropout before each propagation,
// output projection, log-softmax.
ForwardTrace forward(const DenseMatrix& features, const ModelParameters& params,
                     const ModelConfig& config, const PropagationOperator& op, RunMode mode,
                     std::uint64_t rng_seed);

// Elementwise inverted-dropout with a counter-based mask stream; applying it
// twice with the same stream replays the identical mask.
void dropout_apply(DenseMatrix& x, double rate, std::uint64_t stream);

void save_checkpoint(const ModelParameters& params, const std::string& path);
ModelParameters load_checkpoint(const std::string& path);

}  // namespace dgwc
