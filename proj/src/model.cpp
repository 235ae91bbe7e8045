#include "dgwc/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dgwc/kernels.hpp"
#include "dgwc/rng.hpp"

namespace dgwc {

const char* reduction_mode_name(ReductionMode mode) {
    switch (mode) {
        case ReductionMode::gcn: return "gcn";
        case ReductionMode::gwnn: return "gwnn";
        case ReductionMode::appnp_like: return "appnp-like";
        case ReductionMode::gcnii_like: return "gcnii-like";
        case ReductionMode::deepgwc: return "deepgwc";
    }
    return "unknown";
}

void ModelConfig::validate() const {
    require(layers >= 1, "ModelConfig: layers must be >= 1, got ", layers);
    require(hidden_dim >= 1, "ModelConfig: hidden_dim must be >= 1");
    require(alpha >= 0.0 && alpha <= 1.0, "ModelConfig: alpha must be in [0,1], got ", alpha);
    require(eta >= 0.0, "ModelConfig: eta must be >= 0, got ", eta);
    require(gamma >= 0.0 && gamma <= 1.0, "ModelConfig: gamma must be in [0,1], got ", gamma);
    require(std::isfinite(filter_f) && filter_f > 0.0,
            "ModelConfig: filter_f must be positive, got ", filter_f);
    require(dropout_rate >= 0.0 && dropout_rate < 1.0,
            "ModelConfig: dropout_rate must be in [0,1), got ", dropout_rate);
    require(classes >= 1, "ModelConfig: classes not set");
    require(input_dim >= 1, "ModelConfig: input_dim not set");
}

double beta_schedule(double eta, std::size_t l) {
    require(l >= 1, "beta_schedule: layer index must be >= 1");
    require(eta >= 0.0, "beta_schedule: eta must be >= 0, got ", eta);
    return std::log1p(eta / static_cast<double>(l));
}

double ModelConfig::beta_for_layer(std::size_t l) const {
    switch (beta_override) {
        case BetaOverride::zero: return 0.0;
        case BetaOverride::one: return 1.0;
        case BetaOverride::none: break;
    }
    return beta_schedule(eta, l);
}

ReductionMode reduction_mode(const ModelConfig& config) {
    const bool beta_zero =
        config.beta_override == BetaOverride::zero ||
        (config.beta_override == BetaOverride::none && config.eta == 0.0);
    const bool beta_one = config.beta_override == BetaOverride::one;
    if (config.alpha == 0.0 && beta_one && config.gamma == 0.0) return ReductionMode::gcn;
    if (config.alpha == 0.0 && beta_one && config.gamma == 1.0) return ReductionMode::gwnn;
    if (config.alpha != 0.0 && beta_zero && config.gamma == 0.0)
        return ReductionMode::appnp_like;
    if (config.alpha != 0.0 && !beta_zero && config.gamma == 0.0)
        return ReductionMode::gcnii_like;
    return ReductionMode::deepgwc;
}

ModelParameters ModelParameters::glorot(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    auto init = [&rng](std::size_t rows, std::size_t cols) {
        DenseMatrix w(rows, cols);
        const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (double& v : w.values) v = rng.uniform(-limit, limit);
        return w;
    };
    ModelParameters p;
    p.input_weights = init(config.input_dim, config.hidden_dim);
    p.layer_weights.reserve(config.layers);
    for (std::size_t l = 0; l < config.layers; ++l)
        p.layer_weights.push_back(init(config.hidden_dim, config.hidden_dim));
    p.output_weights = init(config.hidden_dim, config.classes);
    p.input_grad = DenseMatrix(config.input_dim, config.hidden_dim);
    p.layer_grads.assign(config.layers, DenseMatrix(config.hidden_dim, config.hidden_dim));
    p.output_grad = DenseMatrix(config.hidden_dim, config.classes);
    return p;
}

void ModelParameters::zero_grads() {
    std::fill(input_grad.values.begin(), input_grad.values.end(), 0.0);
    std::fill(output_grad.values.begin(), output_grad.values.end(), 0.0);
    for (auto& g : layer_grads) std::fill(g.values.begin(), g.values.end(), 0.0);
}

bool ModelParameters::shapes_match(const ModelConfig& config) const {
    if (input_weights.rows != config.input_dim || input_weights.cols != config.hidden_dim)
        return false;
    if (output_weights.rows != config.hidden_dim || output_weights.cols != config.classes)
        return false;
    if (layer_weights.size() != config.layers) return false;
    for (const auto& w : layer_weights)
        if (w.rows != config.hidden_dim || w.cols != config.hidden_dim) return false;
    return true;
}

void dropout_apply(DenseMatrix& x, double rate, std::uint64_t stream) {
    if (rate <= 0.0) return;
    const double scale = 1.0 / (1.0 - rate);
#pragma omp parallel for schedule(static) if (x.values.size() > 4096)
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        if (u64_to_unit(splitmix64(stream + i)) < rate)
            x.values[i] = 0.0;
        else
            x.values[i] *= scale;
    }
}

namespace {

void relu_inplace(DenseMatrix& x) {
#pragma omp parallel for schedule(static) if (x.values.size() > 4096)
    for (std::size_t i = 0; i < x.values.size(); ++i)
        if (x.values[i] < 0.0) x.values[i] = 0.0;
}

// out = (1-alpha) * op(h) + alpha * h0
DenseMatrix propagate_residual(const DenseMatrix& h, const DenseMatrix& h0,
                               const PropagationOperator& op, double alpha) {
    DenseMatrix s = op.apply(h);
#pragma omp parallel for schedule(static) if (s.values.size() > 4096)
    for (std::size_t i = 0; i < s.values.size(); ++i)
        s.values[i] = (1.0 - alpha) * s.values[i] + alpha * h0.values[i];
    return s;
}

// s * (beta w + (1-beta) I), computed as beta*(s w) + (1-beta)*s
DenseMatrix identity_mapped_product(const DenseMatrix& s, const DenseMatrix& w, double beta) {
    if (beta == 0.0) return s;
    DenseMatrix z = kernels::matmul(s, w);
    if (beta == 1.0) return z;
#pragma omp parallel for schedule(static) if (z.values.size() > 4096)
    for (std::size_t i = 0; i < z.values.size(); ++i)
        z.values[i] = beta * z.values[i] + (1.0 - beta) * s.values[i];
    return z;
}

void log_softmax_rows(const DenseMatrix& y, DenseMatrix& z) {
    z = DenseMatrix(y.rows, y.cols);
#pragma omp parallel for schedule(static) if (y.rows > 64)
    for (std::size_t i = 0; i < y.rows; ++i) {
        const double* yr = y.row(i);
        double* zr = z.row(i);
        double m = yr[0];
        for (std::size_t j = 1; j < y.cols; ++j) m = std::max(m, yr[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < y.cols; ++j) sum += std::exp(yr[j] - m);
        const double lse = m + std::log(sum);
        for (std::size_t j = 0; j < y.cols; ++j) zr[j] = yr[j] - lse;
    }
}

}  // namespace

DenseMatrix layer_forward(const DenseMatrix& h, const DenseMatrix& h0,
                          const PropagationOperator& op, const DenseMatrix& w, double alpha,
                          double beta) {
    require(alpha >= 0.0 && alpha <= 1.0, "layer_forward: alpha must be in [0,1], got ",
            alpha);
    require(beta >= 0.0 && beta <= 1.0, "layer_forward: beta must be in [0,1], got ", beta);
    require(h.same_shape(h0), "layer_forward: h is ", h.rows, "x", h.cols, ", h0 is ",
            h0.rows, "x", h0.cols);
    require(op.node_count() == h.rows, "layer_forward: operator is ", op.node_count(), "x",
            op.node_count(), ", h has ", h.rows, " rows");
    require(w.rows == h.cols && w.cols == h.cols, "layer_forward: w is ", w.rows, "x",
            w.cols, ", expected ", h.cols, "x", h.cols);
    DenseMatrix z =
        identity_mapped_product(propagate_residual(h, h0, op, alpha), w, beta);
    relu_inplace(z);
    return z;
}

ForwardTrace forward(const DenseMatrix& features, const ModelParameters& params,
                     const ModelConfig& config, const PropagationOperator& op, RunMode mode,
                     std::uint64_t rng_seed) {
    config.validate();
    require(params.shapes_match(config), "forward: parameter shapes do not match config");
    require(features.cols == config.input_dim, "forward: features are ", features.rows, "x",
            features.cols, ", config input_dim is ", config.input_dim);
    require(op.node_count() == features.rows, "forward: operator is ", op.node_count(), "x",
            op.node_count(), ", features have ", features.rows, " rows");

    ForwardTrace trace;
    trace.training = mode == RunMode::train;
    trace.dropout_rate = config.dropout_rate;
    trace.dropout_root = splitmix64(rng_seed);
    trace.features = &features;

    DenseMatrix a0 = kernels::matmul(features, params.input_weights);
    relu_inplace(a0);
    trace.input_relu = a0;
    if (trace.training) dropout_apply(a0, config.dropout_rate, hash_combine(trace.dropout_root, 0));
    trace.h0 = std::move(a0);
    require(trace.h0.all_finite(), "forward: non-finite activations after input projection");

    DenseMatrix h = trace.h0;
    if (trace.training) {
        trace.layer_inputs.reserve(config.layers);
        trace.layer_outputs.reserve(config.layers);
    }
    for (std::size_t l = 1; l <= config.layers; ++l) {
        DenseMatrix hd = h;
        if (trace.training)
            dropout_apply(hd, config.dropout_rate, hash_combine(trace.dropout_root, l));
        DenseMatrix s = propagate_residual(hd, trace.h0, op, config.alpha);
        DenseMatrix z =
            identity_mapped_product(s, params.layer_weights[l - 1], config.beta_for_layer(l));
        relu_inplace(z);
        require(z.all_finite(), "forward: non-finite activations at layer ", l);
        if (trace.training) {
            trace.layer_inputs.push_back(std::move(s));
            trace.layer_outputs.push_back(z);
        }
        h = std::move(z);
    }
    trace.final_hidden = h;
    trace.logits = kernels::matmul(h, params.output_weights);
    require(trace.logits.all_finite(), "forward: non-finite logits");
    log_softmax_rows(trace.logits, trace.log_probs);
    return trace;
}

namespace {

constexpr char kCkptMagic[8] = {'D', 'G', 'W', 'C', 'K', 'P', 'T', '1'};
static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

void write_matrix(std::ofstream& out, const DenseMatrix& m) {
    const std::uint64_t r = m.rows, c = m.cols;
    out.write(reinterpret_cast<const char*>(&r), sizeof(r));
    out.write(reinterpret_cast<const char*>(&c), sizeof(c));
    out.write(reinterpret_cast<const char*>(m.values.data()),
              static_cast<std::streamsize>(m.values.size() * sizeof(double)));
}

DenseMatrix read_matrix(std::ifstream& in, const std::string& path) {
    std::uint64_t r = 0, c = 0;
    require(static_cast<bool>(in.read(reinterpret_cast<char*>(&r), sizeof(r))) &&
                static_cast<bool>(in.read(reinterpret_cast<char*>(&c), sizeof(c))),
            "load_checkpoint: truncated header in ", path);
    DenseMatrix m(r, c);
    require(static_cast<bool>(in.read(reinterpret_cast<char*>(m.values.data()),
                                      static_cast<std::streamsize>(m.values.size() *
                                                                   sizeof(double)))),
            "load_checkpoint: truncated matrix data in ", path);
    return m;
}

}  // namespace

void save_checkpoint(const ModelParameters& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "save_checkpoint: cannot open ", path);
    out.write(kCkptMagic, sizeof(kCkptMagic));
    const std::uint64_t version = 1, layers = params.layer_weights.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&layers), sizeof(layers));
    write_matrix(out, params.input_weights);
    for (const auto& w : params.layer_weights) write_matrix(out, w);
    write_matrix(out, params.output_weights);
    require(out.good(), "save_checkpoint: write failed for ", path);
}

ModelParameters load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "load_checkpoint: cannot open ", path);
    char magic[8];
    require(static_cast<bool>(in.read(magic, sizeof(magic))) &&
                std::memcmp(magic, kCkptMagic, sizeof(kCkptMagic)) == 0,
            "load_checkpoint: bad magic in ", path);
    std::uint64_t version = 0, layers = 0;
    require(static_cast<bool>(in.read(reinterpret_cast<char*>(&version), sizeof(version))) &&
                version == 1,
            "load_checkpoint: unsupported version in ", path);
    require(static_cast<bool>(in.read(reinterpret_cast<char*>(&layers), sizeof(layers))),
            "load_checkpoint: truncated header in ", path);
    ModelParameters p;
    p.input_weights = read_matrix(in, path);
    p.layer_weights.reserve(layers);
    for (std::uint64_t l = 0; l < layers; ++l) p.layer_weights.push_back(read_matrix(in, path));
    p.output_weights = read_matrix(in, path);
    p.input_grad = DenseMatrix(p.input_weights.rows, p.input_weights.cols);
    p.layer_grads.assign(p.layer_weights.size(),
                         DenseMatrix(p.input_weights.cols, p.input_weights.cols));
    p.output_grad = DenseMatrix(p.output_weights.rows, p.output_weights.cols);
    return p;
}

}  // namespace dgwc
