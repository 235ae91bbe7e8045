#include "dgwc/train.hpp"

#include <chrono>
#include <cmath>

#include "dgwc/kernels.hpp"
#include "dgwc/rng.hpp"

namespace dgwc {

double nll_loss(const DenseMatrix& log_probs, const std::vector<int>& labels,
                const std::vector<std::uint32_t>& mask) {
    require(!mask.empty(), "nll_loss: empty mask");
    require(labels.size() == log_probs.rows, "nll_loss: ", labels.size(), " labels for ",
            log_probs.rows, " rows");
    double sum = 0.0;
    for (std::uint32_t i : mask) {
        require(i < log_probs.rows, "nll_loss: mask index ", i, " out of range");
        const int label = labels[i];
        require(label >= 0 && static_cast<std::size_t>(label) < log_probs.cols,
                "nll_loss: label ", label, " outside [0,", log_probs.cols, ") at node ", i);
        sum -= log_probs(i, static_cast<std::size_t>(label));
    }
    return sum / static_cast<double>(mask.size());
}

double accuracy(const DenseMatrix& log_probs, const std::vector<int>& labels,
                const std::vector<std::uint32_t>& mask) {
    require(!mask.empty(), "accuracy: empty mask");
    std::size_t correct = 0;
    for (std::uint32_t i : mask) {
        const double* row = log_probs.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < log_probs.cols; ++j)
            if (row[j] > row[best]) best = j;  // ties keep the lowest index
        if (static_cast<int>(best) == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(mask.size());
}

namespace {

// dh ⊙ relu-gate(out), where out is the post-ReLU activation
void relu_gate(DenseMatrix& grad, const DenseMatrix& post_relu) {
#pragma omp parallel for schedule(static) if (grad.values.size() > 4096)
    for (std::size_t i = 0; i < grad.values.size(); ++i)
        if (post_relu.values[i] <= 0.0) grad.values[i] = 0.0;
}

}  // namespace

void backward(const ForwardTrace& trace, const std::vector<int>& labels,
              const std::vector<std::uint32_t>& mask, ModelParameters& params,
              const ModelConfig& config, const PropagationOperator& op) {
    require(trace.training, "backward: trace must come from a train-mode forward");
    require(trace.features != nullptr, "backward: trace lost its feature reference");
    require(trace.layer_inputs.size() == config.layers,
            "backward: trace has ", trace.layer_inputs.size(), " layers, config expects ",
            config.layers);
    require(params.shapes_match(config), "backward: parameter shapes do not match config");
    require(!mask.empty(), "backward: empty mask");

    const std::size_t n = trace.log_probs.rows;
    const std::size_t classes = trace.log_probs.cols;
    const double inv_mask = 1.0 / static_cast<double>(mask.size());

    // d(loss)/d(logits): (softmax - onehot) / |mask| on masked rows
    DenseMatrix g_logits(n, classes);
    for (std::uint32_t i : mask) {
        const double* zr = trace.log_probs.row(i);
        double* gr = g_logits.row(i);
        for (std::size_t j = 0; j < classes; ++j) gr[j] = std::exp(zr[j]) * inv_mask;
        gr[static_cast<std::size_t>(labels[i])] -= inv_mask;
    }

    const DenseMatrix& h_last = trace.final_hidden;
    params.output_grad = kernels::matmul_transa(h_last, g_logits);
    DenseMatrix dh = kernels::matmul_transb(g_logits, params.output_weights);

    DenseMatrix dh0_acc(dh.rows, dh.cols);
    for (std::size_t l = config.layers; l >= 1; --l) {
        const DenseMatrix& s = trace.layer_inputs[l - 1];
        relu_gate(dh, trace.layer_outputs[l - 1]);
        const double beta = config.beta_for_layer(l);

        DenseMatrix ds;
        if (beta == 0.0) {
            std::fill(params.layer_grads[l - 1].values.begin(),
                      params.layer_grads[l - 1].values.end(), 0.0);
            ds = std::move(dh);
        } else {
            DenseMatrix dw = kernels::matmul_transa(s, dh);
            for (double& v : dw.values) v *= beta;
            params.layer_grads[l - 1] = std::move(dw);
            ds = kernels::matmul_transb(dh, params.layer_weights[l - 1]);
            if (beta != 1.0) {
#pragma omp parallel for schedule(static) if (ds.values.size() > 4096)
                for (std::size_t i = 0; i < ds.values.size(); ++i)
                    ds.values[i] = beta * ds.values[i] + (1.0 - beta) * dh.values[i];
            }
        }

#pragma omp parallel for schedule(static) if (ds.values.size() > 4096)
        for (std::size_t i = 0; i < ds.values.size(); ++i)
            dh0_acc.values[i] += config.alpha * ds.values[i];

        // the operator is symmetric, so apply() is its own transpose
        DenseMatrix dprop = op.apply(ds);
        const double keep_scale = 1.0 - config.alpha;
#pragma omp parallel for schedule(static) if (dprop.values.size() > 4096)
        for (std::size_t i = 0; i < dprop.values.size(); ++i)
            dprop.values[i] *= keep_scale;
        dropout_apply(dprop, trace.dropout_rate, hash_combine(trace.dropout_root, l));
        dh = std::move(dprop);
    }

    // dh now carries the path through the first layer's input; add the
    // residual contributions collected from every layer
#pragma omp parallel for schedule(static) if (dh.values.size() > 4096)
    for (std::size_t i = 0; i < dh.values.size(); ++i) dh.values[i] += dh0_acc.values[i];
    dropout_apply(dh, trace.dropout_rate, hash_combine(trace.dropout_root, 0));
    relu_gate(dh, trace.input_relu);
    params.input_grad = kernels::matmul_transa(*trace.features, dh);
}

OptimizerState OptimizerState::create(const ModelParameters& params, double learning_rate,
                                      double weight_decay) {
    OptimizerState s;
    s.learning_rate = learning_rate;
    s.weight_decay = weight_decay;
    s.m_input = DenseMatrix(params.input_weights.rows, params.input_weights.cols);
    s.v_input = s.m_input;
    s.m_output = DenseMatrix(params.output_weights.rows, params.output_weights.cols);
    s.v_output = s.m_output;
    s.m_layers.assign(params.layer_weights.size(),
                      DenseMatrix(params.layer_weights.empty() ? 0 : params.layer_weights[0].rows,
                                  params.layer_weights.empty() ? 0 : params.layer_weights[0].cols));
    s.v_layers = s.m_layers;
    return s;
}

namespace {

void adam_update_tensor(OptimizerState& state, DenseMatrix& w, const DenseMatrix& g,
                        DenseMatrix& m, DenseMatrix& v, const std::string& name, double bc1,
                        double bc2) {
    for (double gv : g.values)
        require(std::isfinite(gv), "adam_step: non-finite gradient in ", name);
    const double lr = state.learning_rate;
    const double b1 = state.beta1, b2 = state.beta2;
    const double wd = state.weight_decay, eps = state.epsilon;
#pragma omp parallel for schedule(static) if (w.values.size() > 4096)
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        const double grad = g.values[i] + wd * w.values[i];
        m.values[i] = b1 * m.values[i] + (1.0 - b1) * grad;
        v.values[i] = b2 * v.values[i] + (1.0 - b2) * grad * grad;
        const double mhat = m.values[i] / bc1;
        const double vhat = v.values[i] / bc2;
        w.values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

void adam_step(OptimizerState& state, ModelParameters& params) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    adam_update_tensor(state, params.input_weights, params.input_grad, state.m_input,
                       state.v_input, "input_weights", bc1, bc2);
    for (std::size_t l = 0; l < params.layer_weights.size(); ++l)
        adam_update_tensor(state, params.layer_weights[l], params.layer_grads[l],
                           state.m_layers[l], state.v_layers[l],
                           "layer_weights[" + std::to_string(l) + "]", bc1, bc2);
    adam_update_tensor(state, params.output_weights, params.output_grad, state.m_output,
                       state.v_output, "output_weights", bc1, bc2);
}

TrainResult train_with_operator(const DenseMatrix& features, const std::vector<int>& labels,
                                const PropagationOperator& op, const DatasetSplit& split,
                                const ModelConfig& config, const TrainSchedule& schedule,
                                const TrainOptions& options) {
    config.validate();
    require(!split.train.empty(), "train: empty training set");
    require(!split.validation.empty(), "train: empty validation set");
    require(!split.test.empty(), "train: empty test set");

    const auto t_start = std::chrono::steady_clock::now();

    ModelParameters params =
        ModelParameters::glorot(config, hash_combine(options.seed, 0x494e4954u));  // "INIT"
    OptimizerState opt =
        OptimizerState::create(params, options.learning_rate, options.weight_decay);
    const std::uint64_t dropout_seed_root = hash_combine(options.seed, 0x44524f50u);  // "DROP"

    TrainResult result;
    result.report.weight_decay = options.weight_decay;
    ModelParameters best = params;
    double best_val = -1.0;
    std::size_t best_epoch = 0;
    double best_test = 0.0;

    for (std::size_t epoch = 1; epoch <= schedule.max_epochs; ++epoch) {
        ForwardTrace trace = forward(features, params, config, op, RunMode::train,
                                     hash_combine(dropout_seed_root, epoch));
        const double loss = nll_loss(trace.log_probs, labels, split.train);
        backward(trace, labels, split.train, params, config, op);
        adam_step(opt, params);

        ForwardTrace eval = forward(features, params, config, op, RunMode::eval, 0);
        const double val_acc = accuracy(eval.log_probs, labels, split.validation);
        const double test_acc = accuracy(eval.log_probs, labels, split.test);
        result.report.epochs.push_back({epoch, loss, val_acc, test_acc});

        if (val_acc > best_val) {
            best_val = val_acc;
            best_epoch = epoch;
            best_test = test_acc;
            best = params;
        }
        if (epoch - best_epoch >= schedule.patience) break;
    }

    result.report.best_epoch = best_epoch;
    result.report.best_validation_accuracy = best_val;
    result.report.test_accuracy = best_test;
    result.report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.best_parameters = std::move(best);
    return result;
}

TrainResult train(const Graph& g, const DatasetSplit& split, ModelConfig config,
                  const TrainSchedule& schedule, const TrainOptions& options) {
    config.classes = g.num_classes;
    config.input_dim = g.feature_dim();
    const LaplacianBundle bundle = build_laplacian(g);
    std::shared_ptr<const WaveletBasis> basis;
    if (config.gamma > 0.0)
        basis = std::make_shared<WaveletBasis>(
            wavelet_exact(bundle, config.scale_s, config.threshold_t));
    const PropagationOperator op =
        assemble(bundle, basis, config.gamma, FilterConfig{config.filter_f});
    return train_with_operator(g.features, g.labels, op, split, config, schedule, options);
}

GradCheckReport gradient_check(const DenseMatrix& features, const std::vector<int>& labels,
                               const std::vector<std::uint32_t>& mask,
                               const PropagationOperator& op, const ModelConfig& config,
                               std::uint64_t seed, std::size_t samples, double step_h,
                               bool corrupt) {
    ModelParameters params = ModelParameters::glorot(config, hash_combine(seed, 1));
    const std::uint64_t forward_seed = hash_combine(seed, 2);

    ForwardTrace trace = forward(features, params, config, op, RunMode::train, forward_seed);
    backward(trace, labels, mask, params, config, op);
    if (corrupt) params.output_grad.values[0] += 1e-3;

    struct Slot {
        const char* name;
        DenseMatrix* w;
        DenseMatrix* g;
    };
    std::vector<Slot> slots;
    slots.push_back({"input_weights", &params.input_weights, &params.input_grad});
    for (std::size_t l = 0; l < params.layer_weights.size(); ++l)
        slots.push_back({"layer_weights", &params.layer_weights[l], &params.layer_grads[l]});
    slots.push_back({"output_weights", &params.output_weights, &params.output_grad});

    Rng rng(hash_combine(seed, 3));
    GradCheckReport report;
    report.samples = samples;
    // near-zero sampled gradients are compared against the finite-difference
    // noise floor instead of their own magnitude
    constexpr double kDenomFloor = 1e-3;
    for (std::size_t s = 0; s < samples; ++s) {
        // the corrupted entry must end up among the probes
        const std::size_t slot_idx = corrupt && s == 0
                                         ? slots.size() - 1
                                         : static_cast<std::size_t>(rng.next_below(slots.size()));
        Slot& slot = slots[slot_idx];
        const std::size_t coord =
            corrupt && s == 0 ? 0
                              : static_cast<std::size_t>(rng.next_below(slot.w->values.size()));
        const double analytic = slot.g->values[coord];

        const double saved = slot.w->values[coord];
        slot.w->values[coord] = saved + step_h;
        const double loss_plus = nll_loss(
            forward(features, params, config, op, RunMode::train, forward_seed).log_probs,
            labels, mask);
        slot.w->values[coord] = saved - step_h;
        const double loss_minus = nll_loss(
            forward(features, params, config, op, RunMode::train, forward_seed).log_probs,
            labels, mask);
        slot.w->values[coord] = saved;

        const double fd = (loss_plus - loss_minus) / (2.0 * step_h);
        const double denom = std::max({std::fabs(analytic), std::fabs(fd), kDenomFloor});
        const double rel = std::fabs(analytic - fd) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_tensor = slot.name;
        }
    }
    return report;
}

}  // namespace dgwc
