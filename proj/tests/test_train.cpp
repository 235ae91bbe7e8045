#include <doctest.h>

#include <cmath>
#include <memory>

#include "dgwc/data.hpp"
#include "dgwc/train.hpp"
#include "helpers.hpp"

using namespace dgwc;
using namespace testutil;

namespace {

// split for small synthetic graphs: a few train nodes per class, the rest
// halved into validation and test
DatasetSplit tiny_split(const Graph& g, std::size_t per_class) {
    DatasetSplit split;
    std::vector<std::size_t> picked(g.num_classes, 0);
    std::vector<char> taken(g.n, 0);
    for (std::uint32_t i = 0; i < g.n; ++i) {
        auto& c = picked[static_cast<std::size_t>(g.labels[i])];
        if (c < per_class) {
            ++c;
            taken[i] = 1;
            split.train.push_back(i);
        }
    }
    bool to_val = true;
    for (std::uint32_t i = 0; i < g.n; ++i) {
        if (taken[i]) continue;
        (to_val ? split.validation : split.test).push_back(i);
        to_val = !to_val;
    }
    split.label_rate = static_cast<double>(split.train.size()) / static_cast<double>(g.n);
    return split;
}

ModelConfig clique_config(const Graph& g, const char* mode) {
    ModelConfig config;
    config.layers = 4;
    config.hidden_dim = 16;
    config.alpha = 0.2;
    config.eta = 0.5;
    config.gamma = 0.4;
    config.filter_f = 1.0;
    config.scale_s = 1.0;
    config.threshold_t = 1e-4;
    config.dropout_rate = 0.5;
    config.classes = g.num_classes;
    config.input_dim = g.feature_dim();
    if (std::string(mode) == "gcn") {
        config.alpha = 0.0;
        config.beta_override = BetaOverride::one;
        config.gamma = 0.0;
    }
    return config;
}

}  // namespace

TEST_CASE("nll_loss basics") {
    DenseMatrix z(2, 2);
    // perfectly confident and correct: log-prob 0 at the label
    z(0, 0) = 0.0;
    z(0, 1) = -50.0;
    z(1, 0) = -50.0;
    z(1, 1) = 0.0;
    const std::vector<int> labels = {0, 1};
    CHECK(nll_loss(z, labels, {0, 1}) == doctest::Approx(0.0).epsilon(1e-12));

    DenseMatrix uniform(3, 2, -std::log(2.0));
    CHECK(nll_loss(uniform, {0, 1, 0}, {0, 1, 2}) == doctest::Approx(std::log(2.0)));

    DenseMatrix uniform5(2, 5, -std::log(5.0));
    CHECK(nll_loss(uniform5, {4, 2}, {0, 1}) == doctest::Approx(std::log(5.0)));

    CHECK_THROWS_WITH_AS(nll_loss(z, labels, {}), doctest::Contains("empty mask"), Error);
    CHECK_THROWS_AS(nll_loss(z, {0, 7}, {1}), Error);
}

TEST_CASE("accuracy uses lowest-index tie breaking") {
    DenseMatrix z(2, 3);
    // row 0: tie between classes 0 and 2 -> argmax 0
    z(0, 0) = -1.0;
    z(0, 1) = -2.0;
    z(0, 2) = -1.0;
    // row 1: clear class 1
    z(1, 0) = -3.0;
    z(1, 1) = -0.5;
    z(1, 2) = -2.0;
    CHECK(accuracy(z, {0, 1}, {0, 1}) == doctest::Approx(1.0));
    CHECK(accuracy(z, {2, 1}, {0, 1}) == doctest::Approx(0.5));
}

TEST_CASE("output-weight gradient matches the closed softmax form") {
    // two isolated nodes: renormalized propagation is the identity
    Graph g;
    g.n = 2;
    g.num_classes = 2;
    g.features = DenseMatrix::identity(2);
    g.labels = {0, 1};
    const LaplacianBundle bundle = build_laplacian(g);
    const PropagationOperator op = assemble(bundle, nullptr, 0.0, FilterConfig{1.0});

    ModelConfig config;
    config.layers = 1;
    config.hidden_dim = 2;
    config.alpha = 0.0;
    config.eta = 0.4;
    config.gamma = 0.0;
    config.dropout_rate = 0.0;
    config.classes = 2;
    config.input_dim = 2;
    ModelParameters params = ModelParameters::glorot(config, 3);

    const std::vector<std::uint32_t> mask = {0, 1};
    ForwardTrace trace = forward(g.features, params, config, op, RunMode::train, 5);
    backward(trace, g.labels, mask, params, config, op);

    const DenseMatrix& h = trace.final_hidden;
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c) {
            double expect = 0.0;
            for (std::size_t i = 0; i < 2; ++i) {
                const double softmax = std::exp(trace.log_probs(i, c));
                const double indicator = g.labels[i] == static_cast<int>(c) ? 1.0 : 0.0;
                expect += (softmax - indicator) * h(i, r) / 2.0;
            }
            CHECK(params.output_grad(r, c) == doctest::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("saturated correct predictions give a vanishing gradient") {
    Graph g;
    g.n = 2;
    g.num_classes = 2;
    g.features = DenseMatrix::identity(2);
    g.labels = {0, 1};
    const LaplacianBundle bundle = build_laplacian(g);
    const PropagationOperator op = assemble(bundle, nullptr, 0.0, FilterConfig{1.0});

    ModelConfig config;
    config.layers = 1;
    config.hidden_dim = 2;
    config.alpha = 0.0;
    config.eta = 0.0;  // beta = 0: the layer passes h through
    config.gamma = 0.0;
    config.dropout_rate = 0.0;
    config.classes = 2;
    config.input_dim = 2;
    ModelParameters params = ModelParameters::glorot(config, 7);
    params.input_weights = DenseMatrix::identity(2);
    params.output_weights = DenseMatrix(2, 2);
    params.output_weights(0, 0) = 40.0;
    params.output_weights(0, 1) = -40.0;
    params.output_weights(1, 0) = -40.0;
    params.output_weights(1, 1) = 40.0;

    ForwardTrace trace = forward(g.features, params, config, op, RunMode::train, 5);
    backward(trace, g.labels, {0, 1}, params, config, op);
    double norm = 0.0;
    for (double v : params.input_grad.values) norm += v * v;
    for (double v : params.output_grad.values) norm += v * v;
    for (const auto& layer : params.layer_grads)
        for (double v : layer.values) norm += v * v;
    CHECK(std::sqrt(norm) <= 1e-8);
}

TEST_CASE("analytic gradients match finite differences in every mode") {
    Rng rng(13);
    const Graph g = random_graph(12, 0.3, 91, 6, 3);
    const LaplacianBundle bundle = build_laplacian(g);
    const auto basis = std::make_shared<WaveletBasis>(wavelet_exact(bundle, 1.0, 1e-4));
    std::vector<std::uint32_t> mask(12);
    for (std::uint32_t i = 0; i < 12; ++i) mask[i] = i;

    struct ModeSpec {
        const char* name;
        double alpha;
        double eta;
        double gamma;
        BetaOverride override_;
    };
    const ModeSpec modes[] = {
        {"gcn", 0.0, 0.8, 0.0, BetaOverride::one},
        {"gwnn", 0.0, 0.8, 1.0, BetaOverride::one},
        {"gcnii-like", 0.2, 0.6, 0.0, BetaOverride::none},
        {"deepgwc", 0.2, 0.6, 0.5, BetaOverride::none},
    };
    for (const auto& mode : modes) {
        CAPTURE(mode.name);
        ModelConfig config;
        config.layers = 4;
        config.hidden_dim = 8;
        config.alpha = mode.alpha;
        config.eta = mode.eta;
        config.gamma = mode.gamma;
        config.filter_f = 0.8;
        config.dropout_rate = 0.3;
        config.classes = 3;
        config.input_dim = 6;
        config.beta_override = mode.override_;
        const PropagationOperator op =
            assemble(bundle, mode.gamma > 0.0 ? basis : nullptr, mode.gamma,
                     FilterConfig{config.filter_f});
        const GradCheckReport report =
            gradient_check(g.features, g.labels, mask, op, config, 1234, 25, 1e-5);
        CHECK(report.max_rel_error <= 1e-4);
    }
}

TEST_CASE("adam first step moves by about the learning rate") {
    ModelConfig config;
    config.layers = 1;
    config.hidden_dim = 1;
    config.classes = 1;
    config.input_dim = 1;
    ModelParameters params = ModelParameters::glorot(config, 1);
    const double w0 = params.input_weights(0, 0);
    params.input_grad(0, 0) = 1.0;
    OptimizerState state = OptimizerState::create(params, 0.001, 0.0);
    adam_step(state, params);
    CHECK(params.input_weights(0, 0) == doctest::Approx(w0 - 0.001).epsilon(1e-6));
    CHECK(state.step == 1);
}

TEST_CASE("adam with zero gradients and zero decay leaves parameters alone") {
    ModelConfig config;
    config.layers = 2;
    config.hidden_dim = 3;
    config.classes = 2;
    config.input_dim = 2;
    ModelParameters params = ModelParameters::glorot(config, 2);
    const ModelParameters before = params;
    OptimizerState state = OptimizerState::create(params, 0.01, 0.0);
    for (int i = 0; i < 5; ++i) adam_step(state, params);
    CHECK(bitwise_equal(params.input_weights, before.input_weights));
    CHECK(bitwise_equal(params.output_weights, before.output_weights));
}

TEST_CASE("adam is deterministic") {
    ModelConfig config;
    config.layers = 1;
    config.hidden_dim = 4;
    config.classes = 2;
    config.input_dim = 3;
    auto run = [&]() {
        ModelParameters params = ModelParameters::glorot(config, 9);
        OptimizerState state = OptimizerState::create(params, 0.01, 5e-4);
        Rng rng(17);
        for (int step = 0; step < 10; ++step) {
            for (double& v : params.input_grad.values) v = rng.uniform(-1.0, 1.0);
            for (double& v : params.layer_grads[0].values) v = rng.uniform(-1.0, 1.0);
            for (double& v : params.output_grad.values) v = rng.uniform(-1.0, 1.0);
            adam_step(state, params);
        }
        return params;
    };
    const ModelParameters a = run();
    const ModelParameters b = run();
    CHECK(bitwise_equal(a.input_weights, b.input_weights));
    CHECK(bitwise_equal(a.layer_weights[0], b.layer_weights[0]));
    CHECK(bitwise_equal(a.output_weights, b.output_weights));
}

TEST_CASE("adam rejects non-finite gradients, naming the tensor") {
    ModelConfig config;
    config.layers = 1;
    config.hidden_dim = 2;
    config.classes = 2;
    config.input_dim = 2;
    ModelParameters params = ModelParameters::glorot(config, 4);
    params.layer_grads[0](0, 0) = std::nan("");
    OptimizerState state = OptimizerState::create(params, 0.01, 0.0);
    CHECK_THROWS_WITH_AS(adam_step(state, params), doctest::Contains("layer_weights[0]"),
                         Error);
}

TEST_CASE("two-clique task trains to perfect test accuracy") {
    const Graph g = synthetic_two_clique(20, 7);
    const DatasetSplit split = tiny_split(g, 4);
    const ModelConfig config = clique_config(g, "deepgwc");
    const TrainResult result = train(g, split, config, TrainSchedule{200, 200},
                                     TrainOptions{0.01, 5e-4, 11});
    CHECK(result.report.best_validation_accuracy == doctest::Approx(1.0));
    CHECK(result.report.test_accuracy == doctest::Approx(1.0));
    CHECK(result.report.epochs.size() <= 200);
    CHECK(result.report.weight_decay == doctest::Approx(5e-4));
}

TEST_CASE("training loss decreases on the two-clique task") {
    const Graph g = synthetic_two_clique(10, 9);
    const DatasetSplit split = tiny_split(g, 4);
    const ModelConfig config = clique_config(g, "deepgwc");
    const TrainResult result =
        train(g, split, config, TrainSchedule{60, 100}, TrainOptions{0.01, 5e-4, 12});
    REQUIRE(result.report.epochs.size() >= 50);
    CHECK(result.report.epochs[49].train_loss < result.report.epochs[0].train_loss);
}

TEST_CASE("identical seeds give identical reports") {
    const Graph g = synthetic_two_clique(8, 3);
    const DatasetSplit split = tiny_split(g, 3);
    const ModelConfig config = clique_config(g, "deepgwc");
    const TrainResult a =
        train(g, split, config, TrainSchedule{30, 100}, TrainOptions{0.01, 5e-4, 5});
    const TrainResult b =
        train(g, split, config, TrainSchedule{30, 100}, TrainOptions{0.01, 5e-4, 5});
    REQUIRE(a.report.epochs.size() == b.report.epochs.size());
    for (std::size_t e = 0; e < a.report.epochs.size(); ++e) {
        CHECK(a.report.epochs[e].train_loss == b.report.epochs[e].train_loss);
        CHECK(a.report.epochs[e].validation_accuracy == b.report.epochs[e].validation_accuracy);
        CHECK(a.report.epochs[e].test_accuracy == b.report.epochs[e].test_accuracy);
    }
    CHECK(a.report.best_epoch == b.report.best_epoch);
    CHECK(a.report.test_accuracy == b.report.test_accuracy);
    CHECK(bitwise_equal(a.best_parameters.input_weights, b.best_parameters.input_weights));
}

TEST_CASE("zero learning rate freezes the validation trajectory") {
    const Graph g = synthetic_two_clique(8, 4);
    const DatasetSplit split = tiny_split(g, 3);
    const ModelConfig config = clique_config(g, "deepgwc");
    const TrainResult result =
        train(g, split, config, TrainSchedule{20, 100}, TrainOptions{0.0, 0.0, 5});
    for (const auto& rec : result.report.epochs)
        CHECK(rec.validation_accuracy ==
              doctest::Approx(result.report.epochs[0].validation_accuracy));
}
