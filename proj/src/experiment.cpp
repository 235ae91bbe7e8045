#include "dgwc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgwc/data.hpp"
#include "dgwc/linalg.hpp"
#include "dgwc/rng.hpp"

namespace dgwc {

namespace {

using nlohmann::json;

// Serialized line-record sink; one JSON object per line, whole lines only.
class RecordWriter {
public:
    explicit RecordWriter(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::trunc);
            require(file_.good(), "cannot open output path ", path);
        }
    }
    void write(const json& record) {
        std::lock_guard<std::mutex> lock(mutex_);
        std::ostream& out = file_.is_open() ? file_ : std::cout;
        out << record.dump() << "\n";
        out.flush();
    }

private:
    std::ofstream file_;
    std::mutex mutex_;
};

json config_json(const ExperimentConfig& config, const ModelConfig& model) {
    return json{{"dataset_content", config.dataset_content},
                {"dataset_cites", config.dataset_cites},
                {"mode", config.mode},
                {"wavelet", config.wavelet},
                {"split", config.split},
                {"layers", model.layers},
                {"hidden", model.hidden_dim},
                {"alpha", model.alpha},
                {"eta", model.eta},
                {"gamma", model.gamma},
                {"filter_f", model.filter_f},
                {"scale_s", model.scale_s},
                {"threshold_t", model.threshold_t},
                {"dropout", model.dropout_rate},
                {"lr", config.lr},
                {"weight_decay", config.weight_decay},
                {"epochs", config.epochs},
                {"patience", config.patience},
                {"seed", config.seed},
                {"row_normalize", config.row_normalize}};
}

Graph load_dataset(const ExperimentConfig& config) {
    require(!config.dataset_content.empty() && !config.dataset_cites.empty(),
            "no dataset given: need --dataset-content and --dataset-cites");
    Graph g = load_content_cites(config.dataset_content, config.dataset_cites);
    if (config.row_normalize) row_normalize_features(g);
    return g;
}

std::string dataset_id(const ExperimentConfig& config, const Graph& g) {
    const std::string stem = std::filesystem::path(config.dataset_content).stem().string();
    std::uint64_t h = fnv1a(stem.data(), stem.size());
    h = hash_combine(h, g.n);
    h = hash_combine(h, g.edges.size());
    for (const auto& [a, b] : g.edges) h = hash_combine(h, (std::uint64_t(a) << 32) | b);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%016llx", stem.c_str(),
                  static_cast<unsigned long long>(h));
    return buf;
}

std::shared_ptr<const WaveletBasis> obtain_basis(const ExperimentConfig& config,
                                                 const Graph& g,
                                                 const LaplacianBundle& bundle) {
    const WaveletSpec spec = parse_wavelet_spec(config.wavelet);
    std::string cache_path;
    if (!config.cache_dir.empty()) {
        std::filesystem::create_directories(config.cache_dir);
        cache_path = (std::filesystem::path(config.cache_dir) /
                      wavelet_cache_name(dataset_id(config, g), config.model.scale_s,
                                         config.model.threshold_t, spec.method, spec.order))
                         .string();
        if (auto cached = load_wavelet_basis(cache_path)) {
            std::cerr << "wavelet basis loaded from cache: " << cache_path << "\n";
            return std::make_shared<WaveletBasis>(std::move(*cached));
        }
    }
    WaveletBasis basis =
        spec.method == WaveletMethod::exact
            ? wavelet_exact(bundle, config.model.scale_s, config.model.threshold_t)
            : wavelet_chebyshev(bundle, config.model.scale_s, config.model.threshold_t,
                                spec.order);
    if (!cache_path.empty()) save_wavelet_basis(basis, cache_path);
    return std::make_shared<WaveletBasis>(std::move(basis));
}

DatasetSplit make_split(const ExperimentConfig& config, const Graph& g) {
    const SplitSpec spec = parse_split_spec(config.split);
    return spec.standard ? standard_split(g, config.seed)
                         : rate_split(g, spec.rate, config.seed);
}

int guarded(const char* what, const std::function<int()>& body) {
    try {
        return body();
    } catch (const Error& e) {
        std::cerr << what << ": error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << what << ": error: " << e.what() << "\n";
        return 1;
    }
}

struct PreparedRun {
    Graph graph;
    LaplacianBundle bundle;
    std::shared_ptr<const WaveletBasis> basis;  // null when gamma == 0
};

PreparedRun prepare(const ExperimentConfig& config, bool need_basis) {
    PreparedRun run;
    run.graph = load_dataset(config);
    run.bundle = build_laplacian(run.graph);
    if (need_basis) run.basis = obtain_basis(config, run.graph, run.bundle);
    return run;
}

json run_single_training(const ExperimentConfig& config, const Graph& g,
                         const LaplacianBundle& bundle,
                         std::shared_ptr<const WaveletBasis> basis, RecordWriter& writer,
                         bool write_epochs) {
    ModelConfig model = config.model;
    model.classes = g.num_classes;
    model.input_dim = g.feature_dim();
    model.validate();

    const PropagationOperator op =
        assemble(bundle, model.gamma > 0.0 ? basis : nullptr, model.gamma,
                 FilterConfig{model.filter_f});
    const DatasetSplit split = make_split(config, g);
    const TrainResult result = train_with_operator(
        g.features, g.labels, op, split, model, TrainSchedule{config.epochs, config.patience},
        TrainOptions{config.lr, config.weight_decay, config.seed});

    if (write_epochs) {
        for (const auto& rec : result.report.epochs)
            writer.write(json{{"type", "epoch"},
                              {"epoch", rec.epoch},
                              {"train_loss", rec.train_loss},
                              {"val_accuracy", rec.validation_accuracy},
                              {"test_accuracy", rec.test_accuracy}});
    }

    json summary{{"type", "summary"},
                 {"mode", reduction_mode_name(reduction_mode(model))},
                 {"test_accuracy", result.report.test_accuracy},
                 {"best_epoch", result.report.best_epoch},
                 {"best_val_accuracy", result.report.best_validation_accuracy},
                 {"epochs_run", result.report.epochs.size()},
                 {"density_psi", basis && model.gamma > 0.0 ? basis->density_psi : 0.0},
                 {"label_rate", split.label_rate},
                 {"dataset", json{{"nodes", g.n},
                                  {"edges", g.edges.size()},
                                  {"classes", g.num_classes},
                                  {"features", g.feature_dim()},
                                  {"dropped_edges", g.dropped_edges}}},
                 {"config", config_json(config, model)}};
    writer.write(summary);
    writer.write(json{{"type", "timing"},
                      {"wall_time_seconds", result.report.wall_time_seconds}});

    if (!config.checkpoint.empty()) {
        save_checkpoint(result.best_parameters, config.checkpoint);
        std::cerr << "checkpoint written: " << config.checkpoint << "\n";
    }
    std::cerr << "mode=" << reduction_mode_name(reduction_mode(model))
              << " layers=" << model.layers
              << " test_accuracy=" << result.report.test_accuracy
              << " best_epoch=" << result.report.best_epoch << " ("
              << result.report.wall_time_seconds << " s)\n";
    return summary;
}

}  // namespace

void apply_mode(ModelConfig& config, const std::string& mode) {
    if (mode == "gcn") {
        config.alpha = 0.0;
        config.beta_override = BetaOverride::one;
        config.gamma = 0.0;
    } else if (mode == "gwnn") {
        config.alpha = 0.0;
        config.beta_override = BetaOverride::one;
        config.gamma = 1.0;
    } else if (mode == "appnp-like") {
        config.beta_override = BetaOverride::zero;
        config.gamma = 0.0;
        if (config.alpha == 0.0) config.alpha = 0.1;
    } else if (mode == "gcnii-like") {
        config.beta_override = BetaOverride::none;
        config.gamma = 0.0;
        if (config.alpha == 0.0) config.alpha = 0.1;
    } else if (mode == "deepgwc") {
        config.beta_override = BetaOverride::none;
    } else {
        fail("unknown mode '", mode, "' (expected gcn|gwnn|appnp-like|gcnii-like|deepgwc)");
    }
}

WaveletSpec parse_wavelet_spec(const std::string& spec) {
    if (spec == "exact") return {WaveletMethod::exact, 0};
    if (spec.rfind("cheby:", 0) == 0) {
        const std::string arg = spec.substr(6);
        try {
            const int order = std::stoi(arg);
            require(order >= 1, "wavelet spec: order must be >= 1, got ", order);
            return {WaveletMethod::chebyshev, order};
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            fail("wavelet spec: bad order '", arg, "'");
        }
    }
    fail("wavelet spec '", spec, "' (expected exact or cheby:<order>)");
}

SplitSpec parse_split_spec(const std::string& spec) {
    if (spec == "standard") return {true, 0.0};
    if (spec.rfind("rate:", 0) == 0) {
        const std::string arg = spec.substr(5);
        try {
            const double rate = std::stod(arg);
            return {false, rate};
        } catch (const std::exception&) {
            fail("split spec: bad rate '", arg, "'");
        }
    }
    fail("split spec '", spec, "' (expected standard or rate:<r>)");
}

int cmd_train(const ExperimentConfig& base) {
    return guarded("train", [&]() {
        ExperimentConfig config = base;
        apply_mode(config.model, config.mode);
        PreparedRun run = prepare(config, config.model.gamma > 0.0);
        RecordWriter writer(config.out);
        run_single_training(config, run.graph, run.bundle, run.basis, writer, true);
        return 0;
    });
}

int cmd_sweep_depth(const ExperimentConfig& base) {
    return guarded("sweep-depth", [&]() {
        require(!base.depths.empty(), "sweep-depth: --depths were not given");
        std::vector<std::string> modes = base.modes;
        if (modes.empty()) modes = {base.mode};
        for (const auto& m : modes) {
            ModelConfig probe = base.model;
            apply_mode(probe, m);  // validates the name
        }

        bool need_basis = false;
        for (const auto& m : modes) {
            ModelConfig probe = base.model;
            apply_mode(probe, m);
            if (probe.gamma > 0.0) need_basis = true;
        }
        PreparedRun run = prepare(base, need_basis);
        RecordWriter writer(base.out);

        struct Task {
            std::string mode;
            std::size_t depth;
        };
        std::vector<Task> tasks;
        for (const auto& m : modes)
            for (std::size_t depth : base.depths) tasks.push_back({m, depth});

        std::atomic<std::size_t> next{0};
        std::atomic<int> failures{0};
        auto worker = [&]() {
            while (true) {
                const std::size_t k = next.fetch_add(1);
                if (k >= tasks.size()) break;
                ExperimentConfig config = base;
                config.mode = tasks[k].mode;
                config.checkpoint.clear();
                apply_mode(config.model, config.mode);
                config.model.layers = tasks[k].depth;
                const std::string run_id =
                    tasks[k].mode + ":" + std::to_string(tasks[k].depth);
                config.seed = hash_combine(base.seed, fnv1a(run_id.data(), run_id.size()));
                const int rc = guarded(run_id.c_str(), [&]() {
                    json summary = run_single_training(config, run.graph, run.bundle,
                                                       run.basis, writer, false);
                    (void)summary;
                    return 0;
                });
                if (rc != 0) failures.fetch_add(1);
            }
        };
        const std::size_t thread_count = std::max<std::size_t>(1, std::min(base.jobs, tasks.size()));
        if (thread_count == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        return failures.load() == 0 ? 0 : 1;
    });
}

int cmd_wavelet_stats(const ExperimentConfig& base) {
    return guarded("wavelet-stats", [&]() {
        PreparedRun run = prepare(base, true);
        const BasisStats stats = basis_stats(*run.basis);
        double lambda_min = run.basis->lambda_min, lambda_max = run.basis->lambda_max;
        if (run.basis->method == WaveletMethod::chebyshev) {
            lambda_min = 0.0;
            lambda_max = estimate_spectral_bound(run.bundle.laplacian_sparse);
        }
        RecordWriter writer(base.out);
        writer.write(json{{"type", "wavelet_stats"},
                          {"density_psi", stats.density_psi},
                          {"density_psi_inverse", stats.density_psi_inverse},
                          {"inverse_pair_residual", stats.max_offdiag_residual},
                          {"lambda_min", lambda_min},
                          {"lambda_max", lambda_max},
                          {"scale_s", base.model.scale_s},
                          {"threshold_t", base.model.threshold_t},
                          {"wavelet", base.wavelet}});
        std::cerr << "density_psi=" << stats.density_psi
                  << " density_psi_inverse=" << stats.density_psi_inverse
                  << " inverse_pair_residual=" << stats.max_offdiag_residual
                  << " eigenvalue_range=[" << lambda_min << "," << lambda_max << "]\n";
        return 0;
    });
}

int cmd_gradcheck(const ExperimentConfig& base) {
    return guarded("gradcheck", [&]() {
        constexpr double kTolerance = 1e-4;
        constexpr std::size_t kNodes = 12;
        constexpr std::size_t kSamplesPerMode = 50;

        // seeded random instance
        Rng rng(hash_combine(base.seed, 0x47434b31u));  // "GCK1"
        Graph g;
        g.n = kNodes;
        g.num_classes = 3;
        for (std::uint32_t i = 0; i < kNodes; ++i)
            for (std::uint32_t j = i + 1; j < kNodes; ++j)
                if (rng.next_unit() < 0.3) g.edges.push_back({i, j});
        g.features = DenseMatrix(kNodes, 6);
        for (double& v : g.features.values) v = rng.uniform(-1.0, 1.0);
        g.labels.resize(kNodes);
        for (auto& l : g.labels) l = static_cast<int>(rng.next_below(3));
        std::vector<std::uint32_t> mask(kNodes);
        for (std::uint32_t i = 0; i < kNodes; ++i) mask[i] = i;

        const LaplacianBundle bundle = build_laplacian(g);
        const auto basis = std::make_shared<WaveletBasis>(
            wavelet_exact(bundle, base.model.scale_s, base.model.threshold_t));

        RecordWriter writer(base.out);
        double worst = 0.0;
        bool first = true;
        for (const char* mode : {"gcn", "gwnn", "gcnii-like", "deepgwc"}) {
            ModelConfig config = base.model;
            apply_mode(config, mode);
            config.layers = 4;
            config.hidden_dim = 8;
            config.classes = 3;
            config.input_dim = 6;
            const PropagationOperator op =
                assemble(bundle, config.gamma > 0.0 ? basis : nullptr, config.gamma,
                         FilterConfig{config.filter_f});
            const GradCheckReport report = gradient_check(
                g.features, g.labels, mask, op, config, hash_combine(base.seed, fnv1a(mode, std::strlen(mode))),
                kSamplesPerMode, 1e-5, base.corrupt_gradient && first);
            first = false;
            worst = std::max(worst, report.max_rel_error);
            writer.write(json{{"type", "gradcheck"},
                              {"mode", mode},
                              {"max_rel_error", report.max_rel_error},
                              {"worst_tensor", report.worst_tensor},
                              {"samples", report.samples}});
            std::cerr << "gradcheck mode=" << mode
                      << " max_rel_error=" << report.max_rel_error << "\n";
        }
        std::cerr << "gradcheck overall max_rel_error=" << worst
                  << (worst <= kTolerance ? " (pass)" : " (FAIL)") << "\n";
        return worst <= kTolerance ? 0 : 1;
    });
}

int cmd_dump_embeddings(const ExperimentConfig& base) {
    return guarded("dump-embeddings", [&]() {
        require(!base.checkpoint.empty(), "dump-embeddings: --checkpoint not given");
        ExperimentConfig config = base;
        apply_mode(config.model, config.mode);
        PreparedRun run = prepare(config, config.model.gamma > 0.0);
        ModelParameters params = load_checkpoint(config.checkpoint);

        ModelConfig model = config.model;
        model.classes = run.graph.num_classes;
        model.input_dim = run.graph.feature_dim();
        model.layers = params.layer_weights.size();
        model.hidden_dim = params.output_weights.rows;
        require(params.shapes_match(model), "dump-embeddings: checkpoint shapes (p=",
                params.input_weights.rows, ", d=", params.output_weights.rows,
                ", C=", params.output_weights.cols, ", L=", params.layer_weights.size(),
                ") do not fit the dataset/config");

        const PropagationOperator op =
            assemble(run.bundle, model.gamma > 0.0 ? run.basis : nullptr, model.gamma,
                     FilterConfig{model.filter_f});
        const ForwardTrace trace =
            forward(run.graph.features, params, model, op, RunMode::eval, 0);

        std::ofstream file;
        if (!config.out.empty()) {
            file.open(config.out, std::ios::trunc);
            require(file.good(), "dump-embeddings: cannot open ", config.out);
        }
        std::ostream& out = config.out.empty() ? std::cout : file;
        char buf[32];
        for (std::size_t i = 0; i < run.graph.n; ++i) {
            out << (i < run.graph.node_ids.size() ? run.graph.node_ids[i]
                                                  : std::to_string(i))
                << '\t' << run.graph.labels[i];
            for (std::size_t j = 0; j < trace.final_hidden.cols; ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", trace.final_hidden(i, j));
                out << '\t' << buf;
            }
            out << '\n';
        }
        out.flush();
        return 0;
    });
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"deep graph wavelet convolution experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key = value configuration file");

    ExperimentConfig config;
    app.add_option("--dataset-content", config.dataset_content,
                   "content file: <id>\\t<features...>\\t<label>");
    app.add_option("--dataset-cites", config.dataset_cites,
                   "cites file: <cited-id>\\t<citing-id>");
    app.add_option("--mode", config.mode, "gcn|gwnn|appnp-like|gcnii-like|deepgwc");
    app.add_option("--layers", config.model.layers, "graph convolution layers");
    app.add_option("--hidden", config.model.hidden_dim, "hidden dimension");
    app.add_option("--alpha", config.model.alpha, "initial residual ratio");
    app.add_option("--eta", config.model.eta, "identity mapping schedule strength");
    app.add_option("--gamma", config.model.gamma, "wavelet share of the propagation operator");
    app.add_option("--filter-f", config.model.filter_f, "static filter constant");
    app.add_option("--scale-s", config.model.scale_s, "wavelet scale");
    app.add_option("--threshold-t", config.model.threshold_t, "wavelet sparsification threshold");
    app.add_option("--dropout", config.model.dropout_rate, "dropout rate");
    app.add_option("--lr", config.lr, "Adam learning rate");
    app.add_option("--weight-decay", config.weight_decay, "L2 penalty added to gradients");
    app.add_option("--split", config.split, "standard | rate:<r>");
    app.add_option("--seed", config.seed, "base random seed");
    app.add_option("--jobs", config.jobs, "parallel sweep workers");
    app.add_option("--epochs", config.epochs, "max training epochs");
    app.add_option("--patience", config.patience, "early-stopping patience");
    app.add_option("--out", config.out, "record output path (default stdout)");
    app.add_option("--wavelet", config.wavelet, "exact | cheby:<order>");
    app.add_option("--checkpoint", config.checkpoint, "parameter checkpoint path");
    app.add_option("--cache-dir", config.cache_dir, "wavelet basis cache directory");
    app.add_flag("--row-normalize,!--no-row-normalize", config.row_normalize,
                 "unit-row-sum feature normalization (default on)");
    app.add_option("--depths", config.depths, "sweep depths")->delimiter(',');
    app.add_option("--modes", config.modes, "sweep modes")->delimiter(',');
    app.add_flag("--corrupt-gradient", config.corrupt_gradient,
                 "perturb one analytic gradient (gradcheck self-test)");

    auto* train_cmd = app.add_subcommand("train", "single training run");
    auto* sweep_cmd = app.add_subcommand("sweep-depth", "train over a depth/mode grid");
    auto* stats_cmd = app.add_subcommand("wavelet-stats", "wavelet basis statistics");
    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
    auto* dump_cmd = app.add_subcommand("dump-embeddings", "write final hidden states");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (train_cmd->parsed()) return cmd_train(config);
    if (sweep_cmd->parsed()) return cmd_sweep_depth(config);
    if (stats_cmd->parsed()) return cmd_wavelet_stats(config);
    if (grad_cmd->parsed()) return cmd_gradcheck(config);
    if (dump_cmd->parsed()) return cmd_dump_embeddings(config);
    std::cerr << app.help() << "\n";
    return 1;
}

}  // namespace dgwc
