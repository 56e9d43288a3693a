#include "nlsq/bench.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlsq/errors.hpp"
#include "nlsq/oracle.hpp"
#include "nlsq/rng.hpp"
#include "nlsq/version.hpp"

namespace nlsq::bench {
namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
    const auto lo = s.find_first_not_of(" \t\r");
    if (lo == std::string::npos) return "";
    const auto hi = s.find_last_not_of(" \t\r");
    return s.substr(lo, hi - lo + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

double parse_double_or_throw(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double d = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size()) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + value + "'");
    }
    return d;
}

std::size_t parse_size_or_throw(const std::string& key, const std::string& value) {
    const double d = parse_double_or_throw(key, value);
    if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d))) {
        throw ConfigError("config: expected a non-negative integer for " + key);
    }
    return static_cast<std::size_t>(d);
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
    if (path.empty() || base_dir.empty()) return path;
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(base_dir) / p).lexically_normal().string();
}

void apply_override(optim::HyperParams& hp, const std::string& key, const std::string& value) {
    if (key == "delta") hp.delta = parse_double_or_throw(key, value);
    else if (key == "alpha") hp.alpha = parse_double_or_throw(key, value);
    else if (key == "gamma") hp.gamma = parse_double_or_throw(key, value);
    else if (key == "d_init") hp.d_init = parse_double_or_throw(key, value);
    else if (key == "div_floor") hp.div_floor = parse_double_or_throw(key, value);
    else if (key == "lr") hp.lr = parse_double_or_throw(key, value);
    else if (key == "beta1") hp.beta1 = parse_double_or_throw(key, value);
    else if (key == "beta2") hp.beta2 = parse_double_or_throw(key, value);
    else if (key == "adam_eps") hp.adam_eps = parse_double_or_throw(key, value);
    else if (key == "adagrad_eps") hp.adagrad_eps = parse_double_or_throw(key, value);
    else if (key == "smw_mode") {
        if (value == "exact") hp.smw_mode = optim::SmwMode::Exact;
        else if (value == "as_printed") hp.smw_mode = optim::SmwMode::AsPrinted;
        else throw ConfigError("config: smw_mode must be 'exact' or 'as_printed'");
    } else {
        throw ConfigError("config: unknown optimizer option '" + key + "'");
    }
}

data::Dataset load_dataset(const DatasetSpec& spec) {
    switch (spec.kind) {
        case DatasetKind::Iris: return data::load_iris_csv(spec.path, spec.standardize);
        case DatasetKind::Idx: return data::load_idx(spec.path, spec.labels_path);
        case DatasetKind::Synth:
            return data::synth_autoencoder(spec.samples, spec.side, /*seed=*/900);
    }
    throw ConfigError("unknown dataset kind");
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("short write to " + path);
}

// Rethrows the caught library error with run/epoch/batch context prefixed,
// preserving its concrete type.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& optimizer,
                                       std::size_t run, std::size_t epoch, std::size_t batch) {
    const std::string msg = optimizer + " run " + std::to_string(run) + ", epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(batch) + ": " +
                            e.what();
    if (dynamic_cast<const PoisonedInputError*>(&e)) throw PoisonedInputError(msg);
    if (dynamic_cast<const SingularMatrixError*>(&e)) throw SingularMatrixError(msg);
    if (dynamic_cast<const DegenerateInputError*>(&e)) throw DegenerateInputError(msg);
    if (dynamic_cast<const DimensionError*>(&e)) throw DimensionError(msg);
    if (dynamic_cast<const CapacityError*>(&e)) throw CapacityError(msg);
    throw Error(msg);
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void ExperimentConfig::validate() const {
    if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
    if (runs < 1) throw ConfigError("config: runs must be >= 1");
    if (samples_per_batch < 1) throw ConfigError("config: samples_per_batch must be >= 1");
    if (layers.empty()) throw ConfigError("config: model.layers missing");
    if (optimizers.empty()) throw ConfigError("config: optimizers missing");
    model::validate_specs(layers);
    for (const OptimizerSpec& o : optimizers) {
        optim::optimizer_kind_from_name(o.name); // throws on unknown names
    }
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir) {
    std::map<std::string, std::string> kv;
    std::vector<std::string> optimizer_list;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ParseError("config line " + std::to_string(line_no) + ": empty key");
        }
        kv[key] = value;
    }

    ExperimentConfig cfg;
    auto take = [&](const char* key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) return "";
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    if (std::string v = take("name"); !v.empty()) cfg.name = v;
    if (std::string v = take("epochs"); !v.empty()) cfg.epochs = parse_size_or_throw("epochs", v);
    if (std::string v = take("runs"); !v.empty()) cfg.runs = parse_size_or_throw("runs", v);
    if (std::string v = take("samples_per_batch"); !v.empty()) {
        cfg.samples_per_batch = parse_size_or_throw("samples_per_batch", v);
    }
    if (std::string v = take("base_seed"); !v.empty()) {
        cfg.base_seed = static_cast<std::uint64_t>(parse_size_or_throw("base_seed", v));
    }
    // dataset paths resolve against the config file; output_dir stays
    // relative to the working directory
    if (std::string v = take("output_dir"); !v.empty()) cfg.output_dir = v;
    if (std::string v = take("gamma"); !v.empty()) cfg.gamma = parse_double_or_throw("gamma", v);
    if (std::string v = take("loss.post_epoch"); !v.empty()) {
        if (v != "true" && v != "false") throw ConfigError("config: loss.post_epoch must be bool");
        cfg.post_epoch_loss = (v == "true");
    }

    if (std::string v = take("dataset.kind"); !v.empty()) {
        if (v == "iris") cfg.dataset.kind = DatasetKind::Iris;
        else if (v == "idx") cfg.dataset.kind = DatasetKind::Idx;
        else if (v == "synth") cfg.dataset.kind = DatasetKind::Synth;
        else throw ConfigError("config: unknown dataset.kind '" + v + "'");
    }
    if (std::string v = take("dataset.path"); !v.empty()) {
        cfg.dataset.path = resolve_path(v, base_dir);
    }
    if (std::string v = take("dataset.labels_path"); !v.empty()) {
        cfg.dataset.labels_path = resolve_path(v, base_dir);
    }
    if (std::string v = take("dataset.samples"); !v.empty()) {
        cfg.dataset.samples = parse_size_or_throw("dataset.samples", v);
    }
    if (std::string v = take("dataset.side"); !v.empty()) {
        cfg.dataset.side = parse_size_or_throw("dataset.side", v);
    }
    if (std::string v = take("dataset.train_count"); !v.empty()) {
        cfg.dataset.train_count = parse_size_or_throw("dataset.train_count", v);
    }
    if (std::string v = take("dataset.standardize"); !v.empty()) {
        if (v != "true" && v != "false") {
            throw ConfigError("config: dataset.standardize must be bool");
        }
        cfg.dataset.standardize = (v == "true");
    }

    const std::string layer_dims = take("model.layers");
    const std::string layer_acts = take("model.activations");
    if (!layer_dims.empty()) {
        const std::vector<std::string> dims = split_list(layer_dims);
        const std::vector<std::string> acts = split_list(layer_acts);
        if (dims.size() < 2) throw ConfigError("config: model.layers needs >= 2 dims");
        if (acts.size() != dims.size() - 1) {
            throw ConfigError("config: model.activations must list one activation per layer");
        }
        for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
            model::LayerSpec spec;
            spec.in_dim = parse_size_or_throw("model.layers", dims[k]);
            spec.out_dim = parse_size_or_throw("model.layers", dims[k + 1]);
            spec.activation = model::activation_from_name(acts[k]);
            cfg.layers.push_back(spec);
        }
    }

    optimizer_list = split_list(take("optimizers"));
    for (const std::string& name : optimizer_list) {
        OptimizerSpec spec;
        spec.name = name;
        spec.kind = optim::optimizer_kind_from_name(name);
        cfg.optimizers.push_back(spec);
    }

    // remaining keys must be optimizer.<name>.<option>
    for (const auto& [key, value] : kv) {
        if (key.rfind("optimizer.", 0) != 0) {
            throw ConfigError("config: unknown key '" + key + "'");
        }
        const std::string rest = key.substr(10);
        const auto dot = rest.find('.');
        if (dot == std::string::npos) {
            throw ConfigError("config: expected optimizer.<name>.<option>, got '" + key + "'");
        }
        const std::string opt_name = rest.substr(0, dot);
        const std::string option = rest.substr(dot + 1);
        bool found = false;
        for (OptimizerSpec& spec : cfg.optimizers) {
            if (spec.name == opt_name) {
                spec.overrides[option] = value;
                found = true;
            }
        }
        if (!found) {
            throw ConfigError("config: override for unlisted optimizer '" + opt_name + "'");
        }
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    ExperimentConfig cfg = parse_config_text(buf.str(), fs::path(path).parent_path().string());
    if (cfg.name == "experiment") {
        cfg.name = fs::path(path).stem().string();
    }
    return cfg;
}

std::vector<std::pair<std::string, LossTrace>> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const data::Dataset full = load_dataset(cfg.dataset);
    const std::size_t output_dim = cfg.layers.back().out_dim;
    if (full.target_dim() != output_dim) {
        throw ConfigError("config: model output dim " + std::to_string(output_dim) +
                          " does not match dataset target dim " +
                          std::to_string(full.target_dim()));
    }

    std::vector<std::pair<std::string, LossTrace>> results;
    for (const OptimizerSpec& opt_spec : cfg.optimizers) {
        LossTrace trace;
        trace.runs.assign(cfg.runs, {});
        const auto t0 = std::chrono::steady_clock::now();

        for (std::size_t r = 0; r < cfg.runs; ++r) {
            const std::uint64_t run_seed = cfg.base_seed + r;

            data::Dataset train = full;
            if (cfg.dataset.train_count > 0 && cfg.dataset.train_count < full.sample_count()) {
                train = data::shuffle_split(full, cfg.dataset.train_count, run_seed).first;
            }

            model::Mlp mlp = model::init_weights(cfg.layers, run_seed);
            const std::size_t n = mlp.weight_count();

            // Batch geometry is fixed across epochs; L must stay constant for
            // the optimizer state.
            const std::size_t B = train.sample_count() / cfg.samples_per_batch;
            if (B < 1) throw ConfigError("config: samples_per_batch exceeds training samples");
            const std::size_t L = cfg.samples_per_batch * output_dim;

            optim::HyperParams hp = optim::default_hyper_params(opt_spec.kind, L, B);
            for (const auto& [key, value] : opt_spec.overrides) apply_override(hp, key, value);
            hp.gamma = cfg.gamma > 0.0 ? cfg.gamma : static_cast<double>(B);
            hp.validate();

            std::unique_ptr<optim::Optimizer> optimizer = optim::make_optimizer(
                opt_spec.kind, n, hp, derive_seed(run_seed, 0xA11CE));

            trace.meta.n = n;
            trace.meta.L = L;
            trace.meta.B = B;
            trace.meta.delta = hp.delta;
            trace.meta.alpha = hp.alpha;
            trace.meta.lr = hp.lr;

            std::vector<double>& series = trace.runs[r];
            series.reserve(cfg.epochs);
            for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
                const data::BatchPlan plan = data::make_batches(
                    train, cfg.samples_per_batch, output_dim, derive_seed(run_seed, epoch));
                trace.meta.dropped = plan.dropped;
                double epoch_loss_sum = 0.0;
                for (std::size_t b = 0; b < plan.batches.size(); ++b) {
                    try {
                        const auto [X, Y] = data::gather(train, plan.batches[b]);
                        const model::BatchEval eval = model::evaluate_batch(mlp, X, Y);
                        epoch_loss_sum += eval.loss;
                        const numkit::Vector s =
                            optimizer->step(optim::StepInput{eval, mlp, X, Y});
                        numkit::axpy_inplace(mlp.weights, 1.0, s);
                    } catch (const Error& e) {
                        rethrow_with_context(e, opt_spec.name, r, epoch, b);
                    }
                }
                if (cfg.post_epoch_loss) {
                    const auto [Xall, Yall] = data::gather(train, [&] {
                        std::vector<std::size_t> all(train.sample_count());
                        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
                        return all;
                    }());
                    series.push_back(model::mean_squared_loss(mlp, Xall, Yall));
                } else {
                    series.push_back(epoch_loss_sum / static_cast<double>(plan.B));
                }
            }
            trace.meta.final_step_counts.push_back(optimizer->step_count());
        }

        trace.mean.assign(cfg.epochs, 0.0);
        for (std::size_t e = 0; e < cfg.epochs; ++e) {
            double s = 0.0;
            for (std::size_t r = 0; r < cfg.runs; ++r) s += trace.runs[r][e];
            trace.mean[e] = s / static_cast<double>(cfg.runs);
        }
        const auto t1 = std::chrono::steady_clock::now();
        trace.meta.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
        results.emplace_back(opt_spec.name, std::move(trace));
    }
    return results;
}

void write_csv(const LossTrace& trace, const std::string& path) {
    std::ostringstream out;
    out << "epoch";
    for (std::size_t r = 0; r < trace.runs.size(); ++r) out << ",run_" << (r + 1);
    out << ",mean\n";
    for (std::size_t e = 0; e < trace.mean.size(); ++e) {
        out << (e + 1);
        for (const std::vector<double>& run : trace.runs) out << ',' << format_g17(run[e]);
        out << ',' << format_g17(trace.mean[e]) << '\n';
    }
    write_text_file(path, out.str());
}

void write_meta(const ExperimentConfig& cfg,
                const std::vector<std::pair<std::string, LossTrace>>& traces,
                const std::string& path) {
    std::ostringstream out;
    out << "name = " << cfg.name << '\n';
    out << "version = " << kVersion << '\n';
    out << "epochs = " << cfg.epochs << '\n';
    out << "runs = " << cfg.runs << '\n';
    out << "base_seed = " << cfg.base_seed << '\n';
    out << "samples_per_batch = " << cfg.samples_per_batch << '\n';
    if (!traces.empty()) {
        const LossTrace::Meta& meta = traces.front().second.meta;
        out << "n = " << meta.n << '\n';
        out << "L = " << meta.L << '\n';
        out << "B = " << meta.B << '\n';
        out << "gamma = " << format_g17(cfg.gamma > 0.0 ? cfg.gamma
                                                        : static_cast<double>(meta.B))
            << '\n';
        out << "dropped_samples = " << meta.dropped << '\n';
    }
    for (const auto& [name, trace] : traces) {
        out << "optimizer." << name << ".delta = " << format_g17(trace.meta.delta) << '\n';
        out << "optimizer." << name << ".alpha = " << format_g17(trace.meta.alpha) << '\n';
        out << "optimizer." << name << ".lr = " << format_g17(trace.meta.lr) << '\n';
        out << "optimizer." << name << ".wall_time_s = " << format_g17(trace.meta.wall_time_s)
            << '\n';
    }
    write_text_file(path, out.str());
}

std::string run_and_write(const ExperimentConfig& cfg) {
    const std::vector<std::pair<std::string, LossTrace>> traces = run_experiment(cfg);

    const fs::path dir = fs::path(cfg.output_dir) / cfg.name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    write_csv(traces.front().second, (dir / "loss.csv").string());
    if (traces.size() > 1) {
        for (const auto& [name, trace] : traces) {
            write_csv(trace, (dir / ("loss_" + name + ".csv")).string());
        }
    }
    render_svg_plot(traces, (dir / "plot.svg").string());
    write_meta(cfg, traces, (dir / "meta.txt").string());
    return dir.string();
}

} // namespace nlsq::bench
