#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nlsq/data.hpp"
#include "nlsq/model.hpp"
#include "nlsq/optim.hpp"

namespace nlsq::bench {

enum class DatasetKind { Iris, Idx, Synth };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::Synth;
    std::string path;        // iris csv / idx images
    std::string labels_path; // idx only, optional
    std::size_t samples = 256; // synth
    std::size_t side = 8;      // synth
    std::size_t train_count = 0; // 0 = use every sample
    bool standardize = true;     // iris only: z-score the feature columns
};

struct OptimizerSpec {
    std::string name;
    optim::OptimizerKind kind = optim::OptimizerKind::Sgd;
    std::map<std::string, std::string> overrides; // delta, alpha, lr, ... as raw text
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetSpec dataset;
    std::vector<model::LayerSpec> layers;
    std::vector<OptimizerSpec> optimizers;
    std::size_t epochs = 50;
    std::size_t runs = 5;
    std::size_t samples_per_batch = 32;
    std::uint64_t base_seed = 1;
    std::string output_dir = "out";
    bool post_epoch_loss = false; // record full-training-set loss after each epoch
    double gamma = 0.0;           // 0 = set to B once the batch plan is known

    void validate() const; // throws ConfigError
};

// Flat `key = value` text, '#' comments, dotted keys
// (e.g. optimizer.nlls1.delta = 0.8). Relative dataset paths resolve against
// `base_dir`.
ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir);
ExperimentConfig parse_config_file(const std::string& path);

struct LossTrace {
    std::vector<std::vector<double>> runs; // [run][epoch]
    std::vector<double> mean;              // [epoch]

    struct Meta {
        std::size_t n = 0;
        std::size_t L = 0;
        std::size_t B = 0;
        std::size_t dropped = 0;
        double wall_time_s = 0.0;
        double delta = 0.0;
        double alpha = 0.0;
        double lr = 0.0;
        std::vector<std::size_t> final_step_counts; // per run
    } meta;
};

// Runs `cfg.runs` seeded repetitions per optimizer: run r re-initializes the
// model with base_seed + r, creates a fresh optimizer state, and takes
// epochs x B steps; the recorded epoch loss is the mean of the pre-step batch
// losses (or the post-epoch full-training-set loss when post_epoch_loss is
// set). Deterministic for a given config.
std::vector<std::pair<std::string, LossTrace>> run_experiment(const ExperimentConfig& cfg);

// Header `epoch,run_1,...,run_R,mean`; one row per epoch; 17 significant
// digits so a re-parse reproduces every value bit-exactly.
void write_csv(const LossTrace& trace, const std::string& path);

// Standalone SVG, log-scale loss axis, one polyline per named mean series,
// legend and axis labels. An empty trace list throws ConfigError.
void render_svg_plot(const std::vector<std::pair<std::string, LossTrace>>& traces,
                     const std::string& path);

void write_meta(const ExperimentConfig& cfg,
                const std::vector<std::pair<std::string, LossTrace>>& traces,
                const std::string& path);

// Runs everything and writes <output_dir>/<name>/{loss.csv, plot.svg,
// meta.txt}; with several optimizers, each also gets loss_<name>.csv
// (loss.csv holds the first). Returns the experiment directory.
std::string run_and_write(const ExperimentConfig& cfg);

// Brute-force invariant suite (finite differences vs backprop, SMW solves vs
// dense elimination, rank-1/rank-L reconstruction, Adagrad reduction). Prints
// one line per check; returns false if any check fails.
bool run_selftest(std::ostream& out);

} // namespace nlsq::bench
