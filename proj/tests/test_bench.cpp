#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "nlsq/bench.hpp"
#include "nlsq/errors.hpp"
#include "testutil.hpp"

using namespace nlsq;

namespace {

// Small synthetic config used by most cases; parsing goes through the real
// config front end.
bench::ExperimentConfig tiny_config() {
    const std::string text = R"(
name = tiny
dataset.kind = synth
dataset.samples = 24
dataset.side = 4
model.layers = 16,4,16
model.activations = relu,sigmoid
optimizers = sgd
epochs = 2
runs = 2
samples_per_batch = 8
base_seed = 7
optimizer.sgd.lr = 0.5
)";
    return bench::parse_config_text(text, "");
}

} // namespace

TEST_CASE("config parsing: values, dotted overrides, comments") {
    const std::string text = R"(
# comment line
name = demo
dataset.kind = synth
dataset.samples = 32
dataset.side = 4
model.layers = 16, 8, 16
model.activations = relu, sigmoid
optimizers = nlls1, adagrad
epochs = 3
runs = 2
samples_per_batch = 8
base_seed = 11         # trailing comment
optimizer.nlls1.delta = 0.8
optimizer.nlls1.smw_mode = as_printed
optimizer.adagrad.lr = 0.25
)";
    const bench::ExperimentConfig cfg = bench::parse_config_text(text, "");
    CHECK(cfg.name == "demo");
    CHECK(cfg.dataset.kind == bench::DatasetKind::Synth);
    CHECK(cfg.layers.size() == 2);
    CHECK(cfg.layers[0].in_dim == 16);
    CHECK(cfg.layers[0].out_dim == 8);
    CHECK(cfg.layers[1].activation == model::Activation::Sigmoid);
    REQUIRE(cfg.optimizers.size() == 2);
    CHECK(cfg.optimizers[0].name == "nlls1");
    CHECK(cfg.optimizers[0].overrides.at("delta") == "0.8");
    CHECK(cfg.optimizers[0].overrides.at("smw_mode") == "as_printed");
    CHECK(cfg.optimizers[1].overrides.at("lr") == "0.25");
    CHECK(cfg.epochs == 3);
    CHECK(cfg.base_seed == 11);
}

TEST_CASE("config parsing: rejection paths") {
    const std::string base = R"(
dataset.kind = synth
model.layers = 16,4
model.activations = identity
optimizers = sgd
)";
    CHECK_THROWS_AS(bench::parse_config_text(base + "bogus_key = 1\n", ""), ConfigError);
    CHECK_THROWS_AS(bench::parse_config_text(base + "epochs = 0\n", ""), ConfigError);
    CHECK_THROWS_AS(bench::parse_config_text(base + "runs = 0\n", ""), ConfigError);
    CHECK_THROWS_AS(bench::parse_config_text(base + "optimizer.adam.lr = 1\n", ""), ConfigError);
    CHECK_THROWS_AS(
        bench::parse_config_text("dataset.kind = synth\nmodel.layers = 16,4\n"
                                 "model.activations = identity\noptimizers = frobnicator\n",
                                 ""),
        ConfigError);
    CHECK_THROWS_AS(bench::parse_config_text("not a key value line\n", ""), ParseError);
}

TEST_CASE("experiment: single epoch, single run gives a single-point trace") {
    bench::ExperimentConfig cfg = tiny_config();
    cfg.epochs = 1;
    cfg.runs = 1;
    const auto traces = bench::run_experiment(cfg);
    REQUIRE(traces.size() == 1);
    const bench::LossTrace& trace = traces[0].second;
    REQUIRE(trace.runs.size() == 1);
    CHECK(trace.runs[0].size() == 1);
    CHECK(trace.mean.size() == 1);
    CHECK(trace.mean[0] == trace.runs[0][0]);
}

TEST_CASE("experiment: trace shapes, mean correctness, protocol fidelity") {
    const bench::ExperimentConfig cfg = tiny_config();
    const auto traces = bench::run_experiment(cfg);
    REQUIRE(traces.size() == 1);
    const bench::LossTrace& trace = traces[0].second;
    REQUIRE(trace.runs.size() == cfg.runs);
    for (const auto& run : trace.runs) CHECK(run.size() == cfg.epochs);

    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        double mean = 0.0;
        for (const auto& run : trace.runs) mean += run[e];
        mean /= static_cast<double>(cfg.runs);
        CHECK(std::abs(trace.mean[e] - mean) <= 1e-15 * std::max(1.0, std::abs(mean)));
    }

    // exactly epochs x B steps per run
    CHECK(trace.meta.B == 3); // 24 samples / 8 per batch
    CHECK(trace.meta.L == 8 * 16);
    for (std::size_t k : trace.meta.final_step_counts) CHECK(k == cfg.epochs * trace.meta.B);
}

TEST_CASE("experiment: bit-deterministic for a fixed config") {
    const bench::ExperimentConfig cfg = tiny_config();
    const auto a = bench::run_experiment(cfg);
    const auto b = bench::run_experiment(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].second.runs == b[i].second.runs);
        CHECK(a[i].second.mean == b[i].second.mean);
    }
}

TEST_CASE("experiment: mismatched model and dataset dims are rejected") {
    bench::ExperimentConfig cfg = tiny_config();
    cfg.layers.back().out_dim = 7; // dataset targets are 16-wide
    cfg.layers.back().in_dim = 4;
    CHECK_THROWS_AS(bench::run_experiment(cfg), ConfigError);
}

TEST_CASE("experiment: mid-run failures carry run/epoch/batch context") {
    bench::ExperimentConfig cfg = tiny_config();
    cfg.optimizers[0].overrides["lr"] = "1e200"; // blows the weights up, poisoning gradients
    CHECK_THROWS_WITH_AS(bench::run_experiment(cfg), doctest::Contains("sgd run 0"),
                         PoisonedInputError);
}

TEST_CASE("csv: layout, mean column, bit-exact re-parse") {
    bench::LossTrace trace;
    trace.runs = {{0.5, 0.25}};
    trace.mean = {0.5, 0.25};
    testutil::TempDir tmp("nlsq_csv");
    bench::write_csv(trace, tmp.str("one.csv"));
    {
        std::istringstream in(testutil::read_file(tmp.str("one.csv")));
        std::string line;
        std::size_t lines = 0;
        while (std::getline(in, line)) ++lines;
        CHECK(lines == 3); // header + 2 epochs
    }

    // multi-run: mean column equals the row mean, everything re-parses exactly
    bench::LossTrace multi;
    multi.runs = {{1.0 / 3.0, 0.1230000000000001}, {2.0 / 7.0, 5e-17}};
    multi.mean = {(multi.runs[0][0] + multi.runs[1][0]) / 2.0,
                  (multi.runs[0][1] + multi.runs[1][1]) / 2.0};
    bench::write_csv(multi, tmp.str("multi.csv"));
    std::istringstream in(testutil::read_file(tmp.str("multi.csv")));
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,run_1,run_2,mean");
    for (std::size_t e = 0; e < 2; ++e) {
        std::string line;
        REQUIRE(std::getline(in, line));
        std::stringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        CHECK(cell == std::to_string(e + 1));
        double values[3];
        for (double& v : values) {
            REQUIRE(std::getline(row, cell, ','));
            v = std::strtod(cell.c_str(), nullptr);
        }
        CHECK(values[0] == multi.runs[0][e]); // bit-exact round trip
        CHECK(values[1] == multi.runs[1][e]);
        CHECK(values[2] == multi.mean[e]);
        CHECK(values[2] == (values[0] + values[1]) / 2.0);
    }
}

TEST_CASE("svg: flat series renders a horizontal polyline") {
    bench::LossTrace flat;
    flat.runs = {{1.0, 1.0, 1.0, 1.0}};
    flat.mean = {1.0, 1.0, 1.0, 1.0};
    testutil::TempDir tmp("nlsq_svg");
    bench::render_svg_plot({{"flat", flat}}, tmp.str("flat.svg"));
    const std::string svg = testutil::read_file(tmp.str("flat.svg"));
    CHECK(svg.rfind("<svg", 0) == 0); // begins with the svg root element
    CHECK(testutil::xml_well_formed(svg));
    CHECK(svg.find("Epochs") != std::string::npos);
    CHECK(svg.find("Loss") != std::string::npos);
    CHECK(svg.find("flat") != std::string::npos);

    const std::size_t points_at = svg.find("points=\"");
    REQUIRE(points_at != std::string::npos);
    const std::size_t end = svg.find('"', points_at + 8);
    std::stringstream pts(svg.substr(points_at + 8, end - points_at - 8));
    std::string pair;
    std::set<std::string> ys;
    std::size_t count = 0;
    while (pts >> pair) {
        ys.insert(pair.substr(pair.find(',') + 1));
        ++count;
    }
    CHECK(count == 4);
    CHECK(ys.size() == 1); // horizontal: one distinct y
}

TEST_CASE("svg: one polyline per optimizer, legend entries, escaping") {
    bench::LossTrace a, b;
    a.mean = {1.0, 0.1, 0.01};
    b.mean = {2.0, 1.0, 0.5};
    a.runs = {a.mean};
    b.runs = {b.mean};
    testutil::TempDir tmp("nlsq_svg2");
    bench::render_svg_plot({{"fast&low", a}, {"slow", b}}, tmp.str("two.svg"));
    const std::string svg = testutil::read_file(tmp.str("two.svg"));
    CHECK(testutil::xml_well_formed(svg));
    std::size_t polylines = 0;
    for (std::size_t at = svg.find("<polyline"); at != std::string::npos;
         at = svg.find("<polyline", at + 1)) {
        ++polylines;
    }
    CHECK(polylines == 2);
    CHECK(svg.find("fast&amp;low") != std::string::npos);
}

TEST_CASE("svg: empty trace list is rejected") {
    testutil::TempDir tmp("nlsq_svg3");
    CHECK_THROWS_AS(bench::render_svg_plot({}, tmp.str("x.svg")), ConfigError);
}

TEST_CASE("svg: exact-zero losses stay on a readable axis") {
    bench::LossTrace t;
    t.mean = {1.0, 0.01, 0.0};
    t.runs = {t.mean};
    testutil::TempDir tmp("nlsq_svg4");
    bench::render_svg_plot({{"opt", t}}, tmp.str("zero.svg"));
    const std::string svg = testutil::read_file(tmp.str("zero.svg"));
    CHECK(testutil::xml_well_formed(svg));
    // axis bottoms out a decade under the smallest positive value, not at
    // the double-precision floor
    CHECK(svg.find("0.001<") != std::string::npos);
    CHECK(svg.find("e-300") == std::string::npos);
}

TEST_CASE("run_and_write produces loss.csv, plot.svg, meta.txt") {
    testutil::TempDir tmp("nlsq_runwrite");
    bench::ExperimentConfig cfg = tiny_config();
    cfg.output_dir = tmp.str();
    const std::string dir = bench::run_and_write(cfg);
    namespace fs = std::filesystem;
    CHECK(fs::exists(fs::path(dir) / "loss.csv"));
    CHECK(fs::exists(fs::path(dir) / "plot.svg"));
    CHECK(fs::exists(fs::path(dir) / "meta.txt"));

    const std::string meta = testutil::read_file((fs::path(dir) / "meta.txt").string());
    CHECK(meta.find("n = ") != std::string::npos);
    CHECK(meta.find("L = 128") != std::string::npos);
    CHECK(meta.find("B = 3") != std::string::npos);
    CHECK(meta.find("gamma = 3") != std::string::npos);
}

TEST_CASE("run_and_write emits per-optimizer files when several are configured") {
    testutil::TempDir tmp("nlsq_runwrite2");
    const std::string text = R"(
name = pair
dataset.kind = synth
dataset.samples = 16
dataset.side = 4
model.layers = 16,4,16
model.activations = relu,sigmoid
optimizers = sgd, adagrad
epochs = 1
runs = 1
samples_per_batch = 8
)";
    bench::ExperimentConfig cfg = bench::parse_config_text(text, "");
    cfg.output_dir = tmp.str();
    const std::string dir = bench::run_and_write(cfg);
    namespace fs = std::filesystem;
    CHECK(fs::exists(fs::path(dir) / "loss.csv"));
    CHECK(fs::exists(fs::path(dir) / "loss_sgd.csv"));
    CHECK(fs::exists(fs::path(dir) / "loss_adagrad.csv"));
    // loss.csv mirrors the first configured optimizer
    CHECK(testutil::read_file((fs::path(dir) / "loss.csv").string()) ==
          testutil::read_file((fs::path(dir) / "loss_sgd.csv").string()));
}

TEST_CASE("post-epoch loss mode records the full-training-set loss") {
    bench::ExperimentConfig cfg = tiny_config();
    cfg.post_epoch_loss = true;
    cfg.epochs = 1;
    cfg.runs = 1;
    const auto traces = bench::run_experiment(cfg);
    REQUIRE(traces.size() == 1);
    // distinct from the online pre-step loss of the same config
    bench::ExperimentConfig online = tiny_config();
    online.epochs = 1;
    online.runs = 1;
    const auto online_traces = bench::run_experiment(online);
    CHECK(traces[0].second.mean[0] != online_traces[0].second.mean[0]);
}
