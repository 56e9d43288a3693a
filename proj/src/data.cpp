#include "nlsq/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nlsq/errors.hpp"
#include "nlsq/rng.hpp"

namespace nlsq::data {
namespace {

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return end == text.c_str() + text.size();
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        const auto lo = field.find_first_not_of(" \t\r");
        const auto hi = field.find_last_not_of(" \t\r");
        fields.push_back(lo == std::string::npos ? "" : field.substr(lo, hi - lo + 1));
    }
    return fields;
}

void standardize_columns(numkit::Matrix& m) {
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    for (std::size_t c = 0; c < cols; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < rows; ++r) mean += m(r, c);
        mean /= static_cast<double>(rows);
        double var = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = m(r, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(rows);
        const double stddev = var > 1e-24 ? std::sqrt(var) : 1.0;
        for (std::size_t r = 0; r < rows; ++r) m(r, c) = (m(r, c) - mean) / stddev;
    }
}

std::uint32_t read_be_u32(std::istream& in, const char* what) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw FormatError(std::string("idx: truncated while reading ") + what);
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_be_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char buf[4] = {
        static_cast<unsigned char>((v >> 24) & 0xFF),
        static_cast<unsigned char>((v >> 16) & 0xFF),
        static_cast<unsigned char>((v >> 8) & 0xFF),
        static_cast<unsigned char>(v & 0xFF),
    };
    out.write(reinterpret_cast<const char*>(buf), 4);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Smooth nonnegative profile: a low-frequency sinusoid with random frequency,
// phase and amplitude, kept inside [0,1].
numkit::Vector smooth_profile(std::size_t side, Rng& rng) {
    numkit::Vector v(side);
    const double freq = 1.0 + static_cast<double>(rng.below(2)); // 1 or 2 periods
    const double phase = rng.uniform(0.0, kTwoPi);
    const double amp = rng.uniform(0.3, 0.5);
    for (std::size_t i = 0; i < side; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(side);
        v[i] = 0.5 + amp * std::sin(kTwoPi * freq * t + phase);
    }
    return v;
}

} // namespace

Dataset load_iris_csv(const std::string& path, bool standardize) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::vector<std::array<double, 4>> rows;
    std::vector<std::size_t> labels;
    std::vector<std::string> class_names;

    std::string line;
    std::size_t line_no = 0;
    bool first_content_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::vector<std::string> fields = split_csv_row(line);

        if (first_content_row) {
            first_content_row = false;
            double probe;
            if (!fields.empty() && !parse_double(fields[0], probe)) continue; // header row
        }

        if (fields.size() != 5) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        }
        std::array<double, 4> feat{};
        for (std::size_t c = 0; c < 4; ++c) {
            if (!parse_double(fields[c], feat[c])) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": bad numeric field '" +
                                 fields[c] + "'");
            }
        }
        double numeric_label;
        if (fields[4].empty() || parse_double(fields[4], numeric_label)) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": unknown class label '" +
                             fields[4] + "'");
        }
        auto it = std::find(class_names.begin(), class_names.end(), fields[4]);
        std::size_t cls;
        if (it == class_names.end()) {
            cls = class_names.size();
            class_names.push_back(fields[4]);
        } else {
            cls = static_cast<std::size_t>(it - class_names.begin());
        }
        rows.push_back(feat);
        labels.push_back(cls);
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");

    Dataset ds;
    ds.name = "iris";
    ds.class_names = class_names;
    ds.features = numkit::Matrix(rows.size(), 4);
    ds.targets = numkit::Matrix(rows.size(), class_names.size(), 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < 4; ++c) ds.features(r, c) = rows[r][c];
        ds.targets(r, labels[r]) = 1.0;
    }
    if (standardize) standardize_columns(ds.features);
    return ds;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream in(images_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + images_path);

    const std::uint32_t magic = read_be_u32(in, "image magic");
    if (magic != 0x00000803u) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "0x%08x", magic);
        throw FormatError(images_path + ": bad image magic " + buf);
    }
    const std::uint32_t count = read_be_u32(in, "image count");
    const std::uint32_t rows = read_be_u32(in, "image rows");
    const std::uint32_t cols = read_be_u32(in, "image cols");
    const std::size_t dim = std::size_t(rows) * cols;

    // validate the promised payload against the actual file size before
    // trusting the header with an allocation
    const std::istream::pos_type body_start = in.tellg();
    in.seekg(0, std::ios::end);
    const std::size_t body_bytes = static_cast<std::size_t>(in.tellg() - body_start);
    in.seekg(body_start);
    if (body_bytes != std::size_t(count) * dim) {
        throw FormatError(images_path + ": pixel payload is " + std::to_string(body_bytes) +
                          " bytes, header promises " + std::to_string(std::size_t(count) * dim));
    }

    std::vector<std::uint8_t> pixels(std::size_t(count) * dim);
    if (!pixels.empty() && !in.read(reinterpret_cast<char*>(pixels.data()),
                                    static_cast<std::streamsize>(pixels.size()))) {
        throw FormatError(images_path + ": truncated pixel data");
    }

    Dataset ds;
    ds.name = "idx";
    ds.features = numkit::Matrix(count, dim);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        ds.features.data()[i] = static_cast<double>(pixels[i]) / 255.0;
    }

    if (labels_path.empty()) {
        ds.targets = ds.features; // autoencoding
        return ds;
    }

    std::ifstream lin(labels_path, std::ios::binary);
    if (!lin) throw IoError("cannot open " + labels_path);
    const std::uint32_t lmagic = read_be_u32(lin, "label magic");
    if (lmagic != 0x00000801u) {
        throw FormatError(labels_path + ": bad label magic");
    }
    const std::uint32_t lcount = read_be_u32(lin, "label count");
    if (lcount != count) throw FormatError(labels_path + ": label/image count mismatch");
    std::vector<std::uint8_t> labels(lcount);
    if (!lin.read(reinterpret_cast<char*>(labels.data()),
                  static_cast<std::streamsize>(labels.size()))) {
        throw FormatError(labels_path + ": truncated label data");
    }
    const std::size_t classes =
        labels.empty() ? 0 : 1 + *std::max_element(labels.begin(), labels.end());
    ds.targets = numkit::Matrix(count, classes, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) ds.targets(i, labels[i]) = 1.0;
    for (std::size_t c = 0; c < classes; ++c) {
        ds.class_names.push_back(std::to_string(c));
    }
    return ds;
}

void write_idx_images(const std::string& path, const std::vector<std::uint8_t>& pixels,
                      std::size_t count, std::size_t rows, std::size_t cols) {
    if (pixels.size() != count * rows * cols) {
        throw DimensionError("write_idx_images: pixel buffer size mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_be_u32(out, 0x00000803u);
    write_be_u32(out, static_cast<std::uint32_t>(count));
    write_be_u32(out, static_cast<std::uint32_t>(rows));
    write_be_u32(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("short write to " + path);
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_be_u32(out, 0x00000801u);
    write_be_u32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
    if (!out) throw IoError("short write to " + path);
}

Dataset synth_autoencoder(std::size_t n_samples, std::size_t side, std::uint64_t seed) {
    if (side < 2) throw DimensionError("synth_autoencoder: side must be >= 2");
    Rng rng(seed);
    const std::size_t dim = side * side;
    Dataset ds;
    ds.name = "synth";
    ds.features = numkit::Matrix(n_samples, dim);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const numkit::Vector u1 = smooth_profile(side, rng);
        const numkit::Vector v1 = smooth_profile(side, rng);
        const numkit::Vector u2 = smooth_profile(side, rng);
        const numkit::Vector v2 = smooth_profile(side, rng);
        const double c1 = rng.uniform(0.4, 0.6);
        const double c2 = 1.0 - c1;
        for (std::size_t i = 0; i < side; ++i) {
            for (std::size_t j = 0; j < side; ++j) {
                double x = c1 * u1[i] * v1[j] + c2 * u2[i] * v2[j];
                x = std::min(1.0, std::max(0.0, x));
                ds.features(s, i * side + j) = x;
            }
        }
    }
    ds.targets = ds.features;
    return ds;
}

std::pair<Dataset, Dataset> shuffle_split(const Dataset& ds, std::size_t head_count,
                                          std::uint64_t seed) {
    if (head_count > ds.sample_count()) {
        throw DimensionError("shuffle_split: head_count exceeds sample count");
    }
    Rng rng(seed);
    const std::vector<std::size_t> order = rng.permutation(ds.sample_count());

    auto take = [&](std::size_t lo, std::size_t hi) {
        Dataset out;
        out.name = ds.name;
        out.class_names = ds.class_names;
        out.features = numkit::Matrix(hi - lo, ds.feature_dim());
        out.targets = numkit::Matrix(hi - lo, ds.target_dim());
        for (std::size_t r = lo; r < hi; ++r) {
            const std::size_t src = order[r];
            for (std::size_t c = 0; c < ds.feature_dim(); ++c) {
                out.features(r - lo, c) = ds.features(src, c);
            }
            for (std::size_t c = 0; c < ds.target_dim(); ++c) {
                out.targets(r - lo, c) = ds.targets(src, c);
            }
        }
        return out;
    };
    return {take(0, head_count), take(head_count, ds.sample_count())};
}

BatchPlan make_batches(const Dataset& ds, std::size_t samples_per_batch,
                       std::size_t output_dim, std::uint64_t epoch_seed) {
    const std::size_t count = ds.sample_count();
    if (samples_per_batch < 1 || samples_per_batch > count) {
        throw DimensionError("make_batches: samples_per_batch out of range");
    }
    Rng rng(epoch_seed);
    std::vector<std::size_t> order = rng.permutation(count);

    BatchPlan plan;
    plan.B = count / samples_per_batch;
    plan.L = samples_per_batch * output_dim;
    plan.dropped = count - plan.B * samples_per_batch;
    plan.batches.resize(plan.B);
    for (std::size_t b = 0; b < plan.B; ++b) {
        plan.batches[b].assign(order.begin() + static_cast<std::ptrdiff_t>(b * samples_per_batch),
                               order.begin() +
                                   static_cast<std::ptrdiff_t>((b + 1) * samples_per_batch));
    }
    return plan;
}

std::pair<numkit::Matrix, numkit::Matrix> gather(const Dataset& ds,
                                                 const std::vector<std::size_t>& indices) {
    numkit::Matrix X(indices.size(), ds.feature_dim());
    numkit::Matrix Y(indices.size(), ds.target_dim());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const std::size_t src = indices[r];
        for (std::size_t c = 0; c < ds.feature_dim(); ++c) X(r, c) = ds.features(src, c);
        for (std::size_t c = 0; c < ds.target_dim(); ++c) Y(r, c) = ds.targets(src, c);
    }
    return {X, Y};
}

} // namespace nlsq::data
