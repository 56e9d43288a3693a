#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "nlsq/bench.hpp"
#include "nlsq/errors.hpp"

namespace nlsq::bench {
namespace {

constexpr double kWidth = 880.0;
constexpr double kHeight = 540.0;
constexpr double kLeft = 78.0;
constexpr double kRight = kWidth - 190.0; // room for the legend
constexpr double kTop = 34.0;
constexpr double kBottom = kHeight - 62.0;
constexpr double kLossFloor = 1e-300;

const char* kPalette[] = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
};

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

void render_svg_plot(const std::vector<std::pair<std::string, LossTrace>>& traces,
                     const std::string& path) {
    if (traces.empty()) throw ConfigError("render_svg_plot: no traces");
    std::size_t epochs = 0;
    double hi = -std::numeric_limits<double>::infinity();
    double min_positive = std::numeric_limits<double>::infinity();
    bool has_nonpositive = false;
    for (const auto& [name, trace] : traces) {
        if (trace.mean.empty()) throw ConfigError("render_svg_plot: empty mean series");
        epochs = std::max(epochs, trace.mean.size());
        for (double v : trace.mean) {
            if (v > 0.0) min_positive = std::min(min_positive, v);
            else has_nonpositive = true;
            hi = std::max(hi, std::max(v, kLossFloor));
        }
    }
    // exact-zero losses land one decade under the smallest positive value
    // instead of stretching the axis to the clamp floor
    if (!std::isfinite(min_positive)) min_positive = 1.0;
    const double floor = min_positive / 10.0;
    const double lo = has_nonpositive ? floor : min_positive;
    hi = std::max(hi, lo);

    double log_lo = std::log10(lo);
    double log_hi = std::log10(hi);
    if (log_hi - log_lo < 1e-9) { // flat series: pad a decade each way
        log_lo -= 1.0;
        log_hi += 1.0;
    }

    const auto x_at = [&](std::size_t e) {
        if (epochs <= 1) return (kLeft + kRight) / 2.0;
        return kLeft + (kRight - kLeft) * static_cast<double>(e) /
                           static_cast<double>(epochs - 1);
    };
    const auto y_at = [&](double v) {
        const double t = (std::log10(std::max(v, floor)) - log_lo) / (log_hi - log_lo);
        return kBottom - t * (kBottom - kTop);
    };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"white\"/>\n";

    // frame
    out << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\""
        << fmt(kRight - kLeft) << "\" height=\"" << fmt(kBottom - kTop)
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

    // y ticks and gridlines at loss decades; 1-2-5 subdivisions when the
    // data spans fewer than three decades
    const int dec_lo = static_cast<int>(std::floor(log_lo));
    const int dec_hi = static_cast<int>(std::ceil(log_hi));
    const int dec_step = std::max(1, (dec_hi - dec_lo) / 8 + ((dec_hi - dec_lo) % 8 ? 1 : 0));
    const bool subdivide = (dec_hi - dec_lo) <= 3;
    for (int d = dec_lo; d <= dec_hi; d += dec_step) {
        for (const double mant : {1.0, 2.0, 5.0}) {
            if (mant > 1.0 && !subdivide) break;
            const double value = mant * std::pow(10.0, d);
            const double lv = std::log10(value);
            if (lv < log_lo - 1e-12 || lv > log_hi + 1e-12) continue;
            const double y = y_at(value);
            out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(y) << "\" x2=\""
                << fmt(kRight) << "\" y2=\"" << fmt(y)
                << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
            char label[40];
            std::snprintf(label, sizeof(label), "%g", value);
            out << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(y + 4)
                << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" << label
                << "</text>\n";
        }
    }

    // x ticks at up to 10 epoch marks
    const std::size_t x_step = std::max<std::size_t>(1, (epochs + 9) / 10);
    for (std::size_t e = 0; e < epochs; e += x_step) {
        const double x = x_at(e);
        out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kBottom) << "\" x2=\"" << fmt(x)
            << "\" y2=\"" << fmt(kBottom + 5) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kBottom + 20)
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
            << (e + 1) << "</text>\n";
    }

    // axis labels
    out << "<text x=\"" << fmt((kLeft + kRight) / 2) << "\" y=\"" << fmt(kHeight - 14)
        << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">Epochs"
        << "</text>\n";
    out << "<text x=\"20\" y=\"" << fmt((kTop + kBottom) / 2)
        << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
        << "transform=\"rotate(-90 20 " << fmt((kTop + kBottom) / 2) << ")\">Loss</text>\n";

    // one polyline per optimizer mean series
    std::size_t color = 0;
    for (const auto& [name, trace] : traces) {
        out << "<polyline fill=\"none\" stroke=\"" << kPalette[color % 10]
            << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t e = 0; e < trace.mean.size(); ++e) {
            if (e) out << ' ';
            out << fmt(x_at(e)) << ',' << fmt(y_at(trace.mean[e]));
        }
        out << "\"/>\n";
        ++color;
    }

    // legend
    double ly = kTop + 10.0;
    const double lx = kRight + 14.0;
    color = 0;
    for (const auto& [name, trace] : traces) {
        out << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(lx + 26)
            << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << kPalette[color % 10]
            << "\" stroke-width=\"2.5\"/>\n";
        out << "<text x=\"" << fmt(lx + 32) << "\" y=\"" << fmt(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(name)
            << "</text>\n";
        ly += 20.0;
        ++color;
    }

    out << "</svg>\n";

    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot write " + path);
    file << out.str();
    if (!file) throw IoError("short write to " + path);
}

} // namespace nlsq::bench
