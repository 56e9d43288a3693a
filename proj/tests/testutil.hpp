#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlsq/numkit.hpp"
#include "nlsq/rng.hpp"

namespace testutil {

// Scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str(const std::string& leaf = "") const {
        return leaf.empty() ? path_.string() : (path_ / leaf).string();
    }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// Relative error with an absolute guard so finite-difference noise on
// near-zero coordinates does not register as disagreement.
inline double guarded_rel_err(double a, double b, double floor = 1e-3) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline nlsq::numkit::Vector random_vector(nlsq::Rng& rng, std::size_t n, double lo, double hi) {
    nlsq::numkit::Vector v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Singular values of a general matrix via Jacobi eigenvalue iteration on
// M^T M. Plenty for the small matrices the tests use.
inline std::vector<double> singular_values(const nlsq::numkit::Matrix& m) {
    const std::size_t n = m.cols();
    nlsq::numkit::Matrix a(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < m.rows(); ++k) s += m(k, i) * m(k, j);
            a(i, j) = s;
        }
    }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        }
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> sv(n);
    for (std::size_t i = 0; i < n; ++i) sv[i] = std::sqrt(std::max(0.0, a(i, i)));
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

// Minimal XML well-formedness check: tags balance and nest properly.
inline bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        const std::size_t close = text.find('>', i);
        if (close == std::string::npos) return false;
        std::string tag = text.substr(i + 1, close - i - 1);
        i = close + 1;
        if (tag.empty()) return false;
        if (tag[0] == '?' || tag[0] == '!') continue;
        const bool self_closing = tag.back() == '/';
        if (self_closing) tag.pop_back();
        const bool closing = tag[0] == '/';
        if (closing) tag = tag.substr(1);
        const std::size_t space = tag.find_first_of(" \t\n");
        const std::string name = space == std::string::npos ? tag : tag.substr(0, space);
        if (name.empty()) return false;
        if (self_closing) continue;
        if (closing) {
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else {
            stack.push_back(name);
        }
    }
    return stack.empty();
}

} // namespace testutil
