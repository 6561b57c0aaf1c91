#pragma once

// Generic image descriptors. Any fixed-dimension vector can be supplied
// per image; the built-in extractor pools colour and gradient-orientation
// histograms over eight regions: the whole image, its four quadrants and
// three horizontal strips.

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "aesthmine/detail/strings.hpp"
#include "aesthmine/error.hpp"
#include "aesthmine/image.hpp"

namespace aesthmine {

struct FeatureVector {
    std::vector<double> values;
    std::string extractor_id;

    std::size_t dim() const { return values.size(); }
};

using FeatureMap = std::map<std::string, FeatureVector>;

inline const std::string kBuiltinExtractor = "builtin-layout-v1";
inline const std::string kPrecomputedExtractor = "precomputed";

struct GridSpec {
    std::size_t colour_bins = 8;
    std::size_t orientation_bins = 8;

    std::size_t block_dim() const { return 3 * colour_bins + orientation_bins; }
    std::size_t dim() const { return 8 * block_dim(); }
};

inline constexpr std::size_t kBuiltinFeatureDim = 256;

struct Region {
    std::size_t x0, y0, x1, y1;  // half-open

    bool contains(std::size_t x, std::size_t y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

/// Whole image, quadrants (TL, TR, BL, BR), then strips top to bottom.
inline std::array<Region, 8> layout_regions(std::size_t w, std::size_t h) {
    const std::size_t mx = w / 2, my = h / 2;
    const std::size_t s1 = h / 3, s2 = 2 * h / 3;
    return {{{0, 0, w, h},
             {0, 0, mx, my},
             {mx, 0, w, my},
             {0, my, mx, h},
             {mx, my, w, h},
             {0, 0, w, s1},
             {0, s1, w, s2},
             {0, s2, w, h}}};
}

/// Per region: three per-channel colour histograms and one magnitude-weighted
/// orientation histogram of grey-level central differences (interior pixels
/// only). Every histogram block is L1-normalized, or left at zero when empty.
inline FeatureVector extract_builtin_features(const Image& img, const GridSpec& grid = {}) {
    if (img.width < 3 || img.height < 3) throw ArgumentError("builtin features need an image of at least 3x3 pixels");
    if (img.rgb.size() != img.width * img.height * 3) throw ArgumentError("image buffer size mismatch");
    const auto regions = layout_regions(img.width, img.height);
    const std::size_t cb = grid.colour_bins, ob = grid.orientation_bins, bd = grid.block_dim();

    FeatureVector fv;
    fv.extractor_id = kBuiltinExtractor;
    fv.values.assign(grid.dim(), 0.0);

    auto grey = [&](std::size_t x, std::size_t y) {
        return (static_cast<double>(img.at(x, y, 0)) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0;
    };
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) {
            std::array<std::size_t, 3> cbin{};
            for (std::size_t c = 0; c < 3; ++c) cbin[c] = img.at(x, y, c) * cb / 256;
            double mag = 0.0;
            std::size_t obin = 0;
            if (x > 0 && y > 0 && x + 1 < img.width && y + 1 < img.height) {
                const double gx = grey(x + 1, y) - grey(x - 1, y);
                const double gy = grey(x, y + 1) - grey(x, y - 1);
                mag = std::hypot(gx, gy);
                if (mag > 0.0) {
                    double angle = std::atan2(gy, gx);
                    if (angle < 0.0) angle += 2.0 * std::numbers::pi;
                    obin = static_cast<std::size_t>(angle / (2.0 * std::numbers::pi) * static_cast<double>(ob)) % ob;
                }
            }
            for (std::size_t r = 0; r < regions.size(); ++r) {
                if (!regions[r].contains(x, y)) continue;
                double* block = fv.values.data() + r * bd;
                for (std::size_t c = 0; c < 3; ++c) block[c * cb + cbin[c]] += 1.0;
                block[3 * cb + obin] += mag;
            }
        }

    for (std::size_t r = 0; r < regions.size(); ++r) {
        double* block = fv.values.data() + r * bd;
        auto normalize = [](double* p, std::size_t n) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += p[i];
            if (s > 0.0)
                for (std::size_t i = 0; i < n; ++i) p[i] /= s;
        };
        for (std::size_t c = 0; c < 3; ++c) normalize(block + c * cb, cb);
        normalize(block + 3 * cb, ob);
    }
    return fv;
}

// ---------------------------------------------------------------------------
// Feature cache: one "id dim v1 .. vd" line per image, space separated.

inline void write_feature_cache(const std::string& path, const FeatureMap& features) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write feature cache: " + path);
    for (const auto& [id, fv] : features) {
        out << id << ' ' << fv.dim();
        for (double v : fv.values) out << ' ' << detail::format_double(v);
        out << '\n';
    }
}

inline FeatureMap read_feature_cache(const std::string& path, const std::string& extractor_id = kPrecomputedExtractor) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read feature cache: " + path);
    FeatureMap out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::istringstream ls(line);
        std::string id;
        std::size_t dim = 0;
        if (!(ls >> id >> dim)) throw ParseError("expected \"id dim v1 .. vd\"", line_no);
        FeatureVector fv;
        fv.extractor_id = extractor_id;
        fv.values.resize(dim);
        for (auto& v : fv.values)
            if (!(ls >> v) || !std::isfinite(v)) throw ParseError("missing or non-finite feature value", line_no);
        double extra;
        if (ls >> extra) throw ParseError("more values than the declared dimension", line_no);
        if (!out.emplace(id, std::move(fv)).second) throw ValidationError("duplicate id in feature cache: " + id);
    }
    return out;
}

}  // namespace aesthmine
