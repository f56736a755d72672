#include "owr/dataio.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "owr/errors.hpp"
#include "owr/log.hpp"

namespace owr {

namespace {

constexpr char kMagic[4] = {'O', 'W', 'F', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kLabelWidth = 8;

bool row_finite(std::span<const float> row) {
    for (float v : row)
        if (!std::isfinite(v)) return false;
    return true;
}

FeatureSet drop_nonfinite(FeatureSet fs) {
    FeatureSet out;
    out.d = fs.d;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < fs.n; ++i) {
        auto row = fs.row(i);
        if (!row_finite(row)) {
            ++dropped;
            continue;
        }
        out.features.insert(out.features.end(), row.begin(), row.end());
        out.labels.push_back(fs.labels[i]);
    }
    out.n = out.labels.size();
    if (dropped > 0)
        log::warn("dataio: dropped " + std::to_string(dropped) + " non-finite rows");
    out.rebuild_index();
    return out;
}

FeatureSet load_owfs(std::FILE* f, const std::string& path) {
    auto fail = [&](const std::string& what) -> ParseError {
        long off = std::ftell(f);
        return ParseError(path + ": " + what + " (offset " + std::to_string(off) + ")");
    };
    char magic[4];
    if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw fail("bad magic");
    std::uint32_t version = 0, d = 0, label_width = 0;
    std::uint64_t n = 0;
    if (std::fread(&version, 4, 1, f) != 1 || version != kVersion)
        throw fail("unsupported version");
    if (std::fread(&n, 8, 1, f) != 1) throw fail("truncated header");
    if (std::fread(&d, 4, 1, f) != 1 || d == 0) throw fail("bad dimension");
    if (std::fread(&label_width, 4, 1, f) != 1 || label_width != kLabelWidth)
        throw fail("unsupported label width");

    FeatureSet fs;
    fs.n = n;
    fs.d = d;
    fs.labels.resize(n);
    fs.features.resize(n * static_cast<std::size_t>(d));
    for (std::uint64_t i = 0; i < n; ++i) {
        std::int64_t label = 0;
        if (std::fread(&label, 8, 1, f) != 1)
            throw fail("truncated record " + std::to_string(i));
        fs.labels[i] = label;
        if (std::fread(&fs.features[i * d], 4, d, f) != d)
            throw fail("truncated record " + std::to_string(i));
    }
    return drop_nonfinite(std::move(fs));
}

FeatureSet load_text(const std::string& path) {
    std::ifstream in(path);
    FeatureSet fs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<float> values;
        ClassId label = 0;
        bool first = true;
        while (std::getline(ss, field, ',')) {
            std::size_t pos = 0;
            try {
                if (first) {
                    label = std::stoll(field, &pos);
                } else {
                    values.push_back(std::stof(field, &pos));
                }
            } catch (const std::exception&) {
                throw ParseError(path + ": line " + std::to_string(lineno) +
                                 ": bad field '" + field + "'");
            }
            first = false;
        }
        if (first)
            throw ParseError(path + ": line " + std::to_string(lineno) + ": no fields");
        if (fs.d == 0) {
            if (values.empty())
                throw ParseError(path + ": line " + std::to_string(lineno) +
                                 ": no feature fields");
            fs.d = values.size();
        }
        if (values.size() != fs.d)
            throw ParseError(path + ": line " + std::to_string(lineno) + ": expected " +
                             std::to_string(fs.d) + " features, got " +
                             std::to_string(values.size()));
        fs.labels.push_back(label);
        fs.features.insert(fs.features.end(), values.begin(), values.end());
    }
    fs.n = fs.labels.size();
    return drop_nonfinite(std::move(fs));
}

} // namespace

std::vector<ClassId> FeatureSet::class_ids() const {
    std::vector<ClassId> ids;
    ids.reserve(class_index.size());
    for (const auto& [id, rows] : class_index)
        ids.push_back(id);
    return ids;
}

void FeatureSet::rebuild_index() {
    class_index.clear();
    for (std::size_t i = 0; i < n; ++i)
        class_index[labels[i]].push_back(i);
}

FeatureSet load_features(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr)
        throw ParseError(path + ": cannot open file");
    char magic[4] = {0, 0, 0, 0};
    std::size_t got = std::fread(magic, 1, 4, f);
    if (got == 4 && std::memcmp(magic, kMagic, 4) == 0) {
        std::rewind(f);
        try {
            FeatureSet fs = load_owfs(f, path);
            std::fclose(f);
            return fs;
        } catch (...) {
            std::fclose(f);
            throw;
        }
    }
    std::fclose(f);
    return load_text(path);
}

void save_features(const FeatureSet& fs, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr)
        throw Error(path + ": cannot open file for writing");
    std::fwrite(kMagic, 1, 4, f);
    std::fwrite(&kVersion, 4, 1, f);
    std::uint64_t n = fs.n;
    std::uint32_t d = static_cast<std::uint32_t>(fs.d);
    std::fwrite(&n, 8, 1, f);
    std::fwrite(&d, 4, 1, f);
    std::fwrite(&kLabelWidth, 4, 1, f);
    for (std::size_t i = 0; i < fs.n; ++i) {
        std::int64_t label = fs.labels[i];
        std::fwrite(&label, 8, 1, f);
        std::fwrite(&fs.features[i * fs.d], 4, fs.d, f);
    }
    std::fclose(f);
}

WhitenStats compute_whiten_stats(const FeatureSet& fs, const std::vector<ClassId>& classes) {
    std::vector<std::size_t> rows;
    if (classes.empty()) {
        rows.resize(fs.n);
        for (std::size_t i = 0; i < fs.n; ++i)
            rows[i] = i;
    } else {
        for (ClassId c : classes) {
            auto it = fs.class_index.find(c);
            if (it == fs.class_index.end()) continue;
            rows.insert(rows.end(), it->second.begin(), it->second.end());
        }
    }
    if (rows.empty())
        throw InvalidInputError("dataio: no samples to compute whitening stats from");

    WhitenStats stats;
    stats.mean.assign(fs.d, 0.0);
    stats.std.assign(fs.d, 0.0);
    for (std::size_t i : rows) {
        auto row = fs.row(i);
        for (std::size_t j = 0; j < fs.d; ++j)
            stats.mean[j] += row[j];
    }
    for (std::size_t j = 0; j < fs.d; ++j)
        stats.mean[j] /= static_cast<double>(rows.size());
    for (std::size_t i : rows) {
        auto row = fs.row(i);
        for (std::size_t j = 0; j < fs.d; ++j) {
            const double delta = row[j] - stats.mean[j];
            stats.std[j] += delta * delta;
        }
    }
    for (std::size_t j = 0; j < fs.d; ++j) {
        stats.std[j] = std::sqrt(stats.std[j] / static_cast<double>(rows.size()));
        if (stats.std[j] < 1e-8) stats.std[j] = 1e-8;
    }
    return stats;
}

FeatureSet whiten(const FeatureSet& fs, const WhitenStats& stats) {
    if (stats.mean.size() != fs.d || stats.std.size() != fs.d)
        throw InvalidInputError("dataio: whitening stats dimension mismatch");
    FeatureSet out = fs;
    for (std::size_t i = 0; i < fs.n; ++i) {
        for (std::size_t j = 0; j < fs.d; ++j) {
            const double v = (static_cast<double>(fs.features[i * fs.d + j]) - stats.mean[j]) /
                             stats.std[j];
            out.features[i * fs.d + j] = static_cast<float>(v);
        }
    }
    return out;
}

FeatureSet synth_gaussians(const std::vector<BlobSpec>& blobs, std::uint64_t seed) {
    if (blobs.empty())
        throw InvalidInputError("dataio: no blobs specified");
    const std::size_t d = blobs.front().mean.size();
    for (const BlobSpec& b : blobs) {
        if (b.mean.size() != d || b.var_diag.size() != d)
            throw InvalidInputError("dataio: blob dimension mismatch");
        if (b.count == 0)
            throw InvalidInputError("dataio: blob counts must be positive");
        for (double v : b.var_diag)
            if (v < 0.0)
                throw InvalidInputError("dataio: blob variances must be non-negative");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    FeatureSet fs;
    fs.d = d;
    for (const BlobSpec& b : blobs) {
        std::vector<double> sigma(d);
        for (std::size_t j = 0; j < d; ++j)
            sigma[j] = std::sqrt(b.var_diag[j]);
        for (std::size_t i = 0; i < b.count; ++i) {
            for (std::size_t j = 0; j < d; ++j)
                fs.features.push_back(static_cast<float>(b.mean[j] + sigma[j] * unit(rng)));
            fs.labels.push_back(b.class_id);
        }
    }
    fs.n = fs.labels.size();
    fs.rebuild_index();
    return fs;
}

namespace {

std::vector<double> axis_point(std::size_t d, std::size_t axis, double value) {
    std::vector<double> p(d, 0.0);
    p[axis] = value;
    return p;
}

} // namespace

bool is_synth_preset(const std::string& name) {
    return name == "separable3" || name == "xor4" || name == "halo";
}

FeatureSet synth_preset(const std::string& name, std::uint64_t seed) {
    if (name == "separable3") {
        const std::size_t d = 10;
        std::vector<BlobSpec> blobs;
        for (std::size_t k = 0; k < 3; ++k)
            blobs.push_back({axis_point(d, k, 4.0), std::vector<double>(d, 1.0),
                             static_cast<ClassId>(k), 500});
        return synth_gaussians(blobs, seed);
    }
    if (name == "xor4") {
        const std::size_t d = 2;
        const double c = 2.5;
        const std::vector<double> var(d, 0.25);
        std::vector<BlobSpec> blobs = {
            {{+c, +c}, var, 0, 600},
            {{-c, -c}, var, 0, 600},
            {{-c, +c}, var, 1, 600},
            {{+c, -c}, var, 1, 600},
        };
        return synth_gaussians(blobs, seed);
    }
    if (name == "halo") {
        // Two known blobs on a hidden axis (dim 2) with an unknown ring far
        // outside in the (1,2)-plane. A truncated-identity metric of rank 2
        // cannot see the class split, so the layout exercises online metric
        // learning and threshold adaptation rather than raw distances.
        const std::size_t d = 6;
        const std::vector<double> var(d, 1.0);
        std::vector<BlobSpec> blobs;
        std::vector<double> up(d, 0.0), down(d, 0.0);
        up[2] = 2.4;
        down[2] = -2.4;
        blobs.push_back({up, var, 0, 1500});
        blobs.push_back({down, var, 1, 1500});
        const double ring_radius = 12.0;
        const std::vector<double> ring_var(d, 0.5);
        for (int k = 0; k < 8; ++k) {
            const double angle = 2.0 * M_PI * k / 8.0 + 0.3;
            std::vector<double> center(d, 0.0);
            center[1] = ring_radius * std::cos(angle);
            center[2] = ring_radius * std::sin(angle);
            blobs.push_back({center, ring_var, kHaloRingClass, 200});
        }
        return synth_gaussians(blobs, seed);
    }
    throw InvalidInputError("dataio: unknown synth preset '" + name + "'");
}

} // namespace owr
