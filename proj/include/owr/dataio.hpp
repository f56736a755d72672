#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "owr/types.hpp"

namespace owr {

/// Immutable labeled feature matrix. Features are stored as the float32
/// values of the on-disk format; learners consume double views.
struct FeatureSet {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<float> features; // n x d row-major
    std::vector<ClassId> labels;
    std::map<ClassId, std::vector<std::size_t>> class_index;

    std::span<const float> row(std::size_t i) const { return {&features[i * d], d}; }

    FeatureVector row_double(std::size_t i) const {
        FeatureVector out(d);
        for (std::size_t j = 0; j < d; ++j)
            out[j] = static_cast<double>(features[i * d + j]);
        return out;
    }

    std::vector<ClassId> class_ids() const;
    std::size_t num_classes() const { return class_index.size(); }
    void rebuild_index();
};

/// Loads either the OWFS binary container or the delimited-text fixture
/// format (label,f1,...,fd per line), sniffing the magic bytes. Rows with
/// non-finite features are dropped with a warning.
FeatureSet load_features(const std::string& path);

/// OWFS: "OWFS", version u32, n u64, d u32, label width u32, then n records
/// of (label i64, d little-endian float32).
void save_features(const FeatureSet& fs, const std::string& path);

struct WhitenStats {
    std::vector<double> mean;
    std::vector<double> std; // floored at 1e-8
};

/// Per-dimension mean/std over the samples of `classes` (all samples when
/// empty). Standard deviations are floored so constant dimensions stay
/// harmless.
WhitenStats compute_whiten_stats(const FeatureSet& fs, const std::vector<ClassId>& classes);

/// x' = (x - mean) / std elementwise.
FeatureSet whiten(const FeatureSet& fs, const WhitenStats& stats);

struct BlobSpec {
    std::vector<double> mean;
    std::vector<double> var_diag; // per-dimension variance
    ClassId class_id = 0;
    std::size_t count = 0;
};

/// Seeded Gaussian blobs; samples of all blobs are laid out blob by blob.
FeatureSet synth_gaussians(const std::vector<BlobSpec>& blobs, std::uint64_t seed);

/// Named presets: "separable3" (3 well-separated blobs, d=10),
/// "xor4" (4 blobs in the plane, opposite corners share a class),
/// "halo" (2 known blobs inside a ring of unknown-class blobs).
FeatureSet synth_preset(const std::string& name, std::uint64_t seed);
bool is_synth_preset(const std::string& name);

/// Class ids the halo preset treats as the unknown ring.
inline constexpr ClassId kHaloRingClass = 100;

} // namespace owr
