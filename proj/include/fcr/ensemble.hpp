#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcr/retrieval.hpp"

namespace fcr {

struct EvalReport;

/// Per-language accuracy weights of one model.
struct ModelProfile {
    std::string model_id;
    std::map<std::string, double> lang_weights;
    double default_weight = 0.0;

    double weight_for(const std::string& lang) const;
    void validate() const;

    bool operator==(const ModelProfile&) const = default;
};

enum class Confidence {
    Similarity,  ///< raw cosine score
    RankLinear,  ///< (K - rank + 1) / K
};

const char* to_string(Confidence c);
Confidence parse_confidence(std::string_view name);

struct FusionConfig {
    Confidence confidence = Confidence::Similarity;
    std::size_t k_out = 10;
    /// K: how many hits of each model's list take part, and the rank-linear denominator.
    std::size_t pool_k = 10;

    void validate() const;
};

struct ModelRanking {
    std::string model_id;
    RankedList ranking;
};

/// Weighted vote over one post's per-model rankings: every candidate scores the
/// sum over models of confidence x the model's weight for `post_lang`. Models
/// weighted 0 contribute nothing, not even candidates.
RankedList fuse(std::span<const ModelRanking> rankings, std::span<const ModelProfile> profiles,
                const std::string& post_lang, const FusionConfig& cfg);

/// Weights are each model's S@10 per language; default is its average S@10.
std::vector<ModelProfile> build_profiles(std::span<const EvalReport> reports);

/// {"model": {"fra": 0.9, ..., "default": 0.8}, ...}
std::vector<ModelProfile> load_profiles(const std::filesystem::path& path);
void save_profiles(std::span<const ModelProfile> profiles, const std::filesystem::path& path);

}  // namespace fcr
