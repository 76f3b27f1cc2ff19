#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcr/corpus.hpp"
#include "fcr/embedding_store.hpp"
#include "fcr/retrieval.hpp"

namespace fcr {

/// Column order of the report table; other languages follow alphabetically.
inline const std::vector<std::string> kReportLanguages = {"fra", "spa", "eng", "por",
                                                          "tha", "deu", "msa", "ara"};

struct EvalCell {
    double value = 0.0;
    std::size_t n_posts = 0;

    bool operator==(const EvalCell&) const = default;
};

struct EvalReport {
    std::string model_id;
    std::size_t k = 10;
    /// Monolingual-track posts grouped by post language.
    std::map<std::string, EvalCell> per_lang;
    /// Crosslingual-track posts; absent when there are none.
    std::optional<EvalCell> crosslingual;
    /// Post-weighted mean over the monolingual cells.
    double average = 0.0;
    /// Unweighted mean over the monolingual cells.
    double average_unweighted = 0.0;
    /// Ranked posts skipped because they have no gold fact-check.
    std::size_t excluded_posts = 0;

    bool operator==(const EvalReport&) const = default;
};

/// Fraction of ranked posts with at least one gold fact-check in their top k.
/// Throws DataError if a ranked post has no gold pair.
double success_at_k(std::span<const RankedList> rankings, const std::set<GoldPair>& gold,
                    std::size_t k);

/// Per-language and crosslingual S@K. Posts without gold are skipped and
/// counted. Every language in `required_langs` must have at least one post.
EvalReport evaluate(const Corpus& corpus, std::span<const RankedList> rankings, std::size_t k,
                    const std::string& model_id = {},
                    const std::vector<std::string>& required_langs = {});

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);
void save_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);

/// Aligned text table, one row per report.
std::string format_report_table(std::span<const EvalReport> reports);

struct SynthConfig {
    int n_langs = 3;
    int posts_per_lang = 200;
    int distractors_per_lang = 1000;
    int dim = 32;
    double noise = 0.3;
    /// Index of the language whose fact-checks are rotated; none when unset.
    std::optional<int> rotate_lang;
    std::uint64_t seed = 7;

    void validate() const;
};

struct SyntheticData {
    Corpus corpus;
    EmbeddingMatrix posts;
    EmbeddingMatrix factchecks;
    std::vector<std::string> languages;  ///< in generation order
};

/// Seeded synthetic corpus with known geometry.
///
/// Each gold pair shares a random content vector u; post and fact-check are
/// normalize(u + noise) with isotropic noise of expected norm `noise`. Every
/// language also gets independent random distractor fact-checks.
///
/// With `rotate_lang` set, content vectors live in the first dim/2
/// coordinates and the rotated language's fact-checks are multiplied by an
/// orthogonal R that maps that subspace onto its complement. The posts paired
/// with those fact-checks are written in the other languages, so they form the
/// crosslingual track, and a zero-shot search sees them as near orthogonal.
/// One shared linear map can undo R on the complement while leaving the
/// content subspace alone.
SyntheticData make_synthetic(const SynthConfig& cfg);

}  // namespace fcr
