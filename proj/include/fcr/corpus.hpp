#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace fcr {

enum class DocKind { Post, FactCheck };

const char* to_string(DocKind kind);

/// A post or a fact-check with its two text channels.
struct Document {
    std::string id;
    DocKind kind = DocKind::Post;
    std::string lang;
    std::string text_original;
    /// Machine translation; absent when the source file omits it.
    std::optional<std::string> text_english;
    /// OCR text extracted from attached images. Posts only.
    std::optional<std::string> ocr_text;

    bool operator==(const Document&) const = default;
};

using GoldPair = std::pair<std::string, std::string>;  // (post_id, factcheck_id)

/// Immutable post / fact-check collection with referential integrity on gold pairs.
class Corpus {
public:
    Corpus() = default;

    /// Validates every invariant. Throws DataError on dangling pair references,
    /// duplicate ids or malformed documents.
    Corpus(std::vector<Document> posts, std::vector<Document> factchecks,
           std::vector<GoldPair> pairs);

    const std::map<std::string, Document>& posts() const { return posts_; }
    const std::map<std::string, Document>& factchecks() const { return factchecks_; }
    const std::set<GoldPair>& gold() const { return gold_; }
    const std::set<std::string>& languages() const { return languages_; }

    const Document& post(const std::string& id) const;
    const Document& factcheck(const std::string& id) const;

    /// Gold fact-check ids for a post (empty when it has none).
    std::vector<std::string> gold_for(const std::string& post_id) const;

    /// A post belongs to the monolingual track when at least one of its gold
    /// fact-checks shares its language; otherwise, if it has gold, to the
    /// crosslingual track.
    bool is_monolingual_track(const std::string& post_id) const;
    bool has_gold(const std::string& post_id) const;

    bool operator==(const Corpus&) const = default;

private:
    std::map<std::string, Document> posts_;
    std::map<std::string, Document> factchecks_;
    std::set<GoldPair> gold_;
    std::set<std::string> languages_;
    std::multimap<std::string, std::string> gold_by_post_;
};

struct LoadOptions {
    /// Reject documents missing the `english` field.
    bool require_english = false;
};

Corpus load_corpus(const std::filesystem::path& posts_path,
                   const std::filesystem::path& factchecks_path,
                   const std::filesystem::path& pairs_path,
                   const LoadOptions& options = {});

/// Loads `posts.jsonl`, `factchecks.jsonl`, `pairs.jsonl` from a directory.
Corpus load_corpus_dir(const std::filesystem::path& dir, const LoadOptions& options = {});

/// Writes the three JSONL files into `dir` in id order.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Ids of each kind whose language equals `lang`, in lexicographic order.
std::pair<std::vector<std::string>, std::vector<std::string>>
split_by_language(const Corpus& corpus, const std::string& lang);

}  // namespace fcr
