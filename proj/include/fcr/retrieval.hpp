#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcr/corpus.hpp"
#include "fcr/embedding_store.hpp"

namespace fcr {

/// Candidate pool selection.
///  - Monolingual: fact-checks sharing the post's language.
///  - Crosslingual: every fact-check.
///  - Track: Monolingual for monolingual-track posts, Crosslingual otherwise.
enum class PoolMode { Monolingual, Crosslingual, Track };

const char* to_string(PoolMode mode);
PoolMode parse_pool_mode(std::string_view name);

struct RetrievalConfig {
    std::size_t k = 10;
    PoolMode mode = PoolMode::Monolingual;
    Channel channel = Channel::Original;
    /// Expected model of both matrices; empty accepts whatever they carry.
    std::string model_id;

    void validate() const;
};

struct Hit {
    std::string id;
    double score = 0.0;

    bool operator==(const Hit&) const = default;
};

struct RankedList {
    std::string post_id;
    std::vector<Hit> hits;

    bool operator==(const RankedList&) const = default;
};

/// Ranking order: higher score first, ties by ascending id.
inline bool ranks_before(const Hit& a, const Hit& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
}

/// Dot product accumulated in double, sequentially.
double dot(std::span<const float> a, std::span<const float> b);

/// Exact top-k over `pool_rows` of `pool`. Throws DataError on an empty pool.
std::vector<Hit> top_k(std::span<const float> query, const EmbeddingMatrix& pool,
                       std::span<const std::size_t> pool_rows, std::size_t k);
/// Exact top-k over every row of `pool`.
std::vector<Hit> top_k(std::span<const float> query, const EmbeddingMatrix& pool, std::size_t k);

/// Serves ranked lists for posts of one corpus from one model's matrices.
class Retriever {
public:
    /// Checks kinds, channels, dims and that every corpus fact-check is embedded.
    Retriever(const Corpus& corpus, const EmbeddingMatrix& posts,
              const EmbeddingMatrix& factchecks, RetrievalConfig cfg);

    RankedList retrieve(const std::string& post_id) const;

    /// Results in input order; identical for any thread count.
    std::vector<RankedList> retrieve_batch(std::span<const std::string> post_ids,
                                           unsigned threads = 0) const;

    /// Pool size a post would be ranked against.
    std::size_t pool_size(const std::string& post_id) const;

    const RetrievalConfig& config() const { return cfg_; }

private:
    const std::vector<std::size_t>& pool_for(const Document& post) const;

    const Corpus& corpus_;
    const EmbeddingMatrix& posts_;
    const EmbeddingMatrix& factchecks_;
    RetrievalConfig cfg_;
    std::vector<std::size_t> all_rows_;
    std::map<std::string, std::vector<std::size_t>> rows_by_lang_;
};

/// Rankings JSONL: {"post_id":..., "hits":[{"id":..., "score":...}, ...]},
/// scores with six decimals.
void write_rankings(std::ostream& out, std::span<const RankedList> lists);
void write_rankings(const std::filesystem::path& path, std::span<const RankedList> lists);
std::vector<RankedList> read_rankings(const std::filesystem::path& path);
std::vector<RankedList> read_rankings(std::istream& in, const std::string& source = "<stream>");

}  // namespace fcr
