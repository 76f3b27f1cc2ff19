#include "fcr/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "fcr/error.hpp"
#include "fcr/parallel.hpp"

namespace fcr {

const char* to_string(PoolMode mode) {
    switch (mode) {
        case PoolMode::Monolingual: return "monolingual";
        case PoolMode::Crosslingual: return "crosslingual";
        case PoolMode::Track: return "track";
    }
    return "?";
}

PoolMode parse_pool_mode(std::string_view name) {
    if (name == "monolingual") return PoolMode::Monolingual;
    if (name == "crosslingual") return PoolMode::Crosslingual;
    if (name == "track") return PoolMode::Track;
    throw ConfigError("unknown mode '" + std::string(name) +
                      "' (expected monolingual|crosslingual|track)");
}

void RetrievalConfig::validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
}

double dot(std::span<const float> a, std::span<const float> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

std::vector<Hit> top_k(std::span<const float> query, const EmbeddingMatrix& pool,
                       std::span<const std::size_t> pool_rows, std::size_t k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (pool_rows.empty()) throw DataError("empty retrieval pool");
    if (query.size() != pool.dim()) {
        throw DataError("query dim " + std::to_string(query.size()) + " != pool dim " +
                        std::to_string(pool.dim()));
    }
    struct Scored {
        double score;
        std::size_t row;
    };
    std::vector<Scored> scored;
    scored.reserve(pool_rows.size());
    for (std::size_t r : pool_rows) scored.push_back({dot(query, pool.row(r)), r});

    const auto& ids = pool.ids();
    auto before = [&](const Scored& a, const Scored& b) {
        return a.score != b.score ? a.score > b.score : ids[a.row] < ids[b.row];
    };
    std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n),
                      scored.end(), before);

    std::vector<Hit> hits;
    hits.reserve(n);
    for (std::size_t i = 0; i < n; ++i) hits.push_back({ids[scored[i].row], scored[i].score});
    return hits;
}

std::vector<Hit> top_k(std::span<const float> query, const EmbeddingMatrix& pool, std::size_t k) {
    std::vector<std::size_t> rows(pool.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    return top_k(query, pool, rows, k);
}

Retriever::Retriever(const Corpus& corpus, const EmbeddingMatrix& posts,
                     const EmbeddingMatrix& factchecks, RetrievalConfig cfg)
    : corpus_(corpus), posts_(posts), factchecks_(factchecks), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (posts_.kind() != DocKind::Post) throw DataError("query matrix does not hold posts");
    if (factchecks_.kind() != DocKind::FactCheck) {
        throw DataError("pool matrix does not hold fact-checks");
    }
    if (posts_.dim() != factchecks_.dim()) {
        throw DataError("post and fact-check matrices have different dims");
    }
    if (posts_.model_id() != factchecks_.model_id()) {
        throw DataError("post matrix model '" + posts_.model_id() +
                        "' differs from fact-check matrix model '" + factchecks_.model_id() + "'");
    }
    if (!cfg_.model_id.empty() && cfg_.model_id != posts_.model_id()) {
        throw DataError("matrices belong to model '" + posts_.model_id() + "', expected '" +
                        cfg_.model_id + "'");
    }
    if (posts_.channel() != cfg_.channel || factchecks_.channel() != cfg_.channel) {
        throw DataError(std::string("matrices do not match the requested channel ") +
                        to_string(cfg_.channel));
    }
    all_rows_.reserve(corpus_.factchecks().size());
    for (const auto& [id, doc] : corpus_.factchecks()) {
        std::size_t row = factchecks_.row_of(id);
        all_rows_.push_back(row);
        rows_by_lang_[doc.lang].push_back(row);
    }
}

const std::vector<std::size_t>& Retriever::pool_for(const Document& post) const {
    bool mono = cfg_.mode == PoolMode::Monolingual ||
                (cfg_.mode == PoolMode::Track && corpus_.is_monolingual_track(post.id));
    if (!mono) return all_rows_;
    static const std::vector<std::size_t> empty;
    auto it = rows_by_lang_.find(post.lang);
    return it == rows_by_lang_.end() ? empty : it->second;
}

std::size_t Retriever::pool_size(const std::string& post_id) const {
    return pool_for(corpus_.post(post_id)).size();
}

RankedList Retriever::retrieve(const std::string& post_id) const {
    const Document& post = corpus_.post(post_id);
    const auto& pool = pool_for(post);
    if (pool.empty()) {
        throw DataError("no fact-checks in language '" + post.lang + "' for post '" + post_id + "'");
    }
    return RankedList{post_id, top_k(posts_.lookup(post_id), factchecks_, pool, cfg_.k)};
}

std::vector<RankedList> Retriever::retrieve_batch(std::span<const std::string> post_ids,
                                                  unsigned threads) const {
    std::vector<RankedList> out(post_ids.size());
    parallel_for(post_ids.size(), threads, [&](std::size_t i) { out[i] = retrieve(post_ids[i]); });
    return out;
}

void write_rankings(std::ostream& out, std::span<const RankedList> lists) {
    for (const auto& list : lists) {
        std::string line = "{\"post_id\":" + nlohmann::json(list.post_id).dump() + ",\"hits\":[";
        for (std::size_t i = 0; i < list.hits.size(); ++i) {
            if (i > 0) line += ',';
            line += fmt::format("{{\"id\":{},\"score\":{:.6f}}}",
                                nlohmann::json(list.hits[i].id).dump(), list.hits[i].score);
        }
        line += "]}\n";
        out << line;
    }
}

void write_rankings(const std::filesystem::path& path, std::span<const RankedList> lists) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    write_rankings(out, lists);
}

std::vector<RankedList> read_rankings(std::istream& in, const std::string& source) {
    std::vector<RankedList> lists;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto obj = nlohmann::json::parse(text);
            RankedList list;
            list.post_id = obj.at("post_id").get<std::string>();
            for (const auto& h : obj.at("hits")) {
                list.hits.push_back({h.at("id").get<std::string>(), h.at("score").get<double>()});
            }
            lists.push_back(std::move(list));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return lists;
}

std::vector<RankedList> read_rankings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_rankings(in, path.string());
}

}  // namespace fcr
