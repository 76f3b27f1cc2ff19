#include "fcr/corpus.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "fcr/error.hpp"

namespace fcr {

namespace {

using nlohmann::json;

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    });
}

bool valid_lang(const std::string& lang) {
    return !lang.empty() &&
           std::all_of(lang.begin(), lang.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

std::string required_string(const json& obj, const char* key,
                            const std::filesystem::path& path, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw DataError(where(path, line) + ": missing or non-string field '" + key + "'");
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key,
                                           const std::filesystem::path& path,
                                           std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
        throw DataError(where(path, line) + ": field '" + key + "' must be a string");
    }
    return it->get<std::string>();
}

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (is_blank(text)) continue;
        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            throw DataError(where(path, line_no) + ": malformed JSON: " + e.what());
        }
        if (!obj.is_object()) {
            throw DataError(where(path, line_no) + ": expected a JSON object");
        }
        fn(obj, line_no);
    }
}

std::vector<Document> read_documents(const std::filesystem::path& path, DocKind kind,
                                     const LoadOptions& options) {
    std::vector<Document> docs;
    for_each_json_line(path, [&](const json& obj, std::size_t line) {
        Document doc;
        doc.kind = kind;
        doc.id = required_string(obj, "id", path, line);
        doc.lang = required_string(obj, "lang", path, line);
        doc.text_original = required_string(obj, "text", path, line);
        doc.text_english = optional_string(obj, "english", path, line);
        if (kind == DocKind::Post) {
            doc.ocr_text = optional_string(obj, "ocr", path, line);
        }
        if (options.require_english && !doc.text_english) {
            throw DataError(where(path, line) + ": document '" + doc.id +
                            "' has no English translation");
        }
        docs.push_back(std::move(doc));
    });
    return docs;
}

void validate_document(const Document& doc) {
    if (doc.id.empty()) throw DataError("document with empty id");
    if (!valid_lang(doc.lang)) {
        throw DataError("document '" + doc.id + "' has invalid language tag '" + doc.lang + "'");
    }
    if (is_blank(doc.text_original)) {
        throw DataError("document '" + doc.id + "' has empty text");
    }
    if (doc.kind == DocKind::FactCheck && doc.ocr_text) {
        throw DataError("fact-check '" + doc.id + "' carries OCR text");
    }
}

void insert_all(std::vector<Document>&& docs, DocKind kind,
                std::map<std::string, Document>& into, std::set<std::string>& languages) {
    for (auto& doc : docs) {
        if (doc.kind != kind) {
            throw DataError("document '" + doc.id + "' has kind " + to_string(doc.kind) +
                            ", expected " + to_string(kind));
        }
        validate_document(doc);
        languages.insert(doc.lang);
        std::string id = doc.id;
        if (!into.emplace(id, std::move(doc)).second) {
            throw DataError(std::string("duplicate ") + to_string(kind) + " id '" + id + "'");
        }
    }
}

json document_json(const Document& doc) {
    json obj;
    obj["id"] = doc.id;
    obj["lang"] = doc.lang;
    obj["text"] = doc.text_original;
    if (doc.text_english) obj["english"] = *doc.text_english;
    if (doc.ocr_text) obj["ocr"] = *doc.ocr_text;
    return obj;
}

}  // namespace

const char* to_string(DocKind kind) {
    return kind == DocKind::Post ? "post" : "fact-check";
}

Corpus::Corpus(std::vector<Document> posts, std::vector<Document> factchecks,
               std::vector<GoldPair> pairs) {
    insert_all(std::move(posts), DocKind::Post, posts_, languages_);
    insert_all(std::move(factchecks), DocKind::FactCheck, factchecks_, languages_);
    for (auto& pair : pairs) {
        if (!posts_.contains(pair.first)) {
            throw DataError("gold pair references unknown post_id '" + pair.first + "'");
        }
        if (!factchecks_.contains(pair.second)) {
            throw DataError("gold pair references unknown factcheck_id '" + pair.second + "'");
        }
        gold_.insert(std::move(pair));
    }
    for (const auto& [post_id, fc_id] : gold_) gold_by_post_.emplace(post_id, fc_id);
}

const Document& Corpus::post(const std::string& id) const {
    auto it = posts_.find(id);
    if (it == posts_.end()) throw DataError("unknown post id '" + id + "'");
    return it->second;
}

const Document& Corpus::factcheck(const std::string& id) const {
    auto it = factchecks_.find(id);
    if (it == factchecks_.end()) throw DataError("unknown fact-check id '" + id + "'");
    return it->second;
}

std::vector<std::string> Corpus::gold_for(const std::string& post_id) const {
    std::vector<std::string> out;
    auto [lo, hi] = gold_by_post_.equal_range(post_id);
    for (auto it = lo; it != hi; ++it) out.push_back(it->second);
    return out;
}

bool Corpus::has_gold(const std::string& post_id) const {
    return gold_by_post_.contains(post_id);
}

bool Corpus::is_monolingual_track(const std::string& post_id) const {
    const auto& lang = post(post_id).lang;
    auto [lo, hi] = gold_by_post_.equal_range(post_id);
    for (auto it = lo; it != hi; ++it) {
        if (factcheck(it->second).lang == lang) return true;
    }
    return false;
}

Corpus load_corpus(const std::filesystem::path& posts_path,
                   const std::filesystem::path& factchecks_path,
                   const std::filesystem::path& pairs_path, const LoadOptions& options) {
    auto posts = read_documents(posts_path, DocKind::Post, options);
    auto factchecks = read_documents(factchecks_path, DocKind::FactCheck, options);
    std::vector<GoldPair> pairs;
    for_each_json_line(pairs_path, [&](const json& obj, std::size_t line) {
        pairs.emplace_back(required_string(obj, "post_id", pairs_path, line),
                           required_string(obj, "factcheck_id", pairs_path, line));
    });
    return Corpus(std::move(posts), std::move(factchecks), std::move(pairs));
}

Corpus load_corpus_dir(const std::filesystem::path& dir, const LoadOptions& options) {
    return load_corpus(dir / "posts.jsonl", dir / "factchecks.jsonl", dir / "pairs.jsonl",
                       options);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + (dir / name).string());
        return out;
    };
    {
        auto out = open("posts.jsonl");
        for (const auto& [_, doc] : corpus.posts()) out << document_json(doc).dump() << '\n';
    }
    {
        auto out = open("factchecks.jsonl");
        for (const auto& [_, doc] : corpus.factchecks()) out << document_json(doc).dump() << '\n';
    }
    auto out = open("pairs.jsonl");
    for (const auto& [post_id, fc_id] : corpus.gold()) {
        out << json{{"post_id", post_id}, {"factcheck_id", fc_id}}.dump() << '\n';
    }
}

std::pair<std::vector<std::string>, std::vector<std::string>>
split_by_language(const Corpus& corpus, const std::string& lang) {
    std::pair<std::vector<std::string>, std::vector<std::string>> out;
    for (const auto& [id, doc] : corpus.posts()) {
        if (doc.lang == lang) out.first.push_back(id);
    }
    for (const auto& [id, doc] : corpus.factchecks()) {
        if (doc.lang == lang) out.second.push_back(id);
    }
    return out;
}

}  // namespace fcr
