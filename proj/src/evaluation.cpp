#include "fcr/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fcr/error.hpp"

namespace fcr {

namespace {

bool post_has_gold(const std::set<GoldPair>& gold, const std::string& post_id) {
    auto it = gold.lower_bound({post_id, std::string()});
    return it != gold.end() && it->first == post_id;
}

nlohmann::json cell_json(const EvalCell& cell) {
    return {{"s_at_k", cell.value}, {"n_posts", cell.n_posts}};
}

EvalCell cell_from_json(const nlohmann::json& j) {
    return {j.at("s_at_k").get<double>(), j.at("n_posts").get<std::size_t>()};
}

std::string format_cell(double v) { return fmt::format("{:.2f}", v); }

}  // namespace

double success_at_k(std::span<const RankedList> rankings, const std::set<GoldPair>& gold,
                    std::size_t k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (rankings.empty()) throw DataError("success_at_k over an empty post set");
    std::size_t hits = 0;
    for (const auto& list : rankings) {
        if (!post_has_gold(gold, list.post_id)) {
            throw DataError("post '" + list.post_id + "' has no gold fact-check");
        }
        std::size_t n = std::min(k, list.hits.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (gold.contains({list.post_id, list.hits[i].id})) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

EvalReport evaluate(const Corpus& corpus, std::span<const RankedList> rankings, std::size_t k,
                    const std::string& model_id, const std::vector<std::string>& required_langs) {
    if (k < 1) throw ConfigError("k must be >= 1");
    EvalReport report;
    report.model_id = model_id;
    report.k = k;

    std::map<std::string, std::vector<RankedList>> mono;
    std::vector<RankedList> cross;
    std::set<std::string> seen;
    for (const auto& list : rankings) {
        const Document& post = corpus.post(list.post_id);
        if (!seen.insert(list.post_id).second) {
            throw DataError("post '" + list.post_id + "' ranked more than once");
        }
        if (!corpus.has_gold(post.id)) {
            ++report.excluded_posts;
            continue;
        }
        if (corpus.is_monolingual_track(post.id)) {
            mono[post.lang].push_back(list);
        } else {
            cross.push_back(list);
        }
    }
    if (mono.empty() && cross.empty()) throw DataError("no rankings for posts with gold pairs");
    for (const auto& lang : required_langs) {
        if (!mono.contains(lang)) throw DataError("no monolingual posts for language '" + lang + "'");
    }

    std::size_t total_posts = 0;
    double total_hits = 0.0;
    double sum_cells = 0.0;
    for (const auto& [lang, lists] : mono) {
        EvalCell cell{success_at_k(lists, corpus.gold(), k), lists.size()};
        report.per_lang[lang] = cell;
        total_posts += cell.n_posts;
        total_hits += cell.value * static_cast<double>(cell.n_posts);
        sum_cells += cell.value;
    }
    if (!cross.empty()) report.crosslingual = EvalCell{success_at_k(cross, corpus.gold(), k), cross.size()};
    if (total_posts > 0) {
        report.average = total_hits / static_cast<double>(total_posts);
        report.average_unweighted = sum_cells / static_cast<double>(mono.size());
    }
    return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json doc;
    doc["model_id"] = report.model_id;
    doc["k"] = report.k;
    doc["per_lang"] = nlohmann::json::object();
    for (const auto& [lang, cell] : report.per_lang) doc["per_lang"][lang] = cell_json(cell);
    doc["crosslingual"] = report.crosslingual ? cell_json(*report.crosslingual) : nlohmann::json();
    doc["average"] = report.average;
    doc["average_unweighted"] = report.average_unweighted;
    doc["excluded_posts"] = report.excluded_posts;
    return doc;
}

EvalReport report_from_json(const nlohmann::json& doc) {
    EvalReport report;
    try {
        report.model_id = doc.at("model_id").get<std::string>();
        report.k = doc.at("k").get<std::size_t>();
        for (const auto& [lang, cell] : doc.at("per_lang").items()) {
            report.per_lang[lang] = cell_from_json(cell);
        }
        if (doc.contains("crosslingual") && !doc.at("crosslingual").is_null()) {
            report.crosslingual = cell_from_json(doc.at("crosslingual"));
        }
        report.average = doc.at("average").get<double>();
        report.average_unweighted = doc.value("average_unweighted", report.average);
        report.excluded_posts = doc.value("excluded_posts", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    }
    return report;
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << report_to_json(report).dump(2) << '\n';
}

EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string format_report_table(std::span<const EvalReport> reports) {
    std::vector<std::string> langs = kReportLanguages;
    std::set<std::string> extra;
    for (const auto& r : reports) {
        for (const auto& [lang, _] : r.per_lang) {
            if (std::find(langs.begin(), langs.end(), lang) == langs.end()) extra.insert(lang);
        }
    }
    langs.insert(langs.end(), extra.begin(), extra.end());

    std::vector<std::string> header{"Model"};
    header.insert(header.end(), langs.begin(), langs.end());
    header.insert(header.end(), {"Crosslingual", "Average", "Avg(unw)"});

    std::vector<std::vector<std::string>> rows{header};
    for (const auto& r : reports) {
        std::vector<std::string> row{r.model_id.empty() ? "-" : r.model_id};
        for (const auto& lang : langs) {
            auto it = r.per_lang.find(lang);
            row.push_back(it == r.per_lang.end() ? "-" : format_cell(it->second.value));
        }
        row.push_back(r.crosslingual ? format_cell(r.crosslingual->value) : "-");
        bool any_mono = !r.per_lang.empty();
        row.push_back(any_mono ? format_cell(r.average) : "-");
        row.push_back(any_mono ? format_cell(r.average_unweighted) : "-");
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            if (c == 0) {
                out << fmt::format("{:<{}}", rows[r][c], width[c]);
            } else {
                out << "  " << fmt::format("{:>{}}", rows[r][c], width[c]);
            }
        }
        out << '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w + 2;
            out << std::string(total - 2, '-') << '\n';
        }
    }
    out << fmt::format("S@{}\n", reports.empty() ? 10 : reports.front().k);
    return out.str();
}

}  // namespace fcr
