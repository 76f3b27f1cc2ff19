#include "fcr/ensemble.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "fcr/error.hpp"
#include "fcr/evaluation.hpp"

namespace fcr {

double ModelProfile::weight_for(const std::string& lang) const {
    auto it = lang_weights.find(lang);
    return it == lang_weights.end() ? default_weight : it->second;
}

void ModelProfile::validate() const {
    auto in_range = [](double w) { return w >= 0.0 && w <= 1.0; };
    if (!in_range(default_weight)) {
        throw ConfigError("profile '" + model_id + "': default weight outside [0, 1]");
    }
    for (const auto& [lang, w] : lang_weights) {
        if (!in_range(w)) {
            throw ConfigError("profile '" + model_id + "': weight for '" + lang +
                              "' outside [0, 1]");
        }
    }
}

const char* to_string(Confidence c) {
    return c == Confidence::Similarity ? "similarity" : "rank";
}

Confidence parse_confidence(std::string_view name) {
    if (name == "similarity") return Confidence::Similarity;
    if (name == "rank") return Confidence::RankLinear;
    throw ConfigError("unknown confidence '" + std::string(name) + "' (expected similarity|rank)");
}

void FusionConfig::validate() const {
    if (k_out < 1) throw ConfigError("k_out must be >= 1");
    if (pool_k < 1) throw ConfigError("pool_k must be >= 1");
}

RankedList fuse(std::span<const ModelRanking> rankings, std::span<const ModelProfile> profiles,
                const std::string& post_lang, const FusionConfig& cfg) {
    cfg.validate();
    if (rankings.empty()) throw DataError("fuse needs at least one ranking");

    std::vector<const ModelRanking*> ordered;
    std::set<std::string> seen;
    for (const auto& r : rankings) {
        if (r.ranking.post_id != rankings.front().ranking.post_id) {
            throw DataError("rankings disagree on post id: '" + r.ranking.post_id + "' vs '" +
                            rankings.front().ranking.post_id + "'");
        }
        if (!seen.insert(r.model_id).second) {
            throw DataError("model '" + r.model_id + "' contributes more than one ranking");
        }
        ordered.push_back(&r);
    }
    // Summation order must not depend on the order models were supplied.
    std::sort(ordered.begin(), ordered.end(),
              [](const ModelRanking* a, const ModelRanking* b) { return a->model_id < b->model_id; });

    std::map<std::string, double> totals;
    const auto depth = static_cast<double>(cfg.pool_k);
    for (const ModelRanking* r : ordered) {
        auto profile = std::find_if(profiles.begin(), profiles.end(),
                                    [&](const ModelProfile& p) { return p.model_id == r->model_id; });
        if (profile == profiles.end()) {
            throw DataError("no profile for model '" + r->model_id + "'");
        }
        double weight = profile->weight_for(post_lang);
        if (weight == 0.0) continue;
        std::size_t n = std::min(cfg.pool_k, r->ranking.hits.size());
        for (std::size_t i = 0; i < n; ++i) {
            const Hit& hit = r->ranking.hits[i];
            double conf = cfg.confidence == Confidence::Similarity
                              ? hit.score
                              : (depth - static_cast<double>(i + 1) + 1.0) / depth;
            totals[hit.id] += conf * weight;
        }
    }

    RankedList out;
    out.post_id = rankings.front().ranking.post_id;
    out.hits.reserve(totals.size());
    for (const auto& [id, score] : totals) out.hits.push_back({id, score});
    std::sort(out.hits.begin(), out.hits.end(), ranks_before);
    if (out.hits.size() > cfg.k_out) out.hits.resize(cfg.k_out);
    return out;
}

std::vector<ModelProfile> build_profiles(std::span<const EvalReport> reports) {
    std::vector<ModelProfile> profiles;
    for (const auto& report : reports) {
        if (report.k != 10) {
            throw DataError("report for model '" + report.model_id + "' has S@" +
                            std::to_string(report.k) + ", not S@10");
        }
        ModelProfile p;
        p.model_id = report.model_id;
        for (const auto& [lang, cell] : report.per_lang) p.lang_weights[lang] = cell.value;
        p.default_weight = report.average;
        p.validate();
        profiles.push_back(std::move(p));
    }
    return profiles;
}

std::vector<ModelProfile> load_profiles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw DataError(path.string() + ": profiles must be a JSON object");
    std::vector<ModelProfile> profiles;
    for (const auto& [model_id, weights] : doc.items()) {
        ModelProfile p;
        p.model_id = model_id;
        if (!weights.is_object()) {
            throw DataError(path.string() + ": profile '" + model_id + "' must be an object");
        }
        for (const auto& [key, value] : weights.items()) {
            if (!value.is_number()) {
                throw DataError(path.string() + ": weight '" + model_id + "." + key +
                                "' is not a number");
            }
            if (key == "default") {
                p.default_weight = value.get<double>();
            } else {
                p.lang_weights[key] = value.get<double>();
            }
        }
        if (!weights.contains("default")) {
            throw DataError(path.string() + ": profile '" + model_id + "' has no default weight");
        }
        try {
            p.validate();
        } catch (const ConfigError& e) {
            throw DataError(path.string() + ": " + e.what());
        }
        profiles.push_back(std::move(p));
    }
    return profiles;
}

void save_profiles(std::span<const ModelProfile> profiles, const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& p : profiles) {
        nlohmann::json weights = nlohmann::json::object();
        for (const auto& [lang, w] : p.lang_weights) weights[lang] = w;
        weights["default"] = p.default_weight;
        doc[p.model_id] = weights;
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

}  // namespace fcr
