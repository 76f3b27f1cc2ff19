#include "fcr/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "fcr/adapter.hpp"
#include "fcr/corpus.hpp"
#include "fcr/embedding_store.hpp"
#include "fcr/ensemble.hpp"
#include "fcr/error.hpp"
#include "fcr/evaluation.hpp"
#include "fcr/manifest.hpp"
#include "fcr/parallel.hpp"
#include "fcr/retrieval.hpp"
#include "fcr/text_preproc.hpp"

namespace fcr {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path manifest_path_for(const fs::path& output) {
    return fs::path(output.string() + ".manifest.json");
}

std::vector<fs::path> corpus_files(const fs::path& dir) {
    return {dir / "posts.jsonl", dir / "factchecks.jsonl", dir / "pairs.jsonl"};
}

/// Snapshot of every long option's resolved value, defaults included.
json resolved_config(const CLI::App& sub) {
    json cfg = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string& name = opt->get_lnames().front();
        if (name == "help" || name == "config") continue;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            if (opt->get_expected_max() > 1) {
                cfg[name] = results;
            } else if (opt->get_expected_max() == 0) {
                cfg[name] = true;
            } else {
                cfg[name] = results.empty() ? std::string() : results.back();
            }
        } else if (opt->get_expected_max() == 0) {
            cfg[name] = false;
        } else {
            cfg[name] = opt->get_default_str();
        }
    }
    return cfg;
}

/// Turns a --config JSON object into flags, skipping keys given explicitly.
std::vector<std::string> config_overlay(const fs::path& path, const std::vector<std::string>& args) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    std::set<std::string> explicit_flags;
    for (const auto& a : args) {
        if (a.rfind("--", 0) == 0) explicit_flags.insert(a.substr(2, a.find('=') - 2));
    }
    std::vector<std::string> extra;
    auto scalar = [](const json& v) {
        return v.is_string() ? v.get<std::string>() : v.dump();
    };
    for (const auto& [key, value] : doc.items()) {
        if (explicit_flags.contains(key)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) extra.push_back("--" + key);
        } else if (value.is_array()) {
            for (const auto& v : value) {
                extra.push_back("--" + key);
                extra.push_back(scalar(v));
            }
        } else {
            extra.push_back("--" + key);
            extra.push_back(scalar(value));
        }
    }
    return extra;
}

struct Context {
    std::ostream& out;
    std::ostream& err;
};

// --- shared option groups ---------------------------------------------------

struct EmbeddingSource {
    std::string post_emb;
    std::string factcheck_emb;
    std::string registry;
    std::string model;
    std::string channel = "original";

    void add_to(CLI::App* sub) {
        sub->add_option("--post-emb", post_emb, "EMBX file with post vectors");
        sub->add_option("--factcheck-emb", factcheck_emb, "EMBX file with fact-check vectors");
        sub->add_option("--registry", registry, "Registry JSON written by import-embeddings");
        sub->add_option("--model", model, "Model id to look up in the registry");
        sub->add_option("--channel", channel, "original|english")
            ->check(CLI::IsMember({"original", "english"}));
    }

    struct Loaded {
        EmbeddingMatrix posts;
        EmbeddingMatrix factchecks;
        std::vector<fs::path> paths;
    };

    Loaded load(const Context& ctx) const {
        Channel ch = parse_channel(channel);
        fs::path post_path = post_emb, fc_path = factcheck_emb;
        if (post_emb.empty() || factcheck_emb.empty()) {
            if (registry.empty() || model.empty()) {
                throw ConfigError("give --post-emb and --factcheck-emb, or --registry and --model");
            }
            auto reg = ModelRegistry::load(registry);
            if (post_emb.empty()) post_path = reg.find(model, ch, DocKind::Post).path;
            if (factcheck_emb.empty()) fc_path = reg.find(model, ch, DocKind::FactCheck).path;
        }
        auto p = import_matrix(post_path);
        auto f = import_matrix(fc_path);
        for (const auto* r : {&p, &f}) {
            if (r->renormalized > 0) {
                ctx.err << fmt::format("warning: {} rows renormalized in model '{}'\n",
                                       r->renormalized, r->matrix.model_id());
            }
        }
        if (p.matrix.channel() != ch || f.matrix.channel() != ch) {
            throw DataError("embedding files do not carry channel '" + channel + "'");
        }
        return {std::move(p.matrix), std::move(f.matrix), {post_path, fc_path}};
    }
};

LoadOptions load_options_for(Channel ch) {
    return LoadOptions{ch == Channel::English};
}

// --- preprocess --------------------------------------------------------------

struct PreprocessOptions {
    std::string data;
    std::string out;
    bool keep_urls = false;
    bool keep_hashtags = false;
    bool keep_emoji = false;
    bool keep_whitespace = false;
};

void run_preprocess(const PreprocessOptions& o, const CLI::App& sub, const Context& ctx) {
    CleaningConfig cfg;
    cfg.strip_urls = !o.keep_urls;
    cfg.strip_hashtags = !o.keep_hashtags;
    cfg.strip_emoji = !o.keep_emoji;
    cfg.collapse_whitespace = !o.keep_whitespace;

    Corpus corpus = load_corpus_dir(o.data, LoadOptions{true});
    fs::path out_dir = o.out;
    fs::create_directories(out_dir);
    {
        std::ofstream posts(out_dir / "prepared.jsonl", std::ios::binary | std::ios::trunc);
        for (const auto& [id, doc] : corpus.posts()) {
            json row{{"id", id},
                     {"lang", doc.lang},
                     {"combined_original", combine_post(doc, cfg, Channel::Original)},
                     {"combined_english", combine_post(doc, cfg, Channel::English)}};
            posts << row.dump() << '\n';
        }
        std::ofstream fcs(out_dir / "prepared_factchecks.jsonl", std::ios::binary | std::ios::trunc);
        for (const auto& [id, doc] : corpus.factchecks()) {
            json row{{"id", id},
                     {"lang", doc.lang},
                     {"clean_original", clean_text(doc.text_original, cfg)},
                     {"clean_english", clean_text(*doc.text_english, cfg)}};
            fcs << row.dump() << '\n';
        }
    }
    RunManifest m{"preprocess", resolved_config(sub), corpus_files(o.data),
                  {out_dir / "prepared.jsonl", out_dir / "prepared_factchecks.jsonl"}, std::nullopt};
    m.config["cleaning"] = {{"strip_urls", cfg.strip_urls},
                            {"strip_hashtags", cfg.strip_hashtags},
                            {"strip_emoji", cfg.strip_emoji},
                            {"collapse_whitespace", cfg.collapse_whitespace},
                            {"factchecks_cleaned", true}};
    m.write(out_dir / "manifest.json");
    ctx.err << fmt::format("prepared {} posts, {} fact-checks\n", corpus.posts().size(),
                           corpus.factchecks().size());
}

// --- import-embeddings -------------------------------------------------------

struct ImportOptions {
    std::vector<std::string> inputs;
    std::string registry;
    std::string canonical_dir;
};

void run_import(const ImportOptions& o, const CLI::App& sub, const Context& ctx) {
    ModelRegistry reg = ModelRegistry::load(o.registry);
    RunManifest m{"import-embeddings", resolved_config(sub), {}, {o.registry}, std::nullopt};
    for (const auto& in : o.inputs) {
        auto result = import_matrix(in);
        const auto& mat = result.matrix;
        fs::path stored = fs::absolute(in);
        if (!o.canonical_dir.empty()) {
            stored = fs::absolute(fs::path(o.canonical_dir) / fs::path(in).filename());
            write_matrix(mat, stored);
            m.outputs.push_back(stored);
        }
        reg.add({mat.model_id(), mat.channel(), mat.kind(), mat.dim(), stored});
        m.inputs.emplace_back(in);
        ctx.err << fmt::format("{}: model '{}' {} {} rows={} dim={} renormalized={}\n", in,
                               mat.model_id(), to_string(mat.channel()), to_string(mat.kind()),
                               mat.rows(), mat.dim(), result.renormalized);
    }
    reg.save(o.registry);
    m.write(manifest_path_for(o.registry));
}

// --- retrieve ----------------------------------------------------------------

struct RetrieveOptions {
    std::string data;
    EmbeddingSource emb;
    std::string mode = "monolingual";
    std::size_t k = 10;
    unsigned threads = 0;
    bool gold_only = false;
    std::string out;
};

std::vector<std::string> query_posts(const Corpus& corpus, bool gold_only) {
    std::vector<std::string> ids;
    for (const auto& [id, _] : corpus.posts()) {
        if (!gold_only || corpus.has_gold(id)) ids.push_back(id);
    }
    return ids;
}

void run_retrieve(const RetrieveOptions& o, const CLI::App& sub, const Context& ctx) {
    Channel ch = parse_channel(o.emb.channel);
    Corpus corpus = load_corpus_dir(o.data, load_options_for(ch));
    auto emb = o.emb.load(ctx);
    RetrievalConfig cfg{o.k, parse_pool_mode(o.mode), ch, o.emb.model};
    Retriever retriever(corpus, emb.posts, emb.factchecks, cfg);
    auto ids = query_posts(corpus, o.gold_only);
    auto lists = retriever.retrieve_batch(ids, o.threads);
    write_rankings(fs::path(o.out), lists);

    auto inputs = corpus_files(o.data);
    inputs.insert(inputs.end(), emb.paths.begin(), emb.paths.end());
    RunManifest{"retrieve", resolved_config(sub), inputs, {o.out}, std::nullopt}
        .write(manifest_path_for(o.out));
    ctx.err << fmt::format("ranked {} posts with model '{}'\n", lists.size(), emb.posts.model_id());
}

// --- train-adapter -----------------------------------------------------------

struct TrainOptions {
    std::string data;
    EmbeddingSource emb;
    TrainConfig cfg;
    std::string dev_pairs;
    std::size_t dev_k = 10;
    unsigned threads = 0;
    std::string out;
};

std::vector<GoldPair> read_pairs(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<GoldPair> pairs;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = json::parse(line);
            pairs.emplace_back(j.at("post_id").get<std::string>(),
                               j.at("factcheck_id").get<std::string>());
        } catch (const json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return pairs;
}

void run_train(const TrainOptions& o, const CLI::App& sub, const Context& ctx) {
    o.cfg.validate();
    Channel ch = parse_channel(o.emb.channel);
    Corpus corpus = load_corpus_dir(o.data, load_options_for(ch));
    auto emb = o.emb.load(ctx);
    if (corpus.gold().size() < 2) throw DataError("training needs at least 2 gold pairs");

    std::set<GoldPair> dev;
    if (!o.dev_pairs.empty()) {
        for (auto& p : read_pairs(o.dev_pairs)) {
            if (!corpus.gold().contains(p)) {
                throw DataError("dev pair (" + p.first + ", " + p.second + ") is not a gold pair");
            }
            dev.insert(std::move(p));
        }
    }
    std::set<std::string> dev_posts;
    for (const auto& p : dev) dev_posts.insert(p.first);
    std::vector<GoldPair> train_pairs_list;
    for (const auto& p : corpus.gold()) {
        if (!dev_posts.contains(p.first)) train_pairs_list.push_back(p);
    }

    json epochs = json::array();
    auto on_epoch = [&](const EpochSummary& s, const AdapterModel& adapter) {
        json row{{"epoch", s.epoch + 1}, {"mean_loss", s.mean_loss}};
        if (!dev.empty()) {
            auto p = apply_adapter(adapter, emb.posts);
            auto f = apply_adapter(adapter, emb.factchecks);
            Retriever r(corpus, p, f, RetrievalConfig{o.dev_k, PoolMode::Track, ch, {}});
            std::vector<std::string> ids(dev_posts.begin(), dev_posts.end());
            auto lists = r.retrieve_batch(ids, o.threads);
            double s_at_k = success_at_k(lists, dev, o.dev_k);
            row["dev_s_at_k"] = s_at_k;
            ctx.err << fmt::format("epoch {}: mean loss {:.6f}, dev S@{} {:.4f}\n", s.epoch + 1,
                                   s.mean_loss, o.dev_k, s_at_k);
        } else {
            ctx.err << fmt::format("epoch {}: mean loss {:.6f}\n", s.epoch + 1, s.mean_loss);
        }
        epochs.push_back(row);
    };
    auto result = train_pairs(train_pairs_list, emb.posts, emb.factchecks, o.cfg, on_epoch);
    save_adapter(result.adapter, o.out);

    fs::path history = o.out + ".history.json";
    {
        std::ofstream h(history, std::ios::trunc);
        h << json{{"step_losses", result.step_losses}, {"epochs", epochs}}.dump(2) << '\n';
    }
    auto inputs = corpus_files(o.data);
    inputs.insert(inputs.end(), emb.paths.begin(), emb.paths.end());
    if (!o.dev_pairs.empty()) inputs.emplace_back(o.dev_pairs);
    RunManifest{"train-adapter", resolved_config(sub), inputs, {o.out, history}, o.cfg.seed}
        .write(manifest_path_for(o.out));
}

// --- apply-adapter -----------------------------------------------------------

struct ApplyOptions {
    std::string adapter;
    std::string in;
    std::string out;
};

void run_apply(const ApplyOptions& o, const CLI::App& sub, const Context& ctx) {
    auto adapter = load_adapter(o.adapter);
    auto src = import_matrix(o.in);
    if (src.matrix.model_id() != adapter.model_id) {
        ctx.err << fmt::format("warning: adapter trained on '{}' applied to '{}'\n",
                               adapter.model_id, src.matrix.model_id());
    }
    write_matrix(apply_adapter(adapter, src.matrix), o.out);
    RunManifest{"apply-adapter", resolved_config(sub), {o.adapter, o.in}, {o.out}, std::nullopt}
        .write(manifest_path_for(o.out));
}

// --- fuse --------------------------------------------------------------------

struct FuseOptions {
    std::string data;
    std::vector<std::string> rankings;
    std::string profiles;
    std::string confidence = "similarity";
    std::size_t k = 10;
    std::size_t pool_k = 10;
    unsigned threads = 0;
    std::string out;
};

void run_fuse(const FuseOptions& o, const CLI::App& sub, const Context& ctx) {
    Corpus corpus = load_corpus_dir(o.data);
    auto profiles = load_profiles(o.profiles);
    FusionConfig cfg{parse_confidence(o.confidence), o.k, o.pool_k};
    cfg.validate();

    std::vector<fs::path> inputs = corpus_files(o.data);
    inputs.emplace_back(o.profiles);
    std::vector<std::string> post_order;
    std::map<std::string, std::vector<ModelRanking>> by_post;
    for (const auto& arg : o.rankings) {
        auto eq = arg.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
            throw ConfigError("--rankings expects MODEL=PATH, got '" + arg + "'");
        }
        std::string model = arg.substr(0, eq);
        fs::path path = arg.substr(eq + 1);
        inputs.push_back(path);
        for (auto& list : read_rankings(path)) {
            auto& slot = by_post[list.post_id];
            if (slot.empty()) post_order.push_back(list.post_id);
            slot.push_back({model, std::move(list)});
        }
    }
    std::sort(post_order.begin(), post_order.end());
    std::vector<RankedList> fused(post_order.size());
    parallel_for(post_order.size(), o.threads, [&](std::size_t i) {
        const auto& post_id = post_order[i];
        fused[i] = fuse(by_post.at(post_id), profiles, corpus.post(post_id).lang, cfg);
    });
    write_rankings(fs::path(o.out), fused);
    RunManifest{"fuse", resolved_config(sub), inputs, {o.out}, std::nullopt}
        .write(manifest_path_for(o.out));
    ctx.err << fmt::format("fused {} posts from {} models\n", fused.size(), o.rankings.size());
}

// --- evaluate / report / build-profiles -------------------------------------

struct EvaluateOptions {
    std::string data;
    std::string rankings;
    std::size_t k = 10;
    std::string model_id;
    std::vector<std::string> langs;
    std::string out;
};

void run_evaluate(const EvaluateOptions& o, const CLI::App& sub, const Context& ctx) {
    Corpus corpus = load_corpus_dir(o.data);
    auto lists = read_rankings(fs::path(o.rankings));
    auto report = evaluate(corpus, lists, o.k, o.model_id, o.langs);
    fs::path json_path = o.out;
    fs::path text_path = json_path;
    text_path.replace_extension(".txt");
    save_report(report, json_path);
    {
        std::ofstream t(text_path, std::ios::trunc);
        t << format_report_table(std::span(&report, 1));
    }
    auto inputs = corpus_files(o.data);
    inputs.emplace_back(o.rankings);
    RunManifest{"evaluate", resolved_config(sub), inputs, {json_path, text_path}, std::nullopt}
        .write(manifest_path_for(json_path));
    if (report.excluded_posts > 0) {
        ctx.err << fmt::format("{} ranked posts without gold were skipped\n", report.excluded_posts);
    }
}

struct ReportOptions {
    std::vector<std::string> inputs;
};

void run_report(const ReportOptions& o, const Context& ctx) {
    std::vector<EvalReport> reports;
    for (const auto& in : o.inputs) reports.push_back(load_report(in));
    ctx.out << format_report_table(reports);
}

struct ProfilesOptions {
    std::vector<std::string> reports;
    std::string out;
};

void run_build_profiles(const ProfilesOptions& o, const CLI::App& sub, const Context&) {
    std::vector<EvalReport> reports;
    std::vector<fs::path> inputs;
    for (const auto& in : o.reports) {
        reports.push_back(load_report(in));
        inputs.emplace_back(in);
    }
    save_profiles(build_profiles(reports), o.out);
    RunManifest{"build-profiles", resolved_config(sub), inputs, {o.out}, std::nullopt}
        .write(manifest_path_for(o.out));
}

// --- synth -------------------------------------------------------------------

struct SynthOptions {
    SynthConfig cfg;
    int rotate_lang = -1;
    std::string out;
};

void run_synth(SynthOptions o, const CLI::App& sub, const Context& ctx) {
    if (o.rotate_lang >= 0) o.cfg.rotate_lang = o.rotate_lang;
    auto data = make_synthetic(o.cfg);
    fs::path dir = o.out;
    save_corpus(data.corpus, dir);
    write_matrix(data.posts, dir / "posts.embx");
    write_matrix(data.factchecks, dir / "factchecks.embx");
    auto outputs = corpus_files(dir);
    outputs.push_back(dir / "posts.embx");
    outputs.push_back(dir / "factchecks.embx");
    RunManifest{"synth", resolved_config(sub), {}, outputs, o.cfg.seed}.write(dir / "manifest.json");
    ctx.err << fmt::format("wrote {} posts, {} fact-checks, {} pairs to {}\n",
                           data.corpus.posts().size(), data.corpus.factchecks().size(),
                           data.corpus.gold().size(), dir.string());
}

// --- search ------------------------------------------------------------------

struct SearchOptions {
    std::string data;
    EmbeddingSource emb;
    std::string post_id;
    std::string mode = "monolingual";
    std::size_t k = 10;
};

void run_search(const SearchOptions& o, const Context& ctx) {
    Channel ch = parse_channel(o.emb.channel);
    Corpus corpus = load_corpus_dir(o.data, load_options_for(ch));
    auto emb = o.emb.load(ctx);
    Retriever retriever(corpus, emb.posts, emb.factchecks,
                        RetrievalConfig{o.k, parse_pool_mode(o.mode), ch, o.emb.model});
    auto list = retriever.retrieve(o.post_id);
    const Document& post = corpus.post(o.post_id);
    auto gold = corpus.gold_for(o.post_id);
    ctx.out << fmt::format("post {} [{}] pool={}\n", post.id, post.lang,
                           retriever.pool_size(o.post_id));
    ctx.out << fmt::format("{:>4}  {:<24}  {:<4}  {:>9}  {}\n", "rank", "fact-check", "lang", "score",
                           "gold");
    for (std::size_t i = 0; i < list.hits.size(); ++i) {
        const auto& hit = list.hits[i];
        bool is_gold = std::find(gold.begin(), gold.end(), hit.id) != gold.end();
        ctx.out << fmt::format("{:>4}  {:<24}  {:<4}  {:>9.6f}  {}\n", i + 1, hit.id,
                               corpus.factcheck(hit.id).lang, hit.score, is_gold ? "*" : "");
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
    Context ctx{out, err};
    CLI::App app{"Fact-check claim retrieval: dense retrieval, adapter training, fusion, S@K"};
    app.name("fcr");
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    // --config overlay: flags given on the command line win.
    std::vector<std::string> args = args_in;
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
        if (path.empty()) continue;
        try {
            auto extra = config_overlay(path, args);
            args.insert(args.end(), extra.begin(), extra.end());
        } catch (const ConfigError& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        }
        break;
    }

    auto add_config = [](CLI::App* sub) {
        sub->add_option("--config", "JSON object of flag values; explicit flags win");
    };
    std::function<void()> action;

    PreprocessOptions pre;
    auto* s_pre = app.add_subcommand("preprocess", "Clean posts and build combined text channels");
    s_pre->add_option("--data", pre.data, "Corpus directory")->required();
    s_pre->add_option("--out", pre.out, "Output directory")->required();
    s_pre->add_flag("--keep-urls", pre.keep_urls);
    s_pre->add_flag("--keep-hashtags", pre.keep_hashtags);
    s_pre->add_flag("--keep-emoji", pre.keep_emoji);
    s_pre->add_flag("--keep-whitespace", pre.keep_whitespace);
    add_config(s_pre);
    s_pre->callback([&] { action = [&] { run_preprocess(pre, *s_pre, ctx); }; });

    ImportOptions imp;
    auto* s_imp = app.add_subcommand("import-embeddings", "Validate EMBX files and register them");
    s_imp->add_option("--in", imp.inputs, "EMBX file (repeatable)")->required();
    s_imp->add_option("--registry", imp.registry, "Registry JSON to create or update")->required();
    s_imp->add_option("--canonical-dir", imp.canonical_dir,
                      "Write validated (renormalized) copies here and register those");
    add_config(s_imp);
    s_imp->callback([&] { action = [&] { run_import(imp, *s_imp, ctx); }; });

    RetrieveOptions ret;
    auto* s_ret = app.add_subcommand("retrieve", "Rank fact-checks for every post");
    s_ret->add_option("--data", ret.data, "Corpus directory")->required();
    ret.emb.add_to(s_ret);
    s_ret->add_option("--mode", ret.mode, "monolingual|crosslingual|track")
        ->check(CLI::IsMember({"monolingual", "crosslingual", "track"}));
    s_ret->add_option("--k", ret.k, "Hits per post")->check(CLI::PositiveNumber);
    s_ret->add_option("--threads", ret.threads, "Worker threads (0 = all cores)");
    s_ret->add_flag("--gold-only", ret.gold_only, "Only rank posts that have gold pairs");
    s_ret->add_option("--out", ret.out, "Rankings JSONL")->required();
    add_config(s_ret);
    s_ret->callback([&] { action = [&] { run_retrieve(ret, *s_ret, ctx); }; });

    TrainOptions tr;
    auto* s_tr = app.add_subcommand("train-adapter", "Train a linear adapter with MNRL");
    s_tr->add_option("--data", tr.data, "Corpus directory")->required();
    tr.emb.add_to(s_tr);
    s_tr->add_option("--batch-size", tr.cfg.batch_size, "In-batch size, 2..16");
    s_tr->add_option("--lr", tr.cfg.learning_rate, "Nominal learning rate, 1e-5..3e-5");
    s_tr->add_option("--adapter-lr-scale", tr.cfg.adapter_lr_scale,
                     "Adam step = lr x this factor");
    s_tr->add_option("--epochs", tr.cfg.epochs, "1..3");
    s_tr->add_option("--warmup", tr.cfg.warmup_steps, "Linear warmup steps");
    s_tr->add_option("--scale", tr.cfg.scale, "Softmax scale on cosine logits");
    s_tr->add_option("--seed", tr.cfg.seed, "Shuffle seed");
    s_tr->add_option("--dev-pairs", tr.dev_pairs,
                     "Held-out gold pairs (JSONL); their posts are excluded from training");
    s_tr->add_option("--dev-k", tr.dev_k, "K for the per-epoch dev S@K")->check(CLI::PositiveNumber);
    s_tr->add_option("--threads", tr.threads, "Worker threads for dev retrieval");
    s_tr->add_option("--out", tr.out, "ADPT output file")->required();
    add_config(s_tr);
    s_tr->callback([&] { action = [&] { run_train(tr, *s_tr, ctx); }; });

    ApplyOptions ap;
    auto* s_ap = app.add_subcommand("apply-adapter", "Map an EMBX file through an adapter");
    s_ap->add_option("--adapter", ap.adapter, "ADPT file")->required();
    s_ap->add_option("--in", ap.in, "Input EMBX")->required();
    s_ap->add_option("--out", ap.out, "Output EMBX")->required();
    add_config(s_ap);
    s_ap->callback([&] { action = [&] { run_apply(ap, *s_ap, ctx); }; });

    FuseOptions fu;
    auto* s_fu = app.add_subcommand("fuse", "Weighted vote over several models' rankings");
    s_fu->add_option("--data", fu.data, "Corpus directory")->required();
    s_fu->add_option("--rankings", fu.rankings, "MODEL=rankings.jsonl (repeatable)")->required();
    s_fu->add_option("--profiles", fu.profiles, "Profiles JSON")->required();
    s_fu->add_option("--confidence", fu.confidence, "similarity|rank")
        ->check(CLI::IsMember({"similarity", "rank"}));
    s_fu->add_option("--k", fu.k, "Fused hits per post")->check(CLI::PositiveNumber);
    s_fu->add_option("--pool-k", fu.pool_k, "Hits taken from each model")->check(CLI::PositiveNumber);
    s_fu->add_option("--threads", fu.threads, "Worker threads (0 = all cores)");
    s_fu->add_option("--out", fu.out, "Fused rankings JSONL")->required();
    add_config(s_fu);
    s_fu->callback([&] { action = [&] { run_fuse(fu, *s_fu, ctx); }; });

    EvaluateOptions ev;
    auto* s_ev = app.add_subcommand("evaluate", "Success@K per language and track");
    s_ev->add_option("--data", ev.data, "Corpus directory")->required();
    s_ev->add_option("--rankings", ev.rankings, "Rankings JSONL")->required();
    s_ev->add_option("--k", ev.k, "K")->check(CLI::PositiveNumber);
    s_ev->add_option("--model-id", ev.model_id, "Label stored in the report");
    s_ev->add_option("--langs", ev.langs, "Languages that must have a cell")->delimiter(',');
    s_ev->add_option("--out", ev.out, "Report JSON (a .txt table is written alongside)")->required();
    add_config(s_ev);
    s_ev->callback([&] { action = [&] { run_evaluate(ev, *s_ev, ctx); }; });

    ReportOptions rep;
    auto* s_rep = app.add_subcommand("report", "Print report JSON files as a table");
    s_rep->add_option("--in", rep.inputs, "Report JSON (repeatable)")->required();
    add_config(s_rep);
    s_rep->callback([&] { action = [&] { run_report(rep, ctx); }; });

    ProfilesOptions prof;
    auto* s_prof = app.add_subcommand("build-profiles", "Fusion weights from dev-split reports");
    s_prof->add_option("--report", prof.reports, "Report JSON at k=10 (repeatable)")->required();
    s_prof->add_option("--out", prof.out, "Profiles JSON")->required();
    add_config(s_prof);
    s_prof->callback([&] { action = [&] { run_build_profiles(prof, *s_prof, ctx); }; });

    SynthOptions syn;
    auto* s_syn = app.add_subcommand("synth", "Generate a seeded synthetic benchmark");
    s_syn->add_option("--langs", syn.cfg.n_langs, "Number of languages");
    s_syn->add_option("--posts", syn.cfg.posts_per_lang, "Gold pairs per language");
    s_syn->add_option("--distractors", syn.cfg.distractors_per_lang, "Distractors per language");
    s_syn->add_option("--dim", syn.cfg.dim, "Embedding dim (>= 8)");
    s_syn->add_option("--noise", syn.cfg.noise, "Noise norm sigma");
    s_syn->add_option("--rotate-lang", syn.rotate_lang,
                      "Index of the language whose fact-checks are rotated (-1 = none)");
    s_syn->add_option("--seed", syn.cfg.seed, "Generator seed");
    s_syn->add_option("--out", syn.out, "Output directory")->required();
    add_config(s_syn);
    s_syn->callback([&] { action = [&] { run_synth(syn, *s_syn, ctx); }; });

    SearchOptions se;
    auto* s_se = app.add_subcommand("search", "Print the top-k table for one post");
    s_se->add_option("--data", se.data, "Corpus directory")->required();
    se.emb.add_to(s_se);
    s_se->add_option("--post-id", se.post_id, "Query post id")->required();
    s_se->add_option("--mode", se.mode, "monolingual|crosslingual|track")
        ->check(CLI::IsMember({"monolingual", "crosslingual", "track"}));
    s_se->add_option("--k", se.k, "Hits")->check(CLI::PositiveNumber);
    add_config(s_se);
    s_se->callback([&] { action = [&] { run_search(se, ctx); }; });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        const CLI::App* failed = &app;
        for (const CLI::App* sub : app.get_subcommands()) failed = sub;
        err << failed->help();
        return kExitUsage;
    }

    try {
        if (action) action();
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

}  // namespace fcr
