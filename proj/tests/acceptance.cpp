// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any required criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <fmt/core.h>

#include "fcr/adapter.hpp"
#include "fcr/binary_io.hpp"
#include "fcr/cli.hpp"
#include "fcr/ensemble.hpp"
#include "fcr/evaluation.hpp"
#include "oracles.hpp"

using namespace fcr;

namespace {

struct Outcome {
    enum class State { Pass, Fail, Skip } state;
    std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
    return {ok ? Outcome::State::Pass : Outcome::State::Fail, std::move(detail)};
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// --- gradient ---------------------------------------------------------------

Outcome gradient_check() {
    auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    auto sweep = [&](int reps, double scale, auto&& oracle) {
        double worst = 0.0;
        int instances = 0;
        for (int rep = 0; rep < reps; ++rep) {
            for (int n : {2, 4, 8}) {
                for (int dim : {8, 16}) {
                    auto batch = test::random_batch(rng, n, dim);
                    auto w = test::near_identity(rng, dim, rep % 2 ? 0.01 : 0.1);
                    auto analytic = mnrl_grad(batch, w, scale);
                    worst = std::max(worst, test::max_relative_error(analytic, oracle(batch, w, scale)));
                    ++instances;
                }
            }
        }
        return std::pair{instances, worst};
    };
    auto fd64 = [](const TrainingBatch& b, const Eigen::MatrixXd& w, double s) {
        return test::finite_difference_grad<double>(b, w, s, 1e-4);
    };
    auto fd_extended = [](const TrainingBatch& b, const Eigen::MatrixXd& w, double s) {
        return test::finite_difference_grad<long double>(b, w, s, 1e-6L);
    };
    // the criterion as stated, at unit softmax scale
    auto [n1, worst1] = sweep(17, 1.0, fd64);
    // training scale; the 64-bit h=1e-4 figure is reported, the extended one gates
    double worst20 = sweep(10, 20.0, fd64).second;
    auto [n20x, worst20x] = sweep(10, 20.0, fd_extended);
    double t = seconds_since(t0);
    return pass_if(n1 >= 100 && worst1 <= 1e-4 && worst20x <= 1e-4 && t < 30.0,
                   fmt::format("scale 1: {} instances, max relative error {:.2e} vs 64-bit "
                               "h=1e-4 (limit 1e-4); scale 20: {:.2e} vs long double h=1e-6 over "
                               "{} instances ({:.2e} vs 64-bit h=1e-4, reported only); {:.1f}s",
                               n1, worst1, worst20x, n20x, worst20, t));
}

// --- closed forms -----------------------------------------------------------

Outcome mnrl_anchors() {
    auto basis = [](int n) {
        TrainingBatch b{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
        for (int i = 0; i < n; ++i) b.queries(i, i) = b.positives(i, i) = 1.0;
        return b;
    };
    double single = mnrl_loss(basis(1), Eigen::MatrixXd::Identity(1, 1), 20.0).loss;
    double worst_uniform = 0.0;
    for (int n = 2; n <= 16; ++n) {
        TrainingBatch b{Eigen::MatrixXd::Ones(n, 8) / std::sqrt(8.0),
                        Eigen::MatrixXd::Ones(n, 8) / std::sqrt(8.0)};
        double loss = mnrl_loss(b, Eigen::MatrixXd::Identity(8, 8), 20.0).loss;
        worst_uniform = std::max(worst_uniform, std::abs(loss - std::log(n)));
    }
    double two = mnrl_loss(basis(2), Eigen::MatrixXd::Identity(2, 2), 1.0).loss;
    bool ok = single == 0.0 && worst_uniform <= 1e-6 && std::abs(two - 0.313262) <= 1e-6;
    return pass_if(ok, fmt::format("N=1 loss {}, max |loss - ln N| {:.1e}, N=2 orthogonal {:.7f}",
                                   single, worst_uniform, two));
}

// --- retrieval --------------------------------------------------------------

Outcome retrieval_exactness() {
    auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    int mismatches = 0, tie_instances = 0;
    for (int inst = 0; inst < 500; ++inst) {
        std::size_t n = 1 + rng() % 1000;
        std::size_t dim = 1 + rng() % 64;
        std::size_t k = 1 + rng() % 25;
        auto rows = test::random_unit_rows(rng, n, dim);
        bool ties = inst % 4 == 0 && n > 1;
        if (ties) {
            // duplicate some rows so several ids share an exact score
            ++tie_instances;
            for (std::size_t r = 1; r < n; r += 1 + rng() % 3) {
                std::size_t src = rng() % r;
                std::copy_n(rows.begin() + static_cast<long>(src * dim), dim,
                            rows.begin() + static_cast<long>(r * dim));
            }
        }
        std::vector<std::string> ids(n);
        for (std::size_t i = 0; i < n; ++i) ids[i] = fmt::format("fc{:06d}", (i * 7919) % 1000003);
        EmbeddingMatrix pool("m", Channel::Original, DocKind::FactCheck,
                             static_cast<std::uint32_t>(dim), ids, rows);
        std::vector<float> query;
        if (ties && rng() % 2) {
            std::size_t r = rng() % n;
            query.assign(rows.begin() + static_cast<long>(r * dim),
                         rows.begin() + static_cast<long>((r + 1) * dim));
        } else {
            query = test::random_unit_rows(rng, 1, dim);
        }
        if (top_k(query, pool, k) != test::full_sort_top_k(query, ids, rows, dim, k)) ++mismatches;
    }

    // byte-identical CLI output across thread counts
    test::TempDir dir("accept_threads");
    std::ostringstream sink;
    auto data = (dir / "data").string();
    bool cli_ok = run_cli({"synth", "--langs", "3", "--posts", "100", "--distractors", "300",
                           "--dim", "32", "--noise", "0.5", "--seed", "5", "--out", data},
                          sink, sink) == kExitOk;
    for (const char* threads : {"1", "8"}) {
        cli_ok = cli_ok &&
                 run_cli({"retrieve", "--data", data, "--post-emb", data + "/posts.embx",
                          "--factcheck-emb", data + "/factchecks.embx", "--mode", "crosslingual",
                          "--threads", threads, "--out",
                          (dir / (std::string("r") + threads + ".jsonl")).string()},
                         sink, sink) == kExitOk;
    }
    bool identical = cli_ok && read_file_bytes(dir / "r1.jsonl") == read_file_bytes(dir / "r8.jsonl");
    double t = seconds_since(t0);
    return pass_if(mismatches == 0 && identical && t < 60.0,
                   fmt::format("500 instances ({} with ties), {} mismatches; --threads 1 vs 8 "
                               "output {}, {:.1f}s",
                               tie_instances, mismatches, identical ? "identical" : "DIFFERS", t));
}

// --- S@K --------------------------------------------------------------------

Outcome success_oracle() {
    std::mt19937_64 rng(99);
    int mismatches = 0, non_monotone = 0;
    for (int cfg = 0; cfg < 200; ++cfg) {
        std::size_t posts = 1 + rng() % 60;
        std::size_t max_len = 1 + rng() % 40;
        std::vector<RankedList> lists;
        std::set<GoldPair> gold;
        std::map<std::string, std::set<std::string>> by_post;
        for (std::size_t p = 0; p < posts; ++p) {
            std::string pid = fmt::format("p{}", p);
            RankedList list{pid, {}};
            std::size_t len = rng() % (max_len + 1);
            for (std::size_t i = 0; i < len; ++i) {
                list.hits.push_back({fmt::format("c{}", rng() % 80), 1.0 / static_cast<double>(i + 1)});
            }
            std::size_t n_gold = 1 + rng() % 3;
            for (std::size_t g = 0; g < n_gold; ++g) {
                std::string gid = fmt::format("c{}", rng() % 80);
                gold.insert({pid, gid});
                by_post[pid].insert(gid);
            }
            lists.push_back(std::move(list));
        }
        double prev = -1.0;
        for (std::size_t k = 1; k <= max_len + 2; ++k) {
            double got = success_at_k(lists, gold, k);
            if (got != test::hand_count_success(lists, by_post, k)) ++mismatches;
            if (got < prev) ++non_monotone;
            prev = got;
        }
    }
    return pass_if(mismatches == 0 && non_monotone == 0,
                   fmt::format("200 configurations, {} mismatches, {} monotonicity violations",
                               mismatches, non_monotone));
}

// --- fusion -----------------------------------------------------------------

Outcome fusion_oracle() {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int mismatches = 0, zero_failures = 0, scale_failures = 0;
    const int instances = 500;
    for (int inst = 0; inst < instances; ++inst) {
        std::vector<std::string> cands;
        for (int c = 0; c < 20; ++c) cands.push_back(fmt::format("c{:02d}", c));
        std::vector<ModelRanking> rankings;
        std::vector<ModelProfile> profiles;
        for (int m = 0; m < 3; ++m) {
            std::shuffle(cands.begin(), cands.end(), rng);
            std::size_t len = 1 + rng() % 20;
            std::vector<Hit> hits;
            for (std::size_t i = 0; i < len; ++i) hits.push_back({cands[i], u(rng) * 2.0 - 1.0});
            std::sort(hits.begin(), hits.end(), ranks_before);
            std::string id = fmt::format("model{}", m);
            rankings.push_back({id, {"post", hits}});
            profiles.push_back({id, {{"fra", u(rng)}, {"tha", u(rng)}}, u(rng)});
        }
        auto conf = inst % 2 ? Confidence::Similarity : Confidence::RankLinear;
        FusionConfig cfg{conf, 1 + rng() % 20, 1 + rng() % 20};
        const std::string lang = inst % 3 == 0 ? "eng" : "fra";

        auto fused = fuse(rankings, profiles, lang, cfg);
        if (fused.hits != test::exhaustive_fusion(rankings, profiles, lang, conf, cfg.pool_k, cfg.k_out)) {
            ++mismatches;
        }

        // a zero-weight model changes nothing
        std::size_t z = rng() % 3;
        auto zeroed = profiles;
        zeroed[z].lang_weights[lang] = 0.0;
        if (lang == "eng") zeroed[z].default_weight = 0.0;
        std::vector<ModelRanking> without;
        for (std::size_t m = 0; m < 3; ++m) {
            if (m != z) without.push_back(rankings[m]);
        }
        if (fuse(rankings, zeroed, lang, cfg) != fuse(without, zeroed, lang, cfg)) ++zero_failures;

        // scaling every weight by one constant keeps the winner
        double c = 0.01 + 0.99 * u(rng);
        auto scaled = profiles;
        for (auto& p : scaled) {
            for (auto& [l, w] : p.lang_weights) w *= c;
            p.default_weight *= c;
        }
        auto top = fuse(rankings, profiles, lang, FusionConfig{conf, 20, cfg.pool_k}).hits;
        auto top_scaled = fuse(rankings, scaled, lang, FusionConfig{conf, 1, cfg.pool_k}).hits;
        if (top.empty() != top_scaled.empty()) {
            ++scale_failures;
        } else if (!top.empty()) {
            // exact-score ties may resolve either way after rounding
            double best = top.front().score;
            bool ok = false;
            for (const auto& h : top) {
                if (h.id == top_scaled.front().id) ok = std::abs(h.score - best) <= 1e-12 * std::abs(best);
            }
            if (!ok) ++scale_failures;
        }
    }
    return pass_if(mismatches == 0 && zero_failures == 0 && scale_failures == 0,
                   fmt::format("{} instances of 3 models x 20 candidates: {} table mismatches, {} "
                               "zero-weight and {} scale failures",
                               instances, mismatches, zero_failures, scale_failures));
}

// --- synthetic end-to-end ---------------------------------------------------

Outcome synthetic_end_to_end() {
    auto t0 = Clock::now();
    test::TempDir dir("accept_synth");
    std::ostringstream log;
    auto run = [&](std::vector<std::string> args) {
        if (run_cli(args, log, log) != kExitOk) {
            throw std::runtime_error("fcr " + args.front() + " failed: " + log.str());
        }
    };
    const std::string data = (dir / "data").string();
    auto at = [&](const std::string& name) { return (dir / name).string(); };
    try {
        run({"synth", "--langs", "3", "--posts", "200", "--distractors", "1000", "--dim", "32",
             "--noise", "0.3", "--rotate-lang", "1", "--seed", "7", "--out", data});
        run({"retrieve", "--data", data, "--post-emb", data + "/posts.embx", "--factcheck-emb",
             data + "/factchecks.embx", "--mode", "track", "--out", at("zero.jsonl")});
        run({"evaluate", "--data", data, "--rankings", at("zero.jsonl"), "--out", at("zero.json")});
        run({"train-adapter", "--data", data, "--post-emb", data + "/posts.embx",
             "--factcheck-emb", data + "/factchecks.embx", "--batch-size", "16", "--lr", "3e-5",
             "--epochs", "3", "--warmup", "100", "--seed", "7", "--out", at("w.adpt")});
        run({"apply-adapter", "--adapter", at("w.adpt"), "--in", data + "/posts.embx", "--out",
             at("posts.embx")});
        run({"apply-adapter", "--adapter", at("w.adpt"), "--in", data + "/factchecks.embx", "--out",
             at("factchecks.embx")});
        run({"retrieve", "--data", data, "--post-emb", at("posts.embx"), "--factcheck-emb",
             at("factchecks.embx"), "--mode", "track", "--out", at("tuned.jsonl")});
        run({"evaluate", "--data", data, "--rankings", at("tuned.jsonl"), "--out", at("tuned.json")});
    } catch (const std::exception& e) {
        return {Outcome::State::Fail, e.what()};
    }
    auto zero = load_report(dir / "zero.json");
    auto tuned = load_report(dir / "tuned.json");
    if (!zero.crosslingual || !tuned.crosslingual) return {Outcome::State::Fail, "no crosslingual cell"};
    double worst_drop = 0.0;
    std::string cells;
    for (const auto& [lang, cell] : zero.per_lang) {
        double after = tuned.per_lang.at(lang).value;
        worst_drop = std::max(worst_drop, cell.value - after);
        cells += fmt::format(" {} {:.3f}->{:.3f}", lang, cell.value, after);
    }
    double t = seconds_since(t0);
    bool ok = zero.crosslingual->value <= 0.30 && tuned.crosslingual->value >= 0.90 &&
              worst_drop <= 0.02 && t < 300.0;
    return pass_if(ok, fmt::format("crosslingual S@10 {:.3f} zero-shot (<= 0.30) -> {:.3f} tuned "
                                   "(>= 0.90); monolingual{}; max drop {:.3f} (<= 0.02), {:.1f}s",
                                   zero.crosslingual->value, tuned.crosslingual->value, cells,
                                   worst_drop, t));
}

// --- formats ----------------------------------------------------------------

Outcome format_round_trip() {
    std::mt19937_64 rng(55);
    test::TempDir dir("accept_formats");
    int embx_bad = 0, adpt_bad = 0;
    for (int i = 0; i < 50; ++i) {
        std::size_t n = 1 + rng() % 200;
        auto dim = static_cast<std::uint32_t>(1 + rng() % 64);
        std::vector<std::string> ids;
        for (std::size_t r = 0; r < n; ++r) ids.push_back(fmt::format("doc-{}-{}", i, r));
        std::shuffle(ids.begin(), ids.end(), rng);
        EmbeddingMatrix m(fmt::format("enc{}", i), rng() % 2 ? Channel::English : Channel::Original,
                          rng() % 2 ? DocKind::Post : DocKind::FactCheck, dim, ids,
                          test::random_unit_rows(rng, n, dim));
        auto first = dir / "a.embx", second = dir / "b.embx";
        write_matrix(m, first);
        auto back = import_matrix(first);
        write_matrix(back.matrix, second);
        if (back.renormalized != 0 || read_file_bytes(first) != read_file_bytes(second)) ++embx_bad;

        AdapterModel a{m.model_id(), test::near_identity(rng, static_cast<int>(dim), 0.5)};
        save_adapter(a, dir / "a.adpt");
        save_adapter(load_adapter(dir / "a.adpt"), dir / "b.adpt");
        if (read_file_bytes(dir / "a.adpt") != read_file_bytes(dir / "b.adpt")) ++adpt_bad;
    }
    return pass_if(embx_bad == 0 && adpt_bad == 0,
                   fmt::format("50 random matrices: {} EMBX and {} ADPT files differ", embx_bad,
                               adpt_bad));
}

// --- optional real-data check -----------------------------------------------

Outcome multiclaim_zero_shot() {
    const char* root = std::getenv("FCR_MULTICLAIM_DIR");
    if (!root) {
        return {Outcome::State::Skip,
                "set FCR_MULTICLAIM_DIR to a corpus dir holding posts.embx and factchecks.embx "
                "from GTE-Multilingual-Base (original channel)"};
    }
    // zero-shot GTE-Multilingual-Base row, original-language text
    const std::map<std::string, double> expected = {
        {"fra", 0.82}, {"spa", 0.87}, {"eng", 0.77}, {"por", 0.79},
        {"tha", 0.96}, {"deu", 0.75}, {"msa", 0.89}, {"ara", 0.83}};
    const double expected_cross = 0.63;
    try {
        std::filesystem::path dir(root);
        Corpus corpus = load_corpus_dir(dir);
        auto posts = import_matrix(dir / "posts.embx").matrix;
        auto fcs = import_matrix(dir / "factchecks.embx").matrix;
        RetrievalConfig cfg;
        cfg.mode = PoolMode::Track;
        Retriever retriever(corpus, posts, fcs, cfg);
        std::vector<std::string> ids;
        for (const auto& [id, doc] : corpus.posts()) {
            if (corpus.has_gold(id)) ids.push_back(id);
        }
        auto report = evaluate(corpus, retriever.retrieve_batch(ids), 10);
        double worst = 0.0;
        for (const auto& [lang, value] : expected) {
            auto it = report.per_lang.find(lang);
            worst = std::max(worst, it == report.per_lang.end() ? 1.0 : std::abs(it->second.value - value));
        }
        worst = std::max(worst, report.crosslingual ? std::abs(report.crosslingual->value - expected_cross) : 1.0);
        return pass_if(worst <= 0.03, fmt::format("max |S@10 - table| {:.3f} (limit 0.03)", worst));
    } catch (const std::exception& e) {
        return {Outcome::State::Fail, e.what()};
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient-correctness", gradient_check},
        {"mnrl-closed-forms", mnrl_anchors},
        {"retrieval-exactness", retrieval_exactness},
        {"success-at-k-oracle", success_oracle},
        {"fusion-oracle", fusion_oracle},
        {"synthetic-end-to-end", synthetic_end_to_end},
        {"format-round-trip", format_round_trip},
        {"multiclaim-zero-shot (optional)", multiclaim_zero_shot},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {Outcome::State::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.state == Outcome::State::Pass ? "PASS"
                          : o.state == Outcome::State::Skip ? "SKIP"
                                                            : "FAIL";
        if (o.state == Outcome::State::Fail) ++failures;
        std::cout << fmt::format("{}  {}: {}", tag, name, o.detail) << std::endl;
    }
    std::cout << (failures == 0 ? "acceptance: all required criteria passed"
                                : fmt::format("acceptance: {} criteria failed", failures))
              << std::endl;
    return failures == 0 ? 0 : 1;
}
