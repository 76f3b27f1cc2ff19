#include <doctest.h>

#include <random>
#include <sstream>

#include "fcr/error.hpp"
#include "fcr/retrieval.hpp"
#include "oracles.hpp"

using namespace fcr;

namespace {

struct Fixture {
    Corpus corpus;
    EmbeddingMatrix posts;
    EmbeddingMatrix factchecks;
};

// Posts and fact-checks with the given languages and random unit embeddings.
Fixture make_fixture(const std::vector<std::string>& post_langs,
                     const std::vector<std::string>& fc_langs, std::uint32_t dim,
                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Document> ps, fs;
    std::vector<std::string> pids, fids;
    for (std::size_t i = 0; i < post_langs.size(); ++i) {
        pids.push_back("p" + std::to_string(i));
        ps.push_back({pids.back(), DocKind::Post, post_langs[i], "t", std::nullopt, std::nullopt});
    }
    for (std::size_t i = 0; i < fc_langs.size(); ++i) {
        fids.push_back("f" + std::to_string(1000 + i));
        fs.push_back({fids.back(), DocKind::FactCheck, fc_langs[i], "t", std::nullopt, std::nullopt});
    }
    Corpus c(ps, fs, {});
    EmbeddingMatrix pm("m", Channel::Original, DocKind::Post, dim, pids,
                       test::random_unit_rows(rng, pids.size(), dim));
    EmbeddingMatrix fm("m", Channel::Original, DocKind::FactCheck, dim, fids,
                       test::random_unit_rows(rng, fids.size(), dim));
    return {std::move(c), std::move(pm), std::move(fm)};
}

}  // namespace

TEST_CASE("self-similarity ranks first") {
    std::mt19937_64 rng(1);
    std::vector<std::string> ids;
    for (int i = 0; i < 50; ++i) ids.push_back("id" + std::to_string(i));
    auto rows = test::random_unit_rows(rng, 50, 16);
    EmbeddingMatrix pool("m", Channel::Original, DocKind::FactCheck, 16, ids, rows);
    auto hits = top_k(pool.row(17), pool, 5);
    REQUIRE(hits.size() == 5);
    CHECK(hits[0].id == "id17");
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("orthogonal query ties break by id") {
    std::vector<std::string> ids = {"d", "b", "c", "a"};
    std::vector<float> rows;
    for (int i = 0; i < 4; ++i) {
        std::vector<float> r(8, 0.0f);
        r[static_cast<std::size_t>(i)] = 1.0f;
        rows.insert(rows.end(), r.begin(), r.end());
    }
    EmbeddingMatrix pool("m", Channel::Original, DocKind::FactCheck, 8, ids, rows);
    std::vector<float> q(8, 0.0f);
    q[7] = 1.0f;
    auto hits = top_k(q, pool, 10);
    REQUIRE(hits.size() == 4);
    for (const auto& h : hits) CHECK(std::abs(h.score) <= 1e-6);
    CHECK(hits[0].id == "a");
    CHECK(hits[1].id == "b");
    CHECK(hits[2].id == "c");
    CHECK(hits[3].id == "d");
}

TEST_CASE("top_k matches a full sort") {
    std::mt19937_64 rng(2);
    std::vector<std::string> ids;
    for (int i = 0; i < 200; ++i) ids.push_back("fc" + std::to_string(rng() % 1000000));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    auto rows = test::random_unit_rows(rng, ids.size(), 16);
    EmbeddingMatrix pool("m", Channel::Original, DocKind::FactCheck, 16, ids, rows);
    for (int q = 0; q < 20; ++q) {
        auto query = test::random_unit_rows(rng, 1, 16);
        CHECK(top_k(query, pool, 10) == test::full_sort_top_k(query, ids, rows, 16, 10));
    }
}

TEST_CASE("top_k rejects bad input") {
    EmbeddingMatrix pool("m", Channel::Original, DocKind::FactCheck, 2, {"a"}, {1, 0});
    std::vector<float> q3 = {1, 0, 0};
    std::vector<float> q2 = {1, 0};
    CHECK_THROWS_AS(top_k(q3, pool, 1), DataError);
    CHECK_THROWS_AS(top_k(q2, pool, 0), ConfigError);
}

TEST_CASE("pool modes") {
    std::vector<std::string> fc_langs(5, "tha");
    fc_langs.resize(105, "eng");
    auto fx = make_fixture({"tha", "eng"}, fc_langs, 8, 4);

    RetrievalConfig mono;
    mono.k = 10;
    Retriever r(fx.corpus, fx.posts, fx.factchecks, mono);
    CHECK(r.pool_size("p0") == 5);
    auto list = r.retrieve("p0");
    CHECK(list.hits.size() == 5);
    for (const auto& h : list.hits) CHECK(fx.corpus.factcheck(h.id).lang == "tha");

    RetrievalConfig cross = mono;
    cross.mode = PoolMode::Crosslingual;
    Retriever rc(fx.corpus, fx.posts, fx.factchecks, cross);
    CHECK(rc.pool_size("p0") == 105);
    CHECK(rc.retrieve("p0").hits.size() == 10);
}

TEST_CASE("track mode follows gold languages") {
    auto fx = make_fixture({"tha", "eng"}, {"tha", "tha", "eng", "eng"}, 8, 5);
    Corpus c(std::vector<Document>{fx.corpus.post("p0"), fx.corpus.post("p1")},
             std::vector<Document>{fx.corpus.factcheck("f1000"), fx.corpus.factcheck("f1001"),
                                   fx.corpus.factcheck("f1002"), fx.corpus.factcheck("f1003")},
             {{"p0", "f1000"}, {"p1", "f1000"}});
    RetrievalConfig cfg;
    cfg.mode = PoolMode::Track;
    Retriever r(c, fx.posts, fx.factchecks, cfg);
    CHECK(r.pool_size("p0") == 2);
    CHECK(r.pool_size("p1") == 4);
}

TEST_CASE("retriever checks matrix metadata") {
    auto fx = make_fixture({"eng"}, {"eng"}, 4, 6);
    RetrievalConfig cfg;
    cfg.model_id = "other";
    CHECK_THROWS_AS(Retriever(fx.corpus, fx.posts, fx.factchecks, cfg), DataError);
    cfg.model_id = "m";
    cfg.channel = Channel::English;
    CHECK_THROWS_AS(Retriever(fx.corpus, fx.posts, fx.factchecks, cfg), DataError);
    cfg.channel = Channel::Original;
    CHECK_THROWS_AS(Retriever(fx.corpus, fx.factchecks, fx.posts, cfg), DataError);
}

TEST_CASE("batch equals per-post and ignores thread count") {
    std::mt19937_64 rng(8);
    const std::vector<std::string> langs = {"eng", "fra", "tha"};
    std::vector<std::string> pl, fl;
    for (int i = 0; i < 120; ++i) pl.push_back(langs[rng() % 3]);
    for (int i = 0; i < 300; ++i) fl.push_back(langs[rng() % 3]);
    auto fx = make_fixture(pl, fl, 16, 9);
    RetrievalConfig cfg;
    cfg.mode = PoolMode::Crosslingual;
    Retriever r(fx.corpus, fx.posts, fx.factchecks, cfg);
    const auto& ids = fx.posts.ids();
    auto one = r.retrieve_batch(ids, 1);
    auto eight = r.retrieve_batch(ids, 8);
    REQUIRE(one.size() == ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK(one[i] == r.retrieve(ids[i]));
    std::ostringstream a, b;
    write_rankings(a, one);
    write_rankings(b, eight);
    CHECK(a.str() == b.str());
}

TEST_CASE("rankings file round-trip") {
    std::vector<RankedList> lists = {{"p1", {{"f1", 0.5}, {"f2", -0.25}}}, {"p2", {}}};
    std::stringstream s;
    write_rankings(s, lists);
    CHECK(read_rankings(s) == lists);
    std::stringstream bad("not json\n");
    CHECK_THROWS_AS(read_rankings(bad), DataError);
}

TEST_CASE("mode names") {
    CHECK(parse_pool_mode("monolingual") == PoolMode::Monolingual);
    CHECK(parse_pool_mode("crosslingual") == PoolMode::Crosslingual);
    CHECK(parse_pool_mode("track") == PoolMode::Track);
    CHECK_THROWS_AS(parse_pool_mode("mono"), ConfigError);
}
