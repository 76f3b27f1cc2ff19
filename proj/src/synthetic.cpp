#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "fcr/error.hpp"
#include "fcr/evaluation.hpp"

namespace fcr {

namespace {

// Portable draws: the standard distributions are implementation-defined, so
// build uniforms and normals directly from the engine output.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (spare_) {
            double out = *spare_;
            spare_.reset();
            return out;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    Eigen::VectorXd gaussian(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
        return v;
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

Eigen::VectorXd unit(Eigen::VectorXd v) {
    double n = v.norm();
    return n > 0.0 ? Eigen::VectorXd(v / n) : v;
}

Eigen::VectorXd random_unit(Rng& rng, Eigen::Index dim, Eigen::Index support) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    while (v.norm() == 0.0) v.head(support) = rng.gaussian(support);
    return unit(v);
}

// Orthogonal R = [[0, -Q^T, 0], [Q, 0, 0], [0, 0, 1]] with Q a random h x h
// orthogonal matrix: R swaps the first h coordinates with the next h.
Eigen::MatrixXd swap_rotation(Rng& rng, Eigen::Index dim) {
    const Eigen::Index h = dim / 2;
    Eigen::MatrixXd g(h, h);
    for (Eigen::Index c = 0; c < h; ++c) g.col(c) = rng.gaussian(h);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    for (Eigen::Index c = 0; c < h; ++c) {
        if (qr.matrixQR()(c, c) < 0) q.col(c) = -q.col(c);
    }
    Eigen::MatrixXd rot = Eigen::MatrixXd::Zero(dim, dim);
    rot.block(h, 0, h, h) = q;
    rot.block(0, h, h, h) = -q.transpose();
    for (Eigen::Index i = 2 * h; i < dim; ++i) rot(i, i) = 1.0;
    return rot;
}

void append_row(std::vector<float>& data, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(static_cast<float>(v(i)));
}

std::string lang_code(int index) {
    if (index < static_cast<int>(kReportLanguages.size())) return kReportLanguages[index];
    return fmt::format("l{:02d}", index);
}

}  // namespace

void SynthConfig::validate() const {
    if (n_langs < 1 || posts_per_lang < 1 || distractors_per_lang < 1) {
        throw ConfigError("synthetic sizes must be >= 1");
    }
    if (dim < 8) throw ConfigError("synthetic dim must be >= 8");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("noise must be >= 0");
    if (rotate_lang && (*rotate_lang < 0 || *rotate_lang >= n_langs)) {
        throw ConfigError("rotate_lang must index one of the generated languages");
    }
}

SyntheticData make_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const Eigen::Index dim = cfg.dim;
    const bool rotating = cfg.rotate_lang.has_value();
    const Eigen::Index content_dim = rotating ? dim / 2 : dim;
    const Eigen::MatrixXd rotation = rotating ? swap_rotation(rng, dim) : Eigen::MatrixXd();
    const double noise_scale = cfg.noise / std::sqrt(static_cast<double>(dim));

    SyntheticData out;
    for (int l = 0; l < cfg.n_langs; ++l) out.languages.push_back(lang_code(l));

    struct Row {
        std::string id;
        Eigen::VectorXd vec;
    };
    std::vector<Document> posts, factchecks;
    std::vector<GoldPair> pairs;
    std::vector<Row> post_rows, fc_rows;

    for (int l = 0; l < cfg.n_langs; ++l) {
        const std::string& lang = out.languages[l];
        const bool rotated = rotating && *cfg.rotate_lang == l;
        std::vector<int> others;
        for (int o = 0; o < cfg.n_langs; ++o) {
            if (o != l) others.push_back(o);
        }
        for (int i = 0; i < cfg.posts_per_lang; ++i) {
            const std::string& post_lang =
                rotated && !others.empty() ? out.languages[others[i % others.size()]] : lang;
            std::string post_id = fmt::format("p-{}-{:05d}", lang, i);
            std::string fc_id = fmt::format("fc-{}-{:05d}", lang, i);

            Eigen::VectorXd u = random_unit(rng, dim, content_dim);
            Eigen::VectorXd post = unit(u + noise_scale * rng.gaussian(dim));
            Eigen::VectorXd fc = unit(u + noise_scale * rng.gaussian(dim));
            if (rotated) fc = rotation * fc;

            std::string text = fmt::format("synthetic post {} ({})", i, post_lang);
            posts.push_back({post_id, DocKind::Post, post_lang, text, text, std::nullopt});
            text = fmt::format("synthetic claim {} ({})", i, lang);
            factchecks.push_back({fc_id, DocKind::FactCheck, lang, text, text, std::nullopt});
            pairs.emplace_back(post_id, fc_id);
            post_rows.push_back({post_id, post});
            fc_rows.push_back({fc_id, fc});
        }
        for (int d = 0; d < cfg.distractors_per_lang; ++d) {
            std::string fc_id = fmt::format("fc-{}-d{:05d}", lang, d);
            Eigen::VectorXd v = random_unit(rng, dim, dim);
            if (rotated) v = rotation * v;
            std::string text = fmt::format("synthetic distractor {} ({})", d, lang);
            factchecks.push_back({fc_id, DocKind::FactCheck, lang, text, text, std::nullopt});
            fc_rows.push_back({fc_id, v});
        }
    }

    auto build = [&](std::vector<Row>& rows, DocKind kind) {
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.id < b.id; });
        std::vector<std::string> ids;
        std::vector<float> data;
        ids.reserve(rows.size());
        data.reserve(rows.size() * static_cast<std::size_t>(dim));
        for (const auto& r : rows) {
            ids.push_back(r.id);
            append_row(data, r.vec);
        }
        return EmbeddingMatrix("synthetic", Channel::Original, kind, static_cast<std::uint32_t>(dim),
                               std::move(ids), std::move(data));
    };
    out.posts = build(post_rows, DocKind::Post);
    out.factchecks = build(fc_rows, DocKind::FactCheck);
    out.corpus = Corpus(std::move(posts), std::move(factchecks), std::move(pairs));
    return out;
}

}  // namespace fcr
