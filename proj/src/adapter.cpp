#include "fcr/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fcr/binary_io.hpp"
#include "fcr/error.hpp"

namespace fcr {

namespace {

constexpr double kMinNorm = 1e-12;
constexpr std::string_view kMagic = "ADPT";
constexpr std::uint16_t kVersion = 1;

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct Normalized {
    Eigen::MatrixXd unit;    // rows a_i = W x_i / |W x_i|
    Eigen::VectorXd norms;   // |W x_i|
};

Normalized adapt_rows(const Eigen::MatrixXd& x, const Eigen::MatrixXd& weights) {
    Normalized out;
    out.unit = x * weights.transpose();
    out.norms = out.unit.rowwise().norm();
    for (Eigen::Index i = 0; i < out.norms.size(); ++i) {
        if (!(out.norms(i) >= kMinNorm)) {
            throw DataError("degenerate adapter: |W x| below 1e-12 for batch row " +
                            std::to_string(i));
        }
        out.unit.row(i) /= out.norms(i);
    }
    return out;
}

void check_batch(const TrainingBatch& batch, const Eigen::MatrixXd& weights) {
    if (batch.size() < 1) throw ConfigError("MNRL batch must hold at least one pair");
    if (batch.positives.rows() != batch.size() || batch.positives.cols() != batch.queries.cols()) {
        throw ConfigError("query and positive blocks differ in shape");
    }
    if (weights.rows() != weights.cols() || weights.cols() != batch.queries.cols()) {
        throw ConfigError("adapter shape does not match embedding dim");
    }
}

// Row-wise softmax cross-entropy with the diagonal as target.
double cross_entropy(const Eigen::MatrixXd& logits, Eigen::MatrixXd* softmax) {
    const Eigen::Index n = logits.rows();
    double total = 0.0;
    if (softmax) softmax->resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double m = logits.row(i).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) sum += std::exp(logits(i, j) - m);
        double lse = m + std::log(sum);
        total += lse - logits(i, i);
        if (softmax) {
            for (Eigen::Index j = 0; j < n; ++j) (*softmax)(i, j) = std::exp(logits(i, j) - lse);
        }
    }
    return total / static_cast<double>(n);
}

// Back-propagates through x -> x / |x|: (I - a a^T) g / |x|, row-wise.
Eigen::MatrixXd through_normalization(const Eigen::MatrixXd& grad_unit, const Normalized& n) {
    Eigen::MatrixXd out = grad_unit;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        double along = grad_unit.row(i).dot(n.unit.row(i));
        out.row(i) = (grad_unit.row(i) - along * n.unit.row(i)) / n.norms(i);
    }
    return out;
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    // Rejection sampling keeps the draw independent of the standard library's
    // distribution implementation.
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

Eigen::RowVectorXd to_row(std::span<const float> v) {
    Eigen::RowVectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

}  // namespace

AdapterModel AdapterModel::identity(std::string model_id, std::uint32_t dim) {
    return {std::move(model_id), Eigen::MatrixXd::Identity(dim, dim)};
}

double similarity(SimilarityKind kind, std::span<const double> a, std::span<const double> b) {
    switch (kind) {
        case SimilarityKind::Cosine: {
            double ab = 0.0, aa = 0.0, bb = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                ab += a[i] * b[i];
                aa += a[i] * a[i];
                bb += b[i] * b[i];
            }
            return ab / std::sqrt(aa * bb);
        }
    }
    return 0.0;
}

LossResult mnrl_loss(const TrainingBatch& batch, const Eigen::MatrixXd& weights, double scale) {
    check_batch(batch, weights);
    auto q = adapt_rows(batch.queries, weights);
    auto p = adapt_rows(batch.positives, weights);
    LossResult out;
    out.logits = scale * q.unit * p.unit.transpose();
    out.loss = cross_entropy(out.logits, nullptr);
    return out;
}

LossAndGrad mnrl_loss_and_grad(const TrainingBatch& batch, const Eigen::MatrixXd& weights,
                               double scale) {
    check_batch(batch, weights);
    auto q = adapt_rows(batch.queries, weights);
    auto p = adapt_rows(batch.positives, weights);
    Eigen::MatrixXd logits = scale * q.unit * p.unit.transpose();
    Eigen::MatrixXd softmax;
    LossAndGrad out;
    out.loss = cross_entropy(logits, &softmax);

    // d(loss)/d(logits) = (softmax - I) / N
    const auto n = static_cast<double>(batch.size());
    Eigen::MatrixXd g = softmax;
    g.diagonal().array() -= 1.0;
    g /= n;

    Eigen::MatrixXd grad_qu = scale * g * p.unit;
    Eigen::MatrixXd grad_pu = scale * g.transpose() * q.unit;
    Eigen::MatrixXd grad_qw = through_normalization(grad_qu, q);
    Eigen::MatrixXd grad_pw = through_normalization(grad_pu, p);
    out.grad = grad_qw.transpose() * batch.queries + grad_pw.transpose() * batch.positives;
    return out;
}

Eigen::MatrixXd mnrl_grad(const TrainingBatch& batch, const Eigen::MatrixXd& weights,
                          double scale) {
    return mnrl_loss_and_grad(batch, weights, scale).grad;
}

void TrainConfig::validate() const {
    if (batch_size < 2 || batch_size > 16) throw ConfigError("batch_size must be in [2, 16]");
    if (!(learning_rate == 0.0 || (learning_rate >= 1e-5 && learning_rate <= 3e-5))) {
        throw ConfigError("learning_rate must be 0 or in [1e-5, 3e-5]");
    }
    if (!(adapter_lr_scale > 0.0) || !std::isfinite(adapter_lr_scale)) {
        throw ConfigError("adapter_lr_scale must be positive");
    }
    if (epochs < 1 || epochs > 3) throw ConfigError("epochs must be in [1, 3]");
    if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("scale must be positive");
}

TrainResult train(const Corpus& corpus, const EmbeddingMatrix& posts,
                  const EmbeddingMatrix& factchecks, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    std::vector<GoldPair> pairs(corpus.gold().begin(), corpus.gold().end());
    return train_pairs(pairs, posts, factchecks, cfg, on_epoch);
}

TrainResult train_pairs(std::span<const GoldPair> pairs_in, const EmbeddingMatrix& posts,
                        const EmbeddingMatrix& factchecks, const TrainConfig& cfg,
                        const EpochCallback& on_epoch) {
    cfg.validate();
    if (pairs_in.size() < 2) {
        throw DataError("training needs at least 2 gold pairs, got " +
                        std::to_string(pairs_in.size()));
    }
    if (posts.dim() != factchecks.dim()) {
        throw DataError("post and fact-check matrices have different dims");
    }
    if (posts.model_id() != factchecks.model_id()) {
        throw DataError("post and fact-check matrices come from different models");
    }
    std::vector<GoldPair> pairs(pairs_in.begin(), pairs_in.end());
    std::sort(pairs.begin(), pairs.end());

    const Eigen::Index dim = posts.dim();
    std::vector<Eigen::RowVectorXd> query_rows, positive_rows;
    query_rows.reserve(pairs.size());
    positive_rows.reserve(pairs.size());
    for (const auto& [post_id, fc_id] : pairs) {
        query_rows.push_back(to_row(posts.lookup(post_id)));
        positive_rows.push_back(to_row(factchecks.lookup(fc_id)));
    }

    TrainResult result;
    result.adapter = AdapterModel::identity(posts.model_id(), posts.dim());
    Eigen::MatrixXd& w = result.adapter.weights;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(dim, dim);

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(pairs.size());
    const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
    std::size_t step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            std::swap(order[i], order[bounded(rng, i + 1)]);
        }
        double epoch_sum = 0.0;
        std::size_t epoch_steps = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
            std::size_t n = std::min(batch_size, order.size() - begin);
            if (n < 2) break;
            TrainingBatch batch{Eigen::MatrixXd(n, dim), Eigen::MatrixXd(n, dim)};
            for (std::size_t r = 0; r < n; ++r) {
                auto idx = order[begin + r];
                batch.queries.row(static_cast<Eigen::Index>(r)) = query_rows[idx];
                batch.positives.row(static_cast<Eigen::Index>(r)) = positive_rows[idx];
            }
            auto [loss, grad] = mnrl_loss_and_grad(batch, w, cfg.scale);
            if (!std::isfinite(loss) || !grad.allFinite()) {
                throw DataError("non-finite loss at step " + std::to_string(step));
            }
            result.step_losses.push_back(loss);
            epoch_sum += loss;
            ++epoch_steps;

            double warm = cfg.warmup_steps > 0 && step < static_cast<std::size_t>(cfg.warmup_steps)
                              ? static_cast<double>(step) / cfg.warmup_steps
                              : 1.0;
            double lr = cfg.step_size() * warm;
            auto t = static_cast<double>(step + 1);
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
            if (lr != 0.0) {
                double c1 = 1.0 - std::pow(kAdamBeta1, t);
                double c2 = 1.0 - std::pow(kAdamBeta2, t);
                w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
            }
            if (!w.allFinite()) {
                throw DataError("adapter weights became non-finite at step " + std::to_string(step));
            }
            ++step;
        }
        EpochSummary summary{epoch, epoch_steps ? epoch_sum / static_cast<double>(epoch_steps) : 0.0};
        result.epochs.push_back(summary);
        if (on_epoch) on_epoch(summary, result.adapter);
    }
    return result;
}

EmbeddingMatrix apply_adapter(const AdapterModel& adapter, const EmbeddingMatrix& matrix) {
    if (adapter.dim() != matrix.dim()) {
        throw DataError("adapter dim " + std::to_string(adapter.dim()) + " != matrix dim " +
                        std::to_string(matrix.dim()));
    }
    const Eigen::Index dim = matrix.dim();
    std::vector<float> out(matrix.data().size());
    Eigen::VectorXd x(dim);
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        auto row = matrix.row(r);
        for (Eigen::Index c = 0; c < dim; ++c) x(c) = row[static_cast<std::size_t>(c)];
        Eigen::VectorXd y = adapter.weights * x;
        double norm = y.norm();
        if (!(norm >= kMinNorm)) {
            throw DataError("adapter maps row '" + matrix.ids()[r] + "' to a zero vector");
        }
        for (Eigen::Index c = 0; c < dim; ++c) {
            out[r * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] =
                static_cast<float>(y(c) / norm);
        }
    }
    return EmbeddingMatrix(matrix.model_id() + "+adapter", matrix.channel(), matrix.kind(),
                           matrix.dim(), matrix.ids(), std::move(out));
}

std::vector<std::uint8_t> serialize_adapter(const AdapterModel& adapter) {
    ByteWriter out;
    out.put_raw(kMagic);
    out.put(kVersion);
    out.put_string16(adapter.model_id);
    out.put(adapter.dim());
    for (Eigen::Index r = 0; r < adapter.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < adapter.weights.cols(); ++c) out.put(adapter.weights(r, c));
    }
    return out.take();
}

AdapterModel parse_adapter(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    if (in.remaining() < kMagic.size() || in.get_raw(kMagic.size()) != kMagic) {
        throw DataError("bad magic: not an ADPT file");
    }
    auto version = in.get<std::uint16_t>();
    if (version != kVersion) throw DataError("unsupported ADPT version " + std::to_string(version));
    AdapterModel adapter;
    adapter.model_id = in.get_string16();
    auto dim = in.get<std::uint32_t>();
    if (dim == 0) throw DataError("ADPT dim must be positive");
    if (static_cast<std::uint64_t>(dim) * dim > in.remaining() / 8) {
        throw DataError("truncated payload: ADPT declares dim " + std::to_string(dim));
    }
    adapter.weights.resize(dim, dim);
    for (std::uint32_t r = 0; r < dim; ++r) {
        for (std::uint32_t c = 0; c < dim; ++c) {
            double x = in.get<double>();
            if (!std::isfinite(x)) throw DataError("non-finite adapter weight");
            adapter.weights(r, c) = x;
        }
    }
    if (in.remaining() != 0) throw DataError("trailing bytes after ADPT payload");
    return adapter;
}

void save_adapter(const AdapterModel& adapter, const std::filesystem::path& path) {
    write_file_bytes(path, serialize_adapter(adapter));
}

AdapterModel load_adapter(const std::filesystem::path& path) {
    try {
        return parse_adapter(read_file_bytes(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace fcr
