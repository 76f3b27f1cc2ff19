#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fcr/corpus.hpp"
#include "fcr/embedding_store.hpp"

namespace fcr {

/// Square linear map applied to frozen embeddings, followed by renormalization.
struct AdapterModel {
    std::string model_id;  ///< base encoder this adapter was trained on
    Eigen::MatrixXd weights;

    std::uint32_t dim() const { return static_cast<std::uint32_t>(weights.rows()); }

    static AdapterModel identity(std::string model_id, std::uint32_t dim);
};

/// Row i of `positives` is a gold fact-check for row i of `queries`; the other
/// rows of `positives` act as in-batch negatives.
struct TrainingBatch {
    Eigen::MatrixXd queries;
    Eigen::MatrixXd positives;

    Eigen::Index size() const { return queries.rows(); }
};

enum class SimilarityKind { Cosine };

double similarity(SimilarityKind kind, std::span<const double> a, std::span<const double> b);

struct LossResult {
    double loss = 0.0;
    Eigen::MatrixXd logits;  ///< N x N, logits(i, j) = scale * <a(q_i), a(p_j)>
};

/// Multiple negatives ranking loss of the adapted batch: softmax cross-entropy
/// over each row of the scaled cosine logits, with the paired positive as the
/// target class. Throws DataError when W maps an input to (near) zero.
LossResult mnrl_loss(const TrainingBatch& batch, const Eigen::MatrixXd& weights, double scale);

/// Analytic d(loss)/dW.
Eigen::MatrixXd mnrl_grad(const TrainingBatch& batch, const Eigen::MatrixXd& weights,
                          double scale);

struct LossAndGrad {
    double loss = 0.0;
    Eigen::MatrixXd grad;
};
LossAndGrad mnrl_loss_and_grad(const TrainingBatch& batch, const Eigen::MatrixXd& weights,
                               double scale);

struct TrainConfig {
    int batch_size = 16;
    /// Nominal fine-tuning learning rate, 0 or within [1e-5, 3e-5].
    double learning_rate = 2e-5;
    /// Multiplier from the nominal encoder learning rate to the adapter's Adam
    /// step size. A linear map over frozen vectors needs far larger steps than
    /// transformer weights to move within a few hundred updates.
    double adapter_lr_scale = 1000.0;
    int epochs = 1;
    int warmup_steps = 100;
    double scale = 20.0;
    std::uint64_t seed = 0;

    /// Throws ConfigError when any field is out of range.
    void validate() const;
    double step_size() const { return learning_rate * adapter_lr_scale; }
};

struct EpochSummary {
    int epoch = 0;
    double mean_loss = 0.0;
};

struct TrainResult {
    AdapterModel adapter;
    std::vector<double> step_losses;
    std::vector<EpochSummary> epochs;
};

/// Called after every epoch with the current adapter; for reporting only.
using EpochCallback = std::function<void(const EpochSummary&, const AdapterModel&)>;

/// Adam with linear warmup over in-batch MNRL. Deterministic given the seed.
TrainResult train(const Corpus& corpus, const EmbeddingMatrix& posts,
                  const EmbeddingMatrix& factchecks, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Same as `train` over an explicit pair list (sorted order is the shuffle base).
TrainResult train_pairs(std::span<const GoldPair> pairs, const EmbeddingMatrix& posts,
                        const EmbeddingMatrix& factchecks, const TrainConfig& cfg,
                        const EpochCallback& on_epoch = {});

/// Each row mapped through W and renormalized; model_id gains "+adapter".
EmbeddingMatrix apply_adapter(const AdapterModel& adapter, const EmbeddingMatrix& matrix);

std::vector<std::uint8_t> serialize_adapter(const AdapterModel& adapter);
AdapterModel parse_adapter(std::span<const std::uint8_t> bytes);
void save_adapter(const AdapterModel& adapter, const std::filesystem::path& path);
AdapterModel load_adapter(const std::filesystem::path& path);

}  // namespace fcr
