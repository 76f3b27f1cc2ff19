#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "fcr/corpus.hpp"
#include "fcr/text_preproc.hpp"

namespace fcr {

inline constexpr double kUnitNormTolerance = 1e-4;

/// One encoder's L2-normalized vectors over a document set, row-major.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;

    /// Takes `vectors` as ids.size() x dim floats. Rows are validated but not
    /// renormalized; use `normalize_rows` first for raw data.
    EmbeddingMatrix(std::string model_id, Channel channel, DocKind kind, std::uint32_t dim,
                    std::vector<std::string> ids, std::vector<float> vectors);

    const std::string& model_id() const { return model_id_; }
    Channel channel() const { return channel_; }
    DocKind kind() const { return kind_; }
    std::uint32_t dim() const { return dim_; }
    std::size_t rows() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<float>& data() const { return data_; }

    std::span<const float> row(std::size_t r) const {
        return {data_.data() + r * dim_, dim_};
    }

    bool contains(const std::string& id) const { return index_.contains(id); }
    /// Row index of `id`. Throws DataError naming the id when absent.
    std::size_t row_of(const std::string& id) const;
    /// The stored normalized vector for `id`. Throws DataError when absent.
    std::span<const float> lookup(const std::string& id) const { return row(row_of(id)); }

    bool operator==(const EmbeddingMatrix& other) const;

private:
    std::string model_id_;
    Channel channel_ = Channel::Original;
    DocKind kind_ = DocKind::Post;
    std::uint32_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Renormalizes every row whose norm is off by more than the tolerance.
/// Returns the number of rows touched. Throws DataError on NaN/Inf or zero rows.
std::size_t normalize_rows(std::span<float> vectors, std::uint32_t dim);

struct ImportResult {
    EmbeddingMatrix matrix;
    std::size_t renormalized = 0;
};

/// Parses an EMBX byte stream.
ImportResult parse_embx(std::span<const std::uint8_t> bytes);
ImportResult import_matrix(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_embx(const EmbeddingMatrix& matrix);
void write_matrix(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

struct RegistryEntry {
    std::string model_id;
    Channel channel = Channel::Original;
    DocKind kind = DocKind::Post;
    std::uint32_t dim = 0;
    std::filesystem::path path;

    bool operator==(const RegistryEntry&) const = default;
};

/// Maps (model_id, channel, kind) to one EMBX file. Persisted as JSON.
class ModelRegistry {
public:
    /// Re-registering an identical entry is a no-op; a different entry under the
    /// same key, or a dim that disagrees with the model's other entries, throws.
    void add(const RegistryEntry& entry);

    const RegistryEntry& find(const std::string& model_id, Channel channel, DocKind kind) const;
    bool contains(const std::string& model_id, Channel channel, DocKind kind) const;
    std::vector<RegistryEntry> entries() const;

    static ModelRegistry load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    using Key = std::tuple<std::string, Channel, DocKind>;
    std::map<Key, RegistryEntry> entries_;
};

}  // namespace fcr
