#include "fcr/embedding_store.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fcr/binary_io.hpp"
#include "fcr/error.hpp"

namespace fcr {

namespace {

constexpr std::string_view kMagic = "EMBX";
constexpr std::uint16_t kVersion = 1;

std::uint8_t channel_code(Channel c) { return c == Channel::Original ? 0 : 1; }
std::uint8_t kind_code(DocKind k) { return k == DocKind::Post ? 0 : 1; }

double row_norm(std::span<const float> row) {
    double sum = 0.0;
    for (float x : row) sum += static_cast<double>(x) * x;
    return std::sqrt(sum);
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::string model_id, Channel channel, DocKind kind,
                                 std::uint32_t dim, std::vector<std::string> ids,
                                 std::vector<float> vectors)
    : model_id_(std::move(model_id)),
      channel_(channel),
      kind_(kind),
      dim_(dim),
      ids_(std::move(ids)),
      data_(std::move(vectors)) {
    if (dim_ == 0) throw DataError("embedding dim must be positive");
    if (data_.size() != ids_.size() * dim_) {
        throw DataError("embedding payload has " + std::to_string(data_.size()) +
                        " floats, expected " + std::to_string(ids_.size()) + " x " +
                        std::to_string(dim_));
    }
    index_.reserve(ids_.size());
    for (std::size_t r = 0; r < ids_.size(); ++r) {
        if (!index_.emplace(ids_[r], r).second) {
            throw DataError("duplicate embedding id '" + ids_[r] + "'");
        }
        auto v = row(r);
        for (float x : v) {
            if (!std::isfinite(x)) throw DataError("non-finite value in row '" + ids_[r] + "'");
        }
        if (std::abs(row_norm(v) - 1.0) > kUnitNormTolerance) {
            throw DataError("row '" + ids_[r] + "' is not unit-norm");
        }
    }
}

std::size_t EmbeddingMatrix::row_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw DataError("no embedding for id '" + id + "' in model '" + model_id_ + "'");
    }
    return it->second;
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
    return model_id_ == other.model_id_ && channel_ == other.channel_ && kind_ == other.kind_ &&
           dim_ == other.dim_ && ids_ == other.ids_ && data_ == other.data_;
}

std::size_t normalize_rows(std::span<float> vectors, std::uint32_t dim) {
    std::size_t touched = 0;
    for (std::size_t off = 0; off + dim <= vectors.size(); off += dim) {
        auto v = vectors.subspan(off, dim);
        for (float x : v) {
            if (!std::isfinite(x)) {
                throw DataError("non-finite value in row " + std::to_string(off / dim));
            }
        }
        double norm = row_norm(v);
        if (norm == 0.0) throw DataError("zero vector in row " + std::to_string(off / dim));
        if (std::abs(norm - 1.0) > kUnitNormTolerance) {
            for (float& x : v) x = static_cast<float>(x / norm);
            ++touched;
        }
    }
    return touched;
}

ImportResult parse_embx(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    if (in.remaining() < kMagic.size() || in.get_raw(kMagic.size()) != kMagic) {
        throw DataError("bad magic: not an EMBX file");
    }
    auto version = in.get<std::uint16_t>();
    if (version != kVersion) {
        throw DataError("unsupported EMBX version " + std::to_string(version));
    }
    auto channel = in.get<std::uint8_t>();
    auto kind = in.get<std::uint8_t>();
    if (channel > 1) throw DataError("bad channel code " + std::to_string(channel));
    if (kind > 1) throw DataError("bad kind code " + std::to_string(kind));
    auto model_id = in.get_string16();
    auto dim = in.get<std::uint32_t>();
    auto n = in.get<std::uint64_t>();
    if (dim == 0) throw DataError("EMBX dim must be positive");
    // Each record needs at least a length prefix and the floats.
    std::uint64_t min_record = 2 + 4ull * dim;
    if (n > in.remaining() / min_record) {
        throw DataError("truncated payload: header declares " + std::to_string(n) + " rows");
    }

    std::vector<std::string> ids;
    std::vector<float> data;
    ids.reserve(n);
    data.reserve(n * dim);
    for (std::uint64_t r = 0; r < n; ++r) {
        ids.push_back(in.get_string16());
        for (std::uint32_t c = 0; c < dim; ++c) data.push_back(in.get<float>());
    }
    if (in.remaining() != 0) {
        throw DataError("trailing " + std::to_string(in.remaining()) + " bytes after EMBX payload");
    }

    ImportResult result;
    result.renormalized = normalize_rows(data, dim);
    result.matrix = EmbeddingMatrix(std::move(model_id),
                                    channel == 0 ? Channel::Original : Channel::English,
                                    kind == 0 ? DocKind::Post : DocKind::FactCheck, dim,
                                    std::move(ids), std::move(data));
    return result;
}

ImportResult import_matrix(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    try {
        return parse_embx(bytes);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> serialize_embx(const EmbeddingMatrix& matrix) {
    ByteWriter out;
    out.put_raw(kMagic);
    out.put(kVersion);
    out.put(channel_code(matrix.channel()));
    out.put(kind_code(matrix.kind()));
    out.put_string16(matrix.model_id());
    out.put(matrix.dim());
    out.put(static_cast<std::uint64_t>(matrix.rows()));
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        out.put_string16(matrix.ids()[r]);
        for (float x : matrix.row(r)) out.put(x);
    }
    return out.take();
}

void write_matrix(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    write_file_bytes(path, serialize_embx(matrix));
}

void ModelRegistry::add(const RegistryEntry& entry) {
    Key key{entry.model_id, entry.channel, entry.kind};
    for (const auto& [k, existing] : entries_) {
        if (existing.model_id == entry.model_id && existing.dim != entry.dim) {
            throw DataError("model '" + entry.model_id + "' registered with dim " +
                            std::to_string(existing.dim) + ", got " + std::to_string(entry.dim));
        }
    }
    auto [it, inserted] = entries_.emplace(key, entry);
    if (!inserted && !(it->second == entry)) {
        throw DataError("conflicting registration for model '" + entry.model_id + "' (" +
                        to_string(entry.channel) + ", " + to_string(entry.kind) + ")");
    }
}

bool ModelRegistry::contains(const std::string& model_id, Channel channel, DocKind kind) const {
    return entries_.contains(Key{model_id, channel, kind});
}

const RegistryEntry& ModelRegistry::find(const std::string& model_id, Channel channel,
                                         DocKind kind) const {
    auto it = entries_.find(Key{model_id, channel, kind});
    if (it == entries_.end()) {
        throw DataError("registry has no " + std::string(to_string(kind)) + " matrix for model '" +
                        model_id + "' (" + to_string(channel) + ")");
    }
    return it->second;
}

std::vector<RegistryEntry> ModelRegistry::entries() const {
    std::vector<RegistryEntry> out;
    for (const auto& [_, e] : entries_) out.push_back(e);
    return out;
}

ModelRegistry ModelRegistry::load(const std::filesystem::path& path) {
    ModelRegistry reg;
    if (!std::filesystem::exists(path)) return reg;
    std::ifstream in(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    for (const auto& item : doc.at("entries")) {
        RegistryEntry e;
        e.model_id = item.at("model_id").get<std::string>();
        e.channel = parse_channel(item.at("channel").get<std::string>());
        e.kind = item.at("kind").get<std::string>() == "post" ? DocKind::Post : DocKind::FactCheck;
        e.dim = item.at("dim").get<std::uint32_t>();
        e.path = item.at("path").get<std::string>();
        reg.add(e);
    }
    return reg;
}

void ModelRegistry::save(const std::filesystem::path& path) const {
    nlohmann::json doc;
    doc["entries"] = nlohmann::json::array();
    for (const auto& [_, e] : entries_) {
        doc["entries"].push_back({{"model_id", e.model_id},
                                  {"channel", to_string(e.channel)},
                                  {"kind", e.kind == DocKind::Post ? "post" : "factcheck"},
                                  {"dim", e.dim},
                                  {"path", e.path.string()}});
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    out << doc.dump(2) << '\n';
}

}  // namespace fcr
