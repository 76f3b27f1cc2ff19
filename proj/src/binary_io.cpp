#include "fcr/binary_io.hpp"

#include <fstream>
#include <limits>

namespace fcr {

void ByteWriter::put_string16(std::string_view s) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw DataError("string too long for 16-bit length prefix (" + std::to_string(s.size()) +
                        " bytes)");
    }
    put(static_cast<std::uint16_t>(s.size()));
    put_raw(s);
}

void ByteReader::need(std::size_t n) const {
    if (remaining() < n) {
        throw DataError("truncated payload: needed " + std::to_string(n) + " bytes at offset " +
                        std::to_string(pos_) + ", " + std::to_string(remaining()) + " left");
    }
}

std::string ByteReader::get_raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(size);
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
        throw DataError("failed reading " + path.string());
    }
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace fcr
