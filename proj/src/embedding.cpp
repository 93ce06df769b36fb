#include "nsed/embedding.hpp"

#include <cstring>
#include <fstream>

#include "nsed/io_util.hpp"

namespace nsed {

void write_embeddings(const std::string& path, const EmbeddingMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write embedding file: " + path);
    out.write("NSEM", 4);
    io::write_u32(out, 1); // format version
    io::write_u32(out, static_cast<std::uint32_t>(m.dim));
    io::write_u64(out, static_cast<std::uint64_t>(m.ids.size()));
    io::write_f32_array(out, m.data);
    for (const auto& id : m.ids) io::write_string(out, id);
    require(out.good(), "short write to embedding file: " + path);
}

EmbeddingMatrix read_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open embedding file: " + path);
    char magic[4];
    in.read(magic, 4);
    require(in.good() && std::memcmp(magic, "NSEM", 4) == 0, "not an NSEM embedding file: " + path);
    std::uint32_t version = io::read_u32(in);
    require(version == 1, "unsupported NSEM version " + std::to_string(version));
    EmbeddingMatrix m;
    m.dim = static_cast<int>(io::read_u32(in));
    std::uint64_t count = io::read_u64(in);
    m.data = io::read_f32_array(in, count * static_cast<std::uint64_t>(m.dim));
    m.ids.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) m.ids.push_back(io::read_string(in));
    require(in.good(), "truncated embedding file: " + path);
    return m;
}

} // namespace nsed
