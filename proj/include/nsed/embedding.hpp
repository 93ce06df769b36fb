#pragma once

#include <string>
#include <vector>

#include "nsed/common.hpp"

namespace nsed {

// Per-graph embedding rows (always 32-bit on disk and in the index path)
// with aligned graph ids.
struct EmbeddingMatrix {
    int dim = 0;
    std::vector<float> data; // count x dim, row-major
    std::vector<std::string> ids;

    int count() const { return static_cast<int>(ids.size()); }
    const float* row(int i) const { return data.data() + static_cast<std::size_t>(i) * dim; }
    float* row(int i) { return data.data() + static_cast<std::size_t>(i) * dim; }
};

// NSEM container: magic, version, dim, count, little-endian f32 payload,
// then a length-prefixed UTF-8 id table.
void write_embeddings(const std::string& path, const EmbeddingMatrix& m);
EmbeddingMatrix read_embeddings(const std::string& path);

} // namespace nsed
