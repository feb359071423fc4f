#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stdc/tensor.hpp"

namespace stdc {

// Undirected simple graph over region indices [0, n).
class AdjacencyGraph {
public:
    explicit AdjacencyGraph(std::size_t n = 0) : n_(n) {}

    // Rejects self-loops and out-of-range indices; duplicate edges are ignored.
    void add_edge(std::size_t a, std::size_t b);

    std::size_t size() const { return n_; }
    const std::set<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
    bool has_edge(std::size_t a, std::size_t b) const;
    std::vector<std::vector<std::size_t>> components() const;

    static AdjacencyGraph ring(std::size_t n);
    // Near-square grid, filled row by row; 4-neighbour connectivity.
    static AdjacencyGraph grid(std::size_t n);

private:
    std::size_t n_;
    std::set<std::pair<std::size_t, std::size_t>> edges_;  // stored with first < second
};

AdjacencyGraph load_adjacency(const std::filesystem::path& path, const std::vector<std::string>& region_ids);
void save_adjacency(const std::filesystem::path& path, const AdjacencyGraph& g,
                    const std::vector<std::string>& region_ids);

// Dense symmetric-normalized Laplacian I - D^{-1/2} A D^{-1/2}; isolated
// nodes keep a 1 on the diagonal.
Tensor normalized_laplacian(const AdjacencyGraph& g);

struct LaplacianEmbedding {
    Tensor vectors;                   // [n, d_lap]
    std::vector<double> eigenvalues;  // d_lap, ascending
};

// Eigenvectors of the d_lap smallest non-trivial eigenvalues. Each column is
// unit norm with its first entry of magnitude > 1e-8 made positive; columns of
// a repeated eigenvalue are ordered lexicographically after sign fixing.
LaplacianEmbedding laplacian_embedding(const AdjacencyGraph& g, std::size_t d_lap);

void save_embedding_csv(const std::filesystem::path& path, const LaplacianEmbedding& emb,
                        const std::vector<std::string>& region_ids);

}  // namespace stdc
