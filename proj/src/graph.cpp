#include "stdc/graph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "stdc/csv.hpp"

namespace stdc {

void AdjacencyGraph::add_edge(std::size_t a, std::size_t b) {
    if (a >= n_ || b >= n_) {
        throw std::invalid_argument("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                    ") out of range for graph of " + std::to_string(n_) + " nodes");
    }
    if (a == b) throw std::invalid_argument("self-loop on node " + std::to_string(a));
    edges_.emplace(std::min(a, b), std::max(a, b));
}

bool AdjacencyGraph::has_edge(std::size_t a, std::size_t b) const {
    return edges_.count({std::min(a, b), std::max(a, b)}) != 0;
}

std::vector<std::vector<std::size_t>> AdjacencyGraph::components() const {
    std::vector<std::vector<std::size_t>> adj(n_);
    for (const auto& [a, b] : edges_) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<char> seen(n_, 0);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t s = 0; s < n_; ++s) {
        if (seen[s]) continue;
        std::vector<std::size_t> comp;
        std::queue<std::size_t> q;
        q.push(s);
        seen[s] = 1;
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop();
            comp.push_back(u);
            for (std::size_t v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    q.push(v);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

AdjacencyGraph AdjacencyGraph::ring(std::size_t n) {
    AdjacencyGraph g(n);
    if (n == 2) g.add_edge(0, 1);
    if (n > 2) {
        for (std::size_t i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
    }
    return g;
}

AdjacencyGraph AdjacencyGraph::grid(std::size_t n) {
    AdjacencyGraph g(n);
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    for (std::size_t i = 0; i < n; ++i) {
        if ((i % cols) + 1 < cols && i + 1 < n) g.add_edge(i, i + 1);
        if (i + cols < n) g.add_edge(i, i + cols);
    }
    return g;
}

AdjacencyGraph load_adjacency(const std::filesystem::path& path, const std::vector<std::string>& region_ids) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open adjacency file " + path.string());
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < region_ids.size(); ++i) index.emplace(region_ids[i], i);
    AdjacencyGraph g(region_ids.size());
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        auto fields = csv::split(line);
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != 2) {
            throw std::runtime_error(path.string() + ":" + std::to_string(no) + ": expected 'region_id_a,region_id_b'");
        }
        if (no == 1 && fields[0] == "region_id_a" && fields[1] == "region_id_b") continue;
        std::size_t ends[2];
        for (int k = 0; k < 2; ++k) {
            const auto it = index.find(fields[k]);
            if (it == index.end()) {
                throw std::runtime_error(path.string() + ":" + std::to_string(no) + ": unknown region_id '" +
                                         fields[k] + "'");
            }
            ends[k] = it->second;
        }
        if (ends[0] == ends[1]) {
            throw std::runtime_error(path.string() + ":" + std::to_string(no) + ": self-loop on " + fields[0]);
        }
        g.add_edge(ends[0], ends[1]);
    }
    return g;
}

void save_adjacency(const std::filesystem::path& path, const AdjacencyGraph& g,
                    const std::vector<std::string>& region_ids) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "region_id_a,region_id_b\n";
    for (const auto& [a, b] : g.edges()) out << region_ids.at(a) << ',' << region_ids.at(b) << '\n';
}

Tensor normalized_laplacian(const AdjacencyGraph& g) {
    const std::size_t n = g.size();
    std::vector<double> degree(n, 0.0);
    for (const auto& [a, b] : g.edges()) {
        degree[a] += 1.0;
        degree[b] += 1.0;
    }
    Tensor lap({n, n});
    for (std::size_t i = 0; i < n; ++i) lap.at(i, i) = 1.0;
    for (const auto& [a, b] : g.edges()) {
        const double w = -1.0 / std::sqrt(degree[a] * degree[b]);
        lap.at(a, b) = w;
        lap.at(b, a) = w;
    }
    return lap;
}

LaplacianEmbedding laplacian_embedding(const AdjacencyGraph& g, std::size_t d_lap) {
    const std::size_t n = g.size();
    if (n < 2 || d_lap > n - 1) {
        throw std::invalid_argument("laplacian_embedding: d_lap " + std::to_string(d_lap) + " exceeds n - 1 = " +
                                    std::to_string(n == 0 ? 0 : n - 1));
    }
    const auto comps = g.components();
    if (comps.size() > 1) {
        std::string msg = "laplacian_embedding: graph is disconnected into " + std::to_string(comps.size()) +
                          " components:";
        for (const auto& c : comps) {
            msg += " {";
            for (std::size_t k = 0; k < c.size(); ++k) msg += (k ? "," : "") + std::to_string(c[k]);
            msg += "}";
        }
        throw std::invalid_argument(msg);
    }

    const Tensor lap = normalized_laplacian(g);
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = lap.at(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) throw std::runtime_error("laplacian_embedding: eigensolver failed");
    const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
    const Eigen::MatrixXd& evecs = solver.eigenvectors();

    struct Column {
        double value;
        std::vector<double> vec;
    };
    std::vector<Column> cols;
    for (Eigen::Index c = 1; c < static_cast<Eigen::Index>(n); ++c) {
        Column col{evals(c), std::vector<double>(n)};
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            col.vec[i] = evecs(static_cast<Eigen::Index>(i), c);
            norm += col.vec[i] * col.vec[i];
        }
        norm = std::sqrt(norm);
        for (auto& v : col.vec) v /= norm;
        const auto lead = std::find_if(col.vec.begin(), col.vec.end(), [](double v) { return std::abs(v) > 1e-8; });
        if (lead != col.vec.end() && *lead < 0.0) {
            for (auto& v : col.vec) v = -v;
        }
        cols.push_back(std::move(col));
    }
    // Within a cluster of (numerically) equal eigenvalues, order columns lexicographically.
    constexpr double kTie = 1e-9;
    for (std::size_t b = 0; b < cols.size();) {
        std::size_t e = b + 1;
        while (e < cols.size() && cols[e].value - cols[e - 1].value < kTie) ++e;
        std::sort(cols.begin() + static_cast<std::ptrdiff_t>(b), cols.begin() + static_cast<std::ptrdiff_t>(e),
                  [](const Column& x, const Column& y) { return x.vec > y.vec; });
        b = e;
    }

    LaplacianEmbedding emb;
    emb.vectors = Tensor({n, d_lap});
    for (std::size_t c = 0; c < d_lap; ++c) {
        emb.eigenvalues.push_back(cols[c].value);
        for (std::size_t i = 0; i < n; ++i) emb.vectors.at(i, c) = cols[c].vec[i];
    }
    return emb;
}

void save_embedding_csv(const std::filesystem::path& path, const LaplacianEmbedding& emb,
                        const std::vector<std::string>& region_ids) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const std::size_t d = emb.vectors.rank() == 2 ? emb.vectors.dim(1) : 0;
    out << "region_id";
    for (std::size_t c = 0; c < d; ++c) out << ",lap_" << c;
    out << '\n';
    for (std::size_t i = 0; i < region_ids.size(); ++i) {
        out << region_ids[i];
        for (std::size_t c = 0; c < d; ++c) out << ',' << csv::format_double(emb.vectors.at(i, c));
        out << '\n';
    }
}

}  // namespace stdc
