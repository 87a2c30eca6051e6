#pragma once

#include "coreguide/cnf.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace coreguide {

enum class GraphKind { Wlig, Lcg };
enum class DegreeMode { Weighted, Simple };
enum class NormMode { Global, Row };

struct GraphOptions {
  GraphKind kind = GraphKind::Wlig;
  DegreeMode degree = DegreeMode::Weighted;
  NormMode norm = NormMode::Global;

  friend bool operator==(const GraphOptions&, const GraphOptions&) = default;
};

/// Symmetric sparse matrix with integer weights in compressed-row layout.
/// Node indices are 0-based.
struct WeightedCsr {
  std::uint32_t num_nodes = 0;
  std::vector<std::uint32_t> row_offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<std::int64_t> weights;

  std::size_t nnz() const { return cols.size(); }
  std::int64_t weight(std::uint32_t i, std::uint32_t j) const;
  std::int64_t total_weight() const;
};

/// Weighted literal-incidence graph. Nodes 0..n-1 are positive literals,
/// n..2n-1 the negations. Edge weight counts the clauses shared by both
/// literals.
struct Wlig {
  std::uint32_t n_vars = 0;
  WeightedCsr adjacency;
  std::vector<std::int64_t> degrees;  // weighted degree
  std::vector<std::int8_t> lit_types; // +1 / -1

  std::uint32_t num_nodes() const { return 2 * n_vars; }
};

/// Real-valued adjacency sharing the sparsity pattern of its source.
struct NormAdj {
  std::uint32_t num_nodes = 0;
  std::vector<std::uint32_t> row_offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> values;

  std::size_t nnz() const { return cols.size(); }
  double sum() const;
};

/// Bipartite literal/clause membership graph. Literal nodes are numbered
/// like the WLIG; clause c is node 2n + c.
struct Lcg {
  std::uint32_t n_vars = 0;
  std::uint32_t n_clauses = 0;
  WeightedCsr adjacency;

  std::uint32_t num_nodes() const { return 2 * n_vars + n_clauses; }
  std::size_t edge_count() const { return adjacency.nnz() / 2; }
  bool adjacent(std::uint32_t lit_node, std::uint32_t clause) const {
    return adjacency.weight(lit_node, 2 * n_vars + clause) != 0;
  }
};

Wlig build_wlig(const Cnf& cnf);
Lcg build_lcg(const Cnf& cnf);

/// Divides every entry by the sum over the full symmetric matrix (Global), or
/// each row by its own sum (Row). Throws EdgelessGraph when there is nothing
/// to normalize unless allow_edgeless is set, which yields an all-zero result.
NormAdj normalize_adjacency(const WeightedCsr& adjacency,
                            NormMode mode = NormMode::Global,
                            bool allow_edgeless = false);
inline NormAdj normalize_adjacency(const Wlig& g,
                                   NormMode mode = NormMode::Global,
                                   bool allow_edgeless = false) {
  return normalize_adjacency(g.adjacency, mode, allow_edgeless);
}

using NodeFeature = std::array<double, 2>; // (degree, literal type)

std::vector<NodeFeature> raw_node_features(
    const Wlig& g, DegreeMode mode = DegreeMode::Weighted);

/// Model-ready encoding: normalized adjacency plus per-node features. The
/// first 2n nodes are always literal nodes in WLIG order; any trailing nodes
/// (LCG clauses) carry literal type 0.
struct GraphInput {
  std::uint32_t n_vars = 0;
  NormAdj adjacency;
  std::vector<NodeFeature> features;
  bool edgeless = false;

  std::uint32_t num_nodes() const { return adjacency.num_nodes; }
};

GraphInput encode_graph(const Cnf& cnf, const GraphOptions& options = {});

/// Text edge list: header "<wlig|lcg> <N> <nnz>", then "i j w" per stored
/// entry with 1-based node indices.
void dump_edge_list(const Wlig& g, std::ostream& out);
void dump_edge_list(const Lcg& g, std::ostream& out);

} // namespace coreguide
