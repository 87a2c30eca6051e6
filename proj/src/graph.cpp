#include "coreguide/graph.hpp"

#include "coreguide/error.hpp"

#include <algorithm>
#include <ostream>
#include <utility>

namespace coreguide {

std::int64_t WeightedCsr::weight(std::uint32_t i, std::uint32_t j) const {
  auto first = cols.begin() + row_offsets[i];
  auto last = cols.begin() + row_offsets[i + 1];
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j)
    return 0;
  return weights[static_cast<std::size_t>(it - cols.begin())];
}

std::int64_t WeightedCsr::total_weight() const {
  std::int64_t s = 0;
  for (auto w : weights)
    s += w;
  return s;
}

double NormAdj::sum() const {
  double s = 0.0;
  for (double v : values)
    s += v;
  return s;
}

namespace {

using Entry = std::pair<std::uint32_t, std::uint32_t>;

// Sorted (row, col) entries with repeats; each repeat adds one to the weight.
WeightedCsr csr_from_entries(std::uint32_t num_nodes,
                             std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end());
  WeightedCsr csr;
  csr.num_nodes = num_nodes;
  csr.row_offsets.assign(num_nodes + 1, 0);
  for (std::size_t k = 0; k < entries.size();) {
    std::size_t run = k;
    while (run < entries.size() && entries[run] == entries[k])
      ++run;
    csr.cols.push_back(entries[k].second);
    csr.weights.push_back(static_cast<std::int64_t>(run - k));
    ++csr.row_offsets[entries[k].first + 1];
    k = run;
  }
  for (std::uint32_t i = 0; i < num_nodes; ++i)
    csr.row_offsets[i + 1] += csr.row_offsets[i];
  return csr;
}

} // namespace

Wlig build_wlig(const Cnf& cnf) {
  const std::uint32_t n = cnf.num_vars;
  std::vector<Entry> entries;
  std::size_t reserve = 0;
  for (const auto& c : cnf.clauses)
    reserve += c.size() * (c.size() - (c.empty() ? 0 : 1));
  entries.reserve(reserve);
  for (const auto& c : cnf.clauses) {
    for (std::size_t a = 0; a < c.size(); ++a) {
      for (std::size_t b = a + 1; b < c.size(); ++b) {
        std::uint32_t i = lit_node(c.lits[a], n);
        std::uint32_t j = lit_node(c.lits[b], n);
        entries.emplace_back(i, j);
        entries.emplace_back(j, i);
      }
    }
  }

  Wlig g;
  g.n_vars = n;
  g.adjacency = csr_from_entries(2 * n, std::move(entries));
  g.degrees.assign(2 * n, 0);
  g.lit_types.assign(2 * n, -1);
  for (std::uint32_t i = 0; i < 2 * n; ++i) {
    for (auto k = g.adjacency.row_offsets[i]; k < g.adjacency.row_offsets[i + 1]; ++k)
      g.degrees[i] += g.adjacency.weights[k];
    if (i < n)
      g.lit_types[i] = 1;
  }
  return g;
}

Lcg build_lcg(const Cnf& cnf) {
  const std::uint32_t n = cnf.num_vars;
  const auto m = static_cast<std::uint32_t>(cnf.clauses.size());
  std::vector<Entry> entries;
  for (std::uint32_t c = 0; c < m; ++c) {
    for (const Lit& l : cnf.clauses[c].lits) {
      std::uint32_t li = lit_node(l, n);
      entries.emplace_back(li, 2 * n + c);
      entries.emplace_back(2 * n + c, li);
    }
  }
  Lcg g;
  g.n_vars = n;
  g.n_clauses = m;
  g.adjacency = csr_from_entries(2 * n + m, std::move(entries));
  return g;
}

NormAdj normalize_adjacency(const WeightedCsr& adjacency, NormMode mode,
                            bool allow_edgeless) {
  NormAdj out;
  out.num_nodes = adjacency.num_nodes;
  out.row_offsets = adjacency.row_offsets;
  out.cols = adjacency.cols;
  out.values.assign(adjacency.nnz(), 0.0);

  const std::int64_t total = adjacency.total_weight();
  if (total == 0) {
    if (!allow_edgeless)
      throw Error(Errc::EdgelessGraph, "adjacency has no edges");
    return out;
  }
  if (mode == NormMode::Global) {
    const double denom = static_cast<double>(total);
    for (std::size_t k = 0; k < adjacency.nnz(); ++k)
      out.values[k] = static_cast<double>(adjacency.weights[k]) / denom;
    return out;
  }
  for (std::uint32_t i = 0; i < adjacency.num_nodes; ++i) {
    std::int64_t row = 0;
    for (auto k = adjacency.row_offsets[i]; k < adjacency.row_offsets[i + 1]; ++k)
      row += adjacency.weights[k];
    for (auto k = adjacency.row_offsets[i]; k < adjacency.row_offsets[i + 1]; ++k)
      out.values[k] = static_cast<double>(adjacency.weights[k]) /
                      static_cast<double>(row);
  }
  return out;
}

std::vector<NodeFeature> raw_node_features(const Wlig& g, DegreeMode mode) {
  std::vector<NodeFeature> out(g.num_nodes());
  for (std::uint32_t i = 0; i < g.num_nodes(); ++i) {
    double degree =
        mode == DegreeMode::Weighted
            ? static_cast<double>(g.degrees[i])
            : static_cast<double>(g.adjacency.row_offsets[i + 1] -
                                  g.adjacency.row_offsets[i]);
    out[i] = {degree, static_cast<double>(g.lit_types[i])};
  }
  return out;
}

GraphInput encode_graph(const Cnf& cnf, const GraphOptions& options) {
  GraphInput in;
  in.n_vars = cnf.num_vars;
  if (options.kind == GraphKind::Wlig) {
    Wlig g = build_wlig(cnf);
    in.edgeless = g.adjacency.nnz() == 0;
    in.adjacency = normalize_adjacency(g.adjacency, options.norm, true);
    in.features = raw_node_features(g, options.degree);
    return in;
  }
  // Membership edges all weigh 1, so both degree modes coincide.
  Lcg g = build_lcg(cnf);
  const std::uint32_t n = cnf.num_vars;
  in.edgeless = g.adjacency.nnz() == 0;
  in.adjacency = normalize_adjacency(g.adjacency, options.norm, true);
  in.features.resize(g.num_nodes());
  for (std::uint32_t i = 0; i < g.num_nodes(); ++i) {
    double degree = static_cast<double>(g.adjacency.row_offsets[i + 1] -
                                        g.adjacency.row_offsets[i]);
    double type = i < n ? 1.0 : (i < 2 * n ? -1.0 : 0.0);
    in.features[i] = {degree, type};
  }
  return in;
}

namespace {

void dump_csr(const char* tag, const WeightedCsr& a, std::ostream& out) {
  out << tag << ' ' << a.num_nodes << ' ' << a.nnz() << '\n';
  for (std::uint32_t i = 0; i < a.num_nodes; ++i)
    for (auto k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      out << (i + 1) << ' ' << (a.cols[k] + 1) << ' ' << a.weights[k] << '\n';
}

} // namespace

void dump_edge_list(const Wlig& g, std::ostream& out) { dump_csr("wlig", g.adjacency, out); }

void dump_edge_list(const Lcg& g, std::ostream& out) { dump_csr("lcg", g.adjacency, out); }

} // namespace coreguide
