#include "coreguide/cnf.hpp"

#include "coreguide/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace coreguide {

const char* errc_name(Errc code) noexcept {
  switch (code) {
  case Errc::MalformedHeader: return "MalformedHeader";
  case Errc::LiteralOutOfRange: return "LiteralOutOfRange";
  case Errc::MissingTerminator: return "MissingTerminator";
  case Errc::EmptyClause: return "EmptyClause";
  case Errc::ClauseCountMismatch: return "ClauseCountMismatch";
  case Errc::VarOutOfRange: return "VarOutOfRange";
  case Errc::BoundsExceeded: return "BoundsExceeded";
  case Errc::InstanceSat: return "InstanceSat";
  case Errc::EdgelessGraph: return "EdgelessGraph";
  case Errc::OddNodeCount: return "OddNodeCount";
  case Errc::DimensionMismatch: return "DimensionMismatch";
  case Errc::LengthMismatch: return "LengthMismatch";
  case Errc::NumericalOverflow: return "NumericalOverflow";
  case Errc::BadMagic: return "BadMagic";
  case Errc::VersionMismatch: return "VersionMismatch";
  case Errc::TruncatedTensor: return "TruncatedTensor";
  case Errc::ShapeMismatch: return "ShapeMismatch";
  case Errc::NotUnsat: return "NotUnsat";
  case Errc::BudgetExhausted: return "BudgetExhausted";
  case Errc::GenerationFailed: return "GenerationFailed";
  case Errc::InvalidArgument: return "InvalidArgument";
  case Errc::EmptyDataset: return "EmptyDataset";
  case Errc::Io: return "Io";
  }
  return "Unknown";
}

const char* verdict_name(VerdictKind kind) noexcept {
  switch (kind) {
  case VerdictKind::Sat: return "SAT";
  case VerdictKind::Unsat: return "UNSAT";
  case VerdictKind::Halted: return "HALTED";
  }
  return "?";
}

Clause Clause::make(std::vector<Lit> lits) {
  Clause c;
  c.lits.reserve(lits.size());
  for (const Lit& l : lits) {
    if (std::find(c.lits.begin(), c.lits.end(), l) != c.lits.end())
      continue;
    if (std::find(c.lits.begin(), c.lits.end(), ~l) != c.lits.end())
      c.tautological = true;
    c.lits.push_back(l);
  }
  return c;
}

Cnf Cnf::from_ints(std::uint32_t num_vars,
                   const std::vector<std::vector<int>>& clauses,
                   std::string name) {
  Cnf cnf;
  cnf.num_vars = num_vars;
  cnf.name = std::move(name);
  cnf.clauses.reserve(clauses.size());
  for (const auto& ints : clauses) {
    std::vector<Lit> lits;
    for (int v : ints) {
      Lit l = Lit::from_dimacs(v);
      if (v == 0 || l.var > num_vars)
        throw Error(Errc::VarOutOfRange, "literal " + std::to_string(v));
      lits.push_back(l);
    }
    cnf.clauses.push_back(Clause::make(std::move(lits)));
  }
  return cnf;
}

//===----------------------------------------------------------------------===//
// DIMACS
//===----------------------------------------------------------------------===//

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t'))
      ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t')
      ++j;
    if (j > i)
      out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_int(std::string_view tok, std::int64_t& out) {
  if (!tok.empty() && tok.front() == '+')
    tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

} // namespace

Cnf parse_dimacs(std::istream& in, std::string name) {
  Cnf cnf;
  cnf.name = std::move(name);
  bool have_header = false;
  std::int64_t declared_clauses = 0;
  std::vector<Lit> current;
  std::size_t line_no = 0;
  std::string line;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    auto toks = split_ws(line);
    if (toks.empty() || toks[0].front() == 'c')
      continue;
    if (toks[0] == "p") {
      std::int64_t n = 0, m = 0;
      if (have_header || toks.size() != 4 || toks[1] != "cnf" ||
          !parse_int(toks[2], n) || !parse_int(toks[3], m) || n < 0 ||
          m < 0 || n > std::int64_t{1} << 31)
        throw ParseError(Errc::MalformedHeader, line_no,
                         "expected 'p cnf <vars> <clauses>'");
      have_header = true;
      cnf.num_vars = static_cast<std::uint32_t>(n);
      declared_clauses = m;
      cnf.clauses.reserve(static_cast<std::size_t>(std::min<std::int64_t>(m, 1 << 24)));
      continue;
    }
    if (!have_header)
      throw ParseError(Errc::MalformedHeader, line_no,
                       "clause data before 'p cnf' header");
    for (auto tok : toks) {
      std::int64_t v = 0;
      if (!parse_int(tok, v))
        throw ParseError(Errc::InvalidArgument, line_no,
                         "bad token '" + std::string(tok) + "'");
      if (v == 0) {
        if (current.empty())
          throw ParseError(Errc::EmptyClause, line_no, "empty clause");
        cnf.clauses.push_back(Clause::make(std::move(current)));
        current.clear();
        continue;
      }
      if (v > cnf.num_vars || -v > cnf.num_vars)
        throw ParseError(Errc::LiteralOutOfRange, line_no,
                         "literal " + std::to_string(v) + " exceeds " +
                             std::to_string(cnf.num_vars) + " variables");
      current.push_back(Lit::from_dimacs(v));
    }
  }
  if (!have_header)
    throw ParseError(Errc::MalformedHeader, line_no, "missing 'p cnf' header");
  if (!current.empty())
    throw ParseError(Errc::MissingTerminator, line_no,
                     "last clause not terminated by 0");
  if (static_cast<std::int64_t>(cnf.clauses.size()) != declared_clauses)
    throw ParseError(Errc::ClauseCountMismatch, line_no,
                     "header declares " + std::to_string(declared_clauses) +
                         " clauses, found " +
                         std::to_string(cnf.clauses.size()));
  return cnf;
}

Cnf parse_dimacs(std::string_view text, std::string name) {
  std::istringstream in{std::string(text)};
  return parse_dimacs(in, std::move(name));
}

Cnf read_dimacs_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Errc::Io, "cannot open " + path);
  return parse_dimacs(in, path);
}

std::string write_dimacs(const Cnf& cnf) {
  std::string out = "p cnf " + std::to_string(cnf.num_vars) + " " +
                    std::to_string(cnf.clauses.size()) + "\n";
  for (const auto& c : cnf.clauses) {
    for (const Lit& l : c.lits) {
      out += std::to_string(l.to_dimacs());
      out += ' ';
    }
    out += "0\n";
  }
  return out;
}

void write_dimacs_file(const Cnf& cnf, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(Errc::Io, "cannot write " + path);
  out << write_dimacs(cnf);
  if (!out)
    throw Error(Errc::Io, "write failed for " + path);
}

std::uint32_t lit_node_index(Lit lit, std::uint32_t num_vars) {
  if (lit.var < 1 || lit.var > num_vars)
    throw Error(Errc::VarOutOfRange, "variable " + std::to_string(lit.var) +
                                         " not in 1.." +
                                         std::to_string(num_vars));
  return lit.positive ? lit.var : num_vars + lit.var;
}

bool clause_satisfied(const Clause& clause, const std::vector<bool>& model) {
  return std::any_of(clause.lits.begin(), clause.lits.end(), [&](Lit l) {
    return model[l.var - 1] == l.positive;
  });
}

Cnf select_clauses(const Cnf& cnf, const std::vector<std::size_t>& indices) {
  Cnf sub;
  sub.num_vars = cnf.num_vars;
  sub.name = cnf.name;
  sub.clauses.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= cnf.clauses.size())
      throw Error(Errc::InvalidArgument,
                  "clause index " + std::to_string(i) + " out of range");
    sub.clauses.push_back(cnf.clauses[i]);
  }
  return sub;
}

//===----------------------------------------------------------------------===//
// Brute-force oracles
//===----------------------------------------------------------------------===//

namespace {

// Bit (n - v) holds variable v, so counting upwards walks assignments in
// lexicographic order with x1 most significant.
struct ClauseMask {
  std::uint64_t pos = 0;
  std::uint64_t neg = 0;
};

std::vector<ClauseMask> clause_masks(const Cnf& cnf) {
  std::vector<ClauseMask> masks;
  masks.reserve(cnf.clauses.size());
  for (const auto& c : cnf.clauses) {
    ClauseMask m;
    for (const Lit& l : c.lits) {
      std::uint64_t bit = std::uint64_t{1} << (cnf.num_vars - l.var);
      (l.positive ? m.pos : m.neg) |= bit;
    }
    masks.push_back(m);
  }
  return masks;
}

} // namespace

Verdict brute_force_solve(const Cnf& cnf) {
  if (cnf.num_vars > kBruteForceMaxVars)
    throw Error(Errc::BoundsExceeded,
                std::to_string(cnf.num_vars) + " variables exceeds " +
                    std::to_string(kBruteForceMaxVars));
  const auto masks = clause_masks(cnf);
  const std::uint64_t full = (std::uint64_t{1} << cnf.num_vars) - 1;
  Verdict v;
  for (std::uint64_t a = 0;; ++a) {
    bool ok = true;
    for (const auto& m : masks) {
      if (((a & m.pos) | (~a & m.neg)) == 0) {
        ok = false;
        break;
      }
    }
    if (ok) {
      v.kind = VerdictKind::Sat;
      v.model.resize(cnf.num_vars);
      for (std::uint32_t var = 1; var <= cnf.num_vars; ++var)
        v.model[var - 1] = (a >> (cnf.num_vars - var)) & 1;
      return v;
    }
    if (a == full)
      break;
  }
  v.kind = VerdictKind::Unsat;
  return v;
}

std::vector<std::size_t> brute_force_min_core(const Cnf& cnf) {
  const std::size_t m = cnf.clauses.size();
  if (cnf.num_vars > kMinCoreMaxVars || m > kMinCoreMaxClauses)
    throw Error(Errc::BoundsExceeded, "min-core enumeration limited to " +
                                          std::to_string(kMinCoreMaxVars) +
                                          " vars and " +
                                          std::to_string(kMinCoreMaxClauses) +
                                          " clauses");
  const auto masks = clause_masks(cnf);
  const std::uint64_t full = (std::uint64_t{1} << cnf.num_vars) - 1;

  // For each assignment, the set of clauses it falsifies. A clause subset S is
  // UNSAT iff it intersects every such set.
  std::vector<std::uint8_t> present(std::size_t{1} << m, 0);
  for (std::uint64_t a = 0;; ++a) {
    std::uint32_t falsified = 0;
    for (std::size_t j = 0; j < m; ++j)
      if (((a & masks[j].pos) | (~a & masks[j].neg)) == 0)
        falsified |= 1u << j;
    if (falsified == 0)
      throw Error(Errc::InstanceSat, "formula is satisfiable");
    present[falsified] = 1;
    if (a == full)
      break;
  }
  std::vector<std::uint32_t> sets;
  for (std::uint32_t s = 1; s < present.size(); ++s)
    if (present[s])
      sets.push_back(s);
  // Supersets of another falsified set impose no extra constraint.
  std::vector<std::uint32_t> minimal;
  for (std::uint32_t s : sets) {
    bool dominated = std::any_of(sets.begin(), sets.end(), [&](std::uint32_t t) {
      return t != s && (t & s) == t;
    });
    if (!dominated)
      minimal.push_back(s);
  }

  for (std::size_t k = 1; k <= m; ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i)
      idx[i] = i;
    for (;;) {
      std::uint32_t subset = 0;
      for (std::size_t i : idx)
        subset |= 1u << i;
      bool hits_all = std::all_of(minimal.begin(), minimal.end(),
                                  [&](std::uint32_t s) { return (s & subset) != 0; });
      if (hits_all)
        return idx;
      // Next combination in lexicographic order.
      std::size_t i = k;
      while (i > 0 && idx[i - 1] == m - k + i - 1)
        --i;
      if (i == 0)
        break;
      ++idx[i - 1];
      for (std::size_t j = i; j < k; ++j)
        idx[j] = idx[j - 1] + 1;
    }
  }
  throw Error(Errc::InstanceSat, "no unsatisfiable subset");
}

} // namespace coreguide
