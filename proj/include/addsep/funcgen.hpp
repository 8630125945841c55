#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <array>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "addsep/core_math.hpp"
#include "addsep/errors.hpp"
#include "addsep/mlp.hpp"
#include "addsep/rng.hpp"

namespace addsep {

// ---------------------------------------------------------------------------
// Sub-functions
// ---------------------------------------------------------------------------

/// The twelve univariate building blocks. All are finite on [-3, 3]; the
/// rational and logarithmic forms shift the argument by 4 so the pole sits
/// outside that range.
enum class SubKind {
  Identity,    // n
  Square,      // n^2
  CubeThird,   // (n/3)^3
  Reciprocal,  // 1/(n+4)
  Sin,         // sin n
  Cos,         // cos n
  SinSq,       // sin^2 n
  CosSq,       // cos^2 n
  Exp,         // exp n
  Log,         // log(n+4)
  SqrtAbs,     // sqrt|n|
  CubeRoot,    // n^(1/3), real signed cube root
};

inline constexpr SubKind kAllSubKinds[] = {
    SubKind::Identity, SubKind::Square, SubKind::CubeThird, SubKind::Reciprocal,
    SubKind::Sin,      SubKind::Cos,    SubKind::SinSq,     SubKind::CosSq,
    SubKind::Exp,      SubKind::Log,    SubKind::SqrtAbs,   SubKind::CubeRoot,
};

inline const char* subkind_name(SubKind k) {
  switch (k) {
    case SubKind::Identity: return "id";
    case SubKind::Square: return "square";
    case SubKind::CubeThird: return "cube3";
    case SubKind::Reciprocal: return "recip4";
    case SubKind::Sin: return "sin";
    case SubKind::Cos: return "cos";
    case SubKind::SinSq: return "sin2";
    case SubKind::CosSq: return "cos2";
    case SubKind::Exp: return "exp";
    case SubKind::Log: return "log4";
    case SubKind::SqrtAbs: return "sqrtabs";
    case SubKind::CubeRoot: return "cbrt";
  }
  throw Error("unknown sub-function kind");
}

inline SubKind subkind_from_name(const std::string& name) {
  for (SubKind k : kAllSubKinds) {
    if (name == subkind_name(k)) return k;
  }
  throw FormatError("unknown sub-function name: " + name);
}

inline double eval_subfunction(SubKind k, double n) {
  double v = 0.0;
  switch (k) {
    case SubKind::Identity: v = n; break;
    case SubKind::Square: v = n * n; break;
    case SubKind::CubeThird: v = (n / 3.0) * (n / 3.0) * (n / 3.0); break;
    case SubKind::Reciprocal: v = 1.0 / (n + 4.0); break;
    case SubKind::Sin: v = std::sin(n); break;
    case SubKind::Cos: v = std::cos(n); break;
    case SubKind::SinSq: v = std::sin(n) * std::sin(n); break;
    case SubKind::CosSq: v = std::cos(n) * std::cos(n); break;
    case SubKind::Exp: v = std::exp(n); break;
    case SubKind::Log: v = std::log(n + 4.0); break;
    case SubKind::SqrtAbs: v = std::sqrt(std::abs(n)); break;
    case SubKind::CubeRoot: v = std::cbrt(n); break;
  }
  if (!std::isfinite(v)) {
    throw NonFinite(std::string("sub-function ") + subkind_name(k) + " is not finite at n=" +
                    std::to_string(n));
  }
  return v;
}

/// First derivative of a sub-function; the analytic mixed-partial oracle
/// only ever needs first derivatives because each leaf is univariate.
inline double subfunction_derivative(SubKind k, double n) {
  double v = 0.0;
  switch (k) {
    case SubKind::Identity: v = 1.0; break;
    case SubKind::Square: v = 2.0 * n; break;
    case SubKind::CubeThird: v = n * n / 9.0; break;
    case SubKind::Reciprocal: v = -1.0 / ((n + 4.0) * (n + 4.0)); break;
    case SubKind::Sin: v = std::cos(n); break;
    case SubKind::Cos: v = -std::sin(n); break;
    case SubKind::SinSq: v = std::sin(2.0 * n); break;
    case SubKind::CosSq: v = -std::sin(2.0 * n); break;
    case SubKind::Exp: v = std::exp(n); break;
    case SubKind::Log: v = 1.0 / (n + 4.0); break;
    case SubKind::SqrtAbs:
      // Not differentiable at 0; sampling never lands there exactly.
      v = (n > 0 ? 0.5 : -0.5) / std::sqrt(std::abs(n));
      break;
    case SubKind::CubeRoot: {
      const double c = std::cbrt(n);
      v = 1.0 / (3.0 * c * c);
      break;
    }
  }
  if (!std::isfinite(v)) {
    throw NonFinite(std::string("derivative of ") + subkind_name(k) + " is not finite at n=" +
                    std::to_string(n));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Expression trees
// ---------------------------------------------------------------------------

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expression grammar: (+ e1 e2) | (* e1 e2) | (sub <kind> x<var>).
struct Expr {
  enum class Kind { Sum, Product, Leaf };

  Kind kind = Kind::Leaf;
  ExprPtr lhs;   // Sum / Product
  ExprPtr rhs;   // Sum / Product
  SubKind sub = SubKind::Identity;  // Leaf
  std::size_t var = 0;              // Leaf

  static ExprPtr sum(ExprPtr l, ExprPtr r) {
    return std::make_shared<Expr>(Expr{Kind::Sum, std::move(l), std::move(r), SubKind::Identity, 0});
  }
  static ExprPtr product(ExprPtr l, ExprPtr r) {
    return std::make_shared<Expr>(
        Expr{Kind::Product, std::move(l), std::move(r), SubKind::Identity, 0});
  }
  static ExprPtr leaf(SubKind k, std::size_t var) {
    return std::make_shared<Expr>(Expr{Kind::Leaf, nullptr, nullptr, k, var});
  }
};

inline double eval_expr(const Expr& e, const Vector& input) {
  switch (e.kind) {
    case Expr::Kind::Sum: return eval_expr(*e.lhs, input) + eval_expr(*e.rhs, input);
    case Expr::Kind::Product: return eval_expr(*e.lhs, input) * eval_expr(*e.rhs, input);
    case Expr::Kind::Leaf:
      if (e.var >= input.size()) throw DimensionMismatch("expression variable out of range");
      return eval_subfunction(e.sub, input[e.var]);
  }
  throw Error("unreachable expression kind");
}

namespace detail {

/// (value, d/dx_i, d/dx_j, d2/dx_i dx_j) propagated bottom-up; the product
/// rule for the mixed term is a_ij*b + a_i*b_j + a_j*b_i + a*b_ij.
struct DerivQuad {
  double value = 0.0, di = 0.0, dj = 0.0, dij = 0.0;
};

inline DerivQuad eval_deriv_quad(const Expr& e, const Vector& input, std::size_t i,
                                 std::size_t j) {
  switch (e.kind) {
    case Expr::Kind::Sum: {
      const DerivQuad a = eval_deriv_quad(*e.lhs, input, i, j);
      const DerivQuad b = eval_deriv_quad(*e.rhs, input, i, j);
      return {a.value + b.value, a.di + b.di, a.dj + b.dj, a.dij + b.dij};
    }
    case Expr::Kind::Product: {
      const DerivQuad a = eval_deriv_quad(*e.lhs, input, i, j);
      const DerivQuad b = eval_deriv_quad(*e.rhs, input, i, j);
      return {a.value * b.value, a.di * b.value + a.value * b.di,
              a.dj * b.value + a.value * b.dj,
              a.dij * b.value + a.di * b.dj + a.dj * b.di + a.value * b.dij};
    }
    case Expr::Kind::Leaf: {
      if (e.var >= input.size()) throw DimensionMismatch("expression variable out of range");
      const double v = eval_subfunction(e.sub, input[e.var]);
      const double d =
          (e.var == i || e.var == j) ? subfunction_derivative(e.sub, input[e.var]) : 0.0;
      return {v, e.var == i ? d : 0.0, e.var == j ? d : 0.0, 0.0};
    }
  }
  throw Error("unreachable expression kind");
}

}  // namespace detail

inline std::string expr_to_string(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Sum:
      return "(+ " + expr_to_string(*e.lhs) + " " + expr_to_string(*e.rhs) + ")";
    case Expr::Kind::Product:
      return "(* " + expr_to_string(*e.lhs) + " " + expr_to_string(*e.rhs) + ")";
    case Expr::Kind::Leaf:
      return std::string("(sub ") + subkind_name(e.sub) + " x" + std::to_string(e.var) + ")";
  }
  throw Error("unreachable expression kind");
}

namespace detail {

inline void skip_spaces(const std::string& s, std::size_t& pos) {
  while (pos < s.size() && s[pos] == ' ') ++pos;
}

inline std::string next_token(const std::string& s, std::size_t& pos) {
  skip_spaces(s, pos);
  const std::size_t start = pos;
  while (pos < s.size() && s[pos] != ' ' && s[pos] != '(' && s[pos] != ')') ++pos;
  if (start == pos) throw FormatError("expression: expected a token at position " +
                                      std::to_string(start) + " in '" + s + "'");
  return s.substr(start, pos - start);
}

inline ExprPtr parse_expr_at(const std::string& s, std::size_t& pos) {
  skip_spaces(s, pos);
  if (pos >= s.size() || s[pos] != '(') {
    throw FormatError("expression: expected '(' at position " + std::to_string(pos) + " in '" +
                      s + "'");
  }
  ++pos;
  const std::string head = next_token(s, pos);
  ExprPtr result;
  if (head == "+" || head == "*") {
    ExprPtr l = parse_expr_at(s, pos);
    ExprPtr r = parse_expr_at(s, pos);
    result = head == "+" ? Expr::sum(std::move(l), std::move(r))
                         : Expr::product(std::move(l), std::move(r));
  } else if (head == "sub") {
    const std::string kind = next_token(s, pos);
    const std::string var = next_token(s, pos);
    if (var.size() < 2 || var[0] != 'x') {
      throw FormatError("expression: bad variable '" + var + "'");
    }
    result = Expr::leaf(subkind_from_name(kind), std::stoul(var.substr(1)));
  } else {
    throw FormatError("expression: unknown head '" + head + "'");
  }
  skip_spaces(s, pos);
  if (pos >= s.size() || s[pos] != ')') {
    throw FormatError("expression: expected ')' at position " + std::to_string(pos) + " in '" +
                      s + "'");
  }
  ++pos;
  return result;
}

}  // namespace detail

inline ExprPtr parse_expr(const std::string& s) {
  std::size_t pos = 0;
  ExprPtr e = detail::parse_expr_at(s, pos);
  detail::skip_spaces(s, pos);
  if (pos != s.size()) throw FormatError("expression: trailing input in '" + s + "'");
  return e;
}

// ---------------------------------------------------------------------------
// Labeled corpus functions
// ---------------------------------------------------------------------------

enum class Label { Separable, NonSeparable };

inline const char* label_name(Label l) {
  return l == Label::Separable ? "separable" : "nonseparable";
}

inline Label label_from_name(const std::string& s) {
  if (s == "separable") return Label::Separable;
  if (s == "nonseparable") return Label::NonSeparable;
  throw FormatError("unknown label: " + s);
}

/// Disjoint variable groups; the separability question is asked across
/// first | second.
struct Partition {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

struct SymbolicFunction {
  std::string id;
  std::size_t arity = 2;
  ExprPtr expr;
  Partition partition;
  Label label = Label::Separable;
  std::uint64_t seed = 0;  // per-function data seed

  double operator()(const Vector& input) const { return eval_symbolic(input); }

  double eval_symbolic(const Vector& input) const {
    if (input.size() != arity) {
      throw DimensionMismatch("symbolic function arity " + std::to_string(arity) +
                              ", input size " + std::to_string(input.size()));
    }
    return eval_expr(*expr, input);
  }

  /// Analytic d2 f / dx_i dx_j via the expression-tree product/sum rules.
  double mixed_partial(const Vector& input, std::size_t i, std::size_t j) const {
    if (input.size() != arity) {
      throw DimensionMismatch("symbolic function arity " + std::to_string(arity) +
                              ", input size " + std::to_string(input.size()));
    }
    return detail::eval_deriv_quad(*expr, input, i, j).dij;
  }

  /// Mixed partial across the declared partition's leading variables.
  double mixed_partial(const Vector& input) const {
    return mixed_partial(input, partition.first.at(0), partition.second.at(0));
  }
};

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

struct CorpusConfig {
  std::set<std::size_t> arities{2};
  std::size_t max_functions = 0;  // 0 = keep the full enumeration
  bool balance = true;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (arities.empty()) throw Error("corpus: at least one arity required");
    for (std::size_t a : arities) {
      if (a != 2 && a != 3) throw Error("corpus: arity must be 2 or 3");
    }
  }
};

namespace detail {

inline SymbolicFunction make_function(std::size_t arity, ExprPtr expr, bool additive_top) {
  SymbolicFunction f;
  f.arity = arity;
  f.expr = std::move(expr);
  f.partition.first = {0};
  f.partition.second = arity == 2 ? std::vector<std::size_t>{1} : std::vector<std::size_t>{1, 2};
  f.label = additive_top ? Label::Separable : Label::NonSeparable;
  return f;
}

}  // namespace detail

/// Enumerates the corpus deterministically, then (seeded) subsamples it.
///
/// Two-variable forms are g(x0) op h(x1) over the 12 x 12 sub-function grid
/// for op in {+, *}. Three-variable forms combine a univariate group {x0}
/// with a bivariate group {x1, x2}: g(x0) op_outer (h(x1) op_inner k(x2)),
/// both combinators enumerated. A function is labeled separable exactly
/// when the top-level combinator across the partition is +.
///
/// Balanced truncation is stratified per (label, arity), so every requested
/// arity is represented and the label split is exactly even.
inline std::vector<SymbolicFunction> generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  // pools[arity][0] = separable, pools[arity][1] = non-separable
  std::map<std::size_t, std::array<std::vector<SymbolicFunction>, 2>> pools;

  const auto emit = [&](SymbolicFunction f) {
    pools[f.arity][f.label == Label::Separable ? 0 : 1].push_back(std::move(f));
  };

  if (cfg.arities.count(2)) {
    for (SubKind g : kAllSubKinds) {
      for (SubKind h : kAllSubKinds) {
        const ExprPtr gl = Expr::leaf(g, 0);
        const ExprPtr hl = Expr::leaf(h, 1);
        emit(detail::make_function(2, Expr::sum(gl, hl), true));
        emit(detail::make_function(2, Expr::product(gl, hl), false));
      }
    }
  }
  if (cfg.arities.count(3)) {
    for (SubKind g : kAllSubKinds) {
      for (SubKind h : kAllSubKinds) {
        for (SubKind k : kAllSubKinds) {
          for (bool inner_add : {true, false}) {
            const ExprPtr gl = Expr::leaf(g, 0);
            const ExprPtr inner = inner_add
                                      ? Expr::sum(Expr::leaf(h, 1), Expr::leaf(k, 2))
                                      : Expr::product(Expr::leaf(h, 1), Expr::leaf(k, 2));
            emit(detail::make_function(3, Expr::sum(gl, inner), true));
            emit(detail::make_function(3, Expr::product(gl, inner), false));
          }
        }
      }
    }
  }

  Rng rng(cfg.rng_seed);
  std::size_t total_available = 0;
  for (auto& [arity, by_label] : pools) {
    rng.shuffle(by_label[0]);
    rng.shuffle(by_label[1]);
    total_available += by_label[0].size() + by_label[1].size();
  }

  const std::size_t want = cfg.max_functions == 0 ? total_available : cfg.max_functions;
  std::vector<SymbolicFunction> corpus;
  if (cfg.balance) {
    if (want % 2 != 0) {
      throw UnsatisfiableBalance("balanced corpus needs an even count, got " +
                                 std::to_string(want));
    }
    // Spread each label's quota evenly over the requested arities.
    std::vector<SymbolicFunction> separable, nonseparable;
    const std::size_t quota = want / 2;
    const std::size_t n_arities = pools.size();
    std::size_t index = 0;
    for (auto& [arity, by_label] : pools) {
      const std::size_t share = quota / n_arities + (index < quota % n_arities ? 1 : 0);
      ++index;
      if (share > by_label[0].size() || share > by_label[1].size()) {
        throw UnsatisfiableBalance("requested " + std::to_string(want) +
                                   " balanced functions, arity " + std::to_string(arity) +
                                   " offers only " + std::to_string(by_label[0].size()) + "+" +
                                   std::to_string(by_label[1].size()));
      }
      for (std::size_t k = 0; k < share; ++k) {
        separable.push_back(std::move(by_label[0][k]));
        nonseparable.push_back(std::move(by_label[1][k]));
      }
    }
    for (std::size_t k = 0; k < quota; ++k) {
      corpus.push_back(std::move(separable[k]));
      corpus.push_back(std::move(nonseparable[k]));
    }
  } else {
    if (want > total_available) {
      throw UnsatisfiableBalance("requested " + std::to_string(want) + " functions, only " +
                                 std::to_string(total_available) + " available");
    }
    std::vector<SymbolicFunction> pool;
    pool.reserve(total_available);
    for (auto& [arity, by_label] : pools) {
      for (auto& f : by_label[0]) pool.push_back(std::move(f));
      for (auto& f : by_label[1]) pool.push_back(std::move(f));
    }
    rng.shuffle(pool);
    pool.resize(want);
    corpus = std::move(pool);
  }

  for (std::size_t k = 0; k < corpus.size(); ++k) {
    std::ostringstream id;
    id << "fn" << (k < 1000 ? (k < 100 ? (k < 10 ? "000" : "00") : "0") : "") << k;
    corpus[k].id = id.str();
    corpus[k].seed = derive_seed(cfg.rng_seed, k, 1);
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

struct SampleConfig {
  std::size_t points = 30;
  double low = -3.0;
  double high = 3.0;
  std::uint64_t rng_seed = 0;
};

/// Training tuples: every coordinate i.i.d. uniform on [low, high], outputs
/// from the analytic form.
inline Dataset sample_training_data(const SymbolicFunction& f, const SampleConfig& cfg) {
  Rng rng(cfg.rng_seed);
  Dataset data;
  data.inputs.reserve(cfg.points);
  data.outputs.reserve(cfg.points);
  for (std::size_t t = 0; t < cfg.points; ++t) {
    Vector x(f.arity);
    for (double& c : x) c = rng.uniform(cfg.low, cfg.high);
    data.outputs.push_back(f.eval_symbolic(x));
    data.inputs.push_back(std::move(x));
  }
  return data;
}

/// Classification tuples: `points` evenly spaced values per coordinate,
/// combined index-aligned (tuple t repeats the t-th grid value in every
/// coordinate), so the test-set size is `points` for any arity.
inline TestSet build_grid_testset(std::size_t arity, std::size_t points = 30, double low = -3.0,
                                  double high = 3.0) {
  if (points < 2) throw InsufficientSamples("grid test set needs at least 2 points");
  TestSet ts;
  ts.reserve(points);
  for (std::size_t t = 0; t < points; ++t) {
    // t/(n-1) hits exactly 0 and 1 at the ends, so the grid spans
    // [low, high] inclusive.
    const double u = static_cast<double>(t) / static_cast<double>(points - 1);
    ts.push_back(Vector(arity, low + (high - low) * u));
  }
  return ts;
}

}  // namespace addsep
