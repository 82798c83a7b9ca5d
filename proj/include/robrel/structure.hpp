#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "robrel/common.hpp"

namespace robrel {

inline constexpr int kDefaultEnumerationLimit = 24;

// One group of exchangeable components sharing a Weibull shape.
struct ComponentTypeDecl {
  std::string name;
  int count = 0;       // n_k
  double shape = 1.0;  // beta_k
};

// Boolean structure expression over component instances.
// An instance id may appear in several ATOM leaves; all leaves with the
// same id refer to the same component state.
struct StructureExpr {
  enum class Kind { Atom, And, Or, KOfN };

  Kind kind = Kind::Atom;
  std::string instance;  // Atom only
  std::string type;      // Atom only
  int min_working = 0;   // KOfN only
  std::vector<StructureExpr> children;

  static StructureExpr atom(std::string instance_id, std::string type_name) {
    StructureExpr e;
    e.kind = Kind::Atom;
    e.instance = std::move(instance_id);
    e.type = std::move(type_name);
    return e;
  }
  static StructureExpr all_of(std::vector<StructureExpr> cs) {
    StructureExpr e;
    e.kind = Kind::And;
    e.children = std::move(cs);
    return e;
  }
  static StructureExpr any_of(std::vector<StructureExpr> cs) {
    StructureExpr e;
    e.kind = Kind::Or;
    e.children = std::move(cs);
    return e;
  }
  static StructureExpr at_least(int k, std::vector<StructureExpr> cs) {
    StructureExpr e;
    e.kind = Kind::KOfN;
    e.min_working = k;
    e.children = std::move(cs);
    return e;
  }
};

// Per-instance working/failed bits, ordered like SystemModel::instance_ids().
struct StateVector {
  std::vector<std::uint8_t> bits;
};

// Exact fraction with 64-bit numerator/denominator; enough headroom for
// bucket counts up to 2^n with n at the enumeration limit.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  void reduce() {
    const std::uint64_t g = std::gcd(num == 0 ? den : num, den);
    num /= g;
    den /= g;
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

namespace detail {

struct CompiledNode {
  StructureExpr::Kind kind = StructureExpr::Kind::Atom;
  int bit = -1;          // Atom
  int min_working = 0;   // KOfN
  std::vector<CompiledNode> children;

  bool eval(std::uint32_t mask) const {
    switch (kind) {
      case StructureExpr::Kind::Atom:
        return (mask >> bit) & 1u;
      case StructureExpr::Kind::And:
        for (const auto& c : children)
          if (!c.eval(mask)) return false;
        return true;
      case StructureExpr::Kind::Or:
        for (const auto& c : children)
          if (c.eval(mask)) return true;
        return false;
      case StructureExpr::Kind::KOfN: {
        int working = 0;
        int remaining = static_cast<int>(children.size());
        for (const auto& c : children) {
          if (c.eval(mask) && ++working >= min_working) return true;
          if (working + --remaining < min_working) return false;
        }
        return false;
      }
    }
    return false;
  }
};

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

}  // namespace detail

// Validated system: type declarations (defining the type order k = 1..K),
// structure expression, and a fixed instance-to-bit assignment.
class SystemModel {
 public:
  static SystemModel build(std::vector<ComponentTypeDecl> decls, StructureExpr expr,
                           int enumeration_limit = kDefaultEnumerationLimit);

  int component_count() const { return n_; }
  int num_types() const { return static_cast<int>(decls_.size()); }
  const std::vector<ComponentTypeDecl>& types() const { return decls_; }
  const StructureExpr& structure() const { return expr_; }
  const std::vector<std::string>& instance_ids() const { return instance_ids_; }

  int type_index(std::string_view name) const {
    for (int k = 0; k < num_types(); ++k)
      if (decls_[k].name == name) return k;
    throw ValidationError("unknown component type: " + std::string(name));
  }

  // All instances of type k as a bitmask over state-vector positions.
  std::uint32_t type_mask(int k) const { return type_masks_[k]; }

  bool evaluate(const StateVector& state) const {
    if (static_cast<int>(state.bits.size()) != n_)
      throw ValidationError("state vector length " + std::to_string(state.bits.size()) +
                            " does not match component count " + std::to_string(n_));
    std::uint32_t mask = 0;
    for (int i = 0; i < n_; ++i)
      if (state.bits[i]) mask |= (1u << i);
    return compiled_.eval(mask);
  }

  bool evaluate_mask(std::uint32_t mask) const { return compiled_.eval(mask); }

 private:
  std::vector<ComponentTypeDecl> decls_;
  StructureExpr expr_;
  detail::CompiledNode compiled_;
  std::vector<std::string> instance_ids_;
  std::vector<std::uint32_t> type_masks_;
  int n_ = 0;
};

struct CoherenceCounterexample {
  StateVector state;
  int component;  // adding this working component decreases phi
};

struct CoherenceReport {
  bool coherent = true;
  std::optional<CoherenceCounterexample> counterexample;
};

// Dense K-dimensional table of functioning probabilities, indexed by the
// per-type working-count vector (l_1,...,l_K), l_k in 0..n_k.
class SurvivalSignature {
 public:
  SurvivalSignature(std::vector<int> counts, std::vector<Rational> table)
      : counts_(std::move(counts)), table_(std::move(table)) {
    strides_.assign(counts_.size(), 1);
    for (int k = static_cast<int>(counts_.size()) - 2; k >= 0; --k)
      strides_[k] = strides_[k + 1] * static_cast<std::size_t>(counts_[k + 1] + 1);
  }

  const std::vector<int>& counts() const { return counts_; }
  std::size_t size() const { return table_.size(); }

  std::size_t flatten(std::span<const int> l) const {
    if (l.size() != counts_.size())
      throw ValidationError("count vector has wrong dimension");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < l.size(); ++k) {
      if (l[k] < 0 || l[k] > counts_[k])
        throw ValidationError("count vector index out of range for type " + std::to_string(k));
      idx += strides_[k] * static_cast<std::size_t>(l[k]);
    }
    return idx;
  }

  std::vector<int> unflatten(std::size_t idx) const {
    std::vector<int> l(counts_.size());
    for (std::size_t k = 0; k < counts_.size(); ++k) {
      l[k] = static_cast<int>(idx / strides_[k]);
      idx %= strides_[k];
    }
    return l;
  }

  const Rational& at(std::span<const int> l) const { return table_[flatten(l)]; }
  const Rational& at_index(std::size_t idx) const { return table_[idx]; }
  double value(std::span<const int> l) const { return at(l).value(); }

 private:
  std::vector<int> counts_;
  std::vector<std::size_t> strides_;
  std::vector<Rational> table_;
};

inline double signature_lookup(const SurvivalSignature& sig, std::span<const int> l) {
  return sig.value(l);
}

namespace detail {

inline CompiledNode compile(const StructureExpr& e,
                            const std::map<std::string, int>& bit_of) {
  CompiledNode node;
  node.kind = e.kind;
  if (e.kind == StructureExpr::Kind::Atom) {
    node.bit = bit_of.at(e.instance);
    return node;
  }
  node.min_working = e.min_working;
  node.children.reserve(e.children.size());
  for (const auto& c : e.children) node.children.push_back(compile(c, bit_of));
  return node;
}

inline void collect_atoms(const StructureExpr& e,
                          std::vector<std::pair<std::string, std::string>>& out) {
  if (e.kind == StructureExpr::Kind::Atom) {
    out.emplace_back(e.instance, e.type);
    return;
  }
  if (e.children.empty())
    throw ValidationError("composite structure node with zero children");
  if (e.kind == StructureExpr::Kind::KOfN &&
      (e.min_working < 1 || e.min_working > static_cast<int>(e.children.size())))
    throw ValidationError("k-of-n node with k = " + std::to_string(e.min_working) +
                          " outside 1.." + std::to_string(e.children.size()));
  for (const auto& c : e.children) collect_atoms(c, out);
}

}  // namespace detail

inline SystemModel SystemModel::build(std::vector<ComponentTypeDecl> decls, StructureExpr expr,
                                      int enumeration_limit) {
  if (decls.empty()) throw ValidationError("no component types declared");
  for (const auto& d : decls) {
    if (d.count < 1)
      throw ValidationError("component type " + d.name + " has count < 1");
    if (!(d.shape > 0.0))
      throw ValidationError("component type " + d.name + " has nonpositive shape");
  }
  for (std::size_t i = 0; i < decls.size(); ++i)
    for (std::size_t j = i + 1; j < decls.size(); ++j)
      if (decls[i].name == decls[j].name)
        throw ValidationError("duplicate component type name: " + decls[i].name);

  std::vector<std::pair<std::string, std::string>> atoms;
  detail::collect_atoms(expr, atoms);

  // Distinct instances, validated against declarations.  Repeated leaves with
  // the same id must agree on the type.
  std::map<std::string, std::string> type_of;
  for (const auto& [inst, type] : atoms) {
    bool declared = false;
    for (const auto& d : decls) declared |= (d.name == type);
    if (!declared) throw ValidationError("atom " + inst + " references unknown type " + type);
    auto [it, inserted] = type_of.emplace(inst, type);
    if (!inserted && it->second != type)
      throw ValidationError("instance id " + inst + " used with conflicting types " +
                            it->second + " and " + type);
  }

  SystemModel m;
  m.decls_ = std::move(decls);
  m.expr_ = std::move(expr);

  // Bit order: grouped by type (declaration order), ids sorted within a type.
  std::map<std::string, int> bit_of;
  m.type_masks_.assign(m.decls_.size(), 0);
  for (int k = 0; k < m.num_types(); ++k) {
    std::vector<std::string> ids;
    for (const auto& [inst, type] : type_of)
      if (type == m.decls_[k].name) ids.push_back(inst);
    if (static_cast<int>(ids.size()) != m.decls_[k].count)
      throw ValidationError("type " + m.decls_[k].name + " declares " +
                            std::to_string(m.decls_[k].count) + " components but the structure names " +
                            std::to_string(ids.size()) + " distinct instances");
    for (const auto& id : ids) {
      bit_of[id] = m.n_;
      m.type_masks_[k] |= (1u << m.n_);
      m.instance_ids_.push_back(id);
      ++m.n_;
    }
  }

  if (m.n_ > enumeration_limit)
    throw ValidationError("system has " + std::to_string(m.n_) +
                          " components, exceeding the enumeration limit of " +
                          std::to_string(enumeration_limit));

  m.compiled_ = detail::compile(m.expr_, bit_of);

  if (m.evaluate_mask(0))
    throw ValidationError("boundary condition violated: phi(0,...,0) must be 0");
  const std::uint32_t all = (m.n_ == 32) ? ~0u : ((1u << m.n_) - 1u);
  if (!m.evaluate_mask(all))
    throw ValidationError("boundary condition violated: phi(1,...,1) must be 1");
  return m;
}

inline bool evaluate_structure(const SystemModel& model, const StateVector& state) {
  return model.evaluate(state);
}

namespace detail {

// Truth table of phi over all 2^n states.
inline std::vector<std::uint8_t> phi_table(const SystemModel& model) {
  const std::uint64_t total = std::uint64_t{1} << model.component_count();
  std::vector<std::uint8_t> phi(total);
  for (std::uint64_t mask = 0; mask < total; ++mask)
    phi[mask] = model.evaluate_mask(static_cast<std::uint32_t>(mask)) ? 1 : 0;
  return phi;
}

}  // namespace detail

// Exhaustive monotonicity check: phi may never drop when one failed
// component is repaired.
inline CoherenceReport check_coherence(const SystemModel& model) {
  const auto phi = detail::phi_table(model);
  const int n = model.component_count();
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    if (!phi[mask]) continue;
    for (int i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) continue;
      if (!phi[mask | (std::uint64_t{1} << i)]) {
        CoherenceReport report;
        report.coherent = false;
        CoherenceCounterexample ce;
        ce.state.bits.resize(n);
        for (int j = 0; j < n; ++j) ce.state.bits[j] = (mask >> j) & 1u;
        ce.component = i;
        report.counterexample = std::move(ce);
        return report;
      }
    }
  }
  return {};
}

// Single pass over all 2^n states, bucketed by the per-type working-count
// vector; Phi(l) = (#functioning states in bucket) / prod_k C(n_k, l_k).
inline SurvivalSignature compute_survival_signature(const SystemModel& model) {
  const int K = model.num_types();
  std::vector<int> counts(K);
  std::vector<std::size_t> strides(K, 1);
  for (int k = 0; k < K; ++k) counts[k] = model.types()[k].count;
  for (int k = K - 2; k >= 0; --k)
    strides[k] = strides[k + 1] * static_cast<std::size_t>(counts[k + 1] + 1);
  std::size_t cells = strides[0] * static_cast<std::size_t>(counts[0] + 1);

  std::vector<std::uint64_t> functioning(cells, 0);
  const std::uint64_t total = std::uint64_t{1} << model.component_count();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    if (!model.evaluate_mask(static_cast<std::uint32_t>(mask))) continue;
    std::size_t idx = 0;
    for (int k = 0; k < K; ++k)
      idx += strides[k] * static_cast<std::size_t>(std::popcount(
                 static_cast<std::uint32_t>(mask) & model.type_mask(k)));
    ++functioning[idx];
  }

  std::vector<Rational> table(cells);
  for (std::size_t idx = 0; idx < cells; ++idx) {
    std::uint64_t den = 1;
    std::size_t rest = idx;
    for (int k = 0; k < K; ++k) {
      const int lk = static_cast<int>(rest / strides[k]);
      rest %= strides[k];
      den *= detail::binomial(counts[k], lk);
    }
    table[idx] = Rational{functioning[idx], den};
    table[idx].reduce();
  }
  return SurvivalSignature(std::move(counts), std::move(table));
}

}  // namespace robrel
