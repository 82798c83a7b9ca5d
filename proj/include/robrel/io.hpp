#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "robrel/bounds.hpp"
#include "robrel/common.hpp"
#include "robrel/lifetime.hpp"
#include "robrel/structure.hpp"

namespace robrel {

struct ParsedSystem {
  SystemModel model;
  std::vector<PriorBox> boxes;  // one per declared type, same order
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const char* key, const char* ctx) {
  auto it = j.find(key);
  if (it == j.end())
    throw ValidationError(std::string(ctx) + ": missing field '" + key + "'");
  return *it;
}

inline StructureExpr parse_structure(const json& j) {
  if (!j.is_object()) throw ValidationError("structure node must be an object");
  const std::string kind = require(j, "kind", "structure node").get<std::string>();
  if (kind == "atom") {
    return StructureExpr::atom(require(j, "instance", "atom node").get<std::string>(),
                               require(j, "type", "atom node").get<std::string>());
  }
  std::vector<StructureExpr> children;
  for (const auto& c : require(j, "children", "structure node"))
    children.push_back(parse_structure(c));
  if (kind == "and") return StructureExpr::all_of(std::move(children));
  if (kind == "or") return StructureExpr::any_of(std::move(children));
  if (kind == "k_of_n")
    return StructureExpr::at_least(require(j, "k", "k_of_n node").get<int>(),
                                   std::move(children));
  throw ValidationError("unknown structure node kind: " + kind);
}

inline json structure_to_json(const StructureExpr& e) {
  json j;
  switch (e.kind) {
    case StructureExpr::Kind::Atom:
      j["kind"] = "atom";
      j["instance"] = e.instance;
      j["type"] = e.type;
      return j;
    case StructureExpr::Kind::And:
      j["kind"] = "and";
      break;
    case StructureExpr::Kind::Or:
      j["kind"] = "or";
      break;
    case StructureExpr::Kind::KOfN:
      j["kind"] = "k_of_n";
      j["k"] = e.min_working;
      break;
  }
  j["children"] = json::array();
  for (const auto& c : e.children) j["children"].push_back(structure_to_json(c));
  return j;
}

inline std::pair<double, double> parse_interval(const json& j, const char* ctx) {
  if (!j.is_array() || j.size() != 2)
    throw ValidationError(std::string(ctx) + ": expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

// System document: type declarations with prior boxes (y0 directly or via
// mean-lifetime bounds) plus the structure expression.
inline ParsedSystem parse_system_doc(const std::string& text,
                                     int enumeration_limit = kDefaultEnumerationLimit) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("system document is not valid JSON: ") + e.what());
  }
  try {
    std::vector<ComponentTypeDecl> decls;
    std::vector<PriorBox> boxes;
    for (const auto& tj : detail::require(j, "types", "system document")) {
      ComponentTypeDecl d;
      d.name = detail::require(tj, "name", "type declaration").get<std::string>();
      d.count = detail::require(tj, "count", "type declaration").get<int>();
      d.shape = detail::require(tj, "shape", "type declaration").get<double>();
      const auto& pj = detail::require(tj, "prior", "type declaration");
      const auto [n0_lo, n0_hi] = detail::parse_interval(
          detail::require(pj, "n0", "prior"), "prior n0");
      double y0_lo, y0_hi;
      if (pj.contains("y0")) {
        std::tie(y0_lo, y0_hi) = detail::parse_interval(pj["y0"], "prior y0");
      } else if (pj.contains("mean_lifetime")) {
        const auto [m_lo, m_hi] = detail::parse_interval(pj["mean_lifetime"],
                                                         "prior mean_lifetime");
        y0_lo = scale_from_mean_lifetime(WeibullShape(d.shape), m_lo);
        y0_hi = scale_from_mean_lifetime(WeibullShape(d.shape), m_hi);
      } else {
        throw ValidationError("prior for type " + d.name +
                              " needs either 'y0' or 'mean_lifetime' bounds");
      }
      decls.push_back(d);
      boxes.emplace_back(n0_lo, n0_hi, y0_lo, y0_hi);
    }
    StructureExpr expr = detail::parse_structure(
        detail::require(j, "structure", "system document"));
    SystemModel model = SystemModel::build(std::move(decls), std::move(expr),
                                           enumeration_limit);
    return ParsedSystem{std::move(model), std::move(boxes)};
  } catch (const json::exception& e) {
    throw ValidationError(std::string("system document schema error: ") + e.what());
  }
}

inline std::string system_doc_to_text(const ParsedSystem& sys) {
  using nlohmann::json;
  json j;
  j["types"] = json::array();
  for (std::size_t k = 0; k < sys.model.types().size(); ++k) {
    const auto& d = sys.model.types()[k];
    const auto& b = sys.boxes[k];
    j["types"].push_back({{"name", d.name},
                          {"count", d.count},
                          {"shape", d.shape},
                          {"prior", {{"n0", {b.n0_lo, b.n0_hi}}, {"y0", {b.y0_lo, b.y0_hi}}}}});
  }
  j["structure"] = detail::structure_to_json(sys.model.structure());
  return j.dump(2) + "\n";
}

// Observations document: one shared t_now plus per-type failure time lists;
// unlisted types carry zero failures (all components censored at t_now).
inline std::vector<ObservationSet> parse_observations_doc(const std::string& text,
                                                          const SystemModel& model) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("observations document is not valid JSON: ") + e.what());
  }
  try {
    const double t_now = detail::require(j, "t_now", "observations document").get<double>();
    if (t_now < 0.0) throw ValidationError("t_now must be nonnegative");

    std::vector<ObservationSet> obs;
    for (const auto& d : model.types()) obs.push_back(ObservationSet::none(d.count, t_now));

    if (j.contains("failures")) {
      for (const auto& [name, times] : j["failures"].items()) {
        const int k = model.type_index(name);  // throws for unknown types
        if (!times.is_array())
          throw ValidationError("failure times for type " + name + " must be an array");
        for (const auto& tv : times) {
          const double t = tv.get<double>();
          if (!(t > 0.0))
            throw ValidationError("failure times must be positive (type " + name + ")");
          if (t > t_now)
            throw ValidationError("failure time " + std::to_string(t) + " for type " + name +
                                  " exceeds t_now = " + std::to_string(t_now));
          obs[k].failure_times.push_back(t);
        }
        if (obs[k].num_failures() > obs[k].n_total)
          throw ValidationError("type " + name + " lists " +
                                std::to_string(obs[k].num_failures()) + " failures but has only " +
                                std::to_string(obs[k].n_total) + " components");
      }
    }
    for (auto& o : obs) o.validate();
    return obs;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("observations document schema error: ") + e.what());
  }
}

inline std::vector<BoxInputs> make_box_inputs(const ParsedSystem& sys,
                                              const std::vector<ObservationSet>& obs) {
  if (obs.size() != sys.boxes.size())
    throw ValidationError("observation sets do not match declared types");
  std::vector<BoxInputs> inputs;
  for (std::size_t k = 0; k < sys.boxes.size(); ++k)
    inputs.push_back(BoxInputs{WeibullShape(sys.model.types()[k].shape), sys.boxes[k], obs[k]});
  return inputs;
}

inline std::vector<ObservationSet> no_observations(const SystemModel& model) {
  std::vector<ObservationSet> obs;
  for (const auto& d : model.types()) obs.push_back(ObservationSet::none(d.count, 0.0));
  return obs;
}

// 10 significant digits; byte-identical output for identical inputs.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string signature_csv(const SurvivalSignature& sig) {
  std::ostringstream out;
  for (std::size_t k = 0; k < sig.counts().size(); ++k) out << "l_" << k + 1 << ",";
  out << "phi\n";
  for (std::size_t idx = 0; idx < sig.size(); ++idx) {
    for (int lk : sig.unflatten(idx)) out << lk << ",";
    out << format_number(sig.at_index(idx).value()) << "\n";
  }
  return out.str();
}

inline std::string bounds_csv(const BoundsCurve& curve,
                              const std::vector<std::string>& type_names) {
  std::ostringstream out;
  out << "t,lower,upper";
  for (const auto& n : type_names) out << ",argmin_n0_" << n;
  for (const auto& n : type_names) out << ",argmax_n0_" << n;
  out << "\n";
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    out << format_number(curve.t[i]) << "," << format_number(curve.lower[i]) << ","
        << format_number(curve.upper[i]);
    for (double v : curve.argmin_n0[i]) out << "," << format_number(v);
    for (double v : curve.argmax_n0[i]) out << "," << format_number(v);
    out << "\n";
  }
  return out.str();
}

inline std::string imprecision_csv(const ImprecisionCurve& curve) {
  std::ostringstream out;
  out << (curve.scale == TimeScale::Prospective ? "t_prospective" : "t") << ",delta\n";
  for (std::size_t i = 0; i < curve.t.size(); ++i)
    out << format_number(curve.t[i]) << "," << format_number(curve.delta[i]) << "\n";
  return out.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << content;
  if (!out) throw ValidationError("write failure: " + path);
}

}  // namespace robrel
