#pragma once

// JSON encodings of fields, algebras, theta data, self-similar structures,
// level operators and verification reports. Coefficients are decimal strings.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "selfsim/catalog.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/lie_algebra.hpp"
#include "selfsim/trunc_poly.hpp"
#include "selfsim/virtual_endomorphism.hpp"
#include "selfsim/wreath.hpp"

namespace selfsim {

// Insertion order is kept so output reads in the order it was built.
using Json = nlohmann::ordered_json;

/// Malformed or inconsistent JSON input.
class SchemaError : public Error {
 public:
  using Error::Error;
};

namespace json_detail {

inline const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T get_as(const Json& j, const char* key) {
  try {
    return member(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("field '") + key + "': " + e.what());
  }
}

inline Index parse_index(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw SchemaError("bad index key '" + s + "'");
  return static_cast<Index>(std::stoull(s));
}

}  // namespace json_detail

// ---- field -----------------------------------------------------------------

inline Json to_json(const FieldSpec& f) {
  if (f.is_rational()) return Json{{"kind", "rational"}};
  return Json{{"kind", "prime"}, {"p", f.characteristic()}};
}

inline FieldSpec field_from_json(const Json& j) {
  const auto kind = json_detail::get_as<std::string>(j, "kind");
  if (kind == "rational") return FieldSpec::rational();
  if (kind == "prime") {
    const auto p = json_detail::get_as<int>(j, "p");
    if (p < 2) throw SchemaError("prime field needs p >= 2");
    try {
      return FieldSpec::prime(static_cast<std::uint32_t>(p));
    } catch (const Error& e) {
      throw SchemaError(e.what());
    }
  }
  throw SchemaError("unknown field kind '" + kind + "'");
}

// ---- sparse vectors: {"index": "coefficient"} -------------------------------

inline Json to_json(const SparseVec& v) {
  Json out = Json::object();
  for (const auto& [i, c] : v) out[std::to_string(i)] = c.to_string();
  return out;
}

inline SparseVec vec_from_json(const Json& j, const FieldSpec& f, std::optional<Index> bound = std::nullopt) {
  if (!j.is_object()) throw SchemaError("coefficient vector must be an object");
  SparseVec out;
  for (const auto& [k, v] : j.items()) {
    const Index i = json_detail::parse_index(k);
    if (bound && i >= *bound) throw SchemaError("index " + k + " out of range");
    if (!v.is_string()) throw SchemaError("coefficients are decimal strings");
    try {
      out.add(i, Scalar::parse(f, v.get<std::string>()));
    } catch (const Error& e) {
      throw SchemaError(e.what());
    }
  }
  return out;
}

// ---- Lie algebras ------------------------------------------------------------

inline Json to_json(const LieAlgebra& L) {
  Json out;
  out["field"] = to_json(L.field());
  out["basis"] = L.names();
  if (const auto& t = L.truncation()) out["truncation"] = Json{{"degrees", t->degrees}, {"bound", t->bound}};
  Json brackets = Json::array();
  for (std::size_t i = 0; i < L.dim(); ++i)
    for (std::size_t j = 0; j < L.dim(); ++j) {
      const auto& e = L.basis_bracket_entry(i, j);
      if (!e)
        brackets.push_back(Json{{"i", i}, {"j", j}, {"overflow", true}});
      else if (!e->is_zero())
        brackets.push_back(Json{{"i", i}, {"j", j}, {"out", to_json(*e)}});
    }
  out["brackets"] = std::move(brackets);
  return out;
}

inline LieAlgebra algebra_from_json(const Json& j) {
  using namespace json_detail;
  const FieldSpec f = field_from_json(member(j, "field"));
  const auto names = get_as<std::vector<std::string>>(j, "basis");
  const std::size_t d = names.size();
  std::map<std::pair<std::size_t, std::size_t>, LieAlgebra::BasisBracket> table;
  const Json& br = member(j, "brackets");
  if (!br.is_array()) throw SchemaError("'brackets' must be an array");
  for (const auto& e : br) {
    const auto i = get_as<std::size_t>(e, "i");
    const auto k = get_as<std::size_t>(e, "j");
    if (i >= d || k >= d) throw SchemaError("bracket index out of range");
    LieAlgebra::BasisBracket val;
    if (e.contains("overflow") && e.at("overflow").is_boolean() && e.at("overflow").get<bool>())
      val = std::nullopt;
    else
      val = vec_from_json(member(e, "out"), f, d);
    if (!table.emplace(std::make_pair(i, k), val).second) throw SchemaError("bracket listed twice");
  }
  try {
    if (j.contains("truncation")) {
      const Json& t = j.at("truncation");
      LieAlgebra::Truncation trunc{get_as<std::vector<int>>(t, "degrees"), get_as<int>(t, "bound")};
      return LieAlgebra::truncated(f, names, std::move(trunc), [&](std::size_t a, std::size_t b) {
        auto it = table.find({a, b});
        return it == table.end() ? LieAlgebra::BasisBracket(SparseVec{}) : it->second;
      });
    }
    std::vector<std::tuple<std::size_t, std::size_t, SparseVec>> rows;
    for (const auto& [key, val] : table) {
      if (!val) throw SchemaError("overflow bracket in an untruncated algebra");
      rows.emplace_back(key.first, key.second, *val);
    }
    return LieAlgebra::from_table(f, names, rows);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(e.what());
  }
}

// ---- X, polynomials, derivations -------------------------------------------

inline Json to_json(const TruncPolyAlgebra& X) {
  Json out{{"field", to_json(X.field())}, {"n", X.n()}};
  if (X.is_degree_truncated()) out["degree_bound"] = X.degree_bound();
  return out;
}

inline TruncPolyAlgebra alphabet_from_json(const Json& j) {
  const FieldSpec f = field_from_json(json_detail::member(j, "field"));
  const int n = json_detail::get_as<int>(j, "n");
  const int bound = j.contains("degree_bound") ? json_detail::get_as<int>(j, "degree_bound") : 0;
  try {
    return TruncPolyAlgebra(f, n, bound);
  } catch (const Error& e) {
    throw SchemaError(e.what());
  }
}

/// {"1,0": "2"}: exponent key to coefficient.
inline Json poly_to_json(const TruncPolyAlgebra& X, const TruncPoly& u) {
  Json out = Json::object();
  for (const auto& [m, c] : u) out[TruncPolyAlgebra::exponent_key(X.exponents(m))] = c.to_string();
  return out;
}

inline TruncPoly poly_from_json(const TruncPolyAlgebra& X, const Json& j) {
  if (!j.is_object()) throw SchemaError("polynomial must be an object");
  TruncPoly out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw SchemaError("coefficients are decimal strings");
    try {
      out.add(X.index(X.parse_exponent_key(k)), Scalar::parse(X.field(), v.get<std::string>()));
    } catch (const std::invalid_argument&) {
      throw SchemaError("bad exponent key '" + k + "'");
    } catch (const Error& e) {
      throw SchemaError(e.what());
    }
  }
  return out;
}

/// List of the images of x_1..x_n.
inline Json derivation_to_json(const TruncPolyAlgebra& X, const Derivation& d) {
  Json out = Json::array();
  for (int i = 0; i < X.n(); ++i) out.push_back(poly_to_json(X, d.images.empty() ? TruncPoly{} : d.images[i]));
  return out;
}

inline Derivation derivation_from_json(const TruncPolyAlgebra& X, const Json& j) {
  if (!j.is_array() || static_cast<int>(j.size()) != X.n()) throw SchemaError("derivation needs one image per variable");
  Derivation d = X.zero_derivation();
  for (int i = 0; i < X.n(); ++i) d.images[i] = poly_from_json(X, j[i]);
  return d;
}

// ---- wreath elements and structures ----------------------------------------

inline Json wreath_to_json(const TruncPolyAlgebra& X, const WreathElement& w) {
  Json tensor = Json::array();
  for (const auto& [m, a] : w.tensor)
    tensor.push_back(Json{{"mono", TruncPolyAlgebra::exponent_key(X.exponents(m))}, {"element", to_json(a)}});
  return Json{{"tensor", std::move(tensor)}, {"der", derivation_to_json(X, w.der)}};
}

inline WreathElement wreath_from_json(const TruncPolyAlgebra& X, const LieAlgebra& L, const Json& j) {
  const WreathAlgebra W(X, L);
  WreathElement w = W.zero();
  const Json& t = json_detail::member(j, "tensor");
  if (!t.is_array()) throw SchemaError("'tensor' must be an array");
  for (const auto& e : t) {
    std::size_t mono = 0;
    try {
      mono = X.index(X.parse_exponent_key(json_detail::get_as<std::string>(e, "mono")));
    } catch (const std::invalid_argument&) {
      throw SchemaError("bad monomial key");
    } catch (const SchemaError&) {
      throw;
    } catch (const Error& err) {
      throw SchemaError(err.what());
    }
    WreathAlgebra::add_tensor(w, mono, vec_from_json(json_detail::member(e, "element"), L.field(), L.dim()));
  }
  w.der = derivation_from_json(X, json_detail::member(j, "der"));
  return w;
}

inline Json to_json(const SelfSimilarStructure& s) {
  Json psi = Json::array();
  for (std::size_t i = 0; i < s.psi.size(); ++i)
    psi.push_back(Json{{"basis", s.L->name(i)}, {"image", wreath_to_json(s.X, s.psi[i])}});
  return Json{{"provenance", s.provenance}, {"algebra", to_json(*s.L)}, {"X", to_json(s.X)}, {"psi", std::move(psi)}};
}

inline SelfSimilarStructure structure_from_json(const Json& j) {
  SelfSimilarStructure s;
  s.L = std::make_shared<const LieAlgebra>(algebra_from_json(json_detail::member(j, "algebra")));
  s.X = alphabet_from_json(json_detail::member(j, "X"));
  if (!(s.X.field() == s.L->field())) throw SchemaError("X and L live over different fields");
  s.provenance = j.contains("provenance") ? json_detail::get_as<std::string>(j, "provenance") : "";
  const Json& psi = json_detail::member(j, "psi");
  if (!psi.is_array() || psi.size() != s.L->dim()) throw SchemaError("'psi' needs one image per basis vector");
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (psi[i].contains("basis") && psi[i].at("basis") != s.L->name(i))
      throw SchemaError("psi entry " + std::to_string(i) + " is not for basis vector " + s.L->name(i));
    s.psi.push_back(wreath_from_json(s.X, *s.L, json_detail::member(psi[i], "image")));
  }
  return s;
}

// ---- theta data ---------------------------------------------------------------

/// theta on the echelon basis of H, plus the ordered section of L_0.
inline Json to_json(const VirtualEndomorphism& ve) {
  Json pairs = Json::array();
  for (std::size_t k = 0; k < ve.H().basis().size(); ++k)
    pairs.push_back(Json{{"h", to_json(ve.H().basis()[k])}, {"theta", to_json(ve.theta_rows()[k])}});
  Json section = Json::array();
  for (std::size_t k = 0; k < ve.section().size(); ++k)
    section.push_back(Json{{"name", ve.section_names()[k]}, {"vector", to_json(ve.section()[k])}});
  return Json{{"pairs", std::move(pairs)},
              {"section", std::move(section)},
              {"differential_count", ve.differential_count()},
              {"m", ve.m()}};
}

inline VirtualEndomorphism endomorphism_from_json(std::shared_ptr<const LieAlgebra> L, const Json& j) {
  using namespace json_detail;
  const Index d = L->dim();
  std::vector<std::pair<LieElement, LieElement>> pairs;
  const Json& pj = member(j, "pairs");
  if (!pj.is_array()) throw SchemaError("'pairs' must be an array");
  for (const auto& e : pj)
    pairs.emplace_back(vec_from_json(member(e, "h"), L->field(), d), vec_from_json(member(e, "theta"), L->field(), d));
  std::vector<LieElement> section;
  std::vector<std::string> names;
  const Json& sj = member(j, "section");
  if (!sj.is_array()) throw SchemaError("'section' must be an array");
  for (const auto& e : sj) {
    names.push_back(get_as<std::string>(e, "name"));
    section.push_back(vec_from_json(member(e, "vector"), L->field(), d));
  }
  try {
    return VirtualEndomorphism::from_pairs(std::move(L), pairs, std::move(section), std::move(names),
                                           get_as<int>(j, "differential_count"), get_as<int>(j, "m"));
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(e.what());
  }
}

// ---- profiles ------------------------------------------------------------------

/// Accepts the ConditionProfile::to_string form, e.g. "witt_sl2(j0=2)" or "frank(n=2)".
inline ConditionProfile parse_profile(const std::string& text) {
  ConditionProfile prof;
  const auto open = text.find('(');
  prof.family = parse_profile_family(text.substr(0, open));
  if (open == std::string::npos) return prof;
  if (text.back() != ')') throw InvalidParameter("bad profile '" + text + "'");
  const std::string arg = text.substr(open + 1, text.size() - open - 2);
  const auto eq = arg.find('=');
  if (eq == std::string::npos) throw InvalidParameter("bad profile argument '" + arg + "'");
  const std::string key = arg.substr(0, eq);
  int value = 0;
  try {
    value = std::stoi(arg.substr(eq + 1));
  } catch (const std::exception&) {
    throw InvalidParameter("bad profile argument '" + arg + "'");
  }
  if (key == "j0" && prof.family == ProfileFamily::witt_sl2)
    prof.j0 = value;
  else if (key == "n" && (prof.family == ProfileFamily::frank || prof.family == ProfileFamily::sl_np1))
    prof.n = value;
  else
    throw InvalidParameter("profile '" + text + "' takes no argument '" + key + "'");
  return prof;
}

// ---- level operators -----------------------------------------------------------

/// {"dim": d, "entries": [[row, col, "value"], ...]} in row-major order.
inline Json operator_to_json(const SparseMatrix& M) {
  std::map<std::pair<Index, Index>, std::string> cells;
  for (std::size_t c = 0; c < M.columns.size(); ++c)
    for (const auto& [r, v] : M.columns[c]) cells[{r, c}] = v.to_string();
  Json entries = Json::array();
  for (const auto& [rc, v] : cells) entries.push_back(Json::array({rc.first, rc.second, v}));
  return Json{{"dim", M.dim}, {"entries", std::move(entries)}};
}

inline SparseMatrix operator_from_json(const Json& j, const FieldSpec& f) {
  SparseMatrix M;
  M.dim = json_detail::get_as<std::size_t>(j, "dim");
  M.columns.assign(M.dim, SparseVec{});
  for (const auto& e : json_detail::member(j, "entries")) {
    if (!e.is_array() || e.size() != 3) throw SchemaError("operator entries are [row, col, value]");
    const auto r = e[0].get<Index>();
    const auto c = e[1].get<std::size_t>();
    if (r >= M.dim || c >= M.dim) throw SchemaError("operator entry out of range");
    M.columns[c].add(r, Scalar::parse(f, e[2].get<std::string>()));
  }
  return M;
}

// ---- reports -------------------------------------------------------------------

inline Json to_json(const CheckResult& c) {
  Json out{{"name", c.name}, {"status", to_string(c.status)}, {"scope", c.scope}, {"anchor", c.anchor}};
  if (!c.details.empty()) out["details"] = c.details;
  return out;
}

inline Status parse_status(const std::string& s) {
  for (auto st : {Status::pass, Status::fail, Status::undecided, Status::skipped})
    if (to_string(st) == s) return st;
  throw SchemaError("unknown status '" + s + "'");
}

inline CheckResult check_from_json(const Json& j) {
  CheckResult c;
  c.name = json_detail::get_as<std::string>(j, "name");
  c.status = parse_status(json_detail::get_as<std::string>(j, "status"));
  c.scope = j.value("scope", "");
  c.anchor = j.value("anchor", "");
  c.details = j.value("details", "");
  return c;
}

// ---- catalog objects -------------------------------------------------------------

inline Json to_json(const CatalogObject& obj) {
  Json out;
  out["name"] = obj.name;
  out["anchor"] = obj.anchor;
  out["params"] = obj.params;
  out["algebra"] = to_json(*obj.L);
  if (obj.profile) out["profile"] = obj.profile->to_string();
  if (obj.ve) out["theta"] = to_json(*obj.ve);
  if (obj.structure) out["structure"] = to_json(*obj.structure);
  return out;
}

/// The parts of a catalog object that live in JSON (no condition reports).
inline CatalogObject catalog_object_from_json(const Json& j) {
  CatalogObject obj;
  obj.name = json_detail::get_as<std::string>(j, "name");
  obj.anchor = j.value("anchor", "");
  obj.params = j.value("params", std::map<std::string, std::string>{});
  obj.L = std::make_shared<const LieAlgebra>(algebra_from_json(json_detail::member(j, "algebra")));
  obj.field = obj.L->field();
  if (j.contains("profile")) obj.profile = parse_profile(j.at("profile").get<std::string>());
  if (j.contains("theta")) obj.ve = endomorphism_from_json(obj.L, j.at("theta"));
  if (j.contains("structure")) {
    SelfSimilarStructure s = structure_from_json(j.at("structure"));
    if (to_json(*s.L) != to_json(*obj.L)) throw SchemaError("structure and object disagree on the algebra");
    s.L = obj.L;
    obj.structure = std::make_shared<const SelfSimilarStructure>(std::move(s));
  }
  return obj;
}

/// Pretty-printed with a trailing newline.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace selfsim
