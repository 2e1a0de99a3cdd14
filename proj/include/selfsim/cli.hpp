#pragma once

// Command-line driver: catalog listing and export, verification reports,
// psi construction from JSON, level operators, report rendering.
// Exit codes: 0 ok, 1 a check failed, 2 usage or input error.

#include <algorithm>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "selfsim/analysis.hpp"
#include "selfsim/catalog.hpp"
#include "selfsim/serialize.hpp"

namespace selfsim::cli {

inline constexpr int kOk = 0;
inline constexpr int kChecksFailed = 1;
inline constexpr int kUsage = 2;

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> v = {"homo", "faithful", "transitive", "states", "recurrent"};
  return v;
}

inline std::string join(const std::vector<std::size_t>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << text;
}

/// A check result plus machine-readable data for the JSON report.
struct CheckOutcome {
  CheckResult result;
  Json data = Json::object();
};

// ---- individual checks ---------------------------------------------------------

inline CheckOutcome skipped(const std::string& name, const std::string& why) {
  return {{name, Status::skipped, "", "", why}, Json::object()};
}

inline CheckOutcome run_homo(const CatalogObject& obj) {
  const HomomorphismReport h = verify_homomorphism(*obj.structure);
  CheckOutcome out;
  out.result = {"homomorphism", h.ok ? Status::pass : Status::fail,
                h.pairs_skipped ? "basis pairs inside the truncation (" + std::to_string(h.pairs_skipped) +
                                      " skipped)"
                                : "all basis pairs",
                "psi([a,b]) = [psi(a), psi(b)]", h.describe(*obj.L)};
  out.data = Json{{"pairs_checked", h.pairs_checked}, {"pairs_skipped", h.pairs_skipped}};
  if (h.witness) out.data["witness"] = {obj.L->name(h.witness->first), obj.L->name(h.witness->second)};
  return out;
}

inline CheckOutcome run_faithful(const CatalogObject& obj, int level) {
  const FaithfulnessReport f = faithfulness(obj.structure, level, default_max_level_dim());
  CheckOutcome out;
  out.result = {"faithful", f.verdict, f.scope + "; levels m <= " + std::to_string(level),
                "intersection of Ker(nu_m) over m is 0", f.details};
  out.data = Json{{"kernel_dim", f.action_kernel.dim()},
                  {"portrait_dims", f.portrait_dims},
                  {"level_dims", f.level_dims},
                  {"routes_agree", f.routes_agree}};
  return out;
}

inline CheckOutcome run_transitive(const CatalogObject& obj, int level) {
  if (!obj.field.is_prime_field()) return skipped("transitive", "transitivity is defined in characteristic p only");
  const TransitivityReport t = transitivity(obj.structure, level, default_max_level_dim());
  CheckOutcome out;
  std::vector<std::size_t> dims(t.level_dims.begin(), t.level_dims.end());
  out.result = {"transitive", t.transitive ? Status::pass : Status::fail, "levels m <= " + std::to_string(level),
                "X^{(x)m} is generated by the top monomial tensor power",
                "orbit dims " + join(t.orbit_dims) + " of " + join(dims)};
  out.data = Json{{"orbit_dims", t.orbit_dims}, {"level_dims", dims}};
  if (t.theta_surjective) out.data["theta_surjective"] = *t.theta_surjective;
  return out;
}

inline CheckOutcome run_states(const CatalogObject& obj) {
  const LieAlgebra& L = *obj.L;
  CheckOutcome out;
  bool all = true;
  std::string details;
  Json dims = Json::object();
  for (std::size_t b = 0; b < L.dim(); ++b) {
    const FiniteStateReport r = finite_state(*obj.structure, L.basis(b));
    all = all && r.finite;
    dims[L.name(b)] = r.closure.dim();
    if (!r.finite && details.empty()) details = "state closure of " + L.name(b) + " did not stabilize";
  }
  if (details.empty()) details = "every basis vector has a finite state closure";
  out.result = {"states", all ? Status::pass : Status::fail,
                L.is_truncated() ? "basis vectors of the truncation" : "all basis vectors",
                "span of the coefficients a_J in psi(a) = sum x^J (x) a_J + delta", details};
  out.data = Json{{"closure_dims", dims}};
  return out;
}

inline CheckOutcome run_recurrent(const CatalogObject& obj) {
  const VirtualEndomorphism ve = obj.ve ? *obj.ve : associated_endomorphism(*obj.structure);
  const RecurrenceReport r = is_recurrent(ve);
  CheckOutcome out;
  out.result = {"recurrent", r.recurrent ? Status::pass : Status::fail, r.scope, "theta(H) = L",
                r.recurrent ? "theta is onto" : "basis vector " + ve.L().name(*r.missing) + " is not in theta(H)"};
  return out;
}

/// Guards one check: size or truncation limits become "undecided".
inline CheckOutcome guarded(const std::string& name, const std::function<CheckOutcome()>& f) {
  try {
    return f();
  } catch (const DimensionExceeded& e) {
    return {{name, Status::undecided, "", "", e.what()}, Json::object()};
  } catch (const TruncationExceeded& e) {
    return {{name, Status::undecided, "", "", e.what()}, Json::object()};
  }
}

// ---- verify ------------------------------------------------------------------------

struct VerifyRequest {
  std::string example;
  CatalogParams params;
  std::vector<std::string> checks;
  int level = 2;
  int jobs = 1;
};

/// Runs the requested checks and assembles the report in a fixed order.
inline Json verify_report(const CatalogObject& obj, const VerifyRequest& req) {
  std::vector<std::function<CheckOutcome()>> tasks;
  if (obj.conditions) {
    tasks.push_back([&obj] {
      const ConditionReport& c = *obj.conditions;
      CheckOutcome out;
      const CheckResult* bad = c.first_failure();
      std::string stages;
      for (const auto& s : c.stages) stages += (stages.empty() ? "" : ", ") + s.name + " " + to_string(s.status);
      out.result = {"conditions", c.ok ? Status::pass : Status::fail, stages,
                    obj.profile ? "profile " + obj.profile->to_string() : "", bad ? bad->details : "all stages pass"};
      Json st = Json::array();
      for (const auto& s : c.stages) st.push_back(to_json(s));
      out.data = Json{{"stages", st}, {"notes", c.notes}};
      return out;
    });
  }
  for (const auto& name : req.checks) {
    if (!obj.structure) {
      const std::string label = name == "homo" ? "homomorphism" : name;
      tasks.push_back([label] { return skipped(label, "no structure: the conditions failed"); });
      continue;
    }
    const int level = req.level;
    if (name == "homo") tasks.push_back([&obj] { return guarded("homomorphism", [&] { return run_homo(obj); }); });
    if (name == "faithful")
      tasks.push_back([&obj, level] { return guarded("faithful", [&] { return run_faithful(obj, level); }); });
    if (name == "transitive")
      tasks.push_back([&obj, level] { return guarded("transitive", [&] { return run_transitive(obj, level); }); });
    if (name == "states") tasks.push_back([&obj] { return guarded("states", [&] { return run_states(obj); }); });
    if (name == "recurrent")
      tasks.push_back([&obj] { return guarded("recurrent", [&] { return run_recurrent(obj); }); });
  }

  // Independent checks may run concurrently; results are collected in task order.
  std::vector<CheckOutcome> results(tasks.size());
  const std::size_t width = static_cast<std::size_t>(std::max(1, req.jobs));
  for (std::size_t start = 0; start < tasks.size(); start += width) {
    const std::size_t stop = std::min(tasks.size(), start + width);
    if (width == 1) {
      results[start] = tasks[start]();
      continue;
    }
    std::vector<std::future<CheckOutcome>> running;
    for (std::size_t k = start; k < stop; ++k) running.push_back(std::async(std::launch::async, tasks[k]));
    for (std::size_t k = start; k < stop; ++k) results[k] = running[k - start].get();
  }

  Json checks = Json::array();
  for (const auto& r : results) {
    Json c = to_json(r.result);
    if (!r.data.empty()) c["data"] = r.data;
    checks.push_back(std::move(c));
  }
  Json params = Json::object();
  for (const auto& [k, v] : obj.params) params[k] = v;
  return Json{{"structure", obj.name},
              {"anchor", obj.anchor},
              {"field", obj.field.to_string()},
              {"params", params},
              {"level", req.level},
              {"checks", std::move(checks)}};
}

inline bool report_failed(const Json& report) {
  for (const auto& c : json_detail::member(report, "checks"))
    if (c.value("status", "") == "fail") return true;
  return false;
}

/// Human-readable rendering of a report.
inline std::string render_report(const Json& report) {
  std::ostringstream os;
  os << json_detail::get_as<std::string>(report, "structure");
  if (report.contains("field")) os << " over " << report.at("field").get<std::string>();
  if (report.contains("params") && !report.at("params").empty()) {
    os << " (";
    bool first = true;
    for (const auto& [k, v] : report.at("params").items()) {
      os << (first ? "" : ", ") << k << "=" << v.get<std::string>();
      first = false;
    }
    os << ")";
  }
  os << "\n";
  if (report.contains("anchor") && !report.at("anchor").get<std::string>().empty())
    os << "  " << report.at("anchor").get<std::string>() << "\n";
  for (const auto& cj : json_detail::member(report, "checks")) {
    const CheckResult c = check_from_json(cj);
    std::string tag = to_string(c.status);
    std::transform(tag.begin(), tag.end(), tag.begin(), ::toupper);
    os << "  [" << tag << "] " << c.name;
    if (!c.scope.empty()) os << " {" << c.scope << "}";
    os << "\n";
    if (!c.anchor.empty()) os << "      checks: " << c.anchor << "\n";
    if (!c.details.empty()) os << "      " << c.details << "\n";
  }
  return os.str();
}

// ---- file inputs that may be wrapped in a catalog export -------------------------

inline const Json& unwrap(const Json& j, const char* wrapper_key, const char* marker) {
  if (j.is_object() && !j.contains(marker) && j.contains(wrapper_key)) return j.at(wrapper_key);
  return j;
}

// ---- driver --------------------------------------------------------------------------

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-similar Lie algebra toolkit"};
  app.require_subcommand(1);

  std::vector<std::string> names;
  for (const auto& e : catalog_entries()) names.push_back(e.name);

  auto add_params = [](CLI::App* sub, CatalogParams& prm) {
    sub->add_option("--p", prm.p, "characteristic (0 means Q)");
    sub->add_option("--n", prm.n, "rank parameter n");
    sub->add_option("--D", prm.D, "degree bound D");
    sub->add_option("--j0", prm.j0, "leading Witt index j0");
    sub->add_option("--profile", prm.profile, "condition profile");
  };

  // catalog
  auto* cat = app.add_subcommand("catalog", "catalog entries");
  cat->require_subcommand(1);
  bool list_json = false;
  auto* cat_list = cat->add_subcommand("list", "list the catalog entries");
  cat_list->add_flag("--json", list_json, "print JSON");
  std::string export_name, export_out;
  CatalogParams export_params;
  auto* cat_export = cat->add_subcommand("export", "write a catalog object as JSON");
  cat_export->add_option("--example", export_name, "entry name")->required()->check(CLI::IsMember(names));
  add_params(cat_export, export_params);
  cat_export->add_option("--out", export_out, "output file (default stdout)");

  // verify
  VerifyRequest vreq;
  std::string checks_text = "homo,faithful,transitive,states,recurrent";
  std::string verify_out;
  bool verify_json = false;
  auto* verify = app.add_subcommand("verify", "run checks on a catalog entry");
  verify->add_option("--example", vreq.example, "entry name")->required()->check(CLI::IsMember(names));
  add_params(verify, vreq.params);
  verify->add_option("--checks", checks_text, "comma-separated subset of homo,faithful,transitive,states,recurrent");
  verify->add_option("--level", vreq.level, "deepest level m")->check(CLI::Range(1, 8));
  verify->add_option("--jobs", vreq.jobs, "checks run concurrently")->check(CLI::Range(1, 64));
  verify->add_option("--out", verify_out, "write the JSON report here");
  verify->add_flag("--json", verify_json, "print the JSON report instead of text");

  // psi
  std::string psi_in, psi_theta, psi_profile, psi_out;
  auto* psi = app.add_subcommand("psi", "build psi from an algebra and theta");
  psi->add_option("--in", psi_in, "algebra JSON")->required();
  psi->add_option("--theta", psi_theta, "theta JSON")->required();
  psi->add_option("--profile", psi_profile, "condition profile, e.g. abelian_B or witt_sl2(j0=2)")->required();
  psi->add_option("--out", psi_out, "output file (default stdout)");

  // action
  std::string act_in, act_element, act_out;
  int act_level = 1;
  auto* action = app.add_subcommand("action", "matrix of an element on X^{(x)m}");
  action->add_option("--in", act_in, "structure JSON")->required();
  action->add_option("--element", act_element, "element, e.g. q1 or 2*x + a0")->required();
  action->add_option("--level", act_level, "level m")->check(CLI::Range(1, 8));
  action->add_option("--out", act_out, "output file (default stdout)");

  // report
  std::vector<std::string> report_in;
  auto* report = app.add_subcommand("report", "render JSON reports as text");
  report->add_option("--in", report_in, "report JSON files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
    return kUsage;
  }

  try {
    if (*cat_list) {
      if (list_json) {
        Json arr = Json::array();
        for (const auto& e : catalog_entries())
          arr.push_back(Json{{"name", e.name}, {"anchor", e.anchor}, {"params", e.schema}});
        out << dump(arr);
      } else {
        for (const auto& e : catalog_entries())
          out << e.name << "\n  anchor: " << e.anchor << "\n  params: " << e.schema << "\n";
      }
      return kOk;
    }
    if (*cat_export) {
      const std::string text = dump(to_json(construct(export_name, export_params)));
      if (export_out.empty())
        out << text;
      else
        write_text_file(export_out, text);
      return kOk;
    }
    if (*verify) {
      vreq.checks = split_commas(checks_text);
      for (const auto& c : vreq.checks)
        if (std::find(known_checks().begin(), known_checks().end(), c) == known_checks().end()) {
          err << "error: unknown check '" << c << "'\n\n" << verify->help();
          return kUsage;
        }
      const CatalogObject obj = construct(vreq.example, vreq.params);
      const Json rep = verify_report(obj, vreq);
      if (!verify_out.empty()) write_text_file(verify_out, dump(rep));
      out << (verify_json ? dump(rep) : render_report(rep));
      return report_failed(rep) ? kChecksFailed : kOk;
    }
    if (*psi) {
      auto L = std::make_shared<const LieAlgebra>(algebra_from_json(unwrap(read_json_file(psi_in), "algebra", "basis")));
      const VirtualEndomorphism ve = endomorphism_from_json(L, unwrap(read_json_file(psi_theta), "theta", "pairs"));
      const ConditionProfile prof = parse_profile(psi_profile);
      const ConditionReport cond = check_conditions(prof, ve);
      for (const auto& s : cond.stages)
        err << s.name << ": " << to_string(s.status) << (s.details.empty() ? "" : " (" + s.details + ")") << "\n";
      if (!cond.ok) return kChecksFailed;
      const SelfSimilarStructure s = build_psi(ve, prof);
      const HomomorphismReport h = verify_homomorphism(s);
      err << "homomorphism: " << (h.ok ? "pass" : "fail") << " (" << h.describe(*s.L) << ")\n";
      const std::string text = dump(to_json(s));
      if (psi_out.empty())
        out << text;
      else
        write_text_file(psi_out, text);
      return h.ok ? kOk : kChecksFailed;
    }
    if (*action) {
      auto s = std::make_shared<const SelfSimilarStructure>(
          structure_from_json(unwrap(read_json_file(act_in), "structure", "psi")));
      const LieElement a = s->L->parse_element(act_element);
      const SparseMatrix M = level_operator_matrix(s, a, act_level, default_max_level_dim());
      Json j{{"element", s->L->format(a)}, {"level", act_level}};
      const Json op = operator_to_json(M);
      for (const auto& [k, v] : op.items()) j[k] = v;
      const std::string text = dump(j);
      if (act_out.empty())
        out << text;
      else
        write_text_file(act_out, text);
      return kOk;
    }
    if (*report) {
      bool failed = false;
      for (std::size_t i = 0; i < report_in.size(); ++i) {
        const Json rep = read_json_file(report_in[i]);
        if (i) out << "\n";
        out << render_report(rep);
        failed = failed || report_failed(rep);
      }
      return failed ? kChecksFailed : kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed input: " << e.what() << "\n";
    return kUsage;
  }
  err << app.help();
  return kUsage;
}

}  // namespace selfsim::cli
