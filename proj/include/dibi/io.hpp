#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dibi/errors.hpp"
#include "dibi/finrel.hpp"
#include "dibi/finstoch.hpp"
#include "dibi/gauss.hpp"
#include "dibi/kernels.hpp"
#include "dibi/rational.hpp"
#include "dibi/synvar.hpp"

namespace dibi {

using nlohmann::json;

// One self-describing file format across instances: the instance tag picks
// the payload schema. Probabilities are exact "num/den" strings, gaussian
// numbers are decimal floats, syntactic payloads are term DSL text.
template <class I>
struct InstanceFile {
  Category<I> cat;
  std::map<std::string, Kernel<I>> kernels;
  std::map<std::string, GenSig> generators;  // used by the syntactic instance
};

using LoadedFile = std::variant<InstanceFile<FinStoch>, InstanceFile<FinRel>, InstanceFile<Gauss>,
                                InstanceFile<SynVar>>;

namespace detail {

inline VarList varlist_of_json(const json& j) {
  VarList out;
  for (const auto& v : j) out.emplace_back(v.get<std::string>());
  return out;
}

inline json json_of_varlist(const VarList& l) {
  json out = json::array();
  for (const auto& v : l) out.push_back(v.str());
  return out;
}

inline stoch::Memory memory_of_json(const json& j) {
  stoch::Memory m;
  for (auto it = j.begin(); it != j.end(); ++it) m[VarName(it.key())] = it.value().get<std::string>();
  return m;
}

inline json json_of_memory(const stoch::Memory& m) {
  json out = json::object();
  for (const auto& [v, val] : m) out[v.str()] = val;
  return out;
}

template <class I>
typename I::Theta theta_of_json(const json& j) {
  typename I::Theta theta;
  if constexpr (std::is_same_v<I, FinStoch> || std::is_same_v<I, FinRel>) {
    if (!j.contains("alphabet")) throw FileError("missing 'alphabet'");
    std::vector<std::string> vals;
    for (const auto& v : j.at("alphabet")) vals.push_back(v.get<std::string>());
    theta.fallback = stoch::make_alphabet(vals);
    if (j.contains("alphabets")) {
      for (auto it = j.at("alphabets").begin(); it != j.at("alphabets").end(); ++it) {
        std::vector<std::string> over;
        for (const auto& v : it.value()) over.push_back(v.get<std::string>());
        theta.overrides[VarName(it.key())] = stoch::make_alphabet(over);
      }
    }
  } else if constexpr (std::is_same_v<I, Gauss>) {
    theta.fallback = j.value("dim", 1);
    if (j.contains("dims")) {
      for (auto it = j.at("dims").begin(); it != j.at("dims").end(); ++it)
        theta.overrides[VarName(it.key())] = it.value().get<Eigen::Index>();
    }
  }
  return theta;
}

inline Kernel<FinStoch> stoch_kernel_of_json(const Category<FinStoch>& cat, const json& j) {
  VarList dom = varlist_of_json(j.at("dom"));
  VarList cod = varlist_of_json(j.at("cod"));
  Morphism<FinStoch> m{dom, cod, {cat.object_of(dom), cat.object_of(cod), {}}};
  for (const auto& row : j.at("rows")) {
    FinStoch::SparseDist d;
    for (const auto& entry : row.at("dist"))
      d[stoch::to_tuple(cod, memory_of_json(entry.at("mem")))] =
          parse_rational(entry.at("p").get<std::string>());
    m.payload.rows[stoch::to_tuple(dom, memory_of_json(row.at("given")))] = std::move(d);
  }
  FinStoch::validate(m.payload);
  return kernel_from_morphism(cat, m);
}

inline json json_of_stoch_kernel(const Category<FinStoch>& cat, const Kernel<FinStoch>& k) {
  Morphism<FinStoch> full = embed(cat, k);
  json rows = json::array();
  for (const auto& [a, d] : full.payload.rows) {
    json dist = json::array();
    for (const auto& [b, q] : d)
      dist.push_back({{"mem", json_of_memory(stoch::to_memory(full.cod, b))}, {"p", to_string(q)}});
    rows.push_back({{"given", json_of_memory(stoch::to_memory(full.dom, a))}, {"dist", dist}});
  }
  return {{"dom", json_of_varlist(full.dom)}, {"cod", json_of_varlist(full.cod)}, {"rows", rows}};
}

inline Kernel<FinRel> rel_kernel_of_json(const Category<FinRel>& cat, const json& j) {
  VarList dom = varlist_of_json(j.at("dom"));
  VarList cod = varlist_of_json(j.at("cod"));
  Morphism<FinRel> m{dom, cod, {cat.object_of(dom), cat.object_of(cod), {}}};
  for (const auto& row : j.at("rows")) {
    FinRel::TupleSet s;
    for (const auto& entry : row.at("set")) s.insert(stoch::to_tuple(cod, memory_of_json(entry)));
    m.payload.rows[stoch::to_tuple(dom, memory_of_json(row.at("given")))] = std::move(s);
  }
  FinRel::validate(m.payload);
  return kernel_from_morphism(cat, m);
}

inline json json_of_rel_kernel(const Category<FinRel>& cat, const Kernel<FinRel>& k) {
  Morphism<FinRel> full = embed(cat, k);
  json rows = json::array();
  for (const auto& [a, s] : full.payload.rows) {
    json set = json::array();
    for (const auto& b : s) set.push_back(json_of_memory(stoch::to_memory(full.cod, b)));
    rows.push_back({{"given", json_of_memory(stoch::to_memory(full.dom, a))}, {"set", set}});
  }
  return {{"dom", json_of_varlist(full.dom)}, {"cod", json_of_varlist(full.cod)}, {"rows", rows}};
}

inline Kernel<Gauss> gauss_kernel_of_json(const Category<Gauss>& cat, const json& j) {
  VarList dom = varlist_of_json(j.at("dom"));
  VarList cod = varlist_of_json(j.at("cod"));
  Gauss::Object dobj = cat.object_of(dom), cobj = cat.object_of(cod);
  Eigen::Index n = Gauss::total(dobj), m = Gauss::total(cobj);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, n), cov = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  auto fill = [&](const char* key, Eigen::MatrixXd& target) {
    if (!j.contains(key)) return;
    const json& rows = j.at(key);
    if (static_cast<Eigen::Index>(rows.size()) != target.rows())
      throw FileError(std::string(key) + ": row count mismatch");
    for (Eigen::Index r = 0; r < target.rows(); ++r) {
      const json& row = rows[static_cast<std::size_t>(r)];
      if (static_cast<Eigen::Index>(row.size()) != target.cols())
        throw FileError(std::string(key) + ": column count mismatch");
      for (Eigen::Index c = 0; c < target.cols(); ++c)
        target(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  };
  fill("M", M);
  fill("cov", cov);
  if (j.contains("mean")) {
    const json& v = j.at("mean");
    if (static_cast<Eigen::Index>(v.size()) != m) throw FileError("mean: size mismatch");
    for (Eigen::Index r = 0; r < m; ++r) mean(r) = v[static_cast<std::size_t>(r)].get<double>();
  }
  Morphism<Gauss> mor{dom, cod, Gauss::make(dobj, cobj, std::move(M), std::move(cov), std::move(mean))};
  return kernel_from_morphism(cat, mor);
}

inline json json_of_matrix(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

inline json json_of_gauss_kernel(const Category<Gauss>& cat, const Kernel<Gauss>& k) {
  Morphism<Gauss> full = embed(cat, k);
  json mean = json::array();
  for (Eigen::Index r = 0; r < full.payload.mean.size(); ++r) mean.push_back(full.payload.mean(r));
  return {{"dom", json_of_varlist(full.dom)},
          {"cod", json_of_varlist(full.cod)},
          {"M", json_of_matrix(full.payload.M)},
          {"cov", json_of_matrix(full.payload.cov)},
          {"mean", mean}};
}

inline Kernel<SynVar> syn_kernel_of_json(const Category<SynVar>& cat, const json& j,
                                         std::map<std::string, GenSig>* registry) {
  VarList dom = varlist_of_json(j.at("dom"));
  VarList cod = varlist_of_json(j.at("cod"));
  syn::TermPtr t = syn::parse_term(j.at("term").get<std::string>(), registry);
  Morphism<SynVar> m = syn::elaborate(cat, t);
  if (m.dom != dom)
    throw FileError("term domain " + to_string(m.dom) + " differs from declared " + to_string(dom));
  if (list_to_set(m.cod) != list_to_set(cod))
    throw FileError("term codomain " + to_string(m.cod) + " does not carry the declared variables");
  // Route the term's output order onto the canonical declared order.
  m = cat.permute_cod(m, set_to_list(list_to_set(cod)));
  return kernel_from_morphism(cat, m);
}

inline json json_of_syn_kernel(const Category<SynVar>& cat, const Kernel<SynVar>& k,
                               const std::map<std::string, GenSig>& names) {
  Morphism<SynVar> full = embed(cat, k);
  syn::TermPtr t = syn::to_term(full.payload, &names);
  return {{"dom", json_of_varlist(full.dom)},
          {"cod", json_of_varlist(full.cod)},
          {"term", syn::print_term(t)}};
}

}  // namespace detail

inline LoadedFile load_kernel_file(const json& j) {
  if (!j.contains("instance")) throw FileError("missing 'instance' tag");
  std::string tag = j.at("instance").get<std::string>();
  if (tag == "finstoch") {
    InstanceFile<FinStoch> f{Category<FinStoch>(detail::theta_of_json<FinStoch>(j)), {}, {}};
    if (j.contains("kernels"))
      for (auto it = j.at("kernels").begin(); it != j.at("kernels").end(); ++it)
        f.kernels.emplace(it.key(), detail::stoch_kernel_of_json(f.cat, it.value()));
    return f;
  }
  if (tag == "finrel") {
    InstanceFile<FinRel> f{Category<FinRel>(detail::theta_of_json<FinRel>(j)), {}, {}};
    if (j.contains("kernels"))
      for (auto it = j.at("kernels").begin(); it != j.at("kernels").end(); ++it)
        f.kernels.emplace(it.key(), detail::rel_kernel_of_json(f.cat, it.value()));
    return f;
  }
  if (tag == "gauss") {
    InstanceFile<Gauss> f{Category<Gauss>(detail::theta_of_json<Gauss>(j)), {}, {}};
    if (j.contains("kernels"))
      for (auto it = j.at("kernels").begin(); it != j.at("kernels").end(); ++it)
        f.kernels.emplace(it.key(), detail::gauss_kernel_of_json(f.cat, it.value()));
    return f;
  }
  if (tag == "synvar") {
    InstanceFile<SynVar> f{Category<SynVar>(std::monostate{}), {}, {}};
    if (j.contains("kernels"))
      for (auto it = j.at("kernels").begin(); it != j.at("kernels").end(); ++it)
        f.kernels.emplace(it.key(), detail::syn_kernel_of_json(f.cat, it.value(), &f.generators));
    return f;
  }
  throw FileError("unknown instance tag: " + tag);
}

inline LoadedFile load_kernel_file_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FileError(std::string("not valid JSON: ") + e.what());
  }
  return load_kernel_file(j);
}

inline LoadedFile load_kernel_file_path(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_kernel_file_text(ss.str());
}

template <class I>
json kernel_to_json(const InstanceFile<I>& file, const Kernel<I>& k) {
  if constexpr (std::is_same_v<I, FinStoch>) return detail::json_of_stoch_kernel(file.cat, k);
  if constexpr (std::is_same_v<I, FinRel>) return detail::json_of_rel_kernel(file.cat, k);
  if constexpr (std::is_same_v<I, Gauss>) return detail::json_of_gauss_kernel(file.cat, k);
  if constexpr (std::is_same_v<I, SynVar>) return detail::json_of_syn_kernel(file.cat, k, file.generators);
}

template <class I>
json file_to_json(const InstanceFile<I>& file) {
  json j;
  if constexpr (std::is_same_v<I, FinStoch> || std::is_same_v<I, FinRel>) {
    j["instance"] = std::is_same_v<I, FinStoch> ? "finstoch" : "finrel";
    json alpha = json::array();
    for (const auto& v : file.cat.theta().fallback) alpha.push_back(v);
    j["alphabet"] = alpha;
    if (!file.cat.theta().overrides.empty()) {
      json overrides = json::object();
      for (const auto& [var, a] : file.cat.theta().overrides) {
        json one = json::array();
        for (const auto& v : a) one.push_back(v);
        overrides[var.str()] = one;
      }
      j["alphabets"] = overrides;
    }
  } else if constexpr (std::is_same_v<I, Gauss>) {
    j["instance"] = "gauss";
    j["dim"] = file.cat.theta().fallback;
    if (!file.cat.theta().overrides.empty()) {
      json overrides = json::object();
      for (const auto& [var, d] : file.cat.theta().overrides) overrides[var.str()] = d;
      j["dims"] = overrides;
    }
  } else {
    j["instance"] = "synvar";
  }
  json kernels = json::object();
  for (const auto& [name, k] : file.kernels) kernels[name] = kernel_to_json(file, k);
  j["kernels"] = kernels;
  return j;
}

}  // namespace dibi
