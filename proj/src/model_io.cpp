#include "model_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rumboost {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "rumboost-model";

json tree_to_json(const Tree& tree) {
  // Preorder node list; splits are [column, threshold, left, right] with
  // child slots referring to positions in the list, leaves are [value].
  json nodes = json::array();
  std::vector<int> order;
  std::vector<int> stack{0};
  std::vector<int> preorder_pos(tree.nodes.size(), -1);
  while (!stack.empty()) {
    int idx = stack.back();
    stack.pop_back();
    preorder_pos[idx] = static_cast<int>(order.size());
    order.push_back(idx);
    const auto& node = tree.nodes[idx];
    if (!node.is_leaf()) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
  for (int idx : order) {
    const auto& node = tree.nodes[idx];
    if (node.is_leaf()) {
      nodes.push_back(json::array({node.value}));
    } else {
      nodes.push_back(json::array(
          {node.column, node.threshold, preorder_pos[node.left], preorder_pos[node.right]}));
    }
  }
  return nodes;
}

Tree tree_from_json(const json& nodes, size_t n_slots, const std::string& where) {
  Tree tree;
  tree.nodes.resize(nodes.size());
  if (nodes.empty()) throw DataError(where + ": empty tree");
  for (size_t i = 0; i < nodes.size(); ++i) {
    const json& jn = nodes[i];
    if (!jn.is_array()) throw DataError(where + ": node must be an array");
    Tree::Node& node = tree.nodes[i];
    if (jn.size() == 1) {
      node.value = jn[0].get<double>();
    } else if (jn.size() == 4) {
      node.column = jn[0].get<int>();
      node.threshold = jn[1].get<double>();
      node.left = jn[2].get<int>();
      node.right = jn[3].get<int>();
      if (node.column < 0 || node.column >= static_cast<int>(n_slots))
        throw DataError(where + ": split column out of range");
      if (node.left <= static_cast<int>(i) || node.right <= static_cast<int>(i) ||
          node.left >= static_cast<int>(nodes.size()) || node.right >= static_cast<int>(nodes.size()))
        throw DataError(where + ": child index out of range");
    } else {
      throw DataError(where + ": node must have 1 or 4 entries");
    }
  }
  return tree;
}

}  // namespace

std::string serialize_model(const ModelFile& mf) {
  const RUMBoostModel& model = mf.model;
  json j;
  j["format"] = kFormatName;
  j["version"] = kFormatVersion;
  j["seed"] = model.seed;
  j["config_hash"] = model.config_hash;
  j["trained_rounds"] = model.trained_rounds;
  j["spec"] = json::parse(serialize_spec(model.spec));
  j["ascs"] = model.ascs;

  json ensembles = json::array();
  for (const auto& ens : model.ensembles) {
    json je;
    je["alt"] = ens.alt;
    je["kind"] = ens.is_fe ? "fe" : "param";
    je["spec_index"] = ens.spec_index;
    je["variables"] = ens.variables;
    je["var_min"] = ens.var_min;
    je["var_max"] = ens.var_max;
    json trees = json::array();
    for (size_t t = 0; t < ens.trees.size(); ++t) {
      json jt;
      jt["round"] = ens.tree_round[t];
      jt["nodes"] = tree_to_json(ens.trees[t]);
      trees.push_back(std::move(jt));
    }
    je["trees"] = std::move(trees);
    ensembles.push_back(std::move(je));
  }
  j["ensembles"] = std::move(ensembles);

  if (!mf.overrides.empty()) {
    json splines = json::array();
    for (const auto& ov : mf.overrides) {
      json js;
      js["ensemble"] = ov.ensemble_index;
      js["variable"] = ov.curve.variable;
      js["knots"] = ov.curve.knots;
      js["values"] = ov.curve.values;
      js["derivs"] = ov.curve.derivs;
      splines.push_back(std::move(js));
    }
    j["splines"] = std::move(splines);
    j["spline_df"] = mf.spline_df;
  }
  return j.dump(2) + "\n";
}

ModelFile parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format") || j["format"] != kFormatName)
    throw DataError("model file: not a " + std::string(kFormatName) + " document");
  if (!j.contains("version") || j["version"].get<int>() != kFormatVersion)
    throw DataError("model file: unsupported format version");

  ModelFile mf;
  RUMBoostModel& model = mf.model;
  model.seed = j.value("seed", 0ull);
  model.config_hash = j.value("config_hash", std::string());
  model.trained_rounds = j.value("trained_rounds", 0);
  model.spec = parse_spec(j.at("spec").dump());
  model.ascs = j.at("ascs").get<std::vector<double>>();
  if (model.ascs.size() != static_cast<size_t>(model.spec.n_alts()))
    throw DataError("model file: asc count does not match alternatives");

  size_t ei = 0;
  for (const json& je : j.at("ensembles")) {
    const std::string where = "ensembles[" + std::to_string(ei++) + "]";
    ParameterEnsemble ens;
    ens.alt = je.at("alt").get<int>();
    if (ens.alt < 0 || ens.alt >= model.spec.n_alts())
      throw DataError(where + ": alternative out of range");
    ens.is_fe = je.at("kind").get<std::string>() == "fe";
    ens.spec_index = je.at("spec_index").get<int>();
    ens.variables = je.at("variables").get<std::vector<std::string>>();
    ens.var_min = je.at("var_min").get<std::vector<double>>();
    ens.var_max = je.at("var_max").get<std::vector<double>>();
    if (ens.var_min.size() != ens.variables.size() || ens.var_max.size() != ens.variables.size())
      throw DataError(where + ": variable range arrays do not match variables");
    if (ens.is_fe) {
      if (ens.spec_index < 0 || ens.spec_index >= static_cast<int>(model.spec.fe_blocks.size()))
        throw DataError(where + ": spec_index out of range");
      ens.monotone.assign(ens.variables.size(), Monotone::None);
    } else {
      if (ens.spec_index < 0 || ens.spec_index >= static_cast<int>(model.spec.parameters.size()))
        throw DataError(where + ": spec_index out of range");
      ens.monotone = model.spec.parameters[ens.spec_index].monotone;
    }
    for (const json& jt : je.at("trees")) {
      ens.tree_round.push_back(jt.at("round").get<int>());
      ens.trees.push_back(tree_from_json(jt.at("nodes"), ens.variables.size(), where));
    }
    model.ensembles.push_back(std::move(ens));
  }

  if (j.contains("splines")) {
    for (const json& js : j.at("splines")) {
      SplineOverride ov;
      ov.ensemble_index = js.at("ensemble").get<int>();
      if (ov.ensemble_index < 0 || ov.ensemble_index >= static_cast<int>(model.ensembles.size()))
        throw DataError("model file: spline override references a missing ensemble");
      ov.curve.variable = js.at("variable").get<std::string>();
      ov.curve.knots = js.at("knots").get<std::vector<double>>();
      ov.curve.values = js.at("values").get<std::vector<double>>();
      ov.curve.derivs = js.at("derivs").get<std::vector<double>>();
      if (ov.curve.knots.size() < 2 || ov.curve.values.size() != ov.curve.knots.size() ||
          ov.curve.derivs.size() != ov.curve.knots.size())
        throw DataError("model file: malformed spline override");
      mf.overrides.push_back(std::move(ov));
    }
    mf.spline_df = j.value("spline_df", 0);
  }
  return mf;
}

void save_model(const ModelFile& mf, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  out << serialize_model(mf);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace rumboost
