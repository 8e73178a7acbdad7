#include "hazard/serialize.hpp"

#include <fstream>
#include <utility>
#include <vector>

#include "hazard/error.hpp"
#include "hazard/version.hpp"

namespace hazard {

namespace {

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& a) {
  if (!a.is_array()) throw input_error("model file: expected a number array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = a.at(i).get<double>();
  return v;
}

nlohmann::json tree_nodes_to_json(const std::vector<TreeNode>& nodes,
                                  bool leaf_payload) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : nodes) {
    nlohmann::json jn = {{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right}};
    if (leaf_payload && n.feature < 0) {
      jn["samples"] = n.samples;
      jn["chf"] = step_to_json(n.chf);
      jn["km"] = step_to_json(n.km);
      jn["mortality"] = n.mortality;
      jn["km_area"] = n.km_area;
    }
    arr.push_back(std::move(jn));
  }
  return arr;
}

std::vector<TreeNode> tree_nodes_from_json(const nlohmann::json& arr,
                                           bool leaf_payload) {
  std::vector<TreeNode> nodes;
  nodes.reserve(arr.size());
  for (const auto& jn : arr) {
    TreeNode n;
    n.feature = jn.at("feature").get<int>();
    n.threshold = jn.at("threshold").get<double>();
    n.left = jn.at("left").get<int>();
    n.right = jn.at("right").get<int>();
    if (leaf_payload && n.feature < 0) {
      n.samples = jn.at("samples").get<std::vector<std::size_t>>();
      n.chf = step_from_json(jn.at("chf"));
      n.km = step_from_json(jn.at("km"));
      n.mortality = jn.at("mortality").get<double>();
      n.km_area = jn.at("km_area").get<double>();
    }
    nodes.push_back(std::move(n));
  }
  return nodes;
}

nlohmann::json payload_of(const AnyModel& model) {
  nlohmann::json p;
  const auto& impl = model.impl();
  if (const auto* m = std::get_if<CoxModel>(&impl)) {
    p["beta"] = vec_to_json(m->coefficients());
    p["feature_means"] = vec_to_json(m->feature_means());
    p["baseline_cumhaz"] = step_to_json(m->baseline_cumhaz());
    p["convergence"] = {{"iterations", m->convergence().iterations},
                        {"grad_norm", m->convergence().grad_norm},
                        {"monotone_likelihood", m->convergence().monotone_likelihood}};
  } else if (const auto* m = std::get_if<AalenModel>(&impl)) {
    nlohmann::json cum = nlohmann::json::array();
    for (const auto& f : m->cumulative_coeffs()) cum.push_back(step_to_json(f));
    p["cumulative_coeffs"] = std::move(cum);
    p["risk_eval_time"] = m->risk_eval_time();
  } else if (const auto* m = std::get_if<WeibullAftModel>(&impl)) {
    p["intercept"] = m->intercept();
    p["coefficients"] = vec_to_json(m->coefficients());
    p["shape"] = m->shape();
  } else if (const auto* m = std::get_if<SurvivalForest>(&impl)) {
    const auto& o = m->options();
    p["variant"] = o.variant == ForestVariant::ensemble_chf ? "ensemble_chf"
                                                            : "adaptive_nn_km";
    p["n_trees"] = o.n_trees;
    p["mtry"] = o.mtry;
    p["min_leaf_size"] = o.min_leaf_size;
    p["max_depth"] = o.max_depth;
    p["master_seed"] = m->master_seed();
    p["event_grid"] = m->event_grid();
    p["horizon"] = m->horizon();
    p["dropped_trees"] = m->dropped_trees();
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : m->trees())
      trees.push_back({{"seed", t.rng_seed()},
                       {"nodes", tree_nodes_to_json(t.nodes(), true)}});
    p["trees"] = std::move(trees);
  } else if (const auto* m = std::get_if<BoostedCoxModel>(&impl)) {
    p["learning_rate"] = m->learning_rate();
    p["stage_losses"] = m->stage_losses();
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& t : m->stages())
      stages.push_back({{"nodes", tree_nodes_to_json(t.nodes(), false)},
                        {"leaf_values", t.leaf_values()}});
    p["stages"] = std::move(stages);
  } else if (const auto* m = std::get_if<DeepSurvModel>(&impl)) {
    p["activation"] = m->activation() == Activation::relu ? "relu" : "tanh";
    p["l2"] = m->l2_lambda();
    p["init_seed"] = m->init_seed();
    p["stats"] = {{"epochs_run", m->train_stats().epochs_run},
                  {"final_loss", m->train_stats().final_loss}};
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : m->layers()) {
      nlohmann::json w = nlohmann::json::array();  // row-major
      for (Eigen::Index r = 0; r < l.w.rows(); ++r)
        for (Eigen::Index c = 0; c < l.w.cols(); ++c) w.push_back(l.w(r, c));
      layers.push_back({{"rows", l.w.rows()}, {"cols", l.w.cols()},
                        {"w", std::move(w)}, {"b", vec_to_json(l.b)}});
    }
    p["layers"] = std::move(layers);
  } else {
    throw internal_error("model_to_json: unhandled model family");
  }
  return p;
}

AnyModel::Impl impl_from_payload(const std::string& tag, const nlohmann::json& p) {
  if (tag == "cox") {
    CoxConvergence conv;
    conv.iterations = p.at("convergence").at("iterations").get<int>();
    conv.grad_norm = p.at("convergence").at("grad_norm").get<double>();
    conv.monotone_likelihood =
        p.at("convergence").at("monotone_likelihood").get<bool>();
    return CoxModel(vec_from_json(p.at("beta")),
                    vec_from_json(p.at("feature_means")),
                    step_from_json(p.at("baseline_cumhaz")), conv);
  }
  if (tag == "aalen") {
    std::vector<StepFunction> cum;
    for (const auto& jf : p.at("cumulative_coeffs"))
      cum.push_back(step_from_json(jf));
    return AalenModel(std::move(cum), p.at("risk_eval_time").get<double>());
  }
  if (tag == "weibull") {
    return WeibullAftModel(p.at("intercept").get<double>(),
                           vec_from_json(p.at("coefficients")),
                           p.at("shape").get<double>());
  }
  if (tag == "rsf" || tag == "rsf_ann") {
    ForestOptions o;
    const std::string variant = p.at("variant").get<std::string>();
    if (variant == "ensemble_chf") o.variant = ForestVariant::ensemble_chf;
    else if (variant == "adaptive_nn_km") o.variant = ForestVariant::adaptive_nn_km;
    else throw input_error("model file: unknown forest variant '" + variant + "'");
    o.n_trees = p.at("n_trees").get<std::size_t>();
    o.mtry = p.at("mtry").get<std::size_t>();
    o.min_leaf_size = p.at("min_leaf_size").get<std::size_t>();
    o.max_depth = p.at("max_depth").get<std::size_t>();
    std::vector<SurvivalTree> trees;
    for (const auto& jt : p.at("trees"))
      trees.emplace_back(tree_nodes_from_json(jt.at("nodes"), true),
                         jt.at("seed").get<std::uint64_t>());
    return SurvivalForest(std::move(trees), o,
                          p.at("master_seed").get<std::uint64_t>(),
                          p.at("event_grid").get<std::vector<double>>(),
                          p.at("horizon").get<double>(),
                          p.at("dropped_trees").get<std::size_t>());
  }
  if (tag == "gbcox") {
    std::vector<RegressionTree> stages;
    for (const auto& jt : p.at("stages"))
      stages.emplace_back(tree_nodes_from_json(jt.at("nodes"), false),
                          jt.at("leaf_values").get<std::vector<double>>());
    return BoostedCoxModel(std::move(stages),
                           p.at("learning_rate").get<double>(),
                           p.at("stage_losses").get<std::vector<double>>());
  }
  if (tag == "deepsurv" || tag == "deepsurv_linear") {
    std::vector<DeepSurvLayer> layers;
    for (const auto& jl : p.at("layers")) {
      DeepSurvLayer l;
      const auto rows = jl.at("rows").get<Eigen::Index>();
      const auto cols = jl.at("cols").get<Eigen::Index>();
      const auto& w = jl.at("w");
      if (static_cast<Eigen::Index>(w.size()) != rows * cols)
        throw input_error("model file: layer weight size mismatch");
      l.w.resize(rows, cols);
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) l.w(r, c) = w.at(k++).get<double>();
      l.b = vec_from_json(jl.at("b"));
      if (l.b.size() != rows)
        throw input_error("model file: layer bias size mismatch");
      layers.push_back(std::move(l));
    }
    const std::string act = p.at("activation").get<std::string>();
    DeepSurvModel m(std::move(layers),
                    act == "tanh" ? Activation::tanh : Activation::relu,
                    p.at("l2").get<double>(),
                    p.at("init_seed").get<std::uint64_t>());
    DeepSurvTrainStats stats;
    stats.epochs_run = p.at("stats").at("epochs_run").get<std::size_t>();
    stats.final_loss = p.at("stats").at("final_loss").get<double>();
    m.set_train_stats(stats);
    return m;
  }
  throw input_error("model file: unknown model tag '" + tag + "'");
}

}  // namespace

nlohmann::json step_to_json(const StepFunction& f) {
  return {{"knots", f.knots()}, {"values", f.values()}, {"initial", f.initial()}};
}

StepFunction step_from_json(const nlohmann::json& j) {
  return StepFunction(j.at("knots").get<std::vector<double>>(),
                      j.at("values").get<std::vector<double>>(),
                      j.at("initial").get<double>());
}

nlohmann::json model_to_json(const AnyModel& model) {
  nlohmann::json j;
  j["format"] = "hazard-model";
  j["schema_version"] = kModelSchemaVersion;
  j["library_version"] = version_string;
  j["tag"] = model.tag();
  j["config"] = model.config();
  j["seed"] = model.seed();
  if (model.standardizer()) {
    j["standardizer"] = {{"mean", vec_to_json(model.standardizer()->mean)},
                         {"scale", vec_to_json(model.standardizer()->scale)}};
  } else {
    j["standardizer"] = nullptr;
  }
  j["payload"] = payload_of(model);
  return j;
}

AnyModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "hazard-model")
    throw input_error("model file: not a hazard model document");
  const int version = j.value("schema_version", -1);
  if (version != kModelSchemaVersion)
    throw input_error("model file: unsupported schema_version " +
                      std::to_string(version));
  try {
    const std::string tag = j.at("tag").get<std::string>();
    if (!is_model_tag(tag))
      throw input_error("model file: unknown tag '" + tag + "'");

    std::optional<Standardizer> standardizer;
    if (j.contains("standardizer") && !j.at("standardizer").is_null()) {
      Standardizer s;
      s.mean = vec_from_json(j.at("standardizer").at("mean"));
      s.scale = vec_from_json(j.at("standardizer").at("scale"));
      standardizer = std::move(s);
    }

    return AnyModel(tag, j.value("config", nlohmann::json::object()),
                    j.value("seed", std::uint64_t{0}), std::move(standardizer),
                    impl_from_payload(tag, j.at("payload")));
  } catch (const nlohmann::json::exception& e) {
    // Missing or mistyped fields surface as one malformed-document error.
    throw input_error(std::string("model file: malformed document: ") +
                      e.what());
  }
}

void save_model(const AnyModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot open for writing: " + path);
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw input_error("write failed: " + path);
}

AnyModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw input_error("model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace hazard
