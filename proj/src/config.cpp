#include "seqcoord/config.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "seqcoord/errors.hpp"

namespace seqcoord {

using nlohmann::json;

namespace {

std::string join(const std::string& where, const std::string& name) { return where.empty() ? name : where + "." + name; }

const json& field(const json& obj, const std::string& name, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("field '" + where + "' must be an object");
  const auto it = obj.find(name);
  if (it == obj.end()) throw ConfigError("missing field '" + join(where, name) + "'");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError("field '" + where + "' must be a number");
  return j.get<double>();
}

std::int64_t integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError("field '" + where + "' must be an integer");
  return j.get<std::int64_t>();
}

Eigen::VectorXd vector_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError("field '" + where + "' must be a non-empty array of numbers");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Eigen::MatrixXd matrix_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError("field '" + where + "' must be a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Eigen::MatrixXd m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string row_where = where + "[" + std::to_string(r) + "]";
    const Eigen::VectorXd row = vector_of(j[r], row_where);
    if (static_cast<std::size_t>(row.size()) != cols) throw ConfigError("field '" + row_where + "' has the wrong length");
    m.row(static_cast<Index>(r)) = row.transpose();
  }
  return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Alphabet alphabet_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError("field '" + where + "' must be a non-empty list of labels");
  std::vector<std::string> labels;
  for (const auto& e : j) {
    if (!e.is_string()) throw ConfigError("field '" + where + "' must contain strings");
    labels.push_back(e.get<std::string>());
  }
  try {
    return Alphabet(std::move(labels));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("field '" + where + "': " + e.what());
  }
}

std::vector<MarkovKernel> factors_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError("field '" + where + "' must be a non-empty list of matrices");
  std::vector<MarkovKernel> out;
  for (std::size_t t = 0; t < j.size(); ++t) {
    const std::string w = where + "[" + std::to_string(t) + "]";
    try {
      out.emplace_back(matrix_of(j[t], w));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("field '" + w + "': " + e.what());
    }
  }
  return out;
}

template <typename Fn>
auto checked(const std::string& where, Fn fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("field '" + where + "': " + e.what());
  }
}

SourceLaw source_of(const json& j, Index states, int horizon) {
  const std::string where = "source";
  const json& kind = field(j, "kind", where);
  if (kind == "iid") {
    const Eigen::VectorXd p = vector_of(field(j, "marginal", where), "source.marginal");
    if (p.size() != states) throw ConfigError("field 'source.marginal' must have one entry per state");
    return checked(where, [&] { return SourceLaw::iid(Distribution(p), horizon); });
  }
  if (kind == "factors") {
    auto f = factors_of(field(j, "factors", where), "source.factors");
    if (static_cast<int>(f.size()) != horizon) throw ConfigError("field 'source.factors' must have one factor per step");
    return checked(where, [&] { return SourceLaw(states, std::move(f)); });
  }
  throw ConfigError("field 'source.kind' must be \"iid\" or \"factors\"");
}

DirectedKernel policy_of(const json& j, Index states, Index actions, int horizon) {
  const std::string where = "policy";
  const json& kind = field(j, "kind", where);
  DirectedKernel k = [&] {
    if (kind == "memoryless") {
      const Eigen::MatrixXd m = matrix_of(field(j, "kernel", where), "policy.kernel");
      return checked(where, [&] { return DirectedKernel::memoryless(MarkovKernel(m), horizon); });
    }
    if (kind == "factors") {
      auto f = factors_of(field(j, "factors", where), "policy.factors");
      if (static_cast<int>(f.size()) != horizon) throw ConfigError("field 'policy.factors' must have one factor per step");
      return checked(where, [&] { return DirectedKernel(states, actions, std::move(f)); });
    }
    throw ConfigError("field 'policy.kind' must be \"memoryless\" or \"factors\"");
  }();
  if (k.states() != states || k.actions() != actions) throw ConfigError("field 'policy' does not match the alphabets");
  return k;
}

const json* optional_field(const json& obj, const std::string& name) {
  const auto it = obj.find(name);
  return it == obj.end() ? nullptr : &*it;
}

}  // namespace

FunctionClass function_class_from_json(const json& j, const std::string& where) {
  const json& kind = field(j, "kind", where);
  if (kind == "total_variation") return TotalVariation{};
  if (kind == "finite_table") {
    const json& fs = field(j, "functions", where);
    if (!fs.is_array() || fs.empty()) throw ConfigError("field '" + where + ".functions' must be a non-empty list");
    FiniteTable ft;
    for (std::size_t i = 0; i < fs.size(); ++i) ft.functions.push_back(matrix_of(fs[i], where + ".functions[" + std::to_string(i) + "]"));
    return ft;
  }
  if (kind == "cost_level_sets") return CostLevelSets{matrix_of(field(j, "cost", where), where + ".cost")};
  if (kind == "bounded_lipschitz") return BoundedLipschitz{matrix_of(field(j, "metric", where), where + ".metric")};
  throw ConfigError("field '" + where + ".kind' names an unknown function class");
}

json to_json(const FunctionClass& fc) {
  json j{{"kind", kind_name(fc)}};
  if (const auto* ft = std::get_if<FiniteTable>(&fc)) {
    j["functions"] = json::array();
    for (const auto& f : ft->functions) j["functions"].push_back(matrix_json(f));
  } else if (const auto* c = std::get_if<CostLevelSets>(&fc)) {
    j["cost"] = matrix_json(c->cost);
  } else if (const auto* b = std::get_if<BoundedLipschitz>(&fc)) {
    j["metric"] = matrix_json(b->metric);
  }
  return j;
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                      e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  const json& schema = field(root, "schema", "");
  if (schema != kSchema) throw ConfigError(std::string("field 'schema' must be \"") + kSchema + "\"");

  Alphabet states = alphabet_of(field(root, "states", ""), "states");
  Alphabet actions = alphabet_of(field(root, "actions", ""), "actions");
  const std::int64_t horizon = integer(field(root, "horizon", ""), "horizon");
  if (horizon < 1 || horizon > 16) throw ConfigError("field 'horizon' must be in [1, 16]");
  const int T = static_cast<int>(horizon);
  SourceLaw source = source_of(field(root, "source", ""), states.size(), T);
  DirectedKernel policy = policy_of(field(root, "policy", ""), states.size(), actions.size(), T);
  FunctionClass fc = function_class_from_json(field(root, "function_class", ""), "function_class");
  const double delta = number(field(root, "delta", ""), "delta");
  RdInstance instance{std::move(source), std::move(policy), std::move(fc), delta};
  checked("function_class", [&] {
    validate(instance.fc, states.size(), actions.size());
    return 0;
  });
  checked("delta", [&] {
    validate(instance);
    return 0;
  });

  ExperimentConfig exp{std::move(instance), {}};
  if (const json* e = optional_field(root, "experiment")) {
    if (!e->is_object()) throw ConfigError("field 'experiment' must be an object");
    const std::string w = "experiment";
    if (const json* v = optional_field(*e, "n_ladder")) {
      if (!v->is_array()) throw ConfigError("field 'experiment.n_ladder' must be an array");
      for (std::size_t i = 0; i < v->size(); ++i) {
        exp.n_ladder.push_back(static_cast<int>(integer((*v)[i], "experiment.n_ladder[" + std::to_string(i) + "]")));
      }
    }
    if (const json* v = optional_field(*e, "epsilon")) exp.epsilon = number(*v, "experiment.epsilon");
    if (const json* v = optional_field(*e, "trials")) exp.trials = static_cast<int>(integer(*v, "experiment.trials"));
    if (const json* v = optional_field(*e, "seed")) {
      if (!v->is_number_unsigned()) throw ConfigError("field 'experiment.seed' must be a nonnegative integer");
      exp.seed = v->get<std::uint64_t>();
    }
    if (const json* v = optional_field(*e, "entropy_mode")) {
      if (*v == "exact") {
        exp.entropy_mode = EntropyMode::exact;
      } else if (*v == "plugin") {
        exp.entropy_mode = EntropyMode::plugin;
      } else {
        throw ConfigError("field 'experiment.entropy_mode' must be \"exact\" or \"plugin\"");
      }
    }
    if (const json* v = optional_field(*e, "reference_draws")) {
      exp.reference_draws = static_cast<int>(integer(*v, "experiment.reference_draws"));
    }
    if (const json* v = optional_field(*e, "branch_cap")) exp.branch_cap = integer(*v, "experiment.branch_cap");
    if (const json* v = optional_field(*e, "clamp_branches")) {
      if (!v->is_boolean()) throw ConfigError("field 'experiment.clamp_branches' must be a boolean");
      exp.clamp_branches = v->get<bool>();
    }
    if (const json* v = optional_field(*e, "threads")) exp.threads = static_cast<int>(integer(*v, "experiment.threads"));
    if (!exp.n_ladder.empty()) {
      checked(w, [&] {
        validate(exp);
        return 0;
      });
    }
  }

  RunConfig cfg{std::move(states), std::move(actions), std::move(exp), {}, std::nullopt};
  if (const json* b = optional_field(root, "bounds")) {
    if (!b->is_object()) throw ConfigError("field 'bounds' must be an object");
    if (const json* v = optional_field(*b, "snr")) {
      const Eigen::VectorXd s = vector_of(*v, "bounds.snr");
      for (Index i = 0; i < s.size(); ++i) {
        if (!(s[i] >= 0.0)) throw ConfigError("field 'bounds.snr' must be nonnegative");
        cfg.snr.push_back(s[i]);
      }
    }
    if (const json* v = optional_field(*b, "action_metric")) {
      Eigen::MatrixXd m = matrix_of(*v, "bounds.action_metric");
      if (m.rows() != cfg.actions.size() || m.cols() != cfg.actions.size()) {
        throw ConfigError("field 'bounds.action_metric' must be |U| x |U|");
      }
      checked("bounds.action_metric", [&] {
        validate_metric(m);
        return 0;
      });
      cfg.action_metric = std::move(m);
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json to_json(const DirectedKernel& kernel) {
  json f = json::array();
  for (const auto& k : kernel.factors()) f.push_back(matrix_json(k.matrix()));
  return f;
}

json to_json(const RunConfig& config) {
  const ExperimentConfig& e = config.experiment;
  const RdInstance& inst = e.instance;
  json source = json::array();
  for (const auto& k : inst.source.factors()) source.push_back(matrix_json(k.matrix()));
  json j{{"schema", kSchema},
         {"states", config.states.labels()},
         {"actions", config.actions.labels()},
         {"horizon", inst.source.horizon()},
         {"source", {{"kind", "factors"}, {"factors", source}}},
         {"policy", {{"kind", "factors"}, {"factors", to_json(inst.target_policy)}}},
         {"function_class", to_json(inst.fc)},
         {"delta", inst.delta},
         {"experiment",
          {{"n_ladder", e.n_ladder},
           {"epsilon", e.epsilon},
           {"trials", e.trials},
           {"seed", e.seed},
           {"entropy_mode", mode_name(e.entropy_mode)},
           {"reference_draws", e.reference_draws},
           {"branch_cap", e.branch_cap},
           {"clamp_branches", e.clamp_branches},
           {"threads", e.threads}}}};
  json bounds = json::object();
  if (!config.snr.empty()) bounds["snr"] = config.snr;
  if (config.action_metric) bounds["action_metric"] = matrix_json(*config.action_metric);
  if (!bounds.empty()) j["bounds"] = bounds;
  return j;
}

std::string config_hash(const RunConfig& config) {
  const std::string canonical = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json to_json(const RunManifest& m) {
  return json{{"config_hash", m.config_hash},
              {"tool_version", m.tool_version},
              {"seed", m.seed},
              {"timestamps", {{"start", m.started}, {"end", m.finished}}}};
}

json to_json(const RdSolution& s) {
  return json{{"rate", s.rate},
              {"achieved_constraint", s.achieved_constraint},
              {"argmin_policy", to_json(s.argmin_policy)},
              {"report",
               {{"iterations", s.report.iterations},
                {"residual", s.report.residual},
                {"converged", s.report.converged},
                {"method", s.report.method}}}};
}

json to_json(const ExperimentResult& result) {
  json records = json::array();
  for (const BlockRecord& r : result.records) {
    json rec{{"N", r.block},
             {"trials", r.trials},
             {"distortion_mean", r.distortion_mean},
             {"distortion_se", r.distortion_se},
             {"entropy_norm", r.entropy_norm},
             {"entropy_mode", mode_name(r.entropy_mode)},
             {"rate_ref", r.rate_ref},
             {"entropy_cap", r.entropy_cap},
             {"error_rate", r.error_rate},
             {"branch_counts", r.params.branch_counts},
             {"thresholds", r.params.thresholds},
             {"delta_hat", r.params.delta_hat},
             {"per_step_rate", r.params.per_step_rate},
             {"effective_epsilon", r.params.effective_epsilon},
             {"capped", r.params.capped}};
    if (r.entropy_mode == EntropyMode::plugin) rec["entropy_bias_note"] = r.entropy_bias;
    if (r.distortion_exact) {
      rec["distortion_exact"] = *r.distortion_exact;
      rec["step_entropy"] = r.step_entropy;
    }
    records.push_back(std::move(rec));
  }
  return json{{"rate_ref", result.rate_ref}, {"coding_policy", to_json(result.coding_policy)}, {"records", records}};
}

std::string results_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "N,trials,distortion_mean,distortion_se,entropy_norm,entropy_mode,rate_ref,entropy_cap\n";
  for (const BlockRecord& r : result.records) {
    os << r.block << ',' << r.trials << ',' << r.distortion_mean << ',' << r.distortion_se << ',' << r.entropy_norm << ','
       << mode_name(r.entropy_mode) << ',' << r.rate_ref << ',' << r.entropy_cap << '\n';
  }
  return os.str();
}

json codebook_to_json(const TreeCodebook& codebook, const Alphabet& actions) {
  TreeCodebook copy = codebook;
  copy.materialize();
  json nodes = json::object();
  for (const auto& [path, tuple] : copy.stored()) {
    std::string key;
    for (std::size_t i = 0; i < path.size(); ++i) key += (i ? "." : "") + std::to_string(path[i]);
    json labels = json::array();
    for (int u : tuple) labels.push_back(actions.label(u));
    nodes[key] = std::move(labels);
  }
  json error = json::array();
  for (int u : codebook.error_word()) error.push_back(actions.label(u));
  return json{{"schema", kSchema},
              {"horizon", codebook.horizon()},
              {"block", codebook.block()},
              {"seed", codebook.seed()},
              {"branch_counts", codebook.branch_counts()},
              {"error_word", error},
              {"nodes", nodes}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace seqcoord
