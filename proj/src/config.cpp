#include "dynreg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dynreg/errors.hpp"

namespace dynreg {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw PreconditionError("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw PreconditionError("config: unknown key '" + it.key() + "' in " + where);
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

InclusionSpec parse_inclusion(const json& j) {
  only_keys(j, {"orbit_radius", "start_angle", "sweep", "radius", "value", "absent_from", "absent_until"}, "inclusion");
  InclusionSpec s;
  get(j, "orbit_radius", s.orbit_radius);
  get(j, "start_angle", s.start_angle);
  get(j, "sweep", s.sweep);
  get(j, "radius", s.radius);
  get(j, "value", s.value);
  get(j, "absent_from", s.absent_from);
  get(j, "absent_until", s.absent_until);
  return s;
}

}  // namespace

RunConfig RunConfig::linear_default() { return RunConfig{}; }

RunConfig RunConfig::eit_default() {
  RunConfig c;
  c.mode = Mode::eit;
  c.frames = 100;
  c.scenario = ScenarioSpec::two_inclusions(101, 70);
  c.deltas = {0.1, 0.01};
  c.step = StepParams{0.0053, 10.0};
  c.run_batch = false;
  return c;
}

void RunConfig::validate() const {
  scenario.validate();
  if (frames < 1) throw PreconditionError("frames must be >= 1");
  if (frames + 1 > scenario.total_frames)
    throw PreconditionError("frames exceed the scenario's total_frames - 1");
  if (deltas.empty()) throw PreconditionError("at least one noise level required");
  for (double d : deltas)
    if (!(d > 0.0)) throw PreconditionError("noise levels must be positive");
  if (!(box_lower < box_upper)) throw PreconditionError("box needs lower < upper");
  if (!(eta > 0.0)) throw PreconditionError("eta must be positive");
  if (!(step.tau > 0.0) || !(step.s > 0.0)) throw PreconditionError("step sizes must be positive");
  if (linear.grid < 4 || !(linear.precision > 0.0)) throw PreconditionError("invalid linear settings");
  if (eit.rings < 1 || eit.electrodes < 2 || !(eit.zeta > 0.0) || !(eit.precision > 0.0))
    throw PreconditionError("invalid EIT settings");
}

const char* to_string(Mode m) { return m == Mode::linear ? "linear" : "eit"; }

Mode mode_from_string(const std::string& s) {
  if (s == "linear") return Mode::linear;
  if (s == "eit") return Mode::eit;
  throw PreconditionError("unknown mode '" + s + "'");
}

PrimalPredictor primal_from_string(const std::string& s) {
  if (s == "zero_motion") return PrimalPredictor::zero_motion;
  if (s == "known_flow_translation") return PrimalPredictor::known_flow_translation;
  if (s == "optical_flow") return PrimalPredictor::optical_flow;
  throw PreconditionError("unknown primal predictor '" + s + "'");
}

DualPredictor dual_from_string(const std::string& s) {
  if (s == "identity") return DualPredictor::identity;
  if (s == "zero") return DualPredictor::zero;
  if (s == "affine_scaling") return DualPredictor::affine_scaling;
  throw PreconditionError("unknown dual predictor '" + s + "'");
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw PreconditionError(std::string("config: ") + e.what());
  }
  RunConfig c = base;
  try {
    only_keys(j,
              {"mode", "frames", "seed", "noise", "out", "scenario", "noise_spec", "alpha", "predictor", "step", "box",
               "eta", "run_batch", "linear", "eit"},
              "top level");
    if (j.contains("mode")) {
      const Mode m = mode_from_string(j.at("mode").get<std::string>());
      if (m != c.mode) c = m == Mode::eit ? RunConfig::eit_default() : RunConfig::linear_default();
    }
    get(j, "frames", c.frames);
    get(j, "seed", c.seed);
    get(j, "noise", c.deltas);
    get(j, "out", c.out_dir);
    get(j, "eta", c.eta);
    get(j, "run_batch", c.run_batch);
    if (j.contains("scenario")) {
      const json& s = j.at("scenario");
      only_keys(s, {"ramp_frames", "total_frames", "background", "domain_radius", "inclusions"}, "scenario");
      get(s, "ramp_frames", c.scenario.ramp_frames);
      get(s, "total_frames", c.scenario.total_frames);
      get(s, "background", c.scenario.background);
      get(s, "domain_radius", c.scenario.domain_radius);
      if (s.contains("inclusions")) {
        c.scenario.inclusions.clear();
        for (const auto& inc : s.at("inclusions")) c.scenario.inclusions.push_back(parse_inclusion(inc));
      }
    }
    if (j.contains("noise_spec")) {
      const json& n = j.at("noise_spec");
      only_keys(n, {"q", "c_prime", "c_cal"}, "noise_spec");
      get(n, "q", c.noise.q);
      get(n, "c_prime", c.noise.c_prime);
      get(n, "c_cal", c.noise.c_cal);
    }
    if (j.contains("alpha")) {
      const json& a = j.at("alpha");
      only_keys(a, {"rule", "value", "table"}, "alpha");
      const std::string rule = a.value("rule", std::string("log_delta"));
      if (rule == "log_delta") {
        c.schedule.rule = ScheduleRule::log_delta;
      } else if (rule == "constant") {
        c.schedule.rule = ScheduleRule::constant;
        get(a, "value", c.schedule.constant_alpha);
      } else if (rule == "table") {
        c.schedule.rule = ScheduleRule::table;
        c.schedule.table.clear();
        for (const auto& row : a.at("table")) c.schedule.table.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
      } else {
        throw PreconditionError("config: unknown alpha rule '" + rule + "'");
      }
    }
    if (j.contains("predictor")) {
      const json& p = j.at("predictor");
      only_keys(p, {"primal", "dual", "flow_sweeps", "flow_smoothness", "flow_raster"}, "predictor");
      if (p.contains("primal")) c.predictor.primal = primal_from_string(p.at("primal").get<std::string>());
      if (p.contains("dual")) c.predictor.dual = dual_from_string(p.at("dual").get<std::string>());
      get(p, "flow_sweeps", c.predictor.flow.sweeps);
      get(p, "flow_smoothness", c.predictor.flow.smoothness);
      get(p, "flow_raster", c.predictor.flow_raster);
    }
    if (j.contains("step")) {
      const json& s = j.at("step");
      only_keys(s, {"tau", "s"}, "step");
      get(s, "tau", c.step.tau);
      get(s, "s", c.step.s);
    }
    if (j.contains("box")) {
      const auto b = j.at("box").get<std::vector<double>>();
      if (b.size() != 2) throw PreconditionError("config: box must be [lower, upper]");
      c.box_lower = b[0];
      c.box_upper = b[1];
    }
    if (j.contains("linear")) {
      const json& l = j.at("linear");
      only_keys(l, {"grid", "precision", "blur_sigma", "blur_size"}, "linear");
      get(l, "grid", c.linear.grid);
      get(l, "precision", c.linear.precision);
      get(l, "blur_sigma", c.linear.blur_sigma);
      get(l, "blur_size", c.linear.blur_size);
    }
    if (j.contains("eit")) {
      const json& e = j.at("eit");
      only_keys(e, {"rings", "electrodes", "coverage", "zeta", "precision"}, "eit");
      get(e, "rings", c.eit.rings);
      get(e, "electrodes", c.eit.electrodes);
      get(e, "coverage", c.eit.coverage);
      get(e, "zeta", c.eit.zeta);
      get(e, "precision", c.eit.precision);
    }
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

}  // namespace dynreg
