#include "copygen/mab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace copygen::mab {

double Sampler::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

double Sampler::normal() {
  if (spare_normal_) {
    const double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * m;
  return u * m;
}

double Sampler::gamma(double shape) {
  if (shape < 1.0) {
    const double u = uniform();
    return gamma(shape + 1.0) * std::pow(u > 0 ? u : 0x1.0p-53, 1.0 / shape);
  }
  // Marsaglia and Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Sampler::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

std::size_t Sampler::index(std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

void validate(const Scenario& s) {
  if (s.arms.empty()) throw InvalidScenario("at least one arm is required");
  std::set<std::string> ids;
  for (const auto& a : s.arms) {
    if (a.arm_id.empty()) throw InvalidScenario("arm_id must not be empty");
    if (!ids.insert(a.arm_id).second) throw InvalidScenario("duplicate arm_id '" + a.arm_id + "'");
    if (!(a.true_ctr >= 0.0 && a.true_ctr <= 1.0)) throw InvalidScenario("true_ctr of " + a.arm_id + " outside [0,1]");
  }
  if (s.batch < 1) throw InvalidScenario("batch must be at least 1");
  if (s.horizon < s.batch) throw InvalidScenario("horizon must be at least batch");
  if (s.control_arm && !ids.contains(*s.control_arm)) throw InvalidScenario("unknown control_arm");
  if (!(s.epsilon >= 0.0 && s.epsilon <= 1.0)) throw InvalidScenario("epsilon outside [0,1]");
  if (!(s.confidence > 0.0 && s.confidence <= 1.0)) throw InvalidScenario("confidence outside (0,1]");
  if (s.trace_every < 0) throw InvalidScenario("trace_every must be non-negative");
}

double SimReport::final_decile_share(const std::string& arm_id) const {
  long long total = 0;
  long long mine = 0;
  for (const auto& a : arms) {
    total += a.final_decile_impressions;
    if (a.arm_id == arm_id) mine = a.final_decile_impressions;
  }
  return total ? static_cast<double>(mine) / static_cast<double>(total) : 0.0;
}

SimReport simulate(const Scenario& scenario) {
  validate(scenario);
  const std::size_t n = scenario.arms.size();
  SimReport report;
  report.scenario = scenario;
  for (const auto& a : scenario.arms) report.arms.push_back(ArmStats{a.arm_id});

  Sampler rng(scenario.seed);
  std::vector<long long> pending_clicks(n, 0);
  std::vector<long long> pending_misses(n, 0);
  auto flush = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      report.arms[i].successes += pending_clicks[i];
      report.arms[i].failures += pending_misses[i];
      pending_clicks[i] = pending_misses[i] = 0;
    }
  };
  const long long trace_every = scenario.trace_every ? scenario.trace_every : std::max(1LL, scenario.horizon / 100);
  const long long decile_start = scenario.horizon - scenario.horizon / 10;
  auto snapshot = [&](long long t) {
    TracePoint p{t, {}};
    for (const auto& a : report.arms) p.impressions.push_back(a.impressions);
    report.trace.push_back(std::move(p));
  };

  for (long long t = 0; t < scenario.horizon; ++t) {
    std::size_t arm = 0;
    if (scenario.policy == Policy::thompson) {
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double draw = rng.beta(report.arms[i].posterior_alpha(), report.arms[i].posterior_beta());
        if (draw > best) {
          best = draw;
          arm = i;
        }
      }
    } else if (rng.uniform() < scenario.epsilon) {
      arm = rng.index(n);
    } else {
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (report.arms[i].posterior_mean() > best) {
          best = report.arms[i].posterior_mean();
          arm = i;
        }
      }
    }
    auto& a = report.arms[arm];
    ++a.impressions;
    if (t >= decile_start) ++a.final_decile_impressions;
    if (rng.uniform() < scenario.arms[arm].true_ctr) {
      ++a.clicks;
      ++pending_clicks[arm];
    } else {
      ++pending_misses[arm];
    }
    if ((t + 1) % scenario.batch == 0) flush();
    if ((t + 1) % trace_every == 0) snapshot(t + 1);
  }
  flush();
  if (report.trace.empty() || report.trace.back().t != scenario.horizon) snapshot(scenario.horizon);

  // P(best) by Monte Carlo over the final posteriors, on its own stream.
  constexpr int kDraws = 10000;
  Sampler mc(scenario.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> wins(n, 0);
  for (int d = 0; d < kDraws; ++d) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double draw = mc.beta(report.arms[i].posterior_alpha(), report.arms[i].posterior_beta());
      if (draw > best) {
        best = draw;
        arg = i;
      }
    }
    ++wins[arg];
  }
  for (std::size_t i = 0; i < n; ++i) {
    report.arms[i].prob_best = static_cast<double>(wins[i]) / kDraws;
    if (n > 1 && report.arms[i].prob_best >= scenario.confidence) report.winner = report.arms[i].arm_id;
  }

  const auto by_mean = [](const ArmStats& x, const ArmStats& y) { return x.posterior_mean() < y.posterior_mean(); };
  report.best_arm = std::max_element(report.arms.begin(), report.arms.end(), by_mean)->arm_id;
  report.control_arm = scenario.control_arm.value_or(scenario.arms.front().arm_id);
  const ArmStats* control = nullptr;
  const ArmStats* challenger = nullptr;
  for (const auto& a : report.arms) {
    if (a.arm_id == report.control_arm) {
      control = &a;
    } else if (!challenger || a.posterior_mean() > challenger->posterior_mean()) {
      challenger = &a;
    }
  }
  if (challenger && control->clicks > 0) {
    report.lift_arm = challenger->arm_id;
    report.lift_pct = (challenger->empirical_ctr() / control->empirical_ctr() - 1.0) * 100.0;
  }
  return report;
}

std::string trace_csv(const SimReport& report) {
  std::ostringstream out;
  out << "t";
  for (const auto& a : report.arms) out << "," << a.arm_id;
  out << "\n";
  for (const auto& p : report.trace) {
    out << p.t;
    for (auto v : p.impressions) out << "," << v;
    out << "\n";
  }
  return out.str();
}

void to_json(Json& j, const Policy& v) { j = v == Policy::thompson ? "thompson" : "epsilon_greedy"; }

void from_json(const Json& j, Policy& v) {
  const auto s = j.get<std::string>();
  if (s == "thompson") {
    v = Policy::thompson;
  } else if (s == "epsilon_greedy") {
    v = Policy::epsilon_greedy;
  } else {
    throw InvalidScenario("unknown policy '" + s + "'");
  }
}

void to_json(Json& j, const ArmSpec& v) { j = Json{{"arm_id", v.arm_id}, {"true_ctr", v.true_ctr}}; }

void from_json(const Json& j, ArmSpec& v) {
  j.at("arm_id").get_to(v.arm_id);
  j.at("true_ctr").get_to(v.true_ctr);
}

void to_json(Json& j, const Scenario& v) {
  j = Json{{"arms", v.arms},          {"horizon", v.horizon}, {"batch", v.batch},
           {"seed", v.seed},          {"policy", v.policy},   {"epsilon", v.epsilon},
           {"confidence", v.confidence}, {"trace_every", v.trace_every}};
  if (v.control_arm) j["control_arm"] = *v.control_arm;
}

void from_json(const Json& j, Scenario& v) {
  j.at("arms").get_to(v.arms);
  j.at("horizon").get_to(v.horizon);
  v.batch = j.value("batch", 1LL);
  v.seed = j.value("seed", std::uint64_t{0});
  v.policy = j.value("policy", Policy::thompson);
  v.epsilon = j.value("epsilon", 0.1);
  v.confidence = j.value("confidence", 0.95);
  v.trace_every = j.value("trace_every", 0LL);
  if (j.contains("control_arm") && !j["control_arm"].is_null()) v.control_arm = j["control_arm"].get<std::string>();
}

void to_json(Json& j, const ArmStats& v) {
  j = Json{{"arm_id", v.arm_id},
           {"prior_alpha", v.prior_alpha},
           {"prior_beta", v.prior_beta},
           {"successes", v.successes},
           {"failures", v.failures},
           {"posterior_mean", v.posterior_mean()},
           {"impressions", v.impressions},
           {"clicks", v.clicks},
           {"empirical_ctr", v.empirical_ctr()},
           {"final_decile_impressions", v.final_decile_impressions},
           {"prob_best", v.prob_best}};
}

void to_json(Json& j, const SimReport& v) {
  Json shares = Json::object();
  for (const auto& a : v.arms) shares[a.arm_id] = v.final_decile_share(a.arm_id);
  Json trace = Json::array();
  for (const auto& p : v.trace) trace.push_back(Json{{"t", p.t}, {"impressions", p.impressions}});
  j = Json{{"scenario", v.scenario},
           {"arms", v.arms},
           {"best_arm", v.best_arm},
           {"control_arm", v.control_arm},
           {"lift_arm", v.lift_arm},
           {"lift_pct", v.lift_pct ? Json(*v.lift_pct) : Json(nullptr)},
           {"winner", v.winner ? Json(*v.winner) : Json(nullptr)},
           {"final_decile_share", shares},
           {"trace", trace}};
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scenario " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw InvalidScenario(path + ": " + e.what());
  }
  Scenario s;
  try {
    s = j.get<Scenario>();
  } catch (const Json::exception& e) {
    throw InvalidScenario(path + ": " + e.what());
  }
  validate(s);
  return s;
}

}  // namespace copygen::mab
