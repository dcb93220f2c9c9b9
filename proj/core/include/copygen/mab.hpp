#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "copygen/model.hpp"

// Seeded Bernoulli bandit simulator for comparing copy variants offline.
namespace copygen::mab {

class InvalidScenario : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Policy { thompson, epsilon_greedy };

struct ArmSpec {
  std::string arm_id;
  double true_ctr = 0;
};

struct Scenario {
  std::vector<ArmSpec> arms;
  long long horizon = 0;  // impressions
  long long batch = 1;    // posterior update interval
  std::uint64_t seed = 0;
  Policy policy = Policy::thompson;
  double epsilon = 0.1;
  std::optional<std::string> control_arm;  // defaults to the first arm
  double confidence = 0.95;                // P(best) needed to declare a winner
  long long trace_every = 0;               // 0 = horizon / 100
};

struct ArmStats {
  std::string arm_id;
  double prior_alpha = 1;
  double prior_beta = 1;
  long long successes = 0;  // clicks folded into the posterior
  long long failures = 0;   // non-clicks folded into the posterior
  long long impressions = 0;
  long long clicks = 0;
  long long final_decile_impressions = 0;
  double prob_best = 0;

  double posterior_alpha() const { return prior_alpha + static_cast<double>(successes); }
  double posterior_beta() const { return prior_beta + static_cast<double>(failures); }
  double posterior_mean() const { return posterior_alpha() / (posterior_alpha() + posterior_beta()); }
  double empirical_ctr() const {
    return impressions ? static_cast<double>(clicks) / static_cast<double>(impressions) : 0.0;
  }
};

struct TracePoint {
  long long t = 0;
  std::vector<long long> impressions;  // cumulative per arm
};

struct SimReport {
  Scenario scenario;
  std::vector<ArmStats> arms;
  std::string best_arm;  // highest posterior mean
  std::string control_arm;
  /// Relative CTR lift (percent) of the best non-control arm over control;
  /// absent when there is no such arm or control never clicked.
  std::optional<double> lift_pct;
  std::string lift_arm;
  /// Arm whose P(best) reached the configured confidence.
  std::optional<std::string> winner;
  std::vector<TracePoint> trace;

  double final_decile_share(const std::string& arm_id) const;
};

/// Throws InvalidScenario unless 0 <= true_ctr <= 1, arm ids are unique and
/// non-empty, and horizon >= batch >= 1.
void validate(const Scenario& scenario);

/// Per impression: draw from every arm's posterior (or explore, for
/// epsilon-greedy), serve the argmax, draw a click from true_ctr. Posteriors
/// absorb the pending batch at every batch boundary and at the end.
SimReport simulate(const Scenario& scenario);

/// Trace as CSV: "t,<arm_id>,..." then one row per point.
std::string trace_csv(const SimReport& report);

/// Portable samplers over mt19937_64 so reports are identical across
/// standard libraries.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  double uniform();  // [0, 1)
  double normal();
  double gamma(double shape);
  double beta(double a, double b);
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 rng_;
  std::optional<double> spare_normal_;
};

void to_json(Json& j, const Policy& v);
void from_json(const Json& j, Policy& v);
void to_json(Json& j, const ArmSpec& v);
void from_json(const Json& j, ArmSpec& v);
void to_json(Json& j, const Scenario& v);
void from_json(const Json& j, Scenario& v);
void to_json(Json& j, const ArmStats& v);
void to_json(Json& j, const SimReport& v);

Scenario load_scenario(const std::string& path);

}  // namespace copygen::mab
