#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "haarwalk/measure.hpp"

namespace haarwalk {

/// Assigns a step distribution to every time n >= 1, drawn from a finite
/// family: an explicit index list, a cyclic pattern, or a seeded choice
/// (derived per n from the choice seed, so the assignment is stable under
/// any evaluation order).
struct WalkSchedule {
    enum class Rule { Explicit, Cyclic, SeededChoice };

    MeasureFamily family;
    Rule rule = Rule::Cyclic;
    std::vector<std::size_t> indices;  // Explicit list or Cyclic pattern
    std::uint64_t choice_seed = 0;

    static WalkSchedule explicit_list(MeasureFamily family, std::vector<std::size_t> indices);
    static WalkSchedule cyclic(MeasureFamily family, std::vector<std::size_t> pattern);
    static WalkSchedule seeded(MeasureFamily family, std::uint64_t seed);

    std::size_t index_at(std::int64_t n) const;  // n >= 1
    const AtomicMeasure& step(std::int64_t n) const { return family[index_at(n)]; }
    /// Materialize steps 1..n as a list (for exact pushforwards).
    std::vector<AtomicMeasure> materialize(std::int64_t n) const;
};

/// A bounded real observable on the group.
struct Observable {
    enum class Kind { Character, Table, Lipschitz };

    Kind kind = Kind::Character;
    /// Character: cos(2*pi*<k, x>) with frequencies k per coordinate
    /// (finite coordinates scale by their modulus). Bounded by 1; the trivial
    /// character (all k = 0 mod m) integrates to 1, all others to 0.
    std::vector<std::int64_t> frequencies;
    /// Table: one value per finite-group element, indexed by element index.
    std::vector<double> table;
    /// Lipschitz: arbitrary torus function with a declared constant.
    std::function<double(const GroupElement&)> fn;
    double lipschitz_constant = 0.0;

    static Observable character(std::vector<std::int64_t> frequencies);
    static Observable custom_table(std::vector<double> values);
    static Observable lipschitz(std::function<double(const GroupElement&)> fn, double constant);

    double eval(const GroupDescriptor& g, const GroupElement& x) const;
    bool is_trivial_character(const GroupDescriptor& g) const;
};

struct TrialReport {
    std::uint64_t root_seed = 0;
    std::uint64_t trial_index = 0;
    std::int64_t n = 0;
    double birkhoff = 0.0;
    double haar = 0.0;
    double deviation = 0.0;      // |birkhoff - haar|
    double wall_seconds = 0.0;   // informational; never serialized
};

/// Stream the Birkhoff average (1/n) sum_{k=0}^{n-1} phi(x0 + a_1 + ... + a_k)
/// with independent a_j drawn from the scheduled step measures. The trial's
/// random stream is derived from (root_seed, trial_index).
TrialReport simulate_birkhoff(const GroupElement& x0, const WalkSchedule& sched,
                              const Observable& phi, std::int64_t n, std::uint64_t root_seed,
                              std::uint64_t trial_index = 0);

/// Exact Haar integral where closed forms exist (characters, tables); for
/// Lipschitz torus observables a midpoint quadrature with a certified error
/// bound. Returns (value, error_bound).
std::pair<double, double> haar_integral(const Observable& phi, const GroupDescriptor& g);

/// Exact distributions nu_1..nu_n of the walk started from nu0.
std::vector<AtomicMeasure> distribution_pushforward(const WalkSchedule& sched,
                                                    const AtomicMeasure& nu0, std::int64_t n,
                                                    std::size_t atom_cap = kDefaultAtomCap);

/// (1/n) sum_{k=0}^{n-1} integral of phi against nu_k (nu_0 included).
double birkhoff_mean_of_integrals(const WalkSchedule& sched, const AtomicMeasure& nu0,
                                  const Observable& phi, std::int64_t n,
                                  std::size_t atom_cap = kDefaultAtomCap);

struct LdPoint {
    std::int64_t n = 0;
    std::int64_t hits = 0;
    std::int64_t trials = 0;
    double p_hat = 0.0;
    double ci_lo = 0.0;  // Wilson 95%
    double ci_hi = 0.0;
};

struct LdFit {
    bool ok = false;          // at least 3 usable (p_hat > 0) grid points
    double slope = 0.0;       // -delta_hat
    double intercept = 0.0;   // log C_hat
    double slope_stderr = 0.0;
    double r_squared = 0.0;
    int points_used = 0;
    std::string note;
};

struct LdTailResult {
    std::vector<LdPoint> points;
    LdFit fit;
};

/// Estimate the deviation tail P(|birkhoff - haar| > eps) on a grid of n,
/// with Wilson 95% intervals and a weighted least-squares fit of log p vs n.
/// Trials are independent work items; results aggregate by trial index, so
/// the output is identical for any worker count.
LdTailResult ld_tail_estimate(const WalkSchedule& sched, const Observable& phi,
                              const GroupElement& x0, double eps,
                              const std::vector<std::int64_t>& n_grid, std::int64_t trials,
                              std::uint64_t root_seed, int threads = 1);

/// Wilson 95% score interval for a binomial proportion.
std::pair<double, double> wilson_interval(std::int64_t hits, std::int64_t trials);

/// Run fn(trial) for trial in [0, trials) on a small worker pool; results
/// land in a vector indexed by trial.
std::vector<double> run_trials(std::int64_t trials, int threads,
                               const std::function<double(std::int64_t)>& fn);

}  // namespace haarwalk
