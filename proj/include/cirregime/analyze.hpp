#ifndef CIRREGIME_ANALYZE_HPP
#define CIRREGIME_ANALYZE_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "cirregime/classify.hpp"
#include "cirregime/model.hpp"
#include "cirregime/simulate.hpp"

namespace cirregime {

/// Terminal draws of an ensemble run to `horizon` = 2 x burn-in from an
/// overdispersed initializer (uniform regime, log-normal value). The
/// burn-in adequacy diagnostic is the KS distance between the snapshots at
/// burn-in and at the horizon.
struct StationarySample {
    std::vector<double> values;  ///< r at the horizon, all positive
    std::vector<int> regimes;
    double burn_in = 0;
    double horizon = 0;
    long n = 0;
    double burn_in_ks = 0;
};

/// 50 / min |a_i| over the nonzero speeds (50 when all vanish).
double default_burn_in(const ModelSpec& spec);

/// Requires a positive recurrent model.
StationarySample stationary_sample(const ModelSpec& spec, long n, double burn_in,
                                   std::uint64_t seed, int threads = 1);

/// Hill tail-index estimate from the top k order statistics
/// (k >= 10, k < n). Ties that zero the log-spacing average throw
/// DegenerateChainError.
double hill_estimator(const std::vector<double>& values, long k);
inline long default_hill_k(long n) { return static_cast<long>(std::sqrt(static_cast<double>(n))); }

struct HillSweep {
    std::vector<long> k;
    std::vector<double> estimate;
    bool divergent = false;  ///< no plateau: estimates keep growing as k shrinks
};
HillSweep hill_sweep(const std::vector<double>& values);

enum class ProbeVerdict { Stabilizing, Exploding, Indeterminate };
const char* to_string(ProbeVerdict v);

struct MomentProbe {
    struct Row {
        double p;
        long n;
        double estimate;
    };
    std::vector<Row> rows;  ///< p-major, n strictly increasing within each p
    std::vector<std::pair<double, ProbeVerdict>> verdicts;
};

/// Empirical p-th moments across nested prefixes of one stationary
/// ensemble. Growth by 10x or more from the smallest to the largest n
/// reads as exploding; last two estimates within 20% as stabilizing.
MomentProbe moment_explosion_probe(const ModelSpec& spec,
                                   const std::vector<double>& p_list,
                                   const std::vector<long>& n_list, double burn_in,
                                   std::uint64_t seed, int threads = 1);

struct ExpMomentProbe {
    double delta = 0;
    double estimate = 0;      ///< may overflow to +inf; see log_estimate
    double log_estimate = 0;  ///< log E[exp(delta r)], log-sum-exp accumulated
    ProbeVerdict verdict = ProbeVerdict::Indeterminate;
    std::vector<std::pair<long, double>> log_by_n;
};

/// Empirical exponential moment E[exp(delta r)] with the same nested
/// stabilization test (delta >= 0).
ExpMomentProbe exp_moment_probe(const ModelSpec& spec, double delta, long n,
                                double burn_in, std::uint64_t seed,
                                int threads = 1);

struct ErgodicAverage {
    double value = 0;
    double top_fraction = 0;  ///< share of the integral carried by the top 1% of |f|
    bool integrability_warning = false;
};

/// Trapezoidal time average of f(r_t, regime_t) along one long path on a
/// uniform grid of step dt. Non-finite f values throw ContractError.
ErgodicAverage ergodic_average(const ModelSpec& spec,
                               const std::function<double(double, int)>& f,
                               double horizon, std::uint64_t seed,
                               double dt = 0.01);

struct SandwichTable {
    double p = 0;
    double eta_p = 0;
    std::vector<double> t;
    std::vector<double> mc;      ///< estimates of E exp(-p int_0^t a)
    std::vector<double> theory;  ///< exp(-eta_p t)
    double fitted_slope = 0;     ///< log-slope of the MC column; should be near -eta_p
    double fitted_intercept = 0;
};

/// Monte-Carlo check that E exp(-p int_0^t a_regime ds) decays at rate
/// eta_p. The integral is exact per skeleton; accumulation is log-domain.
SandwichTable eta_sandwich_check(const ModelSpec& spec, double p,
                                 const std::vector<double>& t_grid, long n,
                                 std::uint64_t seed);

/// Two-sample Kolmogorov-Smirnov statistic with right-continuous step
/// CDFs (exact tie handling).
double ks_distance(std::vector<double> sample_a, std::vector<double> sample_b);

struct BesselCheckResult {
    double ks = 0;
    bool pass = false;
    double t = 0;
    long n = 0;
};

/// Distributional identity of the squared-Bessel representation: with a
/// shared skeleton per path, compare r(t) simulated directly against
/// rho(C(t))/ell(t) where rho is stepped exactly on the transformed clock.
/// Pass iff KS < 0.02.
BesselCheckResult bessel_time_change_check(const ModelSpec& spec, double t, long n,
                                           std::uint64_t seed);

struct TailReport {
    double hill_index = 0;
    long hill_k = 0;
    bool hill_divergent = false;
    MomentProbe moments;
    ExpMomentProbe exp_probe;
    TailVerdict classifier;
    bool verdict_consistency = false;
    bool low_n_warning = false;
};

/// Full empirical tail study confronted with the classifier's verdict.
/// delta < 0 selects the default probe level (delta_max/2 when light,
/// 0.25 otherwise).
TailReport tail_report(const ModelSpec& spec, long n, double burn_in,
                       const std::vector<double>& p_list, double delta,
                       std::uint64_t seed, int threads = 1);

} // namespace cirregime

#endif
