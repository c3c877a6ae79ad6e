#ifndef CIRREGIME_SIMULATE_HPP
#define CIRREGIME_SIMULATE_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "cirregime/model.hpp"
#include "cirregime/rng.hpp"

namespace cirregime {

/// Jump skeleton of the regime chain on [0, horizon]: tau_0 = 0 is
/// implicit, states[k] is the regime on the k-th holding interval.
struct RegimeSkeleton {
    double horizon = 0;
    std::vector<double> jump_times;  ///< strictly increasing, inside (0, horizon)
    std::vector<int> states;         ///< one per holding interval

    std::size_t n_intervals() const { return states.size(); }
    /// Regime at time t (right-continuous at jumps).
    int state_at(double t) const;
    /// Exact integral of s -> coeff[state(s)] over [0, t].
    double integrate(const Vector& coeff, double t) const;
};

/// Holding times exponential with rate -q_ii, targets proportional to the
/// off-diagonal rates. Initial state drawn from `initial` (defaults to the
/// invariant measure). An absorbing regime in a multi-regime model throws
/// ModelError; a single-regime model never jumps.
RegimeSkeleton sample_regime_path(const ModelSpec& spec, double horizon,
                                  std::mt19937_64& rng,
                                  const Vector* initial = nullptr);
RegimeSkeleton sample_regime_path(const ModelSpec& spec, double horizon,
                                  std::uint64_t seed);

/// Thinning against the dominating rate M_i = sup_x sum_{j != i} q_ij(x):
/// propose at rate M_i, accept a jump to j with probability q_ij(r_t)/M_i.
/// `r_at` supplies the current value of r; it must be positive.
RegimeSkeleton sample_regime_path_state_dep(
    const StateDepModel& sd, const std::function<double(double)>& r_at,
    double horizon, std::mt19937_64& rng, const Vector* initial = nullptr);
RegimeSkeleton sample_regime_path_state_dep(
    const StateDepModel& sd, const std::function<double(double)>& r_at,
    double horizon, std::uint64_t seed);

/// One draw from the exact transition law of dr = a(b-r)dt + 2 sigma
/// sqrt(r) dB over dt: the scaled noncentral chi-square with scale
/// c = sigma^2 (1-exp(-a dt))/a, dof d = a b / sigma^2 and noncentrality
/// x exp(-a dt)/c, sampled as a Poisson-mixed gamma. Requires d >= 2
/// (H1 for the regime), x > 0, dt > 0.
double exact_cir_step(double a, double b, double sigma, double x, double dt,
                      std::mt19937_64& rng);
double exact_cir_step(double a, double b, double sigma, double x, double dt,
                      std::uint64_t seed);

/// Exact transition of the constant-drift equation
/// d rho = drift dt + 2 sigma sqrt(rho) dW (a squared-Bessel-type step,
/// the a -> 0 limit of the CIR law). Requires drift >= 2 sigma^2.
double exact_bessel_step(double drift, double sigma, double x, double dt,
                         std::mt19937_64& rng);

enum class Scheme { ExactNCChi2, FullTruncationEuler };

struct PathBundle {
    std::vector<double> time_grid;
    Matrix r;                 ///< n_paths x n_times; strictly positive under the exact scheme
    Eigen::MatrixXi regimes;  ///< matching regime indices
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::ExactNCChi2;
    long positivity_violations = 0;  ///< raw negative Euler excursions (clamped on output)
};

/// Ensemble of trajectories recorded on `grid` (strictly increasing,
/// grid[0] >= 0). The exact scheme samples the regime skeleton first and
/// chains conditional exact steps across holding intervals and grid
/// points; it requires H1 and constant switching rates. The Euler scheme
/// steps r+ = r + a(b - max(r,0))h + 2 sigma sqrt(max(r,0)) sqrt(h) Z
/// along the grid. Output is bit-reproducible from (seed, scheme, model,
/// grid) for any thread count.
PathBundle simulate_paths(const ModelSpec& spec, double x0,
                          const std::vector<double>& grid, int n_paths,
                          Scheme scheme, std::uint64_t seed, int threads = 1);
PathBundle simulate_paths(const StateDepModel& sd, double x0,
                          const std::vector<double>& grid, int n_paths,
                          Scheme scheme, std::uint64_t seed, int threads = 1);

/// Multiplicative clock of the squared-Bessel representation:
/// ell(t) = exp(int_0^t a ds) piecewise-exponential along the skeleton,
/// C(t) = int_0^t ell(s) ds in closed form per interval, and A = C^{-1}.
class TimeChange {
public:
    TimeChange(const Vector& a, const RegimeSkeleton& skeleton);

    double ell(double t) const;
    double C(double t) const;
    double A(double u) const;
    double horizon() const { return horizon_; }
    /// C at the start of each holding interval (the transformed jump times).
    const std::vector<double>& interval_C() const { return c0_; }
    const std::vector<double>& interval_starts() const { return t0_; }

private:
    std::size_t interval_of_t(double t) const;
    std::size_t interval_of_u(double u) const;
    std::vector<double> t0_;    // interval start times
    std::vector<double> a_;     // a of the interval's regime
    std::vector<double> ell0_;  // ell at interval starts
    std::vector<double> c0_;    // C at interval starts
    double horizon_;
};

TimeChange bessel_time_change(const ModelSpec& spec, const RegimeSkeleton& skeleton);

struct TransformedPath {
    std::vector<double> times;
    std::vector<double> values;
};

/// Map an r-path on `times` to the rho clock: rho(C(t)) = ell(t) r(t).
TransformedPath rho_from_r(const TimeChange& tc, const std::vector<double>& times,
                           const std::vector<double>& r_values);
/// Map a rho-path on transformed times back: r(A(u)) = rho(u) / ell(A(u)).
TransformedPath r_from_rho(const TimeChange& tc, const std::vector<double>& rho_times,
                           const std::vector<double>& rho_values);

/// One exact trajectory evaluated at two times t_mid <= t_end (no grid).
struct TerminalDraw {
    double mid_value = 0;
    int mid_regime = 0;
    double value = 0;
    int regime = 0;
};
TerminalDraw exact_terminal(const ModelSpec& spec, double x0, double t_mid,
                            double t_end, std::mt19937_64& rng,
                            const Vector& initial_dist);

} // namespace cirregime

#endif
