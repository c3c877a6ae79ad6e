#ifndef CIRREGIME_CLASSIFY_HPP
#define CIRREGIME_CLASSIFY_HPP

#include <optional>
#include <string>
#include <vector>

#include "cirregime/model.hpp"
#include "cirregime/spectral.hpp"

namespace cirregime {

enum class Recurrence { PositiveRecurrent, Transient, Inconclusive };
const char* to_string(Recurrence r);

struct RecurrenceVerdict {
    Recurrence verdict = Recurrence::Inconclusive;
    double drift_witness = 0;  ///< sum mu_i a_i for the constant-rate route
    /// Witnesses of the state-dependent criterion, when that route decided.
    std::optional<double> witness_p;
    std::optional<std::vector<int>> witness_ordering;
    std::optional<MMatrixReport> witness_diagnostics;
};

/// Sign of the drift index with a 1e-12 band: positive -> positive
/// recurrent, negative -> transient, else inconclusive (the critical case
/// is not decided).
RecurrenceVerdict classify_recurrence(const ModelSpec& spec);

/// Sufficient criterion for state-dependent switching: for each ordering,
/// build the bounding rate matrix, multiply -(Q~ - (p/2) diag(a)) by the
/// upper-triangular all-ones matrix, and search p on a geometric grid for
/// positive leading principal minors (p > 0 certifies positive recurrence,
/// p < 0 transience). Inconclusive when no p works: the criterion is
/// sufficient, not necessary. Identity and reversed orderings are always
/// tried, then any supplied extras.
RecurrenceVerdict classify_recurrence_state_dep(
    const StateDepModel& sd,
    const std::vector<std::vector<int>>& extra_orderings = {});

enum class TailKind { LightTailed, HeavyTailed, Inconclusive };
const char* to_string(TailKind k);

/// Which decisive route produced the verdict (labels follow the report
/// format: "3.2(i)" exponential moment, "3.2(ii)" moment threshold above 1,
/// "3.3" moment threshold at or below 1, "none").
enum class TailRoute { ExpMoment, MomentThreshold, MomentThresholdLow, None };
const char* route_label(TailRoute r);

struct TailVerdict {
    TailKind kind = TailKind::Inconclusive;
    TailRoute route = TailRoute::None;
    double kappa = 0;      ///< tail threshold (+infinity when light-tailed)
    double delta_max = 0;  ///< exponential moments finite below this (light only)
    double alpha = 0;      ///< max sigma_i^2 / a_i (defined when a_min > 0)
    std::string reason;    ///< set when inconclusive
};

/// Tail dichotomy for a positive recurrent model satisfying H1:
/// a_min > 0 gives a light tail with delta_max = 1/(2 alpha); a_min < 0
/// gives a heavy tail with threshold kappa, requiring extra hypotheses
/// (a_i b_i >= 4 sigma_i^2 and eta~_1 > 0) when kappa <= 1. Violated
/// preconditions throw ContractError.
TailVerdict classify_tail(const ModelSpec& spec);

struct LyapunovDriftReport {
    double p = 0;
    Vector x_grid;
    Matrix values;             ///< n_regimes x n_x drift of h(x) = x^p
    Vector asymptotic_rate;    ///< -(p/2) a_i per regime
    double weighted_asymptotic = 0;  ///< -(p/2) sum mu_i a_i
};

/// Drift table of h(x) = x^p under the square-root-transformed generator,
/// (p/2) x^p [((p-1) sigma_i^4 + a_i b_i - sigma_i^2)/x^2 - a_i], plus the
/// per-regime and invariant-weighted asymptotic rates. x grid must be
/// positive; p = 1 is allowed.
LyapunovDriftReport lyapunov_drift_report(const ModelSpec& spec, double p,
                                          const Vector& x_grid);

} // namespace cirregime

#endif
