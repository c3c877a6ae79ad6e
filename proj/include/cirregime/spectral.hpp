#ifndef CIRREGIME_SPECTRAL_HPP
#define CIRREGIME_SPECTRAL_HPP

#include <functional>
#include <limits>

#include "cirregime/model.hpp"

namespace cirregime {

/// Decay rate eta_p = -max Re spec(q - p diag(a)). The shifted matrix
/// q - p diag(a) + sI is entrywise nonnegative for a large enough shift s,
/// so its rightmost eigenvalue is the Perron root; it is computed by power
/// iteration with Collatz-Wielandt bounds to relative tolerance 1e-12.
/// Throws NumericError (carrying the last iterate) after 1e6 iterations.
double eta(const ModelSpec& spec, double p);

/// min over {i : a_i < 0} of (total jump rate out of i) / |a_i|; +infinity
/// when every a_i >= 0. Upper bound for the root of eta.
double kappa_upper_bound(const ModelSpec& spec);

/// Tail threshold kappa = sup{p > 0 : eta_p > 0}. Returns +infinity when
/// min a_i >= 0; otherwise bisects the sign change of eta on
/// (0, kappa_upper_bound], expanding the bracket geometrically (up to
/// 2^10 x) if eta is still positive at its end, and throws
/// ConsistencyError when no sign change exists.
double kappa(const ModelSpec& spec);

/// eta of q + diag(a) at p = 1, i.e. eta with the sign of a flipped.
double eta_tilde_1(const ModelSpec& spec);

struct SpectralCurve {
    Vector p_grid;              ///< increasing
    Vector eta;                 ///< eta_p at each grid point
    double kappa = 0;           ///< may be +infinity
    double kappa_upper_bound = 0;  ///< may be +infinity
    double eta_tilde_1 = 0;
    bool drift_positive = false;   ///< sum mu_i a_i > 0 (kappa meaningful)
};

SpectralCurve spectral_curve(const ModelSpec& spec, double p_min, double p_max,
                             int steps);

/// Quadratic form f -> 1/2 sum mu_i q_ij (f_j - f_i)^2 + sum mu_i c_i f_i^2
/// on L^2(mu), with potential c = a (halved = false) or c = a/2 (halved =
/// true). Requires detailed balance mu_i q_ij = mu_j q_ji.
struct QuadraticFormSpec {
    Vector mu;
    Matrix q;
    Vector a;
    bool halved = false;
};

struct VariationalResult {
    double lambda;           ///< smallest value of the form on the unit sphere
    Vector minimizer;        ///< L^2(mu)-normalized, first nonzero entry > 0
    double min_abs_component;  ///< min_i |g_i|, reported for diagnostics
};

/// Smallest generalized eigenvalue of the symmetric matrix of the form
/// against the diag(mu) metric, with its minimizer. Throws ContractError
/// when detailed balance fails beyond 1e-10.
VariationalResult variational_eigenvalue(const QuadraticFormSpec& form);

/// Infinite regime sets are handled by increasing truncations with a
/// killing boundary: `truncate(n)` must return the form restricted to the
/// first n regimes (f = 0 beyond). Sizes run 2, 4, ..., 2^k_max; the
/// truncated values are nonincreasing in n and convergence is monitored,
/// not proven.
struct TruncationStudy {
    std::vector<int> sizes;
    std::vector<double> lambda;
    bool converged = false;
    double last_change = 0;
};
TruncationStudy variational_eigenvalue_truncations(
    const std::function<QuadraticFormSpec(int)>& truncate, int k_max,
    double rel_tol = 1e-6);

struct MMatrixReport {
    bool verdict = false;          ///< z_pattern && minors_positive
    bool z_pattern = false;        ///< off-diagonal entries <= 0
    bool minors_positive = false;  ///< all leading principal minors > 0
    int first_failing_minor = 0;   ///< 1-based order of first minor <= 0; 0 if none
    Vector leading_minors;
};

/// Nonsingular M-matrix test: the sign pattern admits A = sI - B with
/// B >= 0, and every leading principal minor is positive (minors via
/// partially pivoted LU). Never throws on finite square input.
MMatrixReport is_nonsingular_m_matrix(const Eigen::Ref<const Matrix>& a);

} // namespace cirregime

#endif
