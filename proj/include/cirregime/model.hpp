#ifndef CIRREGIME_MODEL_HPP
#define CIRREGIME_MODEL_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "cirregime/errors.hpp"

namespace cirregime {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Regime-switching square-root diffusion
///     dr = a_i (b_i - r) dt + 2 sigma_i sqrt(r) dB,
/// with the environment index i driven by a continuous-time Markov chain
/// with conservative, irreducible rate matrix q.
struct ModelSpec {
    Vector a;      ///< mean-reversion speeds, one per regime (1/time)
    Vector b;      ///< reversion levels (rate units)
    Vector sigma;  ///< volatility scales, all nonzero
    Matrix q;      ///< N x N transition rate matrix

    Eigen::Index n_regimes() const { return a.size(); }
};

enum class Condition {
    Conservative,    // off-diagonals >= 0, rows sum to zero
    Irreducible,     // positive-rate digraph strongly connected
    SigmaNonzero,    // sigma_i != 0 for all i
    H1,              // a_i b_i >= 2 sigma_i^2  (strict positivity of r)
    H1Strong,        // a_i b_i >= 4 sigma_i^2
    RatesNonnegative,// state-dependent: inf_x q_ij(x) >= 0
    RatesBounded,    // state-dependent: sup_x sum_j q_ij(x) < inf
};

const char* condition_name(Condition c);

struct ValidationReport {
    struct Entry {
        Condition code;
        bool passed;
        std::string detail;  // empty when passed
    };
    std::vector<Entry> conditions;
    bool usable = false;  // all gating conditions hold

    bool passed(Condition c) const;
    /// Name of the first failed condition, or nullptr when all pass.
    const char* first_failing() const;
    bool h1() const { return passed(Condition::H1); }
    bool h1_strong() const { return passed(Condition::H1Strong); }
};

/// Checks the named model conditions. Malformed input (non-square q, empty
/// model, size mismatch, non-finite entries) throws StructuralError; a
/// merely violated condition is reported, not thrown. Pure: identical
/// inputs give identical reports.
ValidationReport validate(const ModelSpec& spec);

struct InvariantMeasure {
    Vector mu;  ///< strictly positive, sums to 1, mu * q = 0
};

/// Stationary law of the regime chain, from the singular balance system
/// with the normalization row appended. Requires a conservative,
/// irreducible q; rank deficiency beyond the expected one dimension throws
/// DegenerateChainError.
InvariantMeasure invariant_measure(const ModelSpec& spec);

/// sum_i mu_i a_i; its sign decides recurrence vs transience.
double drift_index(const ModelSpec& spec);
double drift_index(const ModelSpec& spec, const InvariantMeasure& mu);

/// One switching-rate function x -> q_ij(x) from a closed family whose
/// supremum and infimum over x are known exactly.
class RateFunction {
public:
    enum class Kind { Constant, Logistic, PiecewiseConstant };

    static RateFunction constant(double value);
    /// lower + (upper - lower) / (1 + exp(-steepness (x - midpoint))).
    static RateFunction logistic(double lower, double upper, double midpoint,
                                 double steepness);
    /// values[j] on [breakpoints[j-1], breakpoints[j]); breakpoints ascending.
    static RateFunction piecewise(std::vector<double> breakpoints,
                                  std::vector<double> values);

    double operator()(double x) const;
    double sup() const { return sup_; }
    double inf() const { return inf_; }
    Kind kind() const { return kind_; }

private:
    RateFunction() = default;
    Kind kind_ = Kind::Constant;
    double sup_ = 0, inf_ = 0;
    // logistic parameters
    double lower_ = 0, upper_ = 0, midpoint_ = 0, steepness_ = 0;
    // piecewise parameters
    std::vector<double> breaks_;
    std::vector<double> values_;
};

/// Model whose switching rates depend on the current value of r.
struct StateDepModel {
    Vector a;
    Vector b;
    Vector sigma;
    std::vector<RateFunction> rates;  ///< N*N row-major; diagonal ignored

    Eigen::Index n_regimes() const { return a.size(); }
    const RateFunction& rate(Eigen::Index i, Eigen::Index j) const {
        return rates[static_cast<std::size_t>(i * n_regimes() + j)];
    }
    /// Dominating total jump rate out of regime i: sum_{j != i} sup q_ij.
    double sup_total_rate(Eigen::Index i) const;
    bool is_constant_rate() const;
    /// Collapse to a ModelSpec; requires constant rates.
    ModelSpec to_model_spec() const;
    /// Lift a ModelSpec to constant rate functions.
    static StateDepModel from_model_spec(const ModelSpec& spec);
};

ValidationReport validate(const StateDepModel& sd);

std::vector<int> identity_ordering(int n);
std::vector<int> reversed_ordering(int n);

struct BoundMatrixResult {
    Matrix q_tilde;                 ///< conservative bounding rate matrix
    std::vector<int> degenerate_rows;  ///< rows that lost all positive rates
};

/// Auxiliary bounding rate matrix: under the given ordering (ordering[r] =
/// regime placed at rank r), entry (i,k) takes sup_x q_ik for ranks k < i
/// and inf_x q_ik for ranks k > i; the diagonal restores zero row sums.
/// Indices of the result stay in the original labelling.
BoundMatrixResult bound_matrix(const StateDepModel& sd,
                               const std::vector<int>& ordering);

} // namespace cirregime

#endif
