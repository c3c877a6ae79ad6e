#include "cirregime/classify.hpp"

#include <cmath>

namespace cirregime {

namespace {

constexpr double kDriftBand = 1e-12;
constexpr double kKappaGuard = 1e-8;

Matrix permuted(const Matrix& m, const std::vector<int>& ordering) {
    const auto n = static_cast<Eigen::Index>(ordering.size());
    Matrix out(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index s = 0; s < n; ++s)
            out(r, s) = m(ordering[static_cast<std::size_t>(r)],
                          ordering[static_cast<std::size_t>(s)]);
    return out;
}

Vector permuted(const Vector& v, const std::vector<int>& ordering) {
    const auto n = static_cast<Eigen::Index>(ordering.size());
    Vector out(n);
    for (Eigen::Index r = 0; r < n; ++r)
        out[r] = v[ordering[static_cast<std::size_t>(r)]];
    return out;
}

// -(Q~ - (p/2) diag(a)) H with H the upper-triangular all-ones matrix;
// column k of the product holds the cumulative row sums through column k.
Matrix criterion_matrix(const Matrix& q_tilde, const Vector& a, double p) {
    const Eigen::Index n = q_tilde.rows();
    Matrix b = -q_tilde;
    b.diagonal() += (p / 2.0) * a;
    Matrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
            acc += b(i, k);
            out(i, k) = acc;
        }
    }
    return out;
}

bool minors_positive(const Matrix& q_tilde, const Vector& a, double p,
                     MMatrixReport* report_out) {
    MMatrixReport report = is_nonsingular_m_matrix(criterion_matrix(q_tilde, a, p));
    bool ok = report.minors_positive;
    if (report_out) *report_out = std::move(report);
    return ok;
}

// Robustness margin of a candidate p: the smallest leading minor.
double margin(const Matrix& q_tilde, const Vector& a, double p) {
    MMatrixReport report = is_nonsingular_m_matrix(criterion_matrix(q_tilde, a, p));
    return report.leading_minors.minCoeff();
}

// Maximize the margin near the first working grid point.
double refine_witness(const Matrix& q_tilde, const Vector& a, double p_hit) {
    double lo = p_hit / 2, hi = p_hit * 2;
    if (p_hit < 0) std::swap(lo, hi);
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - golden * (hi - lo);
    double x2 = lo + golden * (hi - lo);
    double f1 = margin(q_tilde, a, x1);
    double f2 = margin(q_tilde, a, x2);
    for (int it = 0; it < 40; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = margin(q_tilde, a, x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = margin(q_tilde, a, x1);
        }
    }
    double best = 0.5 * (lo + hi);
    return margin(q_tilde, a, best) > 0 ? best : p_hit;
}

} // namespace

const char* to_string(Recurrence r) {
    switch (r) {
        case Recurrence::PositiveRecurrent: return "PositiveRecurrent";
        case Recurrence::Transient: return "Transient";
        case Recurrence::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

const char* to_string(TailKind k) {
    switch (k) {
        case TailKind::LightTailed: return "LightTailed";
        case TailKind::HeavyTailed: return "HeavyTailed";
        case TailKind::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

const char* route_label(TailRoute r) {
    switch (r) {
        case TailRoute::ExpMoment: return "3.2(i)";
        case TailRoute::MomentThreshold: return "3.2(ii)";
        case TailRoute::MomentThresholdLow: return "3.3";
        case TailRoute::None: return "none";
    }
    return "none";
}

RecurrenceVerdict classify_recurrence(const ModelSpec& spec) {
    RecurrenceVerdict verdict;
    verdict.drift_witness = drift_index(spec);
    if (verdict.drift_witness > kDriftBand)
        verdict.verdict = Recurrence::PositiveRecurrent;
    else if (verdict.drift_witness < -kDriftBand)
        verdict.verdict = Recurrence::Transient;
    else
        verdict.verdict = Recurrence::Inconclusive;
    return verdict;
}

RecurrenceVerdict classify_recurrence_state_dep(
    const StateDepModel& sd, const std::vector<std::vector<int>>& extra_orderings) {
    const int n = static_cast<int>(sd.n_regimes());
    std::vector<std::vector<int>> orderings{identity_ordering(n), reversed_ordering(n)};
    orderings.insert(orderings.end(), extra_orderings.begin(), extra_orderings.end());

    RecurrenceVerdict verdict;
    verdict.verdict = Recurrence::Inconclusive;

    for (const auto& ordering : orderings) {
        Matrix q_tilde = permuted(bound_matrix(sd, ordering).q_tilde, ordering);
        Vector a = permuted(sd.a, ordering);
        for (int sign : {+1, -1}) {
            for (int k = 0; k <= 20; ++k) {
                double p = sign * 1e-3 * std::ldexp(1.0, k);
                if (!minors_positive(q_tilde, a, p, nullptr)) continue;
                double witness = refine_witness(q_tilde, a, p);
                MMatrixReport diag;
                minors_positive(q_tilde, a, witness, &diag);
                verdict.verdict = sign > 0 ? Recurrence::PositiveRecurrent
                                           : Recurrence::Transient;
                verdict.witness_p = witness;
                verdict.witness_ordering = ordering;
                verdict.witness_diagnostics = std::move(diag);
                return verdict;
            }
        }
    }
    return verdict;
}

TailVerdict classify_tail(const ModelSpec& spec) {
    RecurrenceVerdict recurrence = classify_recurrence(spec);
    if (recurrence.verdict != Recurrence::PositiveRecurrent)
        throw ContractError(
            "tail classification requires a positive recurrent model "
            "(drift index must be strictly positive)");
    ValidationReport report = validate(spec);
    if (!report.h1())
        throw ContractError("tail classification requires H1 (a_i b_i >= 2 sigma_i^2)");

    TailVerdict verdict;
    const double a_min = spec.a.minCoeff();

    if (a_min > 0) {
        double alpha = 0;
        for (Eigen::Index i = 0; i < spec.n_regimes(); ++i)
            alpha = std::max(alpha, spec.sigma[i] * spec.sigma[i] / spec.a[i]);
        verdict.kind = TailKind::LightTailed;
        verdict.route = TailRoute::ExpMoment;
        verdict.alpha = alpha;
        verdict.delta_max = 1.0 / (2.0 * alpha);
        verdict.kappa = std::numeric_limits<double>::infinity();
        return verdict;
    }

    verdict.kappa = kappa(spec);
    if (a_min == 0) {
        verdict.kind = TailKind::Inconclusive;
        verdict.reason = "a_min = 0: neither tail criterion applies";
        return verdict;
    }

    if (verdict.kappa > 1 + kKappaGuard) {
        verdict.kind = TailKind::HeavyTailed;
        verdict.route = TailRoute::MomentThreshold;
        return verdict;
    }

    // kappa <= 1 needs the strengthened hypotheses
    if (!report.h1_strong()) {
        verdict.kind = TailKind::Inconclusive;
        verdict.reason =
            "kappa <= 1 requires the strengthened condition a_i b_i >= 4 sigma_i^2";
        return verdict;
    }
    if (!(eta_tilde_1(spec) > 0)) {
        verdict.kind = TailKind::Inconclusive;
        verdict.reason = "kappa <= 1 requires eta~_1 > 0";
        return verdict;
    }
    verdict.kind = TailKind::HeavyTailed;
    verdict.route = TailRoute::MomentThresholdLow;
    return verdict;
}

LyapunovDriftReport lyapunov_drift_report(const ModelSpec& spec, double p,
                                          const Vector& x_grid) {
    for (Eigen::Index j = 0; j < x_grid.size(); ++j)
        if (!(x_grid[j] > 0))
            throw ContractError("drift report grid must be strictly positive");

    const Eigen::Index n = spec.n_regimes();
    LyapunovDriftReport out;
    out.p = p;
    out.x_grid = x_grid;
    out.values.resize(n, x_grid.size());
    out.asymptotic_rate.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s2 = spec.sigma[i] * spec.sigma[i];
        const double bracket_top = (p - 1) * s2 * s2 + spec.a[i] * spec.b[i] - s2;
        out.asymptotic_rate[i] = -(p / 2.0) * spec.a[i];
        for (Eigen::Index j = 0; j < x_grid.size(); ++j) {
            const double x = x_grid[j];
            out.values(i, j) =
                (p / 2.0) * std::pow(x, p) * (bracket_top / (x * x) - spec.a[i]);
        }
    }
    out.weighted_asymptotic = -(p / 2.0) * drift_index(spec);
    return out;
}

} // namespace cirregime
