#include "cirregime/spectral.hpp"

#include <cmath>

namespace cirregime {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr long kMaxPowerIterations = 1'000'000;
constexpr double kPowerRelTol = 1e-12;

// Perron root of an entrywise nonnegative matrix with strictly positive
// diagonal, by power iteration. The Collatz-Wielandt ratios give two-sided
// bounds, so the stop criterion certifies the enclosure.
double perron_root(const Matrix& m) {
    const Eigen::Index n = m.rows();
    Vector v = Vector::Constant(n, 1.0 / static_cast<double>(n));
    double estimate = 0;
    for (long it = 0; it < kMaxPowerIterations; ++it) {
        Vector w = m * v;
        double lo = kInf, hi = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double ratio = w[i] / v[i];
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        estimate = 0.5 * (lo + hi);
        if (hi - lo <= kPowerRelTol * std::max(1.0, std::abs(hi)))
            return estimate;
        v = w / w.norm();
    }
    throw NumericError("Perron power iteration did not converge", estimate);
}

Matrix shifted_nonnegative(const ModelSpec& spec, double p, double& shift) {
    const Eigen::Index n = spec.n_regimes();
    double max_pa = 0, max_diag = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        max_pa = std::max(max_pa, p * spec.a[i]);
        max_diag = std::max(max_diag, std::abs(spec.q(i, i)));
    }
    // +1 keeps the diagonal strictly positive (primitive matrix).
    shift = max_pa + max_diag + 1.0;
    Matrix m = spec.q;
    m.diagonal() -= p * spec.a;
    m.diagonal().array() += shift;
    return m;
}

} // namespace

double eta(const ModelSpec& spec, double p) {
    double shift = 0;
    Matrix m = shifted_nonnegative(spec, p, shift);
    return shift - perron_root(m);
}

double kappa_upper_bound(const ModelSpec& spec) {
    double bound = kInf;
    for (Eigen::Index i = 0; i < spec.n_regimes(); ++i)
        if (spec.a[i] < 0)
            bound = std::min(bound, -spec.q(i, i) / -spec.a[i]);
    return bound;
}

double kappa(const ModelSpec& spec) {
    if (spec.a.minCoeff() >= 0) return kInf;

    double hi = kappa_upper_bound(spec);
    if (!(hi > 0))
        throw ConsistencyError("kappa bracket is empty: a regime with a_i < 0 never jumps");

    // Theory places the root strictly inside (0, hi]; allow slack for
    // numerics near the bound before giving up.
    int expansions = 0;
    while (eta(spec, hi) > 0) {
        if (++expansions > 10)
            throw ConsistencyError("eta stayed positive far beyond its upper bound");
        hi *= 2;
    }
    double lo = 0;  // eta(0) = 0
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        double mid = 0.5 * (lo + hi);
        if (eta(spec, mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double eta_tilde_1(const ModelSpec& spec) {
    ModelSpec flipped = spec;
    flipped.a = -spec.a;
    return eta(flipped, 1.0);
}

SpectralCurve spectral_curve(const ModelSpec& spec, double p_min, double p_max,
                             int steps) {
    if (steps < 1 || !(p_max >= p_min))
        throw ContractError("spectral curve needs p_min <= p_max and at least one step");
    SpectralCurve curve;
    curve.p_grid = Vector::LinSpaced(steps, p_min, p_max);
    curve.eta.resize(steps);
    for (int i = 0; i < steps; ++i)
        curve.eta[i] = eta(spec, curve.p_grid[i]);
    curve.kappa_upper_bound = kappa_upper_bound(spec);
    curve.kappa = kappa(spec);
    curve.eta_tilde_1 = eta_tilde_1(spec);
    curve.drift_positive = drift_index(spec) > 0;
    return curve;
}

VariationalResult variational_eigenvalue(const QuadraticFormSpec& form) {
    const Eigen::Index n = form.mu.size();
    if (form.q.rows() != n || form.q.cols() != n || form.a.size() != n)
        throw StructuralError("quadratic form pieces must agree in size");

    double scale = std::max(1.0, form.q.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::abs(form.mu[i] * form.q(i, j) - form.mu[j] * form.q(j, i)) >
                1e-10 * scale)
                throw ContractError("quadratic form requires detailed balance (reversibility)");

    Vector potential = form.halved ? Vector(0.5 * form.a) : form.a;
    Matrix weighted = -(form.mu.asDiagonal() * form.q);
    weighted.diagonal() += form.mu.cwiseProduct(potential);
    Matrix sym = 0.5 * (weighted + weighted.transpose());
    Matrix metric = form.mu.asDiagonal();

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(sym, metric);
    if (solver.info() != Eigen::Success)
        throw NumericError("generalized eigensolver failed", 0.0);

    VariationalResult result;
    result.lambda = solver.eigenvalues()[0];
    Vector g = solver.eigenvectors().col(0);
    g /= std::sqrt(g.dot(form.mu.cwiseProduct(g)));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(g[i]) > 1e-14) {
            if (g[i] < 0) g = -g;
            break;
        }
    }
    result.min_abs_component = g.cwiseAbs().minCoeff();
    result.minimizer = std::move(g);
    return result;
}

TruncationStudy variational_eigenvalue_truncations(
    const std::function<QuadraticFormSpec(int)>& truncate, int k_max, double rel_tol) {
    if (k_max < 1)
        throw ContractError("truncation study needs at least one size");
    TruncationStudy study;
    for (int k = 1; k <= k_max; ++k) {
        int n = 1 << k;
        study.sizes.push_back(n);
        study.lambda.push_back(variational_eigenvalue(truncate(n)).lambda);
        if (k > 1) {
            double prev = study.lambda[study.lambda.size() - 2];
            study.last_change = std::abs(study.lambda.back() - prev);
            study.converged =
                study.last_change <= rel_tol * std::max(1.0, std::abs(study.lambda.back()));
        }
    }
    return study;
}

MMatrixReport is_nonsingular_m_matrix(const Eigen::Ref<const Matrix>& a) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n)
        throw ContractError("M-matrix test needs a square matrix");
    if (!a.allFinite())
        throw ContractError("M-matrix test needs finite entries");

    MMatrixReport report;
    double tol = 1e-14 * std::max(1.0, a.cwiseAbs().maxCoeff());
    report.z_pattern = true;
    for (Eigen::Index i = 0; i < n && report.z_pattern; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && a(i, j) > tol) {
                report.z_pattern = false;
                break;
            }

    report.leading_minors.resize(n);
    report.minors_positive = true;
    for (Eigen::Index k = 1; k <= n; ++k) {
        double det = k == 1 ? a(0, 0)
                            : a.topLeftCorner(k, k).partialPivLu().determinant();
        report.leading_minors[k - 1] = det;
        if (report.minors_positive && !(det > 0)) {
            report.minors_positive = false;
            report.first_failing_minor = static_cast<int>(k);
        }
    }
    report.verdict = report.z_pattern && report.minors_positive;
    return report;
}

} // namespace cirregime
