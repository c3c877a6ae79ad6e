#include "cirregime/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cirregime {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kBalanceTol = 1e-12;

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

void check_structure(const ModelSpec& spec) {
    const Eigen::Index n = spec.a.size();
    if (n < 1)
        throw StructuralError("model must have at least one regime");
    if (spec.b.size() != n || spec.sigma.size() != n)
        throw StructuralError("coefficient vectors a, b, sigma must have equal length");
    if (spec.q.rows() != spec.q.cols())
        throw StructuralError("rate matrix must be square");
    if (spec.q.rows() != n)
        throw StructuralError("rate matrix size must match the number of regimes");
    if (!all_finite(spec.a) || !all_finite(spec.b) || !all_finite(spec.sigma) ||
        !all_finite(spec.q))
        throw StructuralError("model entries must be finite");
}

// Strong connectivity of the digraph with edges {q_ij > 0, i != j}:
// every node reachable from node 0 in the graph and in its transpose.
bool strongly_connected(const Matrix& q) {
    const Eigen::Index n = q.rows();
    if (n == 1) return true;
    auto reach = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<Eigen::Index> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            Eigen::Index i = stack.back();
            stack.pop_back();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i || seen[static_cast<std::size_t>(j)]) continue;
                double rate = transpose ? q(j, i) : q(i, j);
                if (rate > 0) {
                    seen[static_cast<std::size_t>(j)] = 1;
                    stack.push_back(j);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    return reach(false) && reach(true);
}

std::string index_detail(const char* what, Eigen::Index i) {
    std::ostringstream os;
    os << what << " at regime " << (i + 1);
    return os.str();
}

} // namespace

const char* condition_name(Condition c) {
    switch (c) {
        case Condition::Conservative: return "conservative";
        case Condition::Irreducible: return "irreducible";
        case Condition::SigmaNonzero: return "sigma-nonzero";
        case Condition::H1: return "H1";
        case Condition::H1Strong: return "H1-strong";
        case Condition::RatesNonnegative: return "rates-nonnegative";
        case Condition::RatesBounded: return "rates-bounded";
    }
    return "unknown";
}

bool ValidationReport::passed(Condition c) const {
    for (const auto& e : conditions)
        if (e.code == c) return e.passed;
    return false;
}

const char* ValidationReport::first_failing() const {
    for (const auto& e : conditions)
        if (!e.passed) return condition_name(e.code);
    return nullptr;
}

ValidationReport validate(const ModelSpec& spec) {
    check_structure(spec);
    const Eigen::Index n = spec.n_regimes();
    ValidationReport report;

    bool conservative = true;
    std::string cons_detail;
    for (Eigen::Index i = 0; i < n && conservative; ++i) {
        double row_scale = std::max(1.0, spec.q.row(i).cwiseAbs().sum());
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && spec.q(i, j) < 0) {
                conservative = false;
                cons_detail = index_detail("negative off-diagonal rate", i);
                break;
            }
        }
        if (conservative && std::abs(spec.q.row(i).sum()) > kRowSumTol * row_scale) {
            conservative = false;
            cons_detail = index_detail("row sum differs from zero", i);
        }
    }
    report.conditions.push_back({Condition::Conservative, conservative, cons_detail});

    bool irreducible = conservative && strongly_connected(spec.q);
    report.conditions.push_back(
        {Condition::Irreducible, irreducible,
         irreducible ? "" : "positive-rate digraph is not strongly connected"});

    bool sigma_ok = true;
    std::string sigma_detail;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (spec.sigma[i] == 0.0) {
            sigma_ok = false;
            sigma_detail = index_detail("sigma is zero", i);
            break;
        }
    }
    report.conditions.push_back({Condition::SigmaNonzero, sigma_ok, sigma_detail});

    bool h1 = true, h1s = true;
    std::string h1_detail, h1s_detail;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ab = spec.a[i] * spec.b[i];
        const double s2 = spec.sigma[i] * spec.sigma[i];
        if (h1 && ab < 2 * s2) {
            h1 = false;
            h1_detail = index_detail("a*b < 2 sigma^2", i);
        }
        if (h1s && ab < 4 * s2) {
            h1s = false;
            h1s_detail = index_detail("a*b < 4 sigma^2", i);
        }
    }
    report.conditions.push_back({Condition::H1, h1, h1_detail});
    report.conditions.push_back({Condition::H1Strong, h1s, h1s_detail});

    report.usable = conservative && irreducible && sigma_ok && h1;
    return report;
}

InvariantMeasure invariant_measure(const ModelSpec& spec) {
    ValidationReport report = validate(spec);
    if (!report.passed(Condition::Conservative) || !report.passed(Condition::Irreducible))
        throw ContractError("invariant_measure requires a conservative, irreducible rate matrix");

    const Eigen::Index n = spec.n_regimes();
    Matrix qt = spec.q.transpose();
    Eigen::ColPivHouseholderQR<Matrix> rank_probe(qt);
    if (rank_probe.rank() < n - 1)
        throw DegenerateChainError("rate matrix rank below N-1; regime chain is degenerate");

    Matrix system(n + 1, n);
    system.topRows(n) = qt;
    system.row(n).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs[n] = 1.0;

    Vector mu = system.colPivHouseholderQr().solve(rhs);

    double scale = std::max(1.0, spec.q.cwiseAbs().maxCoeff());
    double residual = (mu.transpose() * spec.q).cwiseAbs().maxCoeff();
    if (residual > kBalanceTol * scale)
        throw NumericError("invariant measure residual exceeds tolerance", residual);
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(mu[i] > 0))
            throw DegenerateChainError("invariant measure has a nonpositive component");
    mu /= mu.sum();
    return InvariantMeasure{std::move(mu)};
}

double drift_index(const ModelSpec& spec, const InvariantMeasure& m) {
    return m.mu.dot(spec.a);
}

double drift_index(const ModelSpec& spec) {
    return drift_index(spec, invariant_measure(spec));
}

RateFunction RateFunction::constant(double value) {
    RateFunction f;
    f.kind_ = Kind::Constant;
    f.sup_ = f.inf_ = value;
    return f;
}

RateFunction RateFunction::logistic(double lower, double upper, double midpoint,
                                    double steepness) {
    if (!(lower <= upper))
        throw StructuralError("logistic rate requires lower <= upper");
    RateFunction f;
    f.kind_ = Kind::Logistic;
    f.lower_ = lower;
    f.upper_ = upper;
    f.midpoint_ = midpoint;
    f.steepness_ = steepness;
    f.inf_ = lower;
    f.sup_ = upper;
    return f;
}

RateFunction RateFunction::piecewise(std::vector<double> breakpoints,
                                     std::vector<double> values) {
    if (values.size() != breakpoints.size() + 1)
        throw StructuralError("piecewise rate needs one more value than breakpoints");
    if (!std::is_sorted(breakpoints.begin(), breakpoints.end()))
        throw StructuralError("piecewise breakpoints must be ascending");
    RateFunction f;
    f.kind_ = Kind::PiecewiseConstant;
    f.inf_ = *std::min_element(values.begin(), values.end());
    f.sup_ = *std::max_element(values.begin(), values.end());
    f.breaks_ = std::move(breakpoints);
    f.values_ = std::move(values);
    return f;
}

double RateFunction::operator()(double x) const {
    switch (kind_) {
        case Kind::Constant:
            return sup_;
        case Kind::Logistic:
            return lower_ + (upper_ - lower_) / (1.0 + std::exp(-steepness_ * (x - midpoint_)));
        case Kind::PiecewiseConstant: {
            auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
            return values_[static_cast<std::size_t>(it - breaks_.begin())];
        }
    }
    return 0.0;
}

double StateDepModel::sup_total_rate(Eigen::Index i) const {
    double total = 0;
    for (Eigen::Index j = 0; j < n_regimes(); ++j)
        if (j != i) total += rate(i, j).sup();
    return total;
}

bool StateDepModel::is_constant_rate() const {
    for (Eigen::Index i = 0; i < n_regimes(); ++i)
        for (Eigen::Index j = 0; j < n_regimes(); ++j)
            if (i != j && rate(i, j).kind() != RateFunction::Kind::Constant)
                return false;
    return true;
}

ModelSpec StateDepModel::to_model_spec() const {
    if (!is_constant_rate())
        throw ContractError("model has state-dependent rates; no constant rate matrix exists");
    const Eigen::Index n = n_regimes();
    Matrix q = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j) q(i, j) = rate(i, j).sup();
        q(i, i) = -q.row(i).sum();
    }
    return ModelSpec{a, b, sigma, std::move(q)};
}

StateDepModel StateDepModel::from_model_spec(const ModelSpec& spec) {
    StateDepModel sd;
    sd.a = spec.a;
    sd.b = spec.b;
    sd.sigma = spec.sigma;
    const Eigen::Index n = spec.n_regimes();
    sd.rates.reserve(static_cast<std::size_t>(n * n));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            sd.rates.push_back(RateFunction::constant(i == j ? 0.0 : spec.q(i, j)));
    return sd;
}

ValidationReport validate(const StateDepModel& sd) {
    const Eigen::Index n = sd.a.size();
    if (n < 1)
        throw StructuralError("model must have at least one regime");
    if (sd.b.size() != n || sd.sigma.size() != n)
        throw StructuralError("coefficient vectors a, b, sigma must have equal length");
    if (sd.rates.size() != static_cast<std::size_t>(n * n))
        throw StructuralError("rate family must have one entry per regime pair");
    if (!sd.a.allFinite() || !sd.b.allFinite() || !sd.sigma.allFinite())
        throw StructuralError("model entries must be finite");

    ValidationReport report;
    bool nonneg = true;
    std::string nn_detail;
    bool bounded = true;
    std::string bd_detail;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            if (sd.rate(i, j).inf() < 0) {
                nonneg = false;
                nn_detail = index_detail("rate function can be negative", i);
            }
        }
        if (!std::isfinite(sd.sup_total_rate(i))) {
            bounded = false;
            bd_detail = index_detail("total rate unbounded", i);
        }
    }
    report.conditions.push_back({Condition::RatesNonnegative, nonneg, nn_detail});
    report.conditions.push_back({Condition::RatesBounded, bounded, bd_detail});

    bool sigma_ok = true;
    std::string sigma_detail;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (sd.sigma[i] == 0.0) {
            sigma_ok = false;
            sigma_detail = index_detail("sigma is zero", i);
            break;
        }
    }
    report.conditions.push_back({Condition::SigmaNonzero, sigma_ok, sigma_detail});

    bool h1 = true, h1s = true;
    std::string h1_detail, h1s_detail;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ab = sd.a[i] * sd.b[i];
        const double s2 = sd.sigma[i] * sd.sigma[i];
        if (h1 && ab < 2 * s2) {
            h1 = false;
            h1_detail = index_detail("a*b < 2 sigma^2", i);
        }
        if (h1s && ab < 4 * s2) {
            h1s = false;
            h1s_detail = index_detail("a*b < 4 sigma^2", i);
        }
    }
    report.conditions.push_back({Condition::H1, h1, h1_detail});
    report.conditions.push_back({Condition::H1Strong, h1s, h1s_detail});

    report.usable = nonneg && bounded && sigma_ok;
    return report;
}

std::vector<int> identity_ordering(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
}

std::vector<int> reversed_ordering(int n) {
    std::vector<int> v = identity_ordering(n);
    std::reverse(v.begin(), v.end());
    return v;
}

BoundMatrixResult bound_matrix(const StateDepModel& sd, const std::vector<int>& ordering) {
    const Eigen::Index n = sd.n_regimes();
    if (ordering.size() != static_cast<std::size_t>(n))
        throw ContractError("ordering must list every regime exactly once");
    std::vector<int> rank(static_cast<std::size_t>(n), -1);
    for (int r = 0; r < static_cast<int>(ordering.size()); ++r) {
        int i = ordering[static_cast<std::size_t>(r)];
        if (i < 0 || i >= n || rank[static_cast<std::size_t>(i)] != -1)
            throw ContractError("ordering must be a permutation of the regimes");
        rank[static_cast<std::size_t>(i)] = r;
    }

    BoundMatrixResult result;
    result.q_tilde = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        bool had_positive = false;
        double offdiag_sum = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i) continue;
            const RateFunction& f = sd.rate(i, k);
            if (f.sup() > 0) had_positive = true;
            double value = rank[static_cast<std::size_t>(k)] < rank[static_cast<std::size_t>(i)]
                               ? f.sup()
                               : f.inf();
            result.q_tilde(i, k) = value;
            offdiag_sum += value;
        }
        result.q_tilde(i, i) = -offdiag_sum;
        if (had_positive && offdiag_sum == 0)
            result.degenerate_rows.push_back(static_cast<int>(i));
    }
    return result;
}

} // namespace cirregime
