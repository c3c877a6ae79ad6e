// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the number of
// failures.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cirregime/analyze.hpp"
#include "cirregime/classify.hpp"
#include "cirregime/model.hpp"
#include "cirregime/simulate.hpp"
#include "cirregime/spectral.hpp"

using namespace cirregime;

namespace {

constexpr std::uint64_t kSeed = 42;

ModelSpec make_model(std::initializer_list<double> a, std::initializer_list<double> b,
                     std::initializer_list<double> sigma) {
    ModelSpec spec;
    auto fill = [](std::initializer_list<double> xs) {
        Vector v(static_cast<Eigen::Index>(xs.size()));
        Eigen::Index i = 0;
        for (double x : xs) v[i++] = x;
        return v;
    };
    spec.a = fill(a);
    spec.b = fill(b);
    spec.sigma = fill(sigma);
    spec.q.resize(2, 2);
    spec.q << -1, 1, 1, -1;
    return spec;
}

ModelSpec heavy_model() { return make_model({2, -0.5}, {1, -4}, {1, 1}); }
ModelSpec light_model() { return make_model({2, 1}, {1, 2}, {1, 1}); }
ModelSpec transient_model() { return make_model({1, -2}, {2, -1}, {1, 1}); }

Matrix random_rate_matrix(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> unif(0.05, 2.0);
    Matrix q = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            if (i != j) q(i, j) = unif(rng);
        q(i, i) = -q.row(i).sum();
    }
    return q;
}

double dense_eta(const ModelSpec& spec, double p) {
    Matrix qp = spec.q;
    qp.diagonal() -= p * spec.a;
    Eigen::EigenSolver<Matrix> solver(qp);
    double max_real = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < qp.rows(); ++i)
        max_real = std::max(max_real, solver.eigenvalues()[i].real());
    return -max_real;
}

double median(std::vector<double> xs) {
    std::nth_element(xs.begin(), xs.begin() + static_cast<long>(xs.size() / 2), xs.end());
    return xs[xs.size() / 2];
}

// --- criteria ------------------------------------------------------------

bool criterion_kappa_closed_form(std::string& detail) {
    double k = kappa(heavy_model());
    detail = "kappa = " + std::to_string(k);
    return std::abs(k - 1.5) < 1e-6;
}

bool criterion_spectral_sanity(std::string& detail) {
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> coeff(-2.0, 2.0);
    double worst_eta0 = 0, worst_slope = 0, worst_oracle = 0;

    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(rng() % 7);
        ModelSpec spec;
        spec.a.resize(n);
        for (int i = 0; i < n; ++i) spec.a[i] = coeff(rng);
        spec.b = Vector::Ones(n);
        spec.sigma = Vector::Ones(n);
        spec.q = random_rate_matrix(rng, n);

        worst_eta0 = std::max(worst_eta0, std::abs(eta(spec, 0.0)));
        double slope = (eta(spec, 1e-5) - eta(spec, 0.0)) / 1e-5;
        worst_slope = std::max(worst_slope, std::abs(slope - drift_index(spec)));
    }
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(rng() % 5);
        ModelSpec spec;
        spec.a.resize(n);
        for (int i = 0; i < n; ++i) spec.a[i] = coeff(rng);
        spec.b = Vector::Ones(n);
        spec.sigma = Vector::Ones(n);
        spec.q = random_rate_matrix(rng, n);
        double p = coeff(rng) * 1.5;
        worst_oracle = std::max(worst_oracle, std::abs(eta(spec, p) - dense_eta(spec, p)));
    }
    char buffer[160];
    std::snprintf(buffer, sizeof(buffer),
                  "max |eta_0| = %.2e, max slope err = %.2e, max oracle err = %.2e",
                  worst_eta0, worst_slope, worst_oracle);
    detail = buffer;
    return worst_eta0 < 1e-10 && worst_slope < 1e-4 && worst_oracle < 1e-9;
}

bool criterion_sandwich(std::string& detail) {
    auto heavy = heavy_model();
    std::vector<double> t_grid;
    for (int i = 1; i <= 10; ++i) t_grid.push_back(static_cast<double>(i));
    bool pass = true;
    detail.clear();
    for (double p : {0.25, 0.5, 1.0}) {
        auto table = eta_sandwich_check(heavy, p, t_grid, 100000, kSeed);
        double rel = std::abs(-table.fitted_slope - table.eta_p) / std::abs(table.eta_p);
        char buffer[96];
        std::snprintf(buffer, sizeof(buffer), "p=%.2f: slope %.4f vs eta %.4f (%.1f%%); ",
                      p, -table.fitted_slope, table.eta_p, 100 * rel);
        detail += buffer;
        pass = pass && rel < 0.10;
    }
    return pass;
}

bool criterion_recurrence_desk(std::string& detail) {
    const long n = 1000;
    auto heavy = heavy_model();
    const Vector mu = invariant_measure(heavy).mu;
    std::vector<double> below_fraction;
    for (double horizon : {10.0, 50.0, 100.0}) {
        double below = 0;
        for (long p = 0; p < n; ++p) {
            std::mt19937_64 rng = stream_engine(kSeed + 10, static_cast<std::uint64_t>(p));
            auto draw = exact_terminal(heavy, 1.0, horizon / 2, horizon, rng, mu);
            if (draw.value < 10.0) below += 1;
        }
        below_fraction.push_back(below / static_cast<double>(n));
    }
    double spread = *std::max_element(below_fraction.begin(), below_fraction.end()) -
                    *std::min_element(below_fraction.begin(), below_fraction.end());

    auto transient = transient_model();
    std::vector<double> at_10, at_100;
    for (long p = 0; p < n; ++p) {
        std::mt19937_64 rng = stream_engine(kSeed + 11, static_cast<std::uint64_t>(p));
        at_10.push_back(exact_terminal(transient, 1.0, 5.0, 10.0, rng, mu).value);
        std::mt19937_64 rng2 = stream_engine(kSeed + 12, static_cast<std::uint64_t>(p));
        at_100.push_back(exact_terminal(transient, 1.0, 50.0, 100.0, rng2, mu).value);
    }
    double growth = median(at_100) / median(at_10);

    char buffer[160];
    std::snprintf(buffer, sizeof(buffer),
                  "P(r_T<10) = {%.3f, %.3f, %.3f} (spread %.3f); median growth %.1fx",
                  below_fraction[0], below_fraction[1], below_fraction[2], spread, growth);
    detail = buffer;
    return spread <= 0.05 && growth >= 10.0;
}

bool criterion_light_exp_moment(std::string& detail) {
    auto light = light_model();
    auto probe = exp_moment_probe(light, 0.25, 1000000, default_burn_in(light), kSeed);
    char buffer[128];
    std::snprintf(buffer, sizeof(buffer), "E[e^{r/4}] = %.4f, verdict %s",
                  probe.estimate, to_string(probe.verdict));
    detail = buffer;
    return probe.verdict == ProbeVerdict::Stabilizing;
}

bool criterion_heavy_moments(std::string& detail) {
    auto heavy = heavy_model();
    auto probe = moment_explosion_probe(heavy, {1.0, 2.0}, {10000, 100000, 1000000},
                                        default_burn_in(heavy), kSeed);
    double growth = probe.rows[5].estimate / probe.rows[3].estimate;

    auto sample = stationary_sample(heavy, 200000, default_burn_in(heavy), kSeed);
    double hill = hill_estimator(sample.values, default_hill_k(200000));

    char buffer[160];
    std::snprintf(buffer, sizeof(buffer),
                  "p=1 %s; p=2 %s (growth %.1fx); hill = %.3f",
                  to_string(probe.verdicts[0].second), to_string(probe.verdicts[1].second),
                  growth, hill);
    detail = buffer;
    return probe.verdicts[0].second == ProbeVerdict::Stabilizing &&
           probe.verdicts[1].second == ProbeVerdict::Exploding && hill >= 1.2 &&
           hill <= 1.8;
}

bool criterion_time_change(std::string& detail) {
    auto heavy = bessel_time_change_check(heavy_model(), 1.0, 10000, kSeed);
    auto light = bessel_time_change_check(light_model(), 1.0, 10000, kSeed + 1);
    char buffer[96];
    std::snprintf(buffer, sizeof(buffer), "KS heavy = %.4f, light = %.4f", heavy.ks,
                  light.ks);
    detail = buffer;
    return heavy.pass && light.pass;
}

bool criterion_ergodic_averages(std::string& detail) {
    bool pass = true;
    detail.clear();
    for (const auto& [name, spec] :
         {std::pair<const char*, ModelSpec>{"heavy", heavy_model()},
          std::pair<const char*, ModelSpec>{"light", light_model()}}) {
        auto avg = ergodic_average(
            spec, [](double, int regime) { return regime == 0 ? 1.0 : 0.0; }, 10000.0,
            kSeed + 20, 0.01);
        char buffer[96];
        std::snprintf(buffer, sizeof(buffer), "%s occupation %.4f; ", name, avg.value);
        detail += buffer;
        pass = pass && std::abs(avg.value - 0.5) <= 0.01;
    }

    auto light = light_model();
    auto sample = stationary_sample(light, 50000, default_burn_in(light), kSeed + 21);
    double ensemble = 0;
    for (double v : sample.values) ensemble += v;
    ensemble /= static_cast<double>(sample.values.size());
    auto value_avg =
        ergodic_average(light, [](double r, int) { return r; }, 10000.0, kSeed + 22, 0.01);
    double rel = std::abs(value_avg.value - ensemble) / ensemble;
    char buffer[96];
    std::snprintf(buffer, sizeof(buffer), "value avg %.4f vs ensemble %.4f (%.1f%%)",
                  value_avg.value, ensemble, 100 * rel);
    detail += buffer;
    return pass && rel < 0.05;
}

bool criterion_exact_sampler(std::string& detail) {
    std::mt19937_64 param_rng(kSeed + 30);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst_mean_z = 0, worst_var_z = 0;
    const long n = 100000;
    for (int set = 0; set < 10; ++set) {
        double a = (0.3 + 1.7 * unif(param_rng)) * (set % 2 == 0 ? 1.0 : -1.0);
        double sigma = 0.3 + 0.7 * unif(param_rng);
        double b = (1.0 + 2.0 * unif(param_rng)) * 2 * sigma * sigma / a;  // H1 with slack
        double x = 0.1 + 4.9 * unif(param_rng);
        double dt = 0.1 + 0.9 * unif(param_rng);

        std::mt19937_64 rng = stream_engine(kSeed + 31, static_cast<std::uint64_t>(set));
        std::vector<double> draws(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i)
            draws[static_cast<std::size_t>(i)] = exact_cir_step(a, b, sigma, x, dt, rng);

        double decay = std::exp(-a * dt);
        double mean_expected = b + (x - b) * decay;
        double var_expected = x * (4 * sigma * sigma / a) * (decay - decay * decay) +
                              (2 * b * sigma * sigma / a) * (1 - decay) * (1 - decay);

        double mean = 0;
        for (double d : draws) mean += d;
        mean /= static_cast<double>(n);
        double m2 = 0, m4 = 0;
        for (double d : draws) {
            double c = d - mean;
            m2 += c * c;
            m4 += c * c * c * c;
        }
        m2 /= static_cast<double>(n);
        m4 /= static_cast<double>(n);

        double z_mean = std::abs(mean - mean_expected) / std::sqrt(m2 / n);
        double z_var = std::abs(m2 - var_expected) / std::sqrt((m4 - m2 * m2) / n);
        worst_mean_z = std::max(worst_mean_z, z_mean);
        worst_var_z = std::max(worst_var_z, z_var);
    }
    char buffer[96];
    std::snprintf(buffer, sizeof(buffer), "worst |z| over 10 sets: mean %.2f, var %.2f",
                  worst_mean_z, worst_var_z);
    detail = buffer;
    return worst_mean_z < 3.0 && worst_var_z < 3.0;
}

bool criterion_m_matrix(std::string& detail) {
    std::mt19937_64 rng(kSeed + 40);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    int agree = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
        Matrix b(5, 5);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) b(i, j) = unif(rng);
        Eigen::EigenSolver<Matrix> b_solver(b);
        double rho = 0;
        for (int i = 0; i < 5; ++i)
            rho = std::max(rho, std::abs(b_solver.eigenvalues()[i]));
        double factor = trial % 2 == 0 ? 1.0 + unif(rng) : unif(rng);
        Matrix a = factor * rho * Matrix::Identity(5, 5) - b;

        Eigen::EigenSolver<Matrix> a_solver(a);
        bool all_real_positive = true;
        for (int i = 0; i < 5; ++i) {
            auto ev = a_solver.eigenvalues()[i];
            if (std::abs(ev.imag()) < 1e-9 && ev.real() <= 0) all_real_positive = false;
        }
        if (is_nonsingular_m_matrix(a).verdict == all_real_positive) ++agree;
    }

    std::uniform_real_distribution<double> coeff(-2.0, 2.0);
    int contradictions = 0, decided = 0;
    for (int trial = 0; trial < 30; ++trial) {
        int n = 2 + static_cast<int>(rng() % 3);
        ModelSpec spec;
        spec.a.resize(n);
        for (int i = 0; i < n; ++i) spec.a[i] = coeff(rng);
        spec.b = Vector::Ones(n);
        spec.sigma = Vector::Ones(n);
        spec.q = random_rate_matrix(rng, n);
        auto drift_verdict = classify_recurrence(spec).verdict;
        auto sd_verdict =
            classify_recurrence_state_dep(StateDepModel::from_model_spec(spec)).verdict;
        if (sd_verdict != Recurrence::Inconclusive) {
            ++decided;
            if (sd_verdict != drift_verdict) ++contradictions;
        }
    }
    char buffer[128];
    std::snprintf(buffer, sizeof(buffer),
                  "eigen-criterion agreement %d/%d; %d decided, %d contradictions", agree,
                  trials, decided, contradictions);
    detail = buffer;
    return agree == trials && contradictions == 0;
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* label;
        double budget_seconds;
        std::function<bool(std::string&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "kappa closed form", 1, criterion_kappa_closed_form},
        {2, "spectral sanity", 10, criterion_spectral_sanity},
        {3, "exponential-functional decay sandwich", 120, criterion_sandwich},
        {4, "recurrence/transience at desk scale", 120, criterion_recurrence_desk},
        {5, "light tail: exponential moment stabilizes", 180, criterion_light_exp_moment},
        {6, "heavy tail: moment threshold and Hill index", 300, criterion_heavy_moments},
        {7, "squared-Bessel time-change identity", 60, criterion_time_change},
        {8, "ergodic averages match the invariant law", 60, criterion_ergodic_averages},
        {9, "exact sampler conditional moments", 30, criterion_exact_sampler},
        {10, "M-matrix machinery", 10, criterion_m_matrix},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = criterion.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds > criterion.budget_seconds) {
            ok = false;
            detail += " [over budget]";
        }
        std::printf("%s  %2d  %-45s (%.1fs)  %s\n", ok ? "PASS" : "FAIL", criterion.id,
                    criterion.label, seconds, detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
