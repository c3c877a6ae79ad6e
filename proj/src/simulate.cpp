#include "cirregime/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace cirregime {

namespace {

int draw_from_distribution(std::mt19937_64& rng, const Vector& weights) {
    double u = draw_uniform(rng) * weights.sum();
    double acc = 0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size() - 1);
}

int draw_jump_target(std::mt19937_64& rng, const Matrix& q, int i) {
    const double rate = -q(i, i);
    double u = draw_uniform(rng) * rate;
    double acc = 0;
    int last = -1;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (j == static_cast<Eigen::Index>(i) || q(i, j) <= 0) continue;
        acc += q(i, j);
        last = static_cast<int>(j);
        if (u < acc) return last;
    }
    return last;
}

// (exp(u) - 1)/u with the removable singularity filled in.
double expm1_over(double u) {
    if (std::abs(u) < 1e-8) return 1.0 + 0.5 * u + u * u / 6.0;
    return std::expm1(u) / u;
}

double poisson_gamma_draw(std::mt19937_64& rng, double dof, double scale,
                          double noncentrality) {
    const double half = 0.5 * noncentrality;
    double k = 0;
    if (half > 0) {
        if (half < 1e9) {
            k = static_cast<double>(draw_poisson(rng, half));
        } else {
            // counts beyond integer range: the normal limit of the Poisson
            // is exact to ~1/sqrt(half) here
            k = std::round(half + std::sqrt(half) * draw_normal(rng));
            if (k < 0) k = 0;
        }
    }
    return draw_gamma(rng, 0.5 * dof + k, 2.0 * scale);
}

void euler_increment(double a, double b, double sigma, double h, double z,
                     double& r, long& violations) {
    const double rp = std::max(r, 0.0);
    r += a * (b - rp) * h + 2.0 * sigma * std::sqrt(rp) * std::sqrt(h) * z;
    if (r < 0) ++violations;
}

void run_in_blocks(int n_paths, int threads, const std::function<void(int, int)>& body) {
    threads = std::max(1, std::min(threads, n_paths));
    if (threads == 1) {
        body(0, n_paths);
        return;
    }
    std::vector<std::thread> pool;
    int block = (n_paths + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        int lo = t * block;
        int hi = std::min(n_paths, lo + block);
        if (lo >= hi) break;
        pool.emplace_back(body, lo, hi);
    }
    for (auto& th : pool) th.join();
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty())
        throw ContractError("time grid must be nonempty");
    if (grid.front() < 0)
        throw ContractError("time grid must start at or after 0");
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (!(grid[g] > grid[g - 1]))
            throw ContractError("time grid must be strictly increasing");
}

} // namespace

int RegimeSkeleton::state_at(double t) const {
    auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    return states[static_cast<std::size_t>(it - jump_times.begin())];
}

double RegimeSkeleton::integrate(const Vector& coeff, double t) const {
    double total = 0, prev = 0;
    std::size_t k = 0;
    for (; k < jump_times.size() && jump_times[k] < t; ++k) {
        total += coeff[states[k]] * (jump_times[k] - prev);
        prev = jump_times[k];
    }
    total += coeff[states[k]] * (t - prev);
    return total;
}

RegimeSkeleton sample_regime_path(const ModelSpec& spec, double horizon,
                                  std::mt19937_64& rng, const Vector* initial) {
    if (!(horizon > 0))
        throw ContractError("horizon must be positive");
    const Eigen::Index n = spec.n_regimes();
    Vector default_init;
    if (initial == nullptr) {
        default_init = invariant_measure(spec).mu;
        initial = &default_init;
    }

    RegimeSkeleton skel;
    skel.horizon = horizon;
    int state = draw_from_distribution(rng, *initial);
    skel.states.push_back(state);

    double t = 0;
    while (true) {
        double rate = -spec.q(state, state);
        if (rate <= 0) {
            if (n == 1) break;  // single-regime model: no switching at all
            throw ModelError("absorbing regime encountered; rate matrix is not irreducible");
        }
        t += draw_exponential(rng, rate);
        if (t >= horizon) break;
        state = draw_jump_target(rng, spec.q, state);
        skel.jump_times.push_back(t);
        skel.states.push_back(state);
    }
    return skel;
}

RegimeSkeleton sample_regime_path(const ModelSpec& spec, double horizon,
                                  std::uint64_t seed) {
    std::mt19937_64 rng = stream_engine(seed, 0);
    return sample_regime_path(spec, horizon, rng);
}

RegimeSkeleton sample_regime_path_state_dep(
    const StateDepModel& sd, const std::function<double(double)>& r_at,
    double horizon, std::mt19937_64& rng, const Vector* initial) {
    if (!(horizon > 0))
        throw ContractError("horizon must be positive");
    const Eigen::Index n = sd.n_regimes();
    Vector uniform_init;
    if (initial == nullptr) {
        uniform_init = Vector::Constant(n, 1.0 / static_cast<double>(n));
        initial = &uniform_init;
    }

    RegimeSkeleton skel;
    skel.horizon = horizon;
    int state = draw_from_distribution(rng, *initial);
    skel.states.push_back(state);

    double t = 0;
    while (true) {
        double dominating = sd.sup_total_rate(state);
        if (dominating <= 0) break;  // no channel can ever fire
        t += draw_exponential(rng, dominating);
        if (t >= horizon) break;
        double x = r_at(t);
        if (!(x > 0))
            throw ContractError("state-dependent rate callback must return a positive value");
        double u = draw_uniform(rng) * dominating;
        double acc = 0;
        int target = -1;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == state) continue;
            acc += sd.rate(state, j)(x);
            if (u < acc) {
                target = static_cast<int>(j);
                break;
            }
        }
        if (target < 0) continue;  // thinned proposal
        state = target;
        skel.jump_times.push_back(t);
        skel.states.push_back(state);
    }
    return skel;
}

RegimeSkeleton sample_regime_path_state_dep(
    const StateDepModel& sd, const std::function<double(double)>& r_at,
    double horizon, std::uint64_t seed) {
    std::mt19937_64 rng = stream_engine(seed, 0);
    return sample_regime_path_state_dep(sd, r_at, horizon, rng);
}

double exact_cir_step(double a, double b, double sigma, double x, double dt,
                      std::mt19937_64& rng) {
    if (!(dt > 0))
        throw ContractError("exact CIR step needs dt > 0");
    if (!(x > 0))
        throw ContractError("exact CIR step needs x > 0");
    const double s2 = sigma * sigma;
    const double dof = a * b / s2;
    if (dof < 2)
        throw ContractError(
            "exact CIR step needs a*b >= 2*sigma^2; the boundary would be attainable");

    const double u = a * dt;
    // c = sigma^2 (1 - e^{-a dt})/a, with the series limit near a dt = 0.
    const double c = s2 * dt * expm1_over(-u);
    const double em = std::exp(-u);
    if (!std::isfinite(c) || !std::isfinite(em))
        throw NumericError("exact CIR step overflow: |a| dt too large", u);
    const double noncentrality = x * em / c;
    return poisson_gamma_draw(rng, dof, c, noncentrality);
}

double exact_cir_step(double a, double b, double sigma, double x, double dt,
                      std::uint64_t seed) {
    std::mt19937_64 rng = stream_engine(seed, 0);
    return exact_cir_step(a, b, sigma, x, dt, rng);
}

double exact_bessel_step(double drift, double sigma, double x, double dt,
                         std::mt19937_64& rng) {
    if (!(dt > 0) || !(x > 0))
        throw ContractError("exact squared-Bessel step needs x > 0 and dt > 0");
    const double s2 = sigma * sigma;
    const double dof = drift / s2;  // a -> 0 limit of the CIR transition
    if (dof < 2)
        throw ContractError("exact squared-Bessel step needs drift >= 2 sigma^2");
    const double c = s2 * dt;
    return poisson_gamma_draw(rng, dof, c, x / c);
}

namespace {

// Chain conditional exact steps across one path: over each holding
// interval the process is a constant-coefficient CIR, and grid points
// interior to the interval are filled by composing the transition law.
class ExactWalker {
public:
    ExactWalker(const ModelSpec& spec, const RegimeSkeleton& skel, double x0)
        : spec_(spec), skel_(skel), t_(0), r_(x0), interval_(0) {}

    double advance_to(double t_target, std::mt19937_64& rng) {
        while (interval_ < skel_.jump_times.size() &&
               skel_.jump_times[interval_] < t_target) {
            step_to(skel_.jump_times[interval_], rng);
            ++interval_;
        }
        step_to(t_target, rng);
        return r_;
    }
    int regime() const { return skel_.states[interval_]; }
    double value() const { return r_; }

private:
    void step_to(double t_next, std::mt19937_64& rng) {
        double dt = t_next - t_;
        if (dt > 0) {
            int i = skel_.states[interval_];
            r_ = exact_cir_step(spec_.a[i], spec_.b[i], spec_.sigma[i], r_, dt, rng);
        }
        t_ = t_next;
    }

    const ModelSpec& spec_;
    const RegimeSkeleton& skel_;
    double t_;
    double r_;
    std::size_t interval_;
};

} // namespace

TerminalDraw exact_terminal(const ModelSpec& spec, double x0, double t_mid,
                            double t_end, std::mt19937_64& rng,
                            const Vector& initial_dist) {
    if (!(t_mid > 0) || !(t_end >= t_mid))
        throw ContractError("exact_terminal needs 0 < t_mid <= t_end");
    RegimeSkeleton skel = sample_regime_path(spec, t_end, rng, &initial_dist);
    ExactWalker walker(spec, skel, x0);
    TerminalDraw draw;
    draw.mid_value = walker.advance_to(t_mid, rng);
    draw.mid_regime = walker.regime();
    draw.value = walker.advance_to(t_end, rng);
    draw.regime = walker.regime();
    return draw;
}

PathBundle simulate_paths(const ModelSpec& spec, double x0,
                          const std::vector<double>& grid, int n_paths,
                          Scheme scheme, std::uint64_t seed, int threads) {
    check_grid(grid);
    if (!(x0 > 0))
        throw ContractError("x0 must be positive");
    if (n_paths < 1)
        throw ContractError("need at least one path");
    ValidationReport report = validate(spec);
    if (!report.usable && !(report.passed(Condition::Conservative) &&
                            report.passed(Condition::Irreducible) &&
                            report.passed(Condition::SigmaNonzero)))
        throw ContractError(std::string("model is not usable: ") + report.first_failing());
    if (scheme == Scheme::ExactNCChi2 && !report.h1())
        throw ContractError("the exact scheme requires H1 (a_i b_i >= 2 sigma_i^2)");

    const Vector mu = invariant_measure(spec).mu;
    const auto n_times = static_cast<Eigen::Index>(grid.size());

    PathBundle bundle;
    bundle.time_grid = grid;
    bundle.seed = seed;
    bundle.scheme = scheme;
    bundle.r.resize(n_paths, n_times);
    bundle.regimes.resize(n_paths, n_times);

    std::vector<long> violations(static_cast<std::size_t>(n_paths), 0);

    auto run_exact = [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            std::mt19937_64 rng = stream_engine(seed, static_cast<std::uint64_t>(p));
            RegimeSkeleton skel = sample_regime_path(spec, grid.back(), rng, &mu);
            ExactWalker walker(spec, skel, x0);
            for (Eigen::Index g = 0; g < n_times; ++g) {
                bundle.r(p, g) = grid[static_cast<std::size_t>(g)] == 0
                                     ? x0
                                     : walker.advance_to(grid[static_cast<std::size_t>(g)], rng);
                bundle.regimes(p, g) = walker.regime();
            }
        }
    };

    auto run_euler = [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            std::mt19937_64 rng = stream_engine(seed, static_cast<std::uint64_t>(p));
            RegimeSkeleton skel = sample_regime_path(spec, grid.back(), rng, &mu);
            double r = x0;
            long viol = 0;
            double t = grid[0];
            for (Eigen::Index g = 0; g < n_times; ++g) {
                double target = grid[static_cast<std::size_t>(g)];
                if (target > t) {
                    // regime frozen at the step start
                    int i = skel.state_at(t);
                    euler_increment(spec.a[i], spec.b[i], spec.sigma[i], target - t,
                                    draw_normal(rng), r, viol);
                    t = target;
                }
                bundle.r(p, g) = std::max(r, 0.0);
                bundle.regimes(p, g) = skel.state_at(target);
            }
            violations[static_cast<std::size_t>(p)] = viol;
        }
    };

    if (scheme == Scheme::ExactNCChi2)
        run_in_blocks(n_paths, threads, run_exact);
    else
        run_in_blocks(n_paths, threads, run_euler);

    for (long v : violations) bundle.positivity_violations += v;
    return bundle;
}

PathBundle simulate_paths(const StateDepModel& sd, double x0,
                          const std::vector<double>& grid, int n_paths,
                          Scheme scheme, std::uint64_t seed, int threads) {
    if (sd.is_constant_rate())
        return simulate_paths(sd.to_model_spec(), x0, grid, n_paths, scheme, seed,
                              threads);
    if (scheme == Scheme::ExactNCChi2)
        throw ContractError(
            "the exact scheme requires state-independent switching rates; "
            "use the full-truncation Euler scheme");
    check_grid(grid);
    if (!(x0 > 0))
        throw ContractError("x0 must be positive");
    if (n_paths < 1)
        throw ContractError("need at least one path");
    ValidationReport report = validate(sd);
    if (!report.usable)
        throw ContractError(std::string("model is not usable: ") + report.first_failing());

    const Eigen::Index n = sd.n_regimes();
    const auto n_times = static_cast<Eigen::Index>(grid.size());

    PathBundle bundle;
    bundle.time_grid = grid;
    bundle.seed = seed;
    bundle.scheme = scheme;
    bundle.r.resize(n_paths, n_times);
    bundle.regimes.resize(n_paths, n_times);

    std::vector<long> violations(static_cast<std::size_t>(n_paths), 0);

    auto run = [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            std::mt19937_64 rng = stream_engine(seed, static_cast<std::uint64_t>(p));
            int state = static_cast<int>(
                std::min<double>(static_cast<double>(n) - 1,
                                 std::floor(draw_uniform(rng) * static_cast<double>(n))));
            double r = x0;
            long viol = 0;
            double t = grid[0];
            double dominating = sd.sup_total_rate(state);
            double next_prop = dominating > 0
                                   ? t + draw_exponential(rng, dominating)
                                   : std::numeric_limits<double>::infinity();
            for (Eigen::Index g = 0; g < n_times; ++g) {
                double target = grid[static_cast<std::size_t>(g)];
                while (next_prop < target) {
                    double h = next_prop - t;
                    if (h > 0)
                        euler_increment(sd.a[state], sd.b[state], sd.sigma[state], h,
                                        draw_normal(rng), r, viol);
                    t = next_prop;
                    double x = std::max(r, 0.0);
                    double u = draw_uniform(rng) * dominating;
                    double acc = 0;
                    for (Eigen::Index j = 0; j < n; ++j) {
                        if (j == state) continue;
                        acc += sd.rate(state, j)(x);
                        if (u < acc) {
                            state = static_cast<int>(j);
                            dominating = sd.sup_total_rate(state);
                            break;
                        }
                    }
                    next_prop = dominating > 0
                                    ? t + draw_exponential(rng, dominating)
                                    : std::numeric_limits<double>::infinity();
                }
                if (target > t) {
                    euler_increment(sd.a[state], sd.b[state], sd.sigma[state],
                                    target - t, draw_normal(rng), r, viol);
                    t = target;
                }
                bundle.r(p, g) = std::max(r, 0.0);
                bundle.regimes(p, g) = state;
            }
            violations[static_cast<std::size_t>(p)] = viol;
        }
    };

    run_in_blocks(n_paths, threads, run);
    for (long v : violations) bundle.positivity_violations += v;
    return bundle;
}

TimeChange::TimeChange(const Vector& a, const RegimeSkeleton& skeleton)
    : horizon_(skeleton.horizon) {
    const std::size_t m = skeleton.n_intervals();
    t0_.resize(m);
    a_.resize(m);
    ell0_.resize(m);
    c0_.resize(m);
    double t0 = 0, ell0 = 1, c0 = 0;
    for (std::size_t k = 0; k < m; ++k) {
        t0_[k] = t0;
        a_[k] = a[skeleton.states[k]];
        ell0_[k] = ell0;
        c0_[k] = c0;
        double t1 = k < skeleton.jump_times.size() ? skeleton.jump_times[k]
                                                   : skeleton.horizon;
        double len = t1 - t0;
        c0 += ell0 * len * expm1_over(a_[k] * len);
        ell0 *= std::exp(a_[k] * len);
        t0 = t1;
    }
}

std::size_t TimeChange::interval_of_t(double t) const {
    auto it = std::upper_bound(t0_.begin(), t0_.end(), t);
    return static_cast<std::size_t>(it - t0_.begin()) - 1;
}

std::size_t TimeChange::interval_of_u(double u) const {
    auto it = std::upper_bound(c0_.begin(), c0_.end(), u);
    return static_cast<std::size_t>(it - c0_.begin()) - 1;
}

double TimeChange::ell(double t) const {
    if (t < 0 || t > horizon_)
        throw ContractError("time outside the skeleton horizon");
    std::size_t k = interval_of_t(t);
    return ell0_[k] * std::exp(a_[k] * (t - t0_[k]));
}

double TimeChange::C(double t) const {
    if (t < 0 || t > horizon_)
        throw ContractError("time outside the skeleton horizon");
    std::size_t k = interval_of_t(t);
    double s = t - t0_[k];
    return c0_[k] + ell0_[k] * s * expm1_over(a_[k] * s);
}

double TimeChange::A(double u) const {
    if (u < 0 || u > C(horizon_) * (1 + 1e-12))
        throw ContractError("transformed time outside the skeleton range");
    std::size_t k = interval_of_u(u);
    double w = (u - c0_[k]) / ell0_[k];
    double s = a_[k] == 0 ? w : std::log1p(a_[k] * w) / a_[k];
    return std::min(t0_[k] + s, horizon_);
}

TimeChange bessel_time_change(const ModelSpec& spec, const RegimeSkeleton& skeleton) {
    return TimeChange(spec.a, skeleton);
}

TransformedPath rho_from_r(const TimeChange& tc, const std::vector<double>& times,
                           const std::vector<double>& r_values) {
    if (times.size() != r_values.size())
        throw ContractError("path grid and values must have matching length");
    TransformedPath out;
    out.times.reserve(times.size());
    out.values.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        out.times.push_back(tc.C(times[i]));
        out.values.push_back(tc.ell(times[i]) * r_values[i]);
    }
    return out;
}

TransformedPath r_from_rho(const TimeChange& tc, const std::vector<double>& rho_times,
                           const std::vector<double>& rho_values) {
    if (rho_times.size() != rho_values.size())
        throw ContractError("path grid and values must have matching length");
    TransformedPath out;
    out.times.reserve(rho_times.size());
    out.values.reserve(rho_times.size());
    for (std::size_t i = 0; i < rho_times.size(); ++i) {
        double t = tc.A(rho_times[i]);
        out.times.push_back(t);
        out.values.push_back(rho_values[i] / tc.ell(t));
    }
    return out;
}

} // namespace cirregime
