#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cirregime/model.hpp"
#include "test_helpers.hpp"

using namespace cirregime;
using testhelp::make_model;
using testhelp::symmetric_unit_q;
using Catch::Approx;

TEST_CASE("validate: reference heavy model passes everything but H1-strong", "[model]") {
    auto report = validate(testhelp::heavy_reference());
    CHECK(report.usable);
    CHECK(report.passed(Condition::Conservative));
    CHECK(report.passed(Condition::Irreducible));
    CHECK(report.passed(Condition::SigmaNonzero));
    CHECK(report.h1());            // both products equal 2 sigma^2 exactly
    CHECK_FALSE(report.h1_strong());  // 2 < 4 in both regimes
    CHECK(std::string(report.first_failing()) == "H1-strong");
}

TEST_CASE("validate: H1 fails when a_i b_i < 2 sigma_i^2", "[model]") {
    auto spec = make_model({1, 1}, {1, 1}, {1, 1}, symmetric_unit_q());
    auto report = validate(spec);
    CHECK_FALSE(report.h1());
    CHECK_FALSE(report.usable);
    CHECK(std::string(report.first_failing()) == "H1");
}

TEST_CASE("validate: missing return path breaks irreducibility", "[model]") {
    Matrix q(2, 2);
    q << -1, 1, 0, 0;
    auto spec = make_model({2, 1}, {1, 2}, {1, 1}, q);
    auto report = validate(spec);
    CHECK(report.passed(Condition::Conservative));
    CHECK_FALSE(report.passed(Condition::Irreducible));
}

TEST_CASE("validate: structural problems throw, conditions do not", "[model]") {
    auto spec = testhelp::heavy_reference();
    spec.q.resize(2, 3);
    CHECK_THROWS_AS(validate(spec), StructuralError);

    auto bad = testhelp::heavy_reference();
    bad.a[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(validate(bad), StructuralError);

    ModelSpec empty;
    CHECK_THROWS_AS(validate(empty), StructuralError);
}

TEST_CASE("validate is pure", "[model]") {
    auto spec = testhelp::heavy_reference();
    auto r1 = validate(spec);
    auto r2 = validate(spec);
    REQUIRE(r1.conditions.size() == r2.conditions.size());
    for (std::size_t i = 0; i < r1.conditions.size(); ++i) {
        CHECK(r1.conditions[i].code == r2.conditions[i].code);
        CHECK(r1.conditions[i].passed == r2.conditions[i].passed);
    }
}

TEST_CASE("invariant measure: symmetric chain is uniform", "[model]") {
    auto mu = invariant_measure(testhelp::heavy_reference()).mu;
    CHECK(mu[0] == Approx(0.5).margin(1e-14));
    CHECK(mu[1] == Approx(0.5).margin(1e-14));
}

TEST_CASE("invariant measure: hand-solved 2x2 balance", "[model]") {
    Matrix q(2, 2);
    q << -2, 2, 1, -1;
    auto spec = make_model({1, 1}, {2, 2}, {1, 1}, q);
    auto mu = invariant_measure(spec).mu;
    CHECK(mu[0] == Approx(1.0 / 3.0).margin(1e-13));
    CHECK(mu[1] == Approx(2.0 / 3.0).margin(1e-13));
}

TEST_CASE("invariant measure: balance residual below 1e-12 on random chains", "[model]") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 2 + static_cast<int>(rng() % 7);
        auto spec = make_model({1, 1}, {1, 1}, {1, 1}, Matrix());
        spec.a = Vector::Ones(n);
        spec.b = Vector::Ones(n);
        spec.sigma = Vector::Ones(n);
        spec.q = testhelp::random_rate_matrix(rng, n);
        auto mu = invariant_measure(spec).mu;
        CHECK((mu.transpose() * spec.q).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(mu.sum() == Approx(1.0).margin(1e-14));
        CHECK(mu.minCoeff() > 0);
    }
}

TEST_CASE("invariant measure commutes with relabeling", "[model]") {
    std::mt19937_64 rng(11);
    auto spec = make_model({1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1},
                           testhelp::random_rate_matrix(rng, 4));
    auto mu = invariant_measure(spec).mu;

    std::vector<int> perm{2, 0, 3, 1};
    ModelSpec relabeled = spec;
    for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s)
            relabeled.q(r, s) = spec.q(perm[static_cast<std::size_t>(r)],
                                       perm[static_cast<std::size_t>(s)]);
    auto mu_perm = invariant_measure(relabeled).mu;
    for (int r = 0; r < 4; ++r)
        CHECK(mu_perm[r] == Approx(mu[perm[static_cast<std::size_t>(r)]]).margin(1e-12));
}

TEST_CASE("drift index: weighted sums and linearity", "[model]") {
    CHECK(drift_index(testhelp::heavy_reference()) == Approx(0.75).margin(1e-13));
    CHECK(drift_index(testhelp::transient_reference()) == Approx(-0.5).margin(1e-13));

    // constant a integrates to itself against any chain
    std::mt19937_64 rng(3);
    auto spec = make_model({0.7, 0.7, 0.7}, {1, 1, 1}, {0.5, 0.5, 0.5},
                           testhelp::random_rate_matrix(rng, 3));
    CHECK(drift_index(spec) == Approx(0.7).margin(1e-13));

    // linear in a for fixed q
    auto m = invariant_measure(spec);
    ModelSpec scaled = spec;
    scaled.a = 2.0 * spec.a + Vector::Constant(3, 0.3);
    CHECK(drift_index(scaled, m) ==
          Approx(2.0 * drift_index(spec, m) + 0.3).margin(1e-13));
}

TEST_CASE("invariant measure rejects reducible chains", "[model]") {
    Matrix q(2, 2);
    q << -1, 1, 0, 0;
    auto spec = make_model({1, 1}, {2, 2}, {1, 1}, q);
    CHECK_THROWS_AS(invariant_measure(spec), ContractError);
}

TEST_CASE("rate functions: closed-family evaluation and exact bounds", "[model]") {
    auto c = RateFunction::constant(2.0);
    CHECK(c(0.5) == 2.0);
    CHECK(c.sup() == 2.0);
    CHECK(c.inf() == 2.0);

    auto lg = RateFunction::logistic(1.0, 3.0, 1.0, 2.0);
    CHECK(lg.inf() == 1.0);
    CHECK(lg.sup() == 3.0);
    CHECK(lg(1.0) == Approx(2.0));        // midpoint
    CHECK(lg(100.0) == Approx(3.0).margin(1e-9));
    CHECK(lg(-100.0) == Approx(1.0).margin(1e-9));

    auto pw = RateFunction::piecewise({1.0, 2.0}, {0.5, 1.5, 1.0});
    CHECK(pw(0.0) == 0.5);
    CHECK(pw(1.0) == 1.5);   // right-continuous at the break
    CHECK(pw(1.99) == 1.5);
    CHECK(pw(5.0) == 1.0);
    CHECK(pw.inf() == 0.5);
    CHECK(pw.sup() == 1.5);

    CHECK_THROWS_AS(RateFunction::logistic(3.0, 1.0, 0.0, 1.0), StructuralError);
    CHECK_THROWS_AS(RateFunction::piecewise({2.0, 1.0}, {1, 1, 1}), StructuralError);
}

TEST_CASE("bound matrix: constant rates reproduce the rate matrix", "[model]") {
    auto sd = StateDepModel::from_model_spec(testhelp::heavy_reference());
    auto bm = bound_matrix(sd, identity_ordering(2));
    CHECK(bm.q_tilde.isApprox(testhelp::heavy_reference().q));
    CHECK(bm.degenerate_rows.empty());
}

TEST_CASE("bound matrix: sup below the diagonal, inf above", "[model]") {
    auto sd = StateDepModel::from_model_spec(testhelp::light_reference());
    sd.rates[1] = RateFunction::logistic(1.0, 3.0, 1.0, 1.0);  // q_12
    sd.rates[2] = RateFunction::constant(2.0);                 // q_21

    auto bm = bound_matrix(sd, identity_ordering(2));
    Matrix expected(2, 2);
    expected << -1, 1, 2, -2;
    CHECK(bm.q_tilde.isApprox(expected));

    // reversing the ordering swaps the sup/inf roles
    auto bm_rev = bound_matrix(sd, reversed_ordering(2));
    Matrix expected_rev(2, 2);
    expected_rev << -3, 3, 2, -2;
    CHECK(bm_rev.q_tilde.isApprox(expected_rev));
}

TEST_CASE("bound matrix: rows always sum to zero", "[model]") {
    std::mt19937_64 rng(23);
    auto spec = make_model({1, -1, 1}, {3, -3, 3}, {1, 1, 1},
                           testhelp::random_rate_matrix(rng, 3));
    auto sd = StateDepModel::from_model_spec(spec);
    sd.rates[1] = RateFunction::logistic(0.2, 1.7, 2.0, 0.5);
    sd.rates[5] = RateFunction::piecewise({1.0}, {0.4, 2.2});
    for (const auto& ordering :
         {identity_ordering(3), reversed_ordering(3), std::vector<int>{1, 2, 0}}) {
        auto bm = bound_matrix(sd, ordering);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(bm.q_tilde.row(i).sum()) < 1e-14);
            for (int k = 0; k < 3; ++k) {
                if (i == k) continue;
                CHECK(bm.q_tilde(i, k) >= sd.rate(i, k).inf());
                CHECK(bm.q_tilde(i, k) <= sd.rate(i, k).sup());
            }
        }
    }
}

TEST_CASE("bound matrix: warns when a live row degenerates", "[model]") {
    auto sd = StateDepModel::from_model_spec(testhelp::light_reference());
    sd.rates[1] = RateFunction::logistic(0.0, 2.0, 1.0, 1.0);  // inf 0, sup 2

    auto bm = bound_matrix(sd, identity_ordering(2));  // rank(2) > rank(1): inf used
    REQUIRE(bm.degenerate_rows.size() == 1);
    CHECK(bm.degenerate_rows[0] == 0);

    CHECK_THROWS_AS(bound_matrix(sd, std::vector<int>{0, 0}), ContractError);
}

TEST_CASE("state-dependent validation", "[model]") {
    auto sd = StateDepModel::from_model_spec(testhelp::heavy_reference());
    auto report = validate(sd);
    CHECK(report.usable);
    CHECK(report.passed(Condition::RatesNonnegative));
    CHECK(report.passed(Condition::RatesBounded));
    CHECK(report.h1());

    sd.rates[1] = RateFunction::constant(-0.5);
    CHECK_FALSE(validate(sd).passed(Condition::RatesNonnegative));
}
