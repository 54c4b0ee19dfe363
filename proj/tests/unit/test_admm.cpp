#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fastglz/admm.hpp"
#include "fastglz/error.hpp"
#include "fastglz/reference_oracle.hpp"
#include "fastglz/regpath.hpp"
#include "fastglz/synthetic.hpp"

using namespace fastglz;

namespace {

Vector dense(const SparseVector& w) { return Vector(w); }

bool same_result(const FitResult& a, const FitResult& b) {
    return dense(a.weights) == dense(b.weights) && a.objective == b.objective &&
           a.iterations == b.iterations && a.converged == b.converged;
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("configuration") {
    AdmmConfig c;
    c.lambda1 = 0.5;
    c.lambda2 = 0.1;
    CHECK(c.effective_mu() == doctest::Approx(2.0));
    CHECK(c.rho() == doctest::Approx(0.1 + 0.25));
    c.lambda1 = 0.0;
    c.lambda2 = 0.0;
    CHECK(c.effective_mu() == doctest::Approx(1000.0));
    c.mu = 0.3;
    CHECK(c.effective_mu() == 0.3);
    c.validate();

    AdmmConfig bad;
    bad.lambda1 = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = AdmmConfig{};
    bad.mu = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = AdmmConfig{};
    bad.outer_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("lasso solutions match the proximal-gradient oracle") {
    for (const auto& fam : {GlzFamily::linear_gaussian(), GlzFamily::logistic(), GlzFamily::poisson()}) {
        CAPTURE(fam.name());
        const auto data = synthetic_glz(fam, 40, 25, 4, 3, fam.kind() == FamilyKind::Poisson ? 0.3 : 1.0);
        const auto pf = concatenate(cv_family(25, 5, data.y, false, 2), bootstrap_family(25, 3, data.y, 5));
        const double lmax = lambda_max(data.X, fam, pf, 1.0);
        for (double frac : {0.5, 0.15}) {
            AdmmConfig cfg;
            cfg.lambda1 = frac * lmax;
            cfg.lambda2 = 0.05 * lmax;
            const auto res = fastglz_fit(data.X, fam, pf, cfg);
            for (Index k = 0; k < pf.problems(); ++k) {
                const auto& r = res[static_cast<std::size_t>(k)];
                CHECK(r.converged);
                oracle::OracleConfig oc;
                oc.tol = 1e-10;
                const auto o = oracle::prox_grad_fit(data.X, fam, pf.weights.col(k), pf.responses.col(k),
                                                     cfg.lambda1, cfg.lambda2, oc);
                CHECK(relative_gap(r.objective, o.objective) <= 1e-7);
                const auto rep = kkt_report(data.X, fam, pf.weights.col(k), pf.responses.col(k),
                                            dense(r.weights), cfg.lambda1, cfg.lambda2,
                                            BlockStructure::singletons(40));
                CHECK(rep.satisfied(cfg.lambda1, 1e-6));
                CHECK(r.active_size == (dense(r.weights).array() != 0.0).count());
            }
        }
    }
}

TEST_CASE("group lasso matches the oracle") {
    const auto fam = GlzFamily::logistic();
    const auto data = synthetic_glz(fam, 30, 40, 6, 8);
    const std::vector<std::vector<Index>> groups{{0, 1, 2}, {3, 4}, {10, 20, 29}, {5, 6, 7, 8}};
    const auto pf = bootstrap_family(40, 4, data.y, 1);
    const double lmax = lambda_max(data.X, fam, pf, 1.0, groups);
    AdmmConfig cfg;
    cfg.lambda1 = 0.3 * lmax;
    cfg.lambda2 = 0.01;
    cfg.groups = groups;
    const auto res = fastglz_fit(data.X, fam, pf, cfg);
    const auto blocks = BlockStructure::from_groups(30, groups);
    for (Index k = 0; k < pf.problems(); ++k) {
        const auto& r = res[static_cast<std::size_t>(k)];
        CHECK(r.converged);
        const auto o = oracle::prox_grad_fit(data.X, fam, pf.weights.col(k), pf.responses.col(k),
                                             cfg.lambda1, cfg.lambda2, {1e-10}, groups);
        CHECK(relative_gap(r.objective, o.objective) <= 1e-7);
        // Each group is either entirely zero or entirely free.
        const Vector w = dense(r.weights);
        for (Index b = 0; b < blocks.blocks(); ++b) {
            const auto m = blocks.members(b);
            if (m.size() < 2) continue;
            int zeros = 0;
            for (Index j : m) zeros += w[j] == 0.0;
            CHECK((zeros == 0 || zeros == static_cast<int>(m.size())));
        }
    }
}

TEST_CASE("above lambda_max every solution is zero within two cycles") {
    const auto fam = GlzFamily::logistic();
    const auto data = synthetic_glz(fam, 50, 30, 5, 12);
    const auto pf = permutation_family(data.y, 6, 1, true);
    const double lmax = lambda_max(data.X, fam, pf, 1.0);
    for (double factor : {1.0, 1.5}) {
        AdmmConfig cfg;
        cfg.lambda1 = factor * lmax;
        cfg.lambda2 = 0.1;
        const auto res = fastglz_fit(data.X, fam, pf, cfg);
        const double null_obj = negloglik(fam, Vector::Zero(30), Vector::Ones(30), data.y);
        for (const auto& r : res) {
            CHECK(r.converged);
            CHECK(r.active_size == 0);
            CHECK(r.iterations <= 2);
            CHECK(r.objective == doctest::Approx(null_obj));
        }
    }
}

TEST_CASE("duplicate problems give identical results") {
    const auto fam = GlzFamily::logistic();
    const auto data = synthetic_glz(fam, 60, 30, 5, 21);
    const auto base = bootstrap_family(30, 4, data.y, 9);
    const auto pf = select_problems(base, {0, 1, 2, 1, 3, 0});
    const double lmax = lambda_max(data.X, fam, pf, 1.0);
    AdmmConfig cfg;
    cfg.lambda1 = 0.2 * lmax;
    cfg.lambda2 = 0.01;
    const auto res = fastglz_fit(data.X, fam, pf, cfg);
    CHECK(same_result(res[1], res[3]));
    CHECK(same_result(res[0], res[5]));

    // The shared template depends on the batch, so a problem fitted alone
    // reaches the same optimum along a different route.
    const auto alone = fastglz_fit(data.X, fam, select_problems(base, {2}), cfg);
    CHECK(relative_gap(alone[0].objective, res[2].objective) <= 1e-7);
    CHECK((dense(alone[0].weights) - dense(res[2].weights)).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("held-out trials do not influence their fold") {
    const auto fam = GlzFamily::poisson();
    const auto data = synthetic_glz(fam, 30, 20, 4, 4, 0.3);
    const auto pf = cv_family(20, 4, data.y, true, 6);
    AdmmConfig cfg;
    cfg.lambda1 = 0.3 * lambda_max(data.X, fam, pf, 1.0);
    cfg.lambda2 = 0.01;
    const auto res = fastglz_fit(data.X, fam, pf, cfg);

    Index held = -1;
    for (Index i = 0; i < 20 && held < 0; ++i) {
        if (pf.weights(i, 1) == 0.0) held = i;
    }
    REQUIRE(held >= 0);
    ProblemFamily changed = pf;
    changed.responses(held, 1) = 1000.0;
    const auto res2 = fastglz_fit(data.X, fam, changed, cfg);
    CHECK(same_result(res[1], res2[1]));
}

TEST_CASE("KKT report flags a solution fitted on too few features") {
    const auto fam = GlzFamily::linear_gaussian();
    const auto data = synthetic_glz(fam, 20, 40, 6, 31, 2.0);
    const Vector d = Vector::Ones(40);
    const double lambda1 = 5.0, lambda2 = 0.1;
    const auto full = oracle::prox_grad_fit(data.X, fam, d, data.y, lambda1, lambda2, {1e-11});
    const auto blocks = BlockStructure::singletons(20);
    CHECK(kkt_report(data.X, fam, d, data.y, full.w, lambda1, lambda2, blocks).satisfied(lambda1, 1e-6));

    // Drop the strongest feature of the true solution and refit on the rest.
    Index strongest = 0;
    full.w.cwiseAbs().maxCoeff(&strongest);
    std::vector<Index> kept;
    for (Index j = 0; j < 20; ++j) if (j != strongest) kept.push_back(j);
    Matrix Xs(19, 40);
    for (Index i = 0; i < 19; ++i) Xs.row(i) = data.X.row(kept[static_cast<std::size_t>(i)]);
    const auto restricted = oracle::prox_grad_fit(Xs, fam, d, data.y, lambda1, lambda2, {1e-11});
    Vector embedded = Vector::Zero(20);
    for (Index i = 0; i < 19; ++i) embedded[kept[static_cast<std::size_t>(i)]] = restricted.w[i];
    const auto rep = kkt_report(data.X, fam, d, data.y, embedded, lambda1, lambda2, blocks);
    CHECK_FALSE(rep.satisfied(lambda1, 1e-6));
    CHECK(rep.max_inactive_gradient > lambda1);
    CHECK(rep.max_active_residual <= 1e-6 * rep.scale);
}

TEST_CASE("sequential strong rule") {
    const auto fam = GlzFamily::linear_gaussian();
    const auto data = synthetic_glz(fam, 30, 20, 3, 2);
    const Vector d = Vector::Ones(20);
    const auto blocks = BlockStructure::singletons(30);
    const Vector grad0 = data.X * loss_gradient_eta(fam, Vector::Zero(20), d, data.y);

    const double lmax = grad0.cwiseAbs().maxCoeff();
    const auto none = strong_rule_screen(data.X, fam, d, data.y, lmax, lmax, Vector::Zero(30), 30, blocks);
    CHECK(none.empty());

    const double l_new = 0.6 * lmax;
    const auto kept = strong_rule_screen(data.X, fam, d, data.y, l_new, lmax, Vector::Zero(30), 30, blocks);
    for (Index j = 0; j < 30; ++j) {
        const bool in = std::find(kept.begin(), kept.end(), j) != kept.end();
        CHECK(in == (std::abs(grad0[j]) > 2.0 * l_new - lmax));
    }
    CHECK(std::is_sorted(kept.begin(), kept.end()));

    // The cap keeps the largest gradients.
    const auto capped = strong_rule_screen(data.X, fam, d, data.y, 0.1 * lmax, lmax, Vector::Zero(30), 3, blocks);
    REQUIRE(capped.size() == 3);
    double smallest_kept = std::numeric_limits<double>::infinity();
    for (Index j : capped) smallest_kept = std::min(smallest_kept, std::abs(grad0[j]));
    for (Index j = 0; j < 30; ++j) {
        if (std::find(capped.begin(), capped.end(), j) == capped.end()) CHECK(std::abs(grad0[j]) <= smallest_kept);
    }

    // The previous support is always kept.
    Vector prev = Vector::Zero(30);
    prev[7] = 0.5;
    prev[11] = -0.1;
    const auto with_support = strong_rule_screen(data.X, fam, d, data.y, lmax, lmax, prev, 30, blocks);
    CHECK(std::find(with_support.begin(), with_support.end(), 7) != with_support.end());
    CHECK(std::find(with_support.begin(), with_support.end(), 11) != with_support.end());
    CHECK_THROWS_AS(strong_rule_screen(data.X, fam, d, data.y, lmax, lmax, prev, 1, blocks), CapacityError);
}

TEST_CASE("final support lies inside the active set and solutions are KKT-clean") {
    const auto fam = GlzFamily::logistic();
    const auto data = synthetic_glz(fam, 120, 40, 6, 77);
    const auto pf = bootstrap_family(40, 5, data.y, 3);
    AdmmConfig cfg;
    cfg.lambda1 = 0.25 * lambda_max(data.X, fam, pf, 1.0);
    cfg.lambda2 = 0.05;
    AdmmBatch batch(data.X, fam, pf, cfg);
    batch.solve();
    const auto res = batch.results();
    for (Index k = 0; k < pf.problems(); ++k) {
        const auto& st = batch.state(k);
        const Vector w = batch.weights_dense(k);
        for (Index j = 0; j < 120; ++j) {
            if (w[j] != 0.0) CHECK(std::binary_search(st.active.begin(), st.active.end(), j));
        }
        CHECK(res[static_cast<std::size_t>(k)].converged);
        CHECK(res[static_cast<std::size_t>(k)].kkt_residual <= 1e-6 * std::max(1.0, batch.null_gradient_max()[static_cast<std::size_t>(k)]));
        // beta_k = Q^T l_k is maintained without forming l_k in full.
        CHECK(batch.beta().col(k).allFinite());
    }
}

TEST_CASE("active-set cap") {
    const auto fam = GlzFamily::linear_gaussian();
    const auto data = synthetic_glz(fam, 40, 20, 10, 5, 2.0);
    const auto pf = single_problem(data.y);
    AdmmConfig cfg;
    cfg.lambda1 = 0.01 * lambda_max(data.X, fam, pf, 1.0);
    cfg.lambda2 = 0.01;
    cfg.s_max = 2;
    CHECK_THROWS_AS(fastglz_fit(data.X, fam, pf, cfg), CapacityError);

    cfg.screening = false;
    cfg.s_max = 10;
    CHECK_THROWS_AS(AdmmBatch(data.X, fam, pf, cfg), ValidationError);
}

TEST_CASE("cycles reproduce the textbook augmented-Lagrangian iteration") {
    const auto fam = GlzFamily::logistic();
    const auto data = synthetic_glz(fam, 8, 5, 3, 7);
    const auto pf = select_problems(concatenate(single_problem(data.y), permutation_family(data.y, 2, 3)), {0, 1});
    AdmmConfig cfg;
    cfg.lambda1 = 0.3;
    cfg.lambda2 = 0.1;
    cfg.screening = false;
    cfg.newton_tol = 1e-13;
    cfg.max_newton = 50;
    cfg.solve.tol = 1e-14;
    cfg.solve.max_iters = 100000;
    AdmmBatch batch(data.X, fam, pf, cfg);
    batch.enable_shadow(true);
    const double mu = cfg.effective_mu();

    oracle::TextbookAdmmConfig tc;
    tc.lambda1 = 0.3;
    tc.lambda2 = 0.1;
    tc.mu = mu;
    std::vector<std::vector<oracle::TextbookIterate>> book;
    for (Index k = 0; k < 2; ++k) {
        book.push_back(oracle::textbook_admm_steps(data.X, fam, pf.weights.col(k), pf.responses.col(k), tc, 20,
                                                   Vector::Zero(8), Vector::Zero(8), Vector::Zero(8)));
    }
    double worst = 0.0;
    double beta_gap = 0.0;
    for (int c = 0; c < 20; ++c) {
        batch.cycle({0, 1});
        for (Index k = 0; k < 2; ++k) {
            const auto& it = book[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
            worst = std::max(worst, (batch.shadow_w().col(k) - it.w).cwiseAbs().maxCoeff());
            worst = std::max(worst, (batch.weights_dense(k) - it.v).cwiseAbs().maxCoeff());
            worst = std::max(worst, (batch.shadow_l().col(k) - (it.multiplier + it.v / mu)).cwiseAbs().maxCoeff());
            // The reduced state is the projection of the full shifted multiplier.
            const Vector projected = batch.qr().Q.transpose() * batch.shadow_l().col(k);
            beta_gap = std::max(beta_gap, (batch.beta().col(k) - projected).cwiseAbs().maxCoeff());
        }
    }
    CHECK(worst <= 1e-10);
    CHECK(beta_gap <= 1e-12);
}

TEST_CASE("memory estimate") {
    const auto small = estimate_memory(100, 50, 20, 10);
    CHECK(small > 0);
    CHECK(estimate_memory(200, 50, 20, 10) > small);
    CHECK(estimate_memory(100, 50, 20, 20) > small);
    CHECK(estimate_memory(100, 50, 40, 10) > small);
    CHECK(estimate_memory(50000, 500, 1000, 0) == 210000000u);
    CHECK(estimate_memory(50000, 500, 1000, 1000) == 310040000u);
    CHECK(estimate_memory(1, 1, 0, 1) == 160u);
    CHECK_THROWS_AS(estimate_memory(std::uint64_t{1} << 62, std::uint64_t{1} << 62, 1, 1), ValidationError);
}

TEST_CASE("input validation") {
    const auto data = synthetic_glz(GlzFamily::logistic(), 5, 4, 2, 1);
    AdmmConfig cfg;
    cfg.lambda1 = 0.1;
    CHECK_THROWS_AS(fastglz_fit(data.X, GlzFamily::logistic(), single_problem(Vector::Zero(3)), cfg),
                    DimensionError);
    Vector bad_y = data.y;
    bad_y[0] = 2.0;
    CHECK_THROWS_AS(fastglz_fit(data.X, GlzFamily::logistic(), single_problem(bad_y), cfg), ValidationError);
}

TEST_CASE("Poisson fits finish when the Newton right-hand side is large") {
    const auto fam = GlzFamily::poisson();
    const auto data = synthetic_glz(fam, 40, 30, 4, 31, 0.5);
    const auto pf = cv_family(30, 3, data.y, false, 8);
    AdmmConfig cfg;
    cfg.lambda1 = 0.2 * lambda_max(data.X, fam, pf, 1.0);
    cfg.lambda2 = 0.05;
    const auto res = fastglz_fit(data.X, fam, pf, cfg);
    oracle::OracleConfig oc;
    oc.tol = 1e-10;
    for (Index k = 0; k < 3; ++k) {
        CHECK(res[static_cast<std::size_t>(k)].converged);
        const auto o = oracle::prox_grad_fit(data.X, fam, pf.weights.col(k), pf.responses.col(k), cfg.lambda1,
                                             cfg.lambda2, oc);
        CHECK(relative_gap(res[static_cast<std::size_t>(k)].objective, o.objective) <= 1e-7);
    }
}
