#include "doctest.h"

#include <cmath>

#include "fastglz/error.hpp"
#include "fastglz/reference_oracle.hpp"
#include "fastglz/regpath.hpp"
#include "fastglz/synthetic.hpp"

using namespace fastglz;

TEST_CASE("lambda grid") {
    const auto g = lambda_grid(2.0, 5, 0.01);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == 2.0);
    CHECK(g.back() == doctest::Approx(0.02).epsilon(1e-14));
    for (std::size_t i = 1; i < g.size(); ++i) {
        CHECK(g[i] < g[i - 1]);
        CHECK(g[i] / g[i - 1] == doctest::Approx(std::pow(0.01, 0.25)).epsilon(1e-13));
    }
    CHECK(lambda_grid(3.0, 1, 0.1) == std::vector<double>{3.0});
    CHECK_THROWS_AS(lambda_grid(1.0, 0, 0.1), ValidationError);
    CHECK_THROWS_AS(lambda_grid(1.0, 4, 1.5), ValidationError);
    CHECK_THROWS_AS(lambda_grid(0.0, 4, 0.5), ValidationError);
}

TEST_CASE("lambda_max is the largest null gradient") {
    const auto fam = GlzFamily::logistic();
    const auto data = synthetic_glz(fam, 25, 30, 4, 3);
    const auto pf = bootstrap_family(30, 3, data.y, 8);
    double expected = 0.0;
    for (Index k = 0; k < 3; ++k) {
        const Vector g = data.X * loss_gradient_eta(fam, Vector::Zero(30), pf.weights.col(k), pf.responses.col(k));
        expected = std::max(expected, g.cwiseAbs().maxCoeff());
    }
    CHECK(lambda_max(data.X, fam, pf, 1.0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(lambda_max(data.X, fam, pf, 0.5) == doctest::Approx(2.0 * expected).epsilon(1e-14));
    CHECK_THROWS_AS(lambda_max(data.X, fam, pf, 0.0), ValidationError);
    CHECK_THROWS_AS(lambda_max(data.X, fam, pf, 1.2), ValidationError);

    // Group norms replace absolute values.
    const Vector g0 = data.X * loss_gradient_eta(fam, Vector::Zero(30), pf.weights.col(0), pf.responses.col(0));
    const auto single = select_problems(pf, {0});
    const double grouped = lambda_max(data.X, fam, single, 1.0, {{0, 1, 2, 3, 4}});
    CHECK(grouped >= g0.head(5).norm() * (1.0 - 1e-14));
}

TEST_CASE("the path starts empty and every point is optimal") {
    const auto fam = GlzFamily::logistic();
    const auto data = synthetic_glz(fam, 40, 30, 5, 19);
    const auto pf = concatenate(bootstrap_family(30, 2, data.y, 2), permutation_family(data.y, 2, 3));
    PathConfig pc;
    pc.alpha_mix = 0.7;
    pc.n_lambda = 8;
    pc.lambda_min_ratio = 0.05;
    const auto path = fit_path(data.X, fam, pf, pc, AdmmConfig{});
    REQUIRE(path.points.size() == 8);
    REQUIRE(path.grid.size() == 8);
    for (const auto& r : path.points.front().results) CHECK(r.active_size == 0);
    double last_mean = -1.0;
    for (const auto& pt : path.points) {
        REQUIRE_FALSE(pt.failed);
        CHECK(pt.lambda1 == doctest::Approx(0.7 * pt.lambda));
        CHECK(pt.lambda2 == doctest::Approx(0.15 * pt.lambda));
        CHECK(pt.mean_active >= 0.0);
        for (Index k = 0; k < pf.problems(); ++k) {
            const auto& r = pt.results[static_cast<std::size_t>(k)];
            CHECK(r.converged);
            const auto o = oracle::prox_grad_fit(data.X, fam, pf.weights.col(k), pf.responses.col(k), pt.lambda1,
                                                 pt.lambda2, {1e-10});
            CHECK(std::abs(r.objective - o.objective) <= 1e-7 * std::max(1.0, std::abs(o.objective)));
        }
        last_mean = pt.mean_active;
    }
    CHECK(last_mean > 0.0);
}

TEST_CASE("explicit grid and warm starts agree with cold fits") {
    const auto fam = GlzFamily::linear_gaussian();
    const auto data = synthetic_glz(fam, 30, 25, 4, 5);
    const auto pf = cv_family(25, 5, data.y, true, 1);
    const double lmax = lambda_max(data.X, fam, pf, 1.0);
    PathConfig pc;
    pc.explicit_grid = std::vector<double>{0.8 * lmax, 0.4 * lmax, 0.2 * lmax};
    const auto path = fit_path(data.X, fam, pf, pc, AdmmConfig{});
    REQUIRE(path.points.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        AdmmConfig cold;
        cold.lambda1 = path.points[i].lambda1;
        cold.lambda2 = path.points[i].lambda2;
        CHECK(cold.lambda2 == 0.0);
        const auto ref = fastglz_fit(data.X, fam, pf, cold);
        for (Index k = 0; k < pf.problems(); ++k) {
            CHECK(path.points[i].results[static_cast<std::size_t>(k)].objective ==
                  doctest::Approx(ref[static_cast<std::size_t>(k)].objective).epsilon(1e-7));
        }
    }

    PathConfig increasing;
    increasing.explicit_grid = std::vector<double>{0.1, 0.2};
    CHECK_THROWS_AS(fit_path(data.X, fam, pf, increasing, AdmmConfig{}), ValidationError);
}

TEST_CASE("a failing point is recorded and the sweep continues") {
    const auto fam = GlzFamily::linear_gaussian();
    const auto data = synthetic_glz(fam, 30, 20, 8, 6, 2.0);
    const auto pf = single_problem(data.y);
    const double lmax = lambda_max(data.X, fam, pf, 1.0);
    PathConfig pc;
    // Both small penalties need more active features than the cap allows.
    // Each failure is recorded and the later point is still attempted.
    pc.explicit_grid = std::vector<double>{0.9 * lmax, 0.01 * lmax, 0.001 * lmax};
    AdmmConfig ac;
    ac.s_max = 3;
    const auto path = fit_path(data.X, fam, pf, pc, ac);
    REQUIRE(path.points.size() == 3);
    CHECK_FALSE(path.points[0].failed);
    CHECK(path.points[1].failed);
    CHECK_FALSE(path.points[1].error.empty());
    CHECK(path.points[1].results.empty());
    CHECK(path.points[2].failed);
}
