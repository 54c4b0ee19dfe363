#include "doctest.h"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "fastglz/error.hpp"
#include "fastglz/random.hpp"
#include "fastglz/reference_oracle.hpp"
#include "fastglz/simnewton.hpp"
#include "fastglz/synthetic.hpp"

using namespace fastglz;

namespace {

Matrix random_matrix(Rng& rng, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

Vector random_positive(Rng& rng, Index n, double hi) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = hi * rng.uniform();
    return v;
}

double rel(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST_CASE("thin QR reconstructs X with orthonormal Q") {
    Rng rng(1);
    for (auto [p, n] : {std::pair<Index, Index>{100, 10}, {10, 100}, {7, 7}, {1, 4}}) {
        const Matrix X = random_matrix(rng, p, n);
        const QrFactors qr = thin_qr(X);
        const Index r = std::min(p, n);
        CHECK(qr.rank() == r);
        CHECK(qr.Z.rows() == r);
        CHECK((qr.Q.transpose() * qr.Q - Matrix::Identity(r, r)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((qr.Q * qr.Z - X).cwiseAbs().maxCoeff() <= 1e-10 * X.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("thin QR of the identity and of a rank-deficient matrix") {
    const QrFactors id = thin_qr(Matrix::Identity(5, 5));
    CHECK((id.Q.cwiseAbs() - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((id.Z.cwiseAbs() - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-15);

    Rng rng(2);
    Matrix X = random_matrix(rng, 30, 8);
    X.col(5) = X.col(2);
    const QrFactors qr = thin_qr(X);
    CHECK(qr.rank() == 8);
    CHECK((qr.Q * qr.Z - X).cwiseAbs().maxCoeff() <= 1e-10 * X.cwiseAbs().maxCoeff());

    Matrix bad = X;
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(thin_qr(bad), ValidationError);
}

TEST_CASE("template matrix") {
    Rng rng(3);
    const Matrix Z = random_matrix(rng, 6, 6);
    Matrix r_cols(6, 3);
    for (Index k = 0; k < 3; ++k) r_cols.col(k) = random_positive(rng, 6, 2.0);
    const TemplateSystem t = build_template(Z, r_cols, 0.7);
    for (Index k = 0; k < 3; ++k) CHECK(((t.r_template() - r_cols.col(k)).array() >= 0.0).all());
    CHECK(t.r_template() == r_cols.rowwise().maxCoeff());

    const Matrix M = Z * t.r_template().asDiagonal() * Z.transpose() + 0.7 * Matrix::Identity(6, 6);
    const Matrix direct = M.inverse() * Z;
    CHECK((t.minv_z() - direct).norm() <= 1e-10 * direct.norm());

    const TemplateSystem one = build_template(Z, r_cols.leftCols(1), 0.7);
    CHECK(one.r_template() == r_cols.col(0));
    CHECK(residual_diagonals(one, r_cols.leftCols(1)).cwiseAbs().maxCoeff() == 0.0);

    const TemplateSystem zero = build_template(Z, Matrix::Zero(6, 2), 2.0);
    CHECK((zero.minv_z() - Z / 2.0).cwiseAbs().maxCoeff() < 1e-15);

    CHECK_THROWS_AS(build_template(Z, r_cols, 0.0), NumericalError);
    CHECK_THROWS_AS(build_template(Z, r_cols, -1.0), NumericalError);
}

TEST_CASE("stationary solve matches dense solves column by column") {
    Rng rng(4);
    const Index r = 12, n = 12, K = 50;
    const Matrix Z = random_matrix(rng, r, n);
    Matrix r_cols(n, K);
    for (Index k = 0; k < K; ++k) r_cols.col(k) = random_positive(rng, n, 1.0);
    const double c = 0.5;
    const TemplateSystem t = build_template(Z, r_cols, c);
    NewtonBatch batch;
    batch.rhs = random_matrix(rng, r, K);
    batch.r_delta = residual_diagonals(t, r_cols);
    StationaryOptions opts;
    opts.tol = 1e-12;
    opts.max_iters = 100000;
    stationary_solve_batch(t, Z, batch, opts);
    for (Index k = 0; k < K; ++k) {
        const Matrix G = Z * r_cols.col(k).asDiagonal() * Z.transpose() + c * Matrix::Identity(r, r);
        const Vector direct = G.partialPivLu().solve(batch.rhs.col(k));
        CHECK(rel(batch.alpha.col(k), direct) <= 1e-8);
        CHECK(batch.residuals[static_cast<std::size_t>(k)] <= 1e-12);
    }
}

TEST_CASE("exact template converges in one iteration") {
    Rng rng(5);
    const Matrix Z = random_matrix(rng, 8, 8);
    Matrix r_cols(8, 3);
    const Vector same = random_positive(rng, 8, 1.0);
    for (Index k = 0; k < 3; ++k) r_cols.col(k) = same;
    const TemplateSystem t = build_template(Z, r_cols, 1.0);
    NewtonBatch batch;
    batch.rhs = random_matrix(rng, 8, 3);
    batch.r_delta = residual_diagonals(t, r_cols);
    stationary_solve_batch(t, Z, batch);
    CHECK(batch.iterations_used == 1);
    const Matrix expected = t.factor().solve(batch.rhs);
    CHECK((batch.alpha - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("batched columns equal columns solved alone, bit for bit") {
    Rng rng(6);
    const Matrix Z = random_matrix(rng, 10, 10);
    Matrix r_cols(10, 7);
    for (Index k = 0; k < 7; ++k) r_cols.col(k) = random_positive(rng, 10, 1.0);
    const TemplateSystem t = build_template(Z, r_cols, 0.3);
    NewtonBatch all;
    all.rhs = random_matrix(rng, 10, 7);
    all.r_delta = residual_diagonals(t, r_cols);
    stationary_solve_batch(t, Z, all, {1e-10, 100000, 1});
    for (Index k = 0; k < 7; ++k) {
        NewtonBatch one;
        one.rhs = all.rhs.col(k);
        one.r_delta = all.r_delta.col(k);
        stationary_solve_batch(t, Z, one, {1e-10, 100000, 1});
        CHECK(one.alpha.col(0) == all.alpha.col(k));
    }
}

TEST_CASE("iteration cap raises with residuals attached") {
    Rng rng(7);
    const Matrix Z = random_matrix(rng, 10, 10);
    Matrix r_cols(10, 2);
    r_cols.col(0) = Vector::Constant(10, 5.0);
    r_cols.col(1) = Vector::Zero(10);
    const TemplateSystem t = build_template(Z, r_cols, 1e-3);
    NewtonBatch batch;
    batch.rhs = random_matrix(rng, 10, 2);
    batch.r_delta = residual_diagonals(t, r_cols);
    try {
        stationary_solve_batch(t, Z, batch, {1e-14, 3, 1});
        FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
        CHECK(e.residuals().size() == 2);
        CHECK(e.residuals()[1] > 1e-14);
    }
}

TEST_CASE("spectral radius of the splitting") {
    Rng rng(8);
    const Index n = 9;
    const Matrix Z = random_matrix(rng, n, n);
    Matrix r_cols(n, 4);
    for (Index k = 0; k < 4; ++k) r_cols.col(k) = random_positive(rng, n, 2.0);
    const TemplateSystem t = build_template(Z, r_cols, 0.2);
    CHECK(spectral_radius_estimate(t, Z, t.r_template()) == 0.0);

    auto dense_radius = [&](const Vector& rk) {
        const Matrix N = Z * (t.r_template() - rk).asDiagonal() * Z.transpose();
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(N, t.matrix());
        return es.eigenvalues().cwiseAbs().maxCoeff();
    };
    const double est0 = spectral_radius_estimate(t, Z, Vector::Zero(n), 2000);
    CHECK(est0 < 1.0);
    CHECK(est0 == doctest::Approx(dense_radius(Vector::Zero(n))).epsilon(1e-6));
    for (int trial = 0; trial < 100; ++trial) {
        Vector rk = t.r_template();
        for (Index i = 0; i < n; ++i) rk[i] *= rng.uniform();
        const double est = spectral_radius_estimate(t, Z, rk, 500);
        CHECK(est < 1.0);
        if (trial % 20 == 0) CHECK(est <= dense_radius(rk) * (1.0 + 1e-9));
    }
}

TEST_CASE("ridge Newton fit") {
    SUBCASE("Gaussian case is one Newton step and matches the closed form") {
        Rng rng(9);
        const Matrix X = random_matrix(rng, 30, 12);
        const Vector y = random_matrix(rng, 12, 1).col(0);
        RidgeConfig cfg;
        cfg.lambda2 = 0.8;
        cfg.solve.tol = 1e-13;
        const auto res = ridge_irls_fit(X, GlzFamily::linear_gaussian(), single_problem(y), cfg);
        const Matrix H = X * X.transpose() + 2.0 * 0.8 * Matrix::Identity(30, 30);
        const Vector closed = H.ldlt().solve(X * y);
        CHECK(rel(Vector(res[0].weights), closed) <= 1e-10);
        CHECK(res[0].iterations == 1);
    }
    SUBCASE("logistic batch matches dense full-space IRLS") {
        const auto data = synthetic_glz(GlzFamily::logistic(), 30, 15, 5, 17);
        const auto pf = compose_product(bootstrap_family(15, 2, data.y, 3), permutation_family(data.y, 2, 4));
        RidgeConfig cfg;
        cfg.lambda2 = 0.5;
        const auto res = ridge_irls_fit(data.X, GlzFamily::logistic(), pf, cfg);
        const QrFactors qr = thin_qr(data.X);
        for (Index k = 0; k < pf.problems(); ++k) {
            const Vector dense = oracle::dense_irls_fit(data.X, GlzFamily::logistic(), pf.weights.col(k),
                                                        pf.responses.col(k), 0.5);
            const Vector w = Vector(res[static_cast<std::size_t>(k)].weights);
            CHECK((w - dense).cwiseAbs().maxCoeff() <= 1e-6);
            // Ridge solutions lie in the span of the data.
            CHECK((w - qr.Q * (qr.Q.transpose() * w)).norm() <= 1e-10 * w.norm());
        }
    }
    SUBCASE("heavy shrinkage drives weights to zero") {
        const auto data = synthetic_glz(GlzFamily::poisson(), 20, 10, 3, 5, 0.3);
        const auto pf = single_problem(data.y);
        RidgeConfig cfg;
        cfg.lambda2 = 1e9;
        const auto res = ridge_irls_fit(data.X, GlzFamily::poisson(), pf, cfg);
        const double null_loss = negloglik(GlzFamily::poisson(), Vector::Zero(10), Vector::Ones(10), data.y);
        CHECK(Vector(res[0].weights).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(res[0].objective == doctest::Approx(null_loss).epsilon(1e-6));
    }
    CHECK_THROWS_AS(ridge_irls_fit(Matrix::Ones(3, 2), GlzFamily::linear_gaussian(),
                                   single_problem(Vector::Ones(2)), RidgeConfig{0.0}),
                    ValidationError);
}
