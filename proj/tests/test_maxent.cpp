#include <doctest.h>

#include <cmath>

#include "oicap/capacity.hpp"
#include "oicap/maxent.hpp"
#include "test_support.hpp"

using namespace oicap;
using oicap_test::TruncExpOracle;
using oicap_test::random_rank_deficient_channel;
using oicap_test::random_alpha;

namespace {

MomentSpec mean_spec(double mean) {
    MomentSpec spec;
    spec.support = MomentSpec::interval_support(0.0, 1.0);
    spec.equalities.push_back(PiecewiseLinearCost::affine(Eigen::VectorXd::Ones(1), 0.0, mean));
    return spec;
}

ValidatedChannel row_channel(double h1, double h2, double a1, double a2) {
    Eigen::VectorXd alpha(2);
    alpha << a1, a2;
    return validate(ChannelMatrix{Eigen::MatrixXd{{h1, h2}}}, alpha);
}

} // namespace

TEST_CASE("uniform cases: no constraints and the symmetric mean") {
    MomentSpec unconstrained;
    unconstrained.support = MomentSpec::interval_support(0.0, 1.0);
    const MaxEntSolution sol = solve_gamma_star(unconstrained);
    CHECK(sol.status == SolveStatus::converged);
    CHECK(sol.gamma == doctest::Approx(0.0).epsilon(1e-12));

    const MaxEntSolution half = solve_gamma_star(mean_spec(0.5));
    CHECK(half.status == SolveStatus::converged);
    CHECK(half.gamma == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(half.dual.u[0] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("1-D mean-constrained entropy matches the truncated-exponential closed form") {
    for (double m = 0.1; m < 0.95; m += 0.1) {
        const MaxEntSolution sol = solve_gamma_star(mean_spec(m));
        REQUIRE(sol.status == SolveStatus::converged);
        CHECK(sol.gamma == doctest::Approx(TruncExpOracle::entropy_for_mean(m)).epsilon(1e-5));
        CHECK(std::fabs(sol.eq_moments[0]) <= 2e-7); // within the gradient stopping tolerance
    }
}

TEST_CASE("log_partition gradient matches central finite differences") {
    ChannelMatrix ch{Eigen::MatrixXd{{0.65, 0.35}}};
    Eigen::VectorXd alpha(2);
    alpha << 0.9, 0.2;
    const ValidatedChannel vc = validate(ch, alpha);
    const MomentSpec spec = ec_moment_spec(reduce(vc.channel), vc.profile);

    Eigen::VectorXd u(1), lambda(2);
    u << 0.7;
    lambda << 0.3, 0.15;
    const auto [value, grad] = log_partition(spec, u, lambda);
    (void)value;

    const double h = 1e-5;
    Eigen::VectorXd theta(3);
    theta << u[0], lambda[0], lambda[1];
    for (int i = 0; i < 3; ++i) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        const double fp = log_partition(spec, tp.head(1), tp.tail(2)).first;
        const double fm = log_partition(spec, tm.head(1), tm.tail(2)).first;
        const double fd = (fp - fm) / (2.0 * h);
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("gamma equals log volume without constraints on random zonotopes") {
    Rng rng(5150);
    for (int trial = 0; trial < 6; ++trial) {
        const int r = 1 + static_cast<int>(rng.next_u64() % 3);
        const int n = r + 1 + static_cast<int>(rng.next_u64() % 2);
        Eigen::MatrixXd gen(r, n);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < n; ++j) gen(i, j) = rng.uniform(-1.0, 1.0);
        ZonotopeDecomposition zd;
        try {
            zd = decompose(gen);
        } catch (const std::invalid_argument&) {
            continue;
        }
        MomentSpec spec;
        spec.support = zd;
        MaxEntOptions opts;
        opts.quad.qmc_points = 1 << 13;
        const MaxEntSolution sol = solve_gamma_star(spec, opts);
        CHECK(sol.gamma == doctest::Approx(std::log(zd.volume)).epsilon(1e-4));
    }
}

TEST_CASE("reference 2x1 channels reproduce the frozen offsets (fiber path)") {
    const struct {
        double h1, h2, a1, a2, gamma_ec, gamma_bc;
    } rows[] = {
        {0.65, 0.35, 0.90, 0.20, -0.3780, 0.0000},
        {0.25, 0.75, 0.20, 0.10, -1.0798, -1.0798},
        {0.45, 0.55, 0.60, 0.10, -0.1978, -0.1979},
        {0.20, 0.80, 0.52, 0.48, -0.0009, -0.0009},
    };
    for (const auto& row : rows) {
        const ValidatedChannel vc = row_channel(row.h1, row.h2, row.a1, row.a2);
        const ReducedChannel rc = reduce(vc.channel);
        const GammaProblem ec = gamma_ec(rc, vc.profile);
        REQUIRE(ec.sol.status == SolveStatus::converged);
        CHECK(std::fabs(ec.sol.gamma - row.gamma_ec) <= 5e-3);

        const GammaProblem bc = gamma_bc(rc, vc.profile);
        REQUIRE(bc.sol.status == SolveStatus::converged);
        CHECK(std::fabs(bc.sol.gamma - row.gamma_bc) <= 5e-3);
        CHECK(bc.sol.gamma >= ec.sol.gamma - 1e-6);
    }
}

TEST_CASE("bounded-cost agrees with a grid of equal-cost solves (2x1 oracle)") {
    const ValidatedChannel vc = row_channel(0.45, 0.55, 0.60, 0.10);
    const ReducedChannel rc = reduce(vc.channel);
    const GammaProblem bc = gamma_bc(rc, vc.profile);
    REQUIRE(bc.sol.status == SolveStatus::converged);

    double best = -1e300;
    const int grid = 40;
    for (int i = 1; i <= grid; ++i) {
        for (int j = 1; j <= grid; ++j) {
            Eigen::VectorXd x(2);
            x << vc.profile.alpha[0] * i / grid, vc.profile.alpha[1] * j / grid;
            IntensityProfile p = vc.profile;
            p.alpha = x;
            const GammaProblem ec = gamma_ec(rc, p);
            if (ec.sol.status == SolveStatus::converged) best = std::max(best, ec.sol.gamma);
        }
    }
    CHECK(std::fabs(bc.sol.gamma - best) <= 2e-3);
}

TEST_CASE("moment matching and complementary slackness at the optimum") {
    Rng rng(99);
    for (int trial = 0; trial < 8; ++trial) {
        const int n_t = 2 + static_cast<int>(rng.next_u64() % 2);
        const ChannelMatrix ch = random_rank_deficient_channel(n_t, n_t, rng);
        const ValidatedChannel vc = validate(ch, random_alpha(n_t, rng, 0.15, 0.85));
        const ReducedChannel rc = reduce(vc.channel);
        const GammaProblem prob = gamma_ec(rc, vc.profile);
        if (prob.sol.status != SolveStatus::converged) continue;
        for (int i = 0; i < prob.sol.eq_moments.size(); ++i)
            CHECK(std::fabs(prob.sol.eq_moments[i]) <= 1e-3);
        for (int j = 0; j < prob.sol.ineq_moments.size(); ++j) {
            const double moment = prob.sol.ineq_moments[j];
            const double lambda = prob.sol.dual.lambda[j];
            CHECK(moment <= 1e-3);
            if (lambda > 1e-4) CHECK(std::fabs(moment) <= 1e-3); // active: cap met
            if (moment < -1e-3) CHECK(lambda <= 1e-6);           // slack: multiplier off
        }
    }
}

TEST_CASE("dual objective is midpoint convex along random probes") {
    const ValidatedChannel vc = row_channel(0.65, 0.35, 0.9, 0.2);
    const MomentSpec spec = ec_moment_spec(reduce(vc.channel), vc.profile);
    Rng rng(31);
    for (int i = 0; i < 40; ++i) {
        Eigen::VectorXd ua(1), ub(1), la(2), lb(2);
        ua << rng.uniform(-3.0, 3.0);
        ub << rng.uniform(-3.0, 3.0);
        la << rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0);
        lb << rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0);
        const double fa = log_partition(spec, ua, la).first;
        const double fb = log_partition(spec, ub, lb).first;
        const double fm = log_partition(spec, 0.5 * (ua + ub), 0.5 * (la + lb)).first;
        CHECK(fm <= 0.5 * fa + 0.5 * fb + 1e-10);
    }
}

TEST_CASE("symmetry and monotonicity of the offsets") {
    Rng rng(17);
    for (int trial = 0; trial < 6; ++trial) {
        const ChannelMatrix ch = random_rank_deficient_channel(2, 2, rng);
        const ReducedChannel rc = reduce(ch);
        const Eigen::VectorXd alpha = random_alpha(2, rng, 0.15, 0.85);

        // gamma_ec(alpha) == gamma_ec(1 - alpha): X -> 1 - X maps the problem
        // onto itself and differential entropy is translation invariant.
        const ValidatedChannel va = validate(ch, alpha);
        const ValidatedChannel vb = validate(ch, Eigen::VectorXd::Ones(2) - alpha);
        const GammaProblem ga = gamma_ec(rc, va.profile);
        const GammaProblem gb = gamma_ec(rc, vb.profile);
        REQUIRE(ga.sol.status == SolveStatus::converged);
        REQUIRE(gb.sol.status == SolveStatus::converged);
        CHECK(std::fabs(ga.sol.gamma - gb.sol.gamma) <= 2e-3);

        // gamma <= log volume; equality only when uniform is feasible.
        CHECK(ga.sol.gamma <= std::log(ga.spec.support.volume) + 1e-9);

        // Bounded-cost monotone in alpha and above equal-cost.
        Eigen::VectorXd bigger = alpha;
        bigger[0] = std::min(1.0, alpha[0] + 0.1);
        bigger[1] = std::min(1.0, alpha[1] + 0.07);
        const ValidatedChannel vbig = validate(ch, bigger);
        const GammaProblem bc_small = gamma_bc(rc, va.profile);
        const GammaProblem bc_big = gamma_bc(rc, vbig.profile);
        CHECK(bc_big.sol.gamma >= bc_small.sol.gamma - 1e-5);
        CHECK(bc_small.sol.gamma >= ga.sol.gamma - 1e-6);
    }
}

TEST_CASE("epi lower bound") {
    // 2 pi e sigma^2 = 1 and gamma = 0: bound is log(2)/2.
    const double sigma_unit = std::sqrt(1.0 / (2.0 * M_PI * M_E));
    CHECK(epi_lower_bound(0.0, 1, NoiseLevel{sigma_unit}) ==
          doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
    CHECK(epi_lower_bound(-std::numeric_limits<double>::infinity(), 1, NoiseLevel{0.1}) == 0.0);
    CHECK_THROWS_AS(epi_lower_bound(0.0, 0, NoiseLevel{0.1}), std::invalid_argument);
    CHECK_THROWS_AS(epi_lower_bound(0.0, 1, NoiseLevel{0.0}), std::invalid_argument);

    // Desk-scale asymptote: bound + (1/2) log(2 pi e sigma^2) equals
    // (1/2) log(2 pi e sigma^2 + e^{2 gamma}), which falls to gamma from
    // above as sigma shrinks.
    const double gamma = -0.3780;
    double prev = 1e300;
    for (double sigma : {1e-1, 1e-2, 1e-3}) {
        const double val =
            epi_lower_bound(gamma, 1, NoiseLevel{sigma}) + 0.5 * std::log(2.0 * M_PI * M_E * sigma * sigma);
        CHECK(val >= gamma - 1e-12);
        CHECK(val <= prev);
        prev = val;
    }
    CHECK(std::fabs(prev - gamma) <= 1e-2);
}

TEST_CASE("density evaluation and normalization") {
    // Unconstrained unit square: flat density 1.
    MomentSpec square;
    square.support = decompose(Eigen::MatrixXd::Identity(2, 2));
    const MaxEntSolution flat = solve_gamma_star(square);
    Eigen::VectorXd s(2);
    s << 0.3, 0.7;
    CHECK(density_eval(flat, square, s) == doctest::Approx(1.0).epsilon(1e-10));
    s << 1.5, 0.5;
    CHECK(density_eval(flat, square, s) == 0.0);

    // Mean-constrained 1-D density matches the closed form pointwise and
    // integrates to one.
    const MomentSpec spec = mean_spec(0.3);
    const MaxEntSolution sol = solve_gamma_star(spec);
    double integral = 0.0;
    const int n = 4000;
    Eigen::VectorXd t(1);
    for (int i = 0; i < n; ++i) {
        t[0] = (i + 0.5) / n;
        const double p = density_eval(sol, spec, t);
        integral += p / n;
        if (i % 400 == 0) CHECK(p == doctest::Approx(TruncExpOracle::density_for_mean(0.3, t[0])).epsilon(1e-4));
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("equal-cost density moments match the constraints on reference channel (a)") {
    const ValidatedChannel vc = row_channel(0.65, 0.35, 0.9, 0.2);
    const ReducedChannel rc = reduce(vc.channel);
    const GammaProblem prob = gamma_ec(rc, vc.profile);
    REQUIRE(prob.sol.status == SolveStatus::converged);

    double total = 0.0, mean = 0.0, mean_fmin = 0.0;
    const int n = 20000;
    Eigen::VectorXd s(1);
    for (int i = 0; i < n; ++i) {
        s[0] = (i + 0.5) / n;
        const double p = density_eval(prob.sol, prob.spec, s);
        total += p / n;
        mean += p * s[0] / n;
        mean_fmin += p * fiber_interval(rc, s).lo / n;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(mean == doctest::Approx(0.655).epsilon(1e-3));
    // The first fiber-cost cap is active at this optimum.
    CHECK(mean_fmin == doctest::Approx(rc.v_tail.dot(vc.profile.alpha)).epsilon(1e-3));
}

TEST_CASE("density sampling agrees with the solved moments") {
    const MomentSpec spec = mean_spec(0.3);
    const MaxEntSolution sol = solve_gamma_star(spec);
    Rng rng(4);
    const auto samples = sample_density(sol, spec, 100000, rng);
    double mean = 0.0;
    for (const auto& s : samples) mean += s[0];
    mean /= static_cast<double>(samples.size());
    CHECK(std::fabs(mean - 0.3) <= 3.0 * 0.3 / std::sqrt(1e5));
}

TEST_CASE("signaling map reproduces alpha in the mean") {
    const ValidatedChannel vc = row_channel(0.65, 0.35, 0.9, 0.2);
    const ReducedChannel rc = reduce(vc.channel);
    const GammaProblem prob = gamma_ec(rc, vc.profile);
    REQUIRE(prob.sol.status == SolveStatus::converged);
    const SignalingMap map = make_signaling_map(rc, vc.profile, prob.sol);

    Rng rng(8);
    const int n = 100000;
    const auto samples = sample_density(prob.sol, prob.spec, n, rng);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    for (const auto& s : samples) {
        const Eigen::VectorXd x = apply_signaling(map, s);
        CHECK(x.minCoeff() >= -1e-12);
        CHECK(x.maxCoeff() <= 1.0 + 1e-12);
        CHECK((rc.H_tilde * x - s).norm() <= 1e-10);
        mean += x;
    }
    mean /= n;
    // Three standard errors with per-coordinate sd bounded by 1/2.
    const double tol = 3.0 * 0.5 / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(mean[0] - 0.9) <= tol);
    CHECK(std::fabs(mean[1] - 0.2) <= tol);

    // s = 0 maps to the all-zero input no matter tau.
    Eigen::VectorXd zero(1);
    zero << 0.0;
    CHECK(apply_signaling(map, zero).norm() <= 1e-9);
}

TEST_CASE("signaling tau hits the boundary when the lower moment binds") {
    // Reference channel (a): the first fiber constraint is active at the
    // optimum, so tau should sit at 1 (minimal fiber point).
    const ValidatedChannel vc = row_channel(0.65, 0.35, 0.9, 0.2);
    const ReducedChannel rc = reduce(vc.channel);
    const GammaProblem prob = gamma_ec(rc, vc.profile);
    const SignalingMap map = make_signaling_map(rc, vc.profile, prob.sol);
    const double cap1 = rc.v_tail.dot(vc.profile.alpha);
    const double mean_fmin = prob.sol.ineq_moments[0] + cap1;
    if (std::fabs(mean_fmin - cap1) <= 1e-6) CHECK(map.tau >= 1.0 - 1e-3);
}

TEST_CASE("rank-2 equal-cost offset matches a dense-grid dual oracle") {
    // Independent reconstruction of the dual on a Riemann grid over the
    // bounding box: membership and the fiber endpoint come from bisection
    // on the cube constraint, not from the cell decomposition.  The grid
    // cannot resolve sliver-shaped supports, so the channel draw is
    // restricted to moderate conditioning.
    Rng rng(20240817);
    ChannelMatrix ch;
    for (int attempt = 0; attempt < 200; ++attempt) {
        ch = random_rank_deficient_channel(3, 3, rng);
        const ReducedChannel probe = reduce(ch);
        if (probe.sigma[0] / probe.sigma[1] < 8.0) break;
    }
    const Eigen::VectorXd alpha = random_alpha(3, rng, 0.2, 0.8);
    const ValidatedChannel vc = validate(ch, alpha);
    const ReducedChannel rc = reduce(vc.channel);
    REQUIRE(rc.rank == 2);
    REQUIRE(rc.sigma[0] / rc.sigma[1] < 8.0);
    const GammaProblem prob = gamma_ec(rc, vc.profile);
    REQUIRE(prob.sol.status == SolveStatus::converged);

    const auto in_cube = [&](const Eigen::Vector2d& s, double lambda) {
        const Eigen::VectorXd x =
            lambda * rc.v_tail + rc.V1 * (s.array() / rc.sigma.array()).matrix();
        return x.minCoeff() >= 0.0 && x.maxCoeff() <= 1.0;
    };
    // Lowest feasible lambda by bisection from a feasible seed, or NaN.
    const auto grid_fmin = [&](const Eigen::Vector2d& s) {
        double seed = std::numeric_limits<double>::quiet_NaN();
        for (int i = 0; i <= 512; ++i) {
            const double lam = -2.0 + 4.0 * i / 512.0;
            if (in_cube(s, lam)) {
                seed = lam;
                break;
            }
        }
        if (std::isnan(seed)) return seed;
        double lo = -2.5, hi = seed;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (in_cube(s, mid) ? hi : lo) = mid;
        }
        return hi;
    };

    const auto [lo, hi] = prob.spec.support.bounding_box();
    const Eigen::VectorXd edge = rc.H_tilde * Eigen::VectorXd::Ones(3);
    const Eigen::Vector2d mean = rc.H_tilde * vc.profile.alpha;
    const double cap1 = rc.v_tail.dot(vc.profile.alpha);
    const double cap2 = rc.v_tail.sum() - cap1;

    const int n = 500;
    std::vector<Eigen::Vector4d> costs;
    costs.reserve(static_cast<std::size_t>(n) * n / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Eigen::Vector2d s(lo[0] + (hi[0] - lo[0]) * (i + 0.5) / n,
                              lo[1] + (hi[1] - lo[1]) * (j + 0.5) / n);
            const double f1 = grid_fmin(s);
            if (std::isnan(f1)) continue;
            const double f2 = grid_fmin(Eigen::Vector2d(edge) - s);
            if (std::isnan(f2)) continue; // seed scan missed a sliver fiber
            costs.emplace_back(s[0] - mean[0], s[1] - mean[1], f1 - cap1, f2 - cap2);
        }
    }
    const double log_area = std::log((hi[0] - lo[0]) * (hi[1] - lo[1]) / (n * n));

    // Damped Newton on the grid objective (the objective, not the solver,
    // is what this oracle makes independent).
    Eigen::Vector4d theta = Eigen::Vector4d::Zero();
    double value = 0.0;
    const auto eval = [&](const Eigen::Vector4d& th, Eigen::Vector4d* g, Eigen::Matrix4d* h) {
        double m = -1e300;
        for (const auto& c : costs) m = std::max(m, -th.dot(c));
        double z = 0.0;
        Eigen::Vector4d mu = Eigen::Vector4d::Zero();
        Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
        for (const auto& c : costs) {
            const double w = std::exp(-th.dot(c) - m);
            z += w;
            if (g) mu += w * c;
            if (h) cov += w * c * c.transpose();
        }
        if (g) *g = -mu / z;
        if (h) *h = cov / z - (mu / z) * (mu / z).transpose();
        return log_area + m + std::log(z);
    };
    Eigen::Vector4d grad;
    Eigen::Matrix4d hess;
    value = eval(theta, &grad, &hess);
    for (int iter = 0; iter < 400; ++iter) {
        Eigen::Vector4d pg = grad;
        for (int k = 2; k < 4; ++k)
            if (theta[k] <= 0.0) pg[k] = std::min(pg[k], 0.0);
        if (pg.lpNorm<Eigen::Infinity>() < 1e-10) break;

        // Newton step on the coordinates away from an active bound.
        std::vector<int> free_idx;
        for (int k = 0; k < 4; ++k)
            if (!(k >= 2 && theta[k] <= 0.0 && grad[k] > 0.0)) free_idx.push_back(k);
        const int F = static_cast<int>(free_idx.size());
        Eigen::MatrixXd Hf(F, F);
        Eigen::VectorXd gf(F);
        for (int a = 0; a < F; ++a) {
            gf[a] = grad[free_idx[static_cast<std::size_t>(a)]];
            for (int b = 0; b < F; ++b)
                Hf(a, b) = hess(free_idx[static_cast<std::size_t>(a)],
                                free_idx[static_cast<std::size_t>(b)]);
        }
        Hf.diagonal().array() += 1e-10 * (1.0 + Hf.trace());
        Eigen::VectorXd df = -Hf.ldlt().solve(gf);
        if (!df.allFinite() || gf.dot(df) >= 0.0) df = -gf;
        Eigen::Vector4d dir = Eigen::Vector4d::Zero();
        for (int a = 0; a < F; ++a) dir[free_idx[static_cast<std::size_t>(a)]] = df[a];

        double t = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
            Eigen::Vector4d trial = theta + t * dir;
            trial[2] = std::max(trial[2], 0.0);
            trial[3] = std::max(trial[3], 0.0);
            const double tv = eval(trial, nullptr, nullptr);
            if (tv < value) {
                theta = trial;
                break;
            }
            t *= 0.5;
        }
        value = eval(theta, &grad, &hess);
    }
    CHECK(std::fabs(prob.sol.gamma - value) <= 1e-3);
}

TEST_CASE("infeasible equal-cost mean is reported") {
    // Mean outside [0,1] cannot be met by any density on [0,1].
    const MaxEntSolution sol = solve_gamma_star(mean_spec(1.2), MaxEntOptions{});
    CHECK(sol.status == SolveStatus::infeasible);
    CHECK(sol.gamma == -std::numeric_limits<double>::infinity());
}
