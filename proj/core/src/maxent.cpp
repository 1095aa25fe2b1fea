#include "oicap/maxent.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oicap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dual objective
//   F(theta) = sum_i w_i softplus_tau(d_i . theta) + a . theta
//            + log sum_p exp(logw_p - theta . C_p)
// with the exact positive part at tau = 0 (half-slope subgradient on the
// kink).  The multipliers theta = (u, lambda); entries past n_free are
// constrained to lambda >= 0.
struct DualObjective {
    const QuadratureGrid* grid = nullptr;
    Eigen::VectorXd linear;        // may be empty
    Eigen::MatrixXd kink_dirs;     // K x M, may be empty
    Eigen::VectorXd kink_weights;  // M
    int n_free = 0;
    double smooth_tau = 0.0;

    int n_vars() const { return static_cast<int>(grid->cost.rows()); }

    double log_partition_part(const Eigen::VectorXd& theta, Eigen::VectorXd* grad,
                              Eigen::MatrixXd* hess, Eigen::VectorXd* moments) const {
        const auto& C = grid->cost;
        const Eigen::VectorXd expo = grid->logw - C.transpose() * theta;
        const double m = expo.maxCoeff();
        Eigen::VectorXd p = (expo.array() - m).exp();
        const double z = p.sum();
        p /= z;
        const double value = m + std::log(z);
        Eigen::VectorXd mu;
        if (grad || hess || moments) mu = C * p;
        if (grad) *grad = -mu;
        if (moments) *moments = mu;
        if (hess) {
            const int K = n_vars();
            hess->setZero(K, K);
            const std::int64_t N = grid->n_nodes();
            constexpr std::int64_t kBlock = 8192;
            for (std::int64_t b = 0; b < N; b += kBlock) {
                const std::int64_t len = std::min(kBlock, N - b);
                const auto Cb = C.middleCols(b, len);
                *hess += Cb * p.segment(b, len).asDiagonal() * Cb.transpose();
            }
            *hess -= mu * mu.transpose();
        }
        return value;
    }

    double eval(const Eigen::VectorXd& theta, Eigen::VectorXd* grad, Eigen::MatrixXd* hess,
                Eigen::VectorXd* moments = nullptr) const {
        double value = log_partition_part(theta, grad, hess, moments);
        if (linear.size() > 0) {
            value += linear.dot(theta);
            if (grad) *grad += linear;
        }
        for (int i = 0; i < kink_dirs.cols(); ++i) {
            const double w = kink_weights[i];
            if (w == 0.0) continue;
            const double xi = kink_dirs.col(i).dot(theta);
            if (smooth_tau > 0.0) {
                const double t = xi / smooth_tau;
                double sp, sg;
                if (t > 40.0) {
                    sp = xi;
                    sg = 1.0;
                } else if (t < -40.0) {
                    sp = 0.0;
                    sg = 0.0;
                } else {
                    sp = smooth_tau * std::log1p(std::exp(t));
                    sg = 1.0 / (1.0 + std::exp(-t));
                }
                value += w * sp;
                if (grad) *grad += w * sg * kink_dirs.col(i);
                if (hess) {
                    const double curv = w * sg * (1.0 - sg) / smooth_tau;
                    if (curv > 0.0) *hess += curv * (kink_dirs.col(i) * kink_dirs.col(i).transpose());
                }
            } else {
                const double tol = 1e-12 * (1.0 + theta.norm());
                double step;
                if (xi > tol)
                    step = 1.0;
                else if (xi < -tol)
                    step = 0.0;
                else
                    step = 0.5;
                value += w * std::max(xi, 0.0);
                if (grad) *grad += w * step * kink_dirs.col(i);
            }
        }
        return value;
    }

    Eigen::VectorXd project(Eigen::VectorXd theta) const {
        for (int i = n_free; i < theta.size(); ++i) theta[i] = std::max(theta[i], 0.0);
        return theta;
    }

    double projected_grad_norm(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad) const {
        double nrm = 0.0;
        for (int i = 0; i < theta.size(); ++i) {
            double g = grad[i];
            if (i >= n_free && theta[i] <= 0.0) g = std::min(g, 0.0);
            nrm = std::max(nrm, std::fabs(g));
        }
        return nrm;
    }

    // Distance from zero to the (projected) subdifferential of the exact
    // objective.  Vanishes at the optimum even when positive-part terms sit
    // on their kinks, where the half-slope gradient does not.
    double subdiff_distance(const Eigen::VectorXd& theta) const {
        Eigen::VectorXd g0(theta.size());
        log_partition_part(theta, &g0, nullptr, nullptr);
        if (linear.size() > 0) g0 += linear;
        std::vector<int> on_kink;
        for (int i = 0; i < kink_dirs.cols(); ++i) {
            const double w = kink_weights[i];
            if (w == 0.0) continue;
            const double xi = kink_dirs.col(i).dot(theta);
            // Window wide enough to absorb the final smoothing stage, where
            // the optimal kink abscissa settles at O(tau * logit) from zero.
            const double tol = 2e-4 * (1.0 + kink_dirs.col(i).norm() * theta.norm());
            if (xi > tol)
                g0 += w * kink_dirs.col(i);
            else if (std::fabs(xi) <= tol)
                on_kink.push_back(i);
        }
        auto residual_norm = [&](const Eigen::VectorXd& r) {
            double acc = 0.0;
            for (int j = 0; j < r.size(); ++j) {
                double v = r[j];
                if (j >= n_free && theta[j] <= 1e-14) v = std::min(v, 0.0);
                acc += v * v;
            }
            return std::sqrt(acc);
        };
        if (on_kink.empty()) return residual_norm(g0);

        // min over c in [0,1]^m of || proj(g0 + D c) ||: box least squares,
        // warm-started from the unconstrained solution and polished with
        // FISTA (plain projected gradient is too slow when D is
        // ill-conditioned).
        const int m = static_cast<int>(on_kink.size());
        Eigen::MatrixXd D(theta.size(), m);
        for (int k = 0; k < m; ++k)
            D.col(k) = kink_weights[on_kink[static_cast<std::size_t>(k)]] *
                       kink_dirs.col(on_kink[static_cast<std::size_t>(k)]);
        Eigen::MatrixXd gram = D.transpose() * D;
        const double lip = 2.0 * gram.trace() + 1e-30;
        gram.diagonal().array() += 1e-14 * (1.0 + gram.trace());
        Eigen::VectorXd c =
            gram.ldlt().solve(-D.transpose() * g0).cwiseMax(0.0).cwiseMin(1.0);

        auto hinge_residual = [&](const Eigen::VectorXd& cc) {
            Eigen::VectorXd r = g0 + D * cc;
            for (int j = 0; j < r.size(); ++j)
                if (j >= n_free && theta[j] <= 1e-14 && r[j] > 0.0) r[j] = 0.0;
            return r;
        };
        Eigen::VectorXd best_c = c;
        double best_phi = hinge_residual(c).squaredNorm();
        Eigen::VectorXd y = c;
        double t = 1.0;
        for (int it = 0; it < 2000 && best_phi > 1e-20; ++it) {
            const Eigen::VectorXd gc = 2.0 * (D.transpose() * hinge_residual(y));
            const Eigen::VectorXd c_next = (y - gc / lip).cwiseMax(0.0).cwiseMin(1.0);
            const double phi = hinge_residual(c_next).squaredNorm();
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            if (phi > best_phi) {
                y = c_next;
                t = 1.0;
            } else {
                y = c_next + ((t - 1.0) / t_next) * (c_next - c);
                t = t_next;
            }
            c = c_next;
            if (phi < best_phi) {
                best_phi = phi;
                best_c = c_next;
            }
        }
        return residual_norm(g0 + D * best_c);
    }

    bool has_kinks() const { return kink_dirs.cols() > 0 && kink_weights.maxCoeff() > 0.0; }
};

struct DualResult {
    Eigen::VectorXd theta;
    double value = kInf;
    double grad_norm = kInf;
    int iterations = 0;
    SolveStatus status = SolveStatus::max_iter;
};

// Projected damped Newton with backtracking.  The Hessian comes from the
// log-partition covariance (plus the softplus curvature when smoothing);
// non-descent or stalled steps fall back to the projected gradient.
DualResult minimize_dual(const DualObjective& obj, Eigen::VectorXd theta, const MaxEntOptions& opts,
                         int max_iter) {
    const int K = static_cast<int>(theta.size());
    DualResult res;
    Eigen::VectorXd grad(K);
    Eigen::MatrixXd hess(K, K);
    double value = obj.eval(theta, &grad, &hess);
    int stagnant = 0;

    // On the exact kinked objective the half-slope gradient does not vanish
    // at an optimum sitting on a kink; measure optimality through the
    // subdifferential distance instead.
    const bool kinked = obj.smooth_tau == 0.0 && obj.has_kinks();
    auto optimality = [&](const Eigen::VectorXd& th, const Eigen::VectorXd& g) {
        return kinked ? obj.subdiff_distance(th) : obj.projected_grad_norm(th, g);
    };

    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        const double pg = optimality(theta, grad);
        if (pg <= opts.grad_tol) {
            res.status = SolveStatus::converged;
            break;
        }
        if (theta.norm() > opts.dual_norm_cap) {
            res.status = SolveStatus::infeasible;
            break;
        }

        // Active bound constraints are frozen for this step.
        std::vector<int> free_idx;
        free_idx.reserve(static_cast<std::size_t>(K));
        for (int i = 0; i < K; ++i) {
            const bool at_bound = i >= obj.n_free && theta[i] <= 1e-14 && grad[i] > 0.0;
            if (!at_bound) free_idx.push_back(i);
        }

        Eigen::VectorXd dir = Eigen::VectorXd::Zero(K);
        if (!free_idx.empty()) {
            const int F = static_cast<int>(free_idx.size());
            Eigen::MatrixXd Hf(F, F);
            Eigen::VectorXd gf(F);
            for (int a = 0; a < F; ++a) {
                gf[a] = grad[free_idx[static_cast<std::size_t>(a)]];
                for (int b = 0; b < F; ++b)
                    Hf(a, b) = hess(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(b)]);
            }
            const double reg = 1e-12 * (1.0 + Hf.trace() / F);
            Hf.diagonal().array() += reg;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Hf);
            Eigen::VectorXd df = -ldlt.solve(gf);
            if (ldlt.info() != Eigen::Success || !df.allFinite() || gf.dot(df) > -1e-18) df = -gf;
            for (int a = 0; a < F; ++a) dir[free_idx[static_cast<std::size_t>(a)]] = df[a];
        }

        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd trial;
        double trial_value = 0.0;
        for (int ls = 0; ls < 60; ++ls) {
            trial = obj.project(theta + t * dir);
            trial_value = obj.eval(trial, nullptr, nullptr);
            if (std::isfinite(trial_value) && trial_value < value - 1e-15 * (1.0 + std::fabs(value))) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            res.status = (pg <= 1e3 * opts.grad_tol) ? SolveStatus::converged : SolveStatus::max_iter;
            break;
        }

        const double improvement = value - trial_value;
        theta = trial;
        value = obj.eval(theta, &grad, &hess);
        if (improvement < 1e-13 * (1.0 + std::fabs(value))) {
            if (++stagnant >= 6) {
                const double pg2 = optimality(theta, grad);
                res.status = (pg2 <= 1e3 * opts.grad_tol) ? SolveStatus::converged : SolveStatus::max_iter;
                break;
            }
        } else {
            stagnant = 0;
        }
        if (iter + 1 == max_iter) res.status = SolveStatus::max_iter;
    }

    res.theta = theta;
    res.value = value;
    Eigen::VectorXd g(K);
    obj.eval(theta, &g, nullptr);
    res.grad_norm = optimality(theta, g);
    if (res.status == SolveStatus::max_iter && res.grad_norm <= 1e3 * opts.grad_tol)
        res.status = SolveStatus::converged;
    return res;
}

// Diminishing-step projected subgradient pass over the exact objective,
// keeping the best iterate.  Used to polish kinked duals.
DualResult polish_subgradient(const DualObjective& obj, Eigen::VectorXd theta,
                              const MaxEntOptions& opts, int iters) {
    (void)opts;
    DualResult best;
    Eigen::VectorXd grad(theta.size());
    best.theta = theta;
    best.value = obj.eval(theta, &grad, nullptr);
    best.grad_norm = obj.projected_grad_norm(theta, grad);
    double radius = 0.1 * (1.0 + theta.norm());
    Eigen::VectorXd cur = theta;
    double cur_value = best.value;
    for (int k = 0; k < iters; ++k) {
        const double gn = grad.norm();
        if (gn < 1e-15) break;
        const double step = radius / ((1.0 + k / 25.0) * gn);
        cur = obj.project(cur - step * grad);
        cur_value = obj.eval(cur, &grad, nullptr);
        if (cur_value < best.value) {
            best.value = cur_value;
            best.theta = cur;
        }
    }
    best.grad_norm = obj.subdiff_distance(best.theta);
    best.status = SolveStatus::converged;
    best.iterations = iters;
    return best;
}

MaxEntSolution pack_solution(const DualObjective& obj, const DualResult& res, const MomentSpec& spec,
                             std::int64_t n_quad) {
    MaxEntSolution sol;
    sol.gamma = res.value;
    sol.grad_norm = res.grad_norm;
    sol.iterations = res.iterations;
    sol.status = res.status;
    sol.n_quad = n_quad;
    const int n_eq = static_cast<int>(spec.equalities.size());
    const int n_ineq = static_cast<int>(spec.inequalities.size());
    sol.dual.u = res.theta.head(n_eq);
    sol.dual.lambda = res.theta.tail(n_ineq);
    Eigen::VectorXd moments;
    sol.log_norm = obj.log_partition_part(res.theta, nullptr, nullptr, &moments);
    // nu normalizes the solution density; it equals -gamma whenever the
    // dual is the bare log-partition (no linear or positive-part terms).
    sol.dual.nu = -sol.log_norm;
    sol.eq_moments = moments.head(n_eq);
    sol.ineq_moments = moments.tail(n_ineq);
    if (res.status == SolveStatus::infeasible) sol.gamma = -kInf;
    return sol;
}

// Rebuilds the grid with doubled qMC points until gamma moves less than
// qmc_gamma_tol (dim >= 3 only); 1-D and 2-D grids are deterministic.
template <typename SolveFn>
MaxEntSolution solve_with_refinement(const MomentSpec& spec, const MaxEntOptions& opts,
                                     const SolveFn& solve_on_grid) {
    QuadratureOptions quad = opts.quad;
    QuadratureGrid grid = build_grid(spec, quad);
    MaxEntSolution sol = solve_on_grid(grid, Eigen::VectorXd());
    if (spec.dim() < 3 || !opts.qmc_doubling) return sol;
    for (int pass = 0; pass < opts.qmc_max_doublings; ++pass) {
        if (sol.status == SolveStatus::infeasible) break;
        quad.qmc_points *= 2;
        QuadratureGrid finer = build_grid(spec, quad);
        Eigen::VectorXd warm(sol.dual.u.size() + sol.dual.lambda.size());
        warm << sol.dual.u, sol.dual.lambda;
        MaxEntSolution refined = solve_on_grid(finer, warm);
        const bool settled = std::fabs(refined.gamma - sol.gamma) < opts.qmc_gamma_tol;
        sol = refined;
        if (settled) break;
    }
    return sol;
}

} // namespace

std::pair<double, Eigen::VectorXd> log_partition(const QuadratureGrid& grid, const Eigen::VectorXd& u,
                                                 const Eigen::VectorXd& lambda) {
    DualObjective obj;
    obj.grid = &grid;
    obj.n_free = grid.n_eq;
    Eigen::VectorXd theta(grid.n_eq + grid.n_ineq);
    theta << u, lambda;
    Eigen::VectorXd grad(theta.size());
    const double value = obj.eval(theta, &grad, nullptr);
    return {value, grad};
}

std::pair<double, Eigen::VectorXd> log_partition(const MomentSpec& spec, const Eigen::VectorXd& u,
                                                 const Eigen::VectorXd& lambda,
                                                 const QuadratureOptions& quad) {
    if (u.size() != static_cast<Eigen::Index>(spec.equalities.size()) ||
        lambda.size() != static_cast<Eigen::Index>(spec.inequalities.size()))
        throw std::invalid_argument("multiplier sizes do not match the moment problem");
    for (int j = 0; j < lambda.size(); ++j)
        if (lambda[j] < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    if (spec.support.volume <= 0.0) throw std::invalid_argument("support has zero volume");
    const QuadratureGrid grid = build_grid(spec, quad);
    return log_partition(grid, u, lambda);
}

MaxEntSolution solve_gamma_star(const MomentSpec& spec, const MaxEntOptions& opts) {
    if (spec.support.volume <= 0.0) throw std::invalid_argument("support has zero volume");
    const int K = spec.n_costs();
    auto solve_on_grid = [&](const QuadratureGrid& grid, const Eigen::VectorXd& warm) {
        DualObjective obj;
        obj.grid = &grid;
        obj.n_free = grid.n_eq;
        Eigen::VectorXd theta0 = warm.size() == K ? warm : Eigen::VectorXd::Zero(K);
        DualResult res;
        if (K == 0) {
            res.theta = theta0;
            res.value = obj.eval(theta0, nullptr, nullptr);
            res.grad_norm = 0.0;
            res.status = SolveStatus::converged;
        } else {
            res = minimize_dual(obj, obj.project(theta0), opts, opts.max_iter);
        }
        return pack_solution(obj, res, spec, grid.n_nodes());
    };
    return solve_with_refinement(spec, opts, solve_on_grid);
}

MomentSpec ec_moment_spec(const ReducedChannel& reduced, const IntensityProfile& profile) {
    if (!reduced.has_tail) throw std::invalid_argument("rank must be n_t - 1");
    if (profile.alpha.size() != reduced.n_t())
        throw std::invalid_argument("alpha size does not match the channel");
    const int r = reduced.rank;
    MomentSpec spec;
    spec.support = decompose(reduced);

    const Eigen::VectorXd mean = reduced.H_tilde * profile.alpha;
    for (int i = 0; i < r; ++i)
        spec.equalities.push_back(PiecewiseLinearCost::affine(Eigen::VectorXd::Unit(r, i), 0.0, mean[i]));

    const FiberPieces pieces = fiber_min_pieces(reduced);
    PiecewiseLinearCost g1;
    g1.A = pieces.A;
    g1.b = pieces.b;
    g1.offset = reduced.v_tail.dot(profile.alpha);
    spec.inequalities.push_back(g1);

    const Eigen::VectorXd edge = reduced.H_tilde * Eigen::VectorXd::Ones(reduced.n_t());
    PiecewiseLinearCost g2;
    g2.A = -pieces.A;
    g2.b = pieces.b + pieces.A * edge;
    g2.offset = reduced.v_tail.dot(Eigen::VectorXd::Ones(reduced.n_t()) - profile.alpha);
    spec.inequalities.push_back(g2);
    return spec;
}

GammaProblem gamma_ec(const ReducedChannel& reduced, const IntensityProfile& profile,
                      const MaxEntOptions& opts) {
    GammaProblem prob;
    prob.spec = ec_moment_spec(reduced, profile);
    prob.sol = solve_gamma_star(prob.spec, opts);
    return prob;
}

GammaProblem gamma_bc(const ReducedChannel& reduced, const IntensityProfile& profile,
                      const MaxEntOptions& opts) {
    if (!reduced.has_tail) throw std::invalid_argument("rank must be n_t - 1");
    if (profile.alpha.size() != reduced.n_t())
        throw std::invalid_argument("alpha size does not match the channel");
    const int r = reduced.rank;
    const int n_t = reduced.n_t();

    // Bare costs; the per-antenna caps live in the positive-part terms.
    MomentSpec spec;
    spec.support = decompose(reduced);
    for (int i = 0; i < r; ++i)
        spec.equalities.push_back(PiecewiseLinearCost::affine(Eigen::VectorXd::Unit(r, i), 0.0, 0.0));
    const FiberPieces pieces = fiber_min_pieces(reduced);
    PiecewiseLinearCost g1;
    g1.A = pieces.A;
    g1.b = pieces.b;
    spec.inequalities.push_back(g1);
    const Eigen::VectorXd edge = reduced.H_tilde * Eigen::VectorXd::Ones(n_t);
    PiecewiseLinearCost g2;
    g2.A = -pieces.A;
    g2.b = pieces.b + pieces.A * edge;
    spec.inequalities.push_back(g2);

    const int K = r + 2;
    Eigen::MatrixXd kink_dirs(K, n_t);
    for (int i = 0; i < n_t; ++i) {
        kink_dirs.block(0, i, r, 1) = reduced.H_tilde.col(i);
        kink_dirs(r, i) = reduced.v_tail[i];
        kink_dirs(r + 1, i) = -reduced.v_tail[i];
    }
    Eigen::VectorXd linear = Eigen::VectorXd::Zero(K);
    linear[r + 1] = reduced.v_tail.sum();

    auto solve_on_grid = [&](const QuadratureGrid& grid, const Eigen::VectorXd& warm) {
        DualObjective obj;
        obj.grid = &grid;
        obj.n_free = r;
        obj.linear = linear;
        obj.kink_dirs = kink_dirs;
        obj.kink_weights = profile.alpha;

        Eigen::VectorXd theta = warm.size() == K ? warm : Eigen::VectorXd::Zero(K);
        theta = obj.project(theta);

        // Smoothing homotopy on the positive parts, then an exact polish.
        DualResult res;
        for (double tau : {3e-2, 3e-3, 3e-4, 3e-5, 3e-6}) {
            obj.smooth_tau = tau;
            res = minimize_dual(obj, theta, opts, opts.max_iter);
            theta = res.theta;
            if (res.status == SolveStatus::infeasible) break;
        }
        obj.smooth_tau = 0.0;
        if (res.status != SolveStatus::infeasible) {
            DualResult exact = minimize_dual(obj, theta, opts, opts.max_iter / 2);
            res = exact;
            if (exact.status != SolveStatus::converged) {
                DualResult polish = polish_subgradient(obj, exact.theta, opts, 400);
                if (polish.value < exact.value || polish.grad_norm < exact.grad_norm) res = polish;
                if (res.grad_norm <= 1e3 * opts.grad_tol) res.status = SolveStatus::converged;
            }
        }
        return pack_solution(obj, res, spec, grid.n_nodes());
    };

    GammaProblem prob;
    prob.sol = solve_with_refinement(spec, opts, solve_on_grid);
    prob.spec = std::move(spec);
    return prob;
}

double epi_lower_bound(double gamma, int k, NoiseLevel noise) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (!(noise.sigma_noise > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (gamma == -kInf) return 0.0;
    const double ratio = std::exp(2.0 * gamma / k) / (2.0 * M_PI * M_E * noise.sigma_noise * noise.sigma_noise);
    return 0.5 * k * std::log1p(ratio);
}

double density_eval(const MaxEntSolution& sol, const MomentSpec& spec, const Eigen::VectorXd& s) {
    if (!locate(spec.support, s).inside()) return 0.0;
    double expo = -sol.log_norm;
    int idx = 0;
    for (const auto& c : spec.equalities) expo -= sol.dual.u[idx++] * c.eval(s);
    idx = 0;
    for (const auto& c : spec.inequalities) expo -= sol.dual.lambda[idx++] * c.eval(s);
    return std::exp(expo);
}

std::vector<Eigen::VectorXd> sample_density(const MaxEntSolution& sol, const MomentSpec& spec, int n,
                                            Rng& rng) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(n));
    const int k = spec.dim();
    if (k == 1) {
        // Inverse CDF on a dense grid.
        const auto [lo_v, hi_v] = spec.support.bounding_box();
        const double lo = lo_v[0], hi = hi_v[0];
        const int M = 1 << 14;
        Eigen::VectorXd cdf(M + 1);
        cdf[0] = 0.0;
        Eigen::VectorXd s(1);
        double prev;
        {
            s[0] = lo;
            prev = density_eval(sol, spec, s);
        }
        const double h = (hi - lo) / M;
        for (int i = 1; i <= M; ++i) {
            s[0] = lo + h * i;
            const double cur = density_eval(sol, spec, s);
            cdf[i] = cdf[i - 1] + 0.5 * h * (prev + cur);
            prev = cur;
        }
        const double total = cdf[M];
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform() * total;
            int a = 0, b = M;
            while (b - a > 1) {
                const int mid = (a + b) / 2;
                (cdf[mid] <= u ? a : b) = mid;
            }
            const double frac = (cdf[b] > cdf[a]) ? (u - cdf[a]) / (cdf[b] - cdf[a]) : 0.5;
            Eigen::VectorXd x(1);
            x[0] = lo + h * (a + frac);
            out.push_back(std::move(x));
        }
        return out;
    }

    // Rejection from the uniform law on the support.
    double bound = 0.0;
    for (int probe = 0; probe < 4096; ++probe) {
        const Eigen::VectorXd s = sample_uniform(spec.support, rng);
        bound = std::max(bound, density_eval(sol, spec, s));
    }
    bound *= 3.0;
    int guard = 0;
    while (static_cast<int>(out.size()) < n) {
        const Eigen::VectorXd s = sample_uniform(spec.support, rng);
        const double p = density_eval(sol, spec, s);
        if (p > bound) {
            bound = 2.0 * p;
            out.clear();
            if (++guard > 64) throw std::runtime_error("density bound failed to stabilise");
            continue;
        }
        if (rng.uniform() * bound <= p) out.push_back(s);
    }
    return out;
}

SignalingMap make_signaling_map(const ReducedChannel& reduced, const IntensityProfile& profile,
                                const MaxEntSolution& ec_solution) {
    if (!reduced.has_tail) throw std::invalid_argument("rank must be n_t - 1");
    if (ec_solution.status != SolveStatus::converged)
        throw std::invalid_argument("signaling map requires a converged equal-cost solution");
    const double cap1 = reduced.v_tail.dot(profile.alpha);
    const double cap2 = reduced.v_tail.dot(Eigen::VectorXd::Ones(reduced.n_t()) - profile.alpha);
    const double mean_fmin = ec_solution.ineq_moments[0] + cap1;
    const double mean_fmin_reflected = ec_solution.ineq_moments[1] + cap2;
    const double lo = mean_fmin;
    const double hi = reduced.v_tail.sum() - mean_fmin_reflected;
    const double target = cap1;

    SignalingMap map;
    map.reduced = reduced;
    if (std::fabs(hi - lo) < 1e-12) {
        map.tau = 1.0;
    } else {
        map.tau = (hi - target) / (hi - lo);
    }
    if (map.tau < -1e-6 || map.tau > 1.0 + 1e-6)
        throw std::invalid_argument("tau outside [0,1]: moment constraints violated");
    map.tau = std::clamp(map.tau, 0.0, 1.0);
    return map;
}

Eigen::VectorXd apply_signaling(const SignalingMap& map, const Eigen::VectorXd& s) {
    const auto& rc = map.reduced;
    const FiberInterval fi = fiber_interval(rc, s);
    const Eigen::VectorXd edge = rc.H_tilde * Eigen::VectorXd::Ones(rc.n_t());
    const double fmin_reflected = fiber_interval(rc, edge - s).lo;
    const double lambda = map.tau * fi.lo + (1.0 - map.tau) * (rc.v_tail.sum() - fmin_reflected);
    Eigen::VectorXd x = lambda * rc.v_tail + fi.base_point;
    for (int i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], 0.0, 1.0);
    return x;
}

} // namespace oicap
