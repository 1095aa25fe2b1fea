#include "oicap/low_snr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oicap {

Eigen::MatrixXd gram(const ChannelMatrix& channel) {
    return channel.H.transpose() * channel.H;
}

double max_output_trace_ec(const Eigen::MatrixXd& G, const Eigen::VectorXd& x) {
    const int n = static_cast<int>(x.size());
    if (G.rows() != n || G.cols() != n) throw std::invalid_argument("Gram size mismatch");
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            acc += G(i, j) * (std::min(x[i], x[j]) - x[i] * x[j]);
        }
    }
    return acc;
}

MaxCorrBinary maximally_correlated_binary(const Eigen::VectorXd& alpha_desc) {
    const int n = static_cast<int>(alpha_desc.size());
    for (int i = 0; i + 1 < n; ++i) {
        if (alpha_desc[i] < alpha_desc[i + 1]) throw std::invalid_argument("alpha must be sorted descending");
    }
    MaxCorrBinary mc;
    mc.points.setZero(n + 1, n);
    mc.probs.resize(n + 1);
    for (int k = 1; k <= n; ++k) {
        mc.points.row(k) = mc.points.row(k - 1);
        mc.points(k, k - 1) = 1.0;
    }
    mc.probs[0] = 1.0 - (n > 0 ? alpha_desc[0] : 0.0);
    for (int k = 1; k < n; ++k) mc.probs[k] = alpha_desc[k - 1] - alpha_desc[k];
    mc.probs[n] = alpha_desc[n - 1];
    return mc;
}

std::pair<double, Eigen::VectorXd> allocation_objective(const Eigen::MatrixXd& G,
                                                        const Eigen::VectorXd& x) {
    const int n = static_cast<int>(x.size());
    double value = 0.0;
    Eigen::VectorXd sub = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        value -= G(i, i) * (x[i] - x[i] * x[i]);
        sub[i] -= G(i, i) * (1.0 - 2.0 * x[i]);
        for (int j = i + 1; j < n; ++j) {
            const double g2 = G(i, j) + G(j, i);
            value -= g2 * (std::min(x[i], x[j]) - x[i] * x[j]);
            double di, dj;
            if (x[i] < x[j]) {
                di = 1.0;
                dj = 0.0;
            } else if (x[i] > x[j]) {
                di = 0.0;
                dj = 1.0;
            } else {
                di = dj = 0.5;
            }
            sub[i] -= g2 * (di - x[j]);
            sub[j] -= g2 * (dj - x[i]);
        }
    }
    return {value, std::move(sub)};
}

Allocation solve_bc_allocation(const Eigen::MatrixXd& G, const Eigen::VectorXd& alpha,
                               const AllocationOptions& opts) {
    const int n = static_cast<int>(alpha.size());
    if (G.rows() != n || G.cols() != n) throw std::invalid_argument("Gram size mismatch");
    const double alpha_min = alpha.minCoeff();

    Allocation out;
    if (alpha_min >= 0.5) {
        out.x = Eigen::VectorXd::Constant(n, 0.5);
        out.value = max_output_trace_ec(G, out.x);
        out.converged = true;
        return out;
    }

    // Optimal-solution box: every coordinate in [alpha_min, 1/2] and below
    // its own cap; coordinates at the smallest cap end up pinned.
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, std::min(alpha_min, 0.5));
    Eigen::VectorXd hi(n);
    for (int i = 0; i < n; ++i) hi[i] = std::min(alpha[i], 0.5);

    auto project = [&](Eigen::VectorXd v) {
        for (int i = 0; i < n; ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
        return v;
    };

    // The min terms make f0 a piecewise quadratic:
    //   f0(x) = x^T G x - sum_ij g_ij [ (x_i + x_j)/2 - |x_i - x_j|/2 ].
    // Smooth |t| ~ sqrt(t^2 + tau^2), drive tau down with projected Newton,
    // then polish on the exact objective with Polyak subgradient steps.
    const double scale = G.cwiseAbs().maxCoeff() + 1e-30;

    auto smooth_eval = [&](const Eigen::VectorXd& x, double tau, Eigen::VectorXd* grad,
                           Eigen::MatrixXd* hess) {
        double value = x.dot(G * x);
        if (grad) *grad = 2.0 * (G * x);
        if (hess) *hess = 2.0 * G;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double g = G(i, j);
                if (g == 0.0) continue;
                const double d = x[i] - x[j];
                const double root = std::sqrt(d * d + tau * tau);
                value -= g * (0.5 * (x[i] + x[j]) - 0.5 * root);
                if (grad) {
                    (*grad)[i] += g * (-0.5 + 0.5 * d / root);
                    (*grad)[j] += g * (-0.5 - 0.5 * d / root);
                }
                if (hess && i != j) {
                    const double curv = 0.5 * g * tau * tau / (root * root * root);
                    (*hess)(i, i) += curv;
                    (*hess)(j, j) += curv;
                    (*hess)(i, j) -= curv;
                    (*hess)(j, i) -= curv;
                }
            }
        }
        return value;
    };

    Eigen::VectorXd x = project(Eigen::VectorXd::Constant(n, 0.5));
    int total_iter = 0;
    for (double tau : {1e-2, 1e-4, 1e-6, 1e-9}) {
        Eigen::VectorXd grad(n);
        Eigen::MatrixXd hess(n, n);
        double value = smooth_eval(x, tau, &grad, &hess);
        for (int iter = 0; iter < 200; ++iter) {
            ++total_iter;
            // Projected gradient norm over the box.
            double pg = 0.0;
            for (int i = 0; i < n; ++i) {
                double g = grad[i];
                if (x[i] <= lo[i] + 1e-14) g = std::min(g, 0.0);
                if (x[i] >= hi[i] - 1e-14) g = std::max(g, 0.0);
                pg = std::max(pg, std::fabs(g));
            }
            if (pg <= 1e-12 * scale) break;

            Eigen::VectorXd dir = Eigen::VectorXd::Zero(n);
            std::vector<int> free_idx;
            for (int i = 0; i < n; ++i) {
                const bool low = x[i] <= lo[i] + 1e-14 && grad[i] > 0.0;
                const bool high = x[i] >= hi[i] - 1e-14 && grad[i] < 0.0;
                if (!low && !high) free_idx.push_back(i);
            }
            if (free_idx.empty()) break;
            const int F = static_cast<int>(free_idx.size());
            Eigen::MatrixXd Hf(F, F);
            Eigen::VectorXd gf(F);
            for (int a = 0; a < F; ++a) {
                gf[a] = grad[free_idx[static_cast<std::size_t>(a)]];
                for (int b = 0; b < F; ++b)
                    Hf(a, b) =
                        hess(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(b)]);
            }
            Hf.diagonal().array() += 1e-12 * scale;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Hf);
            Eigen::VectorXd df = -ldlt.solve(gf);
            if (ldlt.info() != Eigen::Success || !df.allFinite() || gf.dot(df) > -1e-30) df = -gf / scale;
            for (int a = 0; a < F; ++a) dir[free_idx[static_cast<std::size_t>(a)]] = df[a];

            double t = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 50; ++ls) {
                const Eigen::VectorXd trial = project(x + t * dir);
                const double trial_value = smooth_eval(trial, tau, nullptr, nullptr);
                if (trial_value < value - 1e-16 * scale) {
                    x = trial;
                    value = smooth_eval(x, tau, &grad, &hess);
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) break;
        }
    }

    // Exact-objective Polyak polish with best-value memory.
    auto [f_best, g_cur] = allocation_objective(G, x);
    Eigen::VectorXd best_x = x;
    Eigen::VectorXd cur = x;
    double f_cur = f_best;
    double gap = std::max(1e-6 * scale, 1e-12);
    const int polish_iters = std::min(opts.max_iter - total_iter, 2000);
    for (int k = 0; k < polish_iters; ++k) {
        ++total_iter;
        const double gnorm2 = g_cur.squaredNorm();
        if (gnorm2 < 1e-30) break;
        const double step = (f_cur - (f_best - gap)) / gnorm2;
        cur = project(cur - step * g_cur);
        std::tie(f_cur, g_cur) = allocation_objective(G, cur);
        if (f_cur < f_best - 1e-16 * scale) {
            f_best = f_cur;
            best_x = cur;
        } else if (k % 200 == 199) {
            gap *= 0.5;
            cur = best_x;
            std::tie(f_cur, g_cur) = allocation_objective(G, cur);
        }
    }

    out.x = best_x;
    out.value = -f_best;
    out.iterations = total_iter;
    out.converged = true;
    return out;
}

LadderResult best_ladder_allocation(const Eigen::MatrixXd& G_in, const Eigen::VectorXd& alpha_in) {
    const int n = static_cast<int>(alpha_in.size());
    if (G_in.rows() != n || G_in.cols() != n) throw std::invalid_argument("Gram size mismatch");

    // The interval scan needs the descending order; sort alpha and permute
    // the Gram matrix jointly (the ladder value itself is order-free).
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return alpha_in[a] > alpha_in[b]; });
    Eigen::VectorXd alpha_desc(n);
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i) {
        alpha_desc[i] = alpha_in[perm[static_cast<std::size_t>(i)]];
        for (int j = 0; j < n; ++j)
            G(i, j) = G_in(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }

    // Levels above 1/2 never help (x = min(beta 1, alpha) with beta = 1/2
    // dominates them), so the scan range is clamped to the half point.
    const double beta_lo = std::min(alpha_desc[n - 1], 0.5);
    const double beta_hi = std::min(alpha_desc[0], 0.5);

    auto ladder_value = [&](double beta) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x[i] = std::min(beta, alpha_desc[i]);
        return max_output_trace_ec(G, x);
    };

    LadderResult best{beta_lo, ladder_value(beta_lo)};
    auto consider = [&](double beta) {
        const double v = ladder_value(beta);
        if (v > best.value) best = {beta, v};
    };
    if (beta_hi <= beta_lo) return best;
    consider(beta_hi);

    // Interval (alpha_{k+1}, alpha_k]: the first k coordinates ride at beta.
    // V(beta) = w_k beta (1 - beta) + 2 (1 - beta) c_k + const, stationary at
    // beta* = 1/2 - c_k / w_k.
    for (int k = 1; k <= n; ++k) {
        const double seg_hi = std::min(alpha_desc[k - 1], beta_hi);
        const double seg_lo = std::max((k < n) ? alpha_desc[k] : beta_lo, beta_lo);
        if (seg_hi <= seg_lo) continue;
        double w_k = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) w_k += G(i, j);
        double c_k = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = k; j < n; ++j) c_k += G(i, j) * alpha_desc[j];
        if (w_k > 0.0) {
            const double stat = 0.5 - c_k / w_k;
            if (stat > seg_lo && stat < seg_hi) consider(stat);
        }
        consider(seg_lo);
        consider(seg_hi);
    }
    return best;
}

double ladder_optimality_ratio(const Eigen::MatrixXd& G, const Eigen::VectorXd& alpha_desc,
                               const AllocationOptions& opts) {
    const Allocation opt = solve_bc_allocation(G, alpha_desc, opts);
    if (opt.value <= 0.0) throw std::invalid_argument("zero optimal trace: ratio undefined");
    const LadderResult ladder = best_ladder_allocation(G, alpha_desc);
    return ladder.value / opt.value;
}

} // namespace oicap
