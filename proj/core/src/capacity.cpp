#include "oicap/capacity.hpp"

#include <cmath>
#include <stdexcept>

namespace oicap {

namespace {

// Moment problem for an invertible reduction (r = n_t): the mean is pinned
// (equal-cost) or the per-antenna averages are capped through H~^{-1}
// (bounded-cost).  No fiber direction exists.
GammaProblem solve_full_column_rank(const ReducedChannel& reduced, const IntensityProfile& profile,
                                    CostMode mode, const MaxEntOptions& opts) {
    const int r = reduced.rank;
    GammaProblem prob;
    prob.spec.support = decompose(reduced);
    if (mode == CostMode::EqualCost) {
        const Eigen::VectorXd mean = reduced.H_tilde * profile.alpha;
        for (int i = 0; i < r; ++i)
            prob.spec.equalities.push_back(
                PiecewiseLinearCost::affine(Eigen::VectorXd::Unit(r, i), 0.0, mean[i]));
    } else {
        const Eigen::MatrixXd inv = reduced.H_tilde.inverse();
        for (int i = 0; i < r; ++i)
            prob.spec.inequalities.push_back(
                PiecewiseLinearCost::affine(inv.row(i).transpose(), 0.0, profile.alpha[i]));
    }
    prob.sol = solve_gamma_star(prob.spec, opts);
    return prob;
}

} // namespace

GammaReport compute_gamma(const ChannelMatrix& channel, const IntensityProfile& profile,
                          CostMode mode, const MaxEntOptions& opts,
                          std::optional<GammaPath> force_path) {
    if (profile.alpha.size() != channel.n_t())
        throw std::invalid_argument("alpha size does not match the channel");

    GammaReport report;

    // Boundary alpha entries force the corresponding input deterministic;
    // drop those antennas (constant output offsets carry no information).
    std::vector<int> keep;
    for (int i = 0; i < channel.n_t(); ++i) {
        const double a = profile.alpha[i];
        const bool pin = (mode == CostMode::EqualCost) ? (a == 0.0 || a == 1.0) : (a == 0.0);
        if (pin)
            report.pinned_antennas.push_back(i);
        else
            keep.push_back(i);
    }

    ChannelMatrix sub;
    sub.H.resize(channel.n_r(), static_cast<Eigen::Index>(keep.size()));
    Eigen::VectorXd sub_alpha(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        sub.H.col(static_cast<Eigen::Index>(k)) = channel.H.col(keep[k]);
        sub_alpha[static_cast<Eigen::Index>(k)] = profile.alpha[keep[k]];
    }

    if (keep.empty() || sub.H.lpNorm<Eigen::Infinity>() == 0.0) {
        report.path = GammaPath::Degenerate;
        report.dim = 0;
        return report;
    }

    ValidatedChannel vc = validate(std::move(sub), std::move(sub_alpha));
    report.effective_profile = vc.profile;
    report.reduced = reduce(vc.channel);
    const ReducedChannel& rc = report.reduced;
    const int n_t = rc.n_t();

    GammaPath path;
    if (force_path) {
        path = *force_path;
    } else if (rc.has_tail) {
        path = GammaPath::Fiber;
    } else if (rc.rank == 1) {
        path = GammaPath::RankOne;
    } else if (rc.rank == n_t) {
        path = GammaPath::FullColumnRank;
    } else {
        throw std::invalid_argument(
            "unsupported channel rank: only rank 1, n_t - 1 and n_t reductions are available");
    }

    switch (path) {
        case GammaPath::Fiber: {
            if (!rc.has_tail) throw std::invalid_argument("fiber path requires rank n_t - 1");
            report.problem = (mode == CostMode::EqualCost) ? gamma_ec(rc, vc.profile, opts)
                                                           : gamma_bc(rc, vc.profile, opts);
            report.gamma = report.problem.sol.gamma;
            report.dim = rc.rank;
            break;
        }
        case GammaPath::RankOne: {
            if (rc.rank != 1) throw std::invalid_argument("rank-one path requires rank 1");
            const SISOConstraintSet cs = (mode == CostMode::EqualCost)
                                             ? ec_constraints(rc, vc.profile)
                                             : bc_constraints(rc, vc.profile);
            report.problem = gamma_siso(cs, opts);
            report.log_gain = std::log(cs.gain);
            report.gamma = report.problem.sol.gamma + report.log_gain;
            report.dim = 1;
            break;
        }
        case GammaPath::FullColumnRank: {
            if (rc.rank != n_t) throw std::invalid_argument("full-column-rank path requires rank n_t");
            report.problem = solve_full_column_rank(rc, vc.profile, mode, opts);
            report.gamma = report.problem.sol.gamma;
            report.dim = rc.rank;
            break;
        }
        case GammaPath::Degenerate:
            break;
    }
    report.path = path;
    report.status = report.problem.sol.status;
    if (report.status == SolveStatus::infeasible)
        report.gamma = -std::numeric_limits<double>::infinity();
    return report;
}

} // namespace oicap
