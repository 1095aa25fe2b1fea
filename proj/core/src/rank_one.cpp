#include "oicap/rank_one.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oicap {

namespace {

// Normalized gains w = v_1 / (1^T v_1) and alpha, both in descending-alpha
// order.  Rank one guarantees v_1 >= 0; dust below -1e-9 is rejected.
void ordered_weights(const ReducedChannel& reduced, const IntensityProfile& profile,
                     Eigen::VectorXd& w, Eigen::VectorXd& alpha) {
    if (reduced.rank != 1) throw std::invalid_argument("rank != 1");
    const Eigen::VectorXd v1 = reduced.V1.col(0);
    for (int i = 0; i < v1.size(); ++i) {
        if (v1[i] < -1e-9) throw std::invalid_argument("reduced gains not nonnegative");
    }
    const double total = v1.sum();
    const int n = reduced.n_t();
    w.resize(n);
    alpha.resize(n);
    for (int k = 0; k < n; ++k) {
        const int i = profile.order_perm[static_cast<std::size_t>(k)];
        w[k] = std::max(v1[i], 0.0) / total;
        alpha[k] = profile.alpha[i];
    }
}

void append_stop_loss_caps(const Eigen::VectorXd& w, const Eigen::VectorXd& alpha, int k_first,
                           SISOConstraintSet& cs) {
    const int n = static_cast<int>(w.size());
    double threshold = 0.0;
    for (int i = 0; i < k_first; ++i) threshold += w[i];
    for (int k = k_first; k < n; ++k) {
        double cap = 0.0;
        for (int i = k; i < n; ++i) cap += w[i] * alpha[i];
        // Zero-gain antennas duplicate the previous threshold; keep the
        // tighter cap.
        if (!cs.stop_loss_caps.empty() &&
            std::fabs(cs.stop_loss_caps.back().first - threshold) < 1e-14) {
            cs.stop_loss_caps.back().second = std::min(cs.stop_loss_caps.back().second, cap);
        } else {
            cs.stop_loss_caps.emplace_back(threshold, cap);
        }
        threshold += w[k];
    }
}

} // namespace

SISOConstraintSet ec_constraints(const ReducedChannel& reduced, const IntensityProfile& profile) {
    Eigen::VectorXd w, alpha;
    ordered_weights(reduced, profile, w, alpha);
    SISOConstraintSet cs;
    cs.kind = CostMode::EqualCost;
    cs.mean = w.dot(alpha);
    cs.gain = reduced.sigma[0] * reduced.V1.col(0).sum();
    append_stop_loss_caps(w, alpha, 1, cs);
    return cs;
}

SISOConstraintSet bc_constraints(const ReducedChannel& reduced, const IntensityProfile& profile) {
    Eigen::VectorXd w, alpha;
    ordered_weights(reduced, profile, w, alpha);
    SISOConstraintSet cs;
    cs.kind = CostMode::BoundedCost;
    cs.gain = reduced.sigma[0] * reduced.V1.col(0).sum();
    append_stop_loss_caps(w, alpha, 0, cs);
    return cs;
}

double stop_loss(const DiscreteDistribution& dist, double c) {
    if (dist.points.size() != dist.probs.size())
        throw std::invalid_argument("points/probs size mismatch");
    double acc = 0.0;
    for (int i = 0; i < dist.points.size(); ++i)
        acc += dist.probs[i] * std::max(dist.points[i] - c, 0.0);
    return acc;
}

GammaProblem gamma_siso(const SISOConstraintSet& cs, const MaxEntOptions& opts) {
    GammaProblem prob;
    prob.spec.support = MomentSpec::interval_support(0.0, 1.0);
    if (cs.kind == CostMode::EqualCost) {
        prob.spec.equalities.push_back(
            PiecewiseLinearCost::affine(Eigen::VectorXd::Ones(1), 0.0, cs.mean));
    }
    for (const auto& [threshold, cap] : cs.stop_loss_caps)
        prob.spec.inequalities.push_back(PiecewiseLinearCost::stop_loss(threshold, cap));
    prob.sol = solve_gamma_star(prob.spec, opts);
    return prob;
}

} // namespace oicap
