#ifndef OICAP_RANK_ONE_HPP
#define OICAP_RANK_ONE_HPP

#include <Eigen/Dense>
#include <vector>

#include "oicap/channel.hpp"
#include "oicap/maxent.hpp"

namespace oicap {

enum class CostMode { EqualCost, BoundedCost };

/// Scalar-channel constraint set equivalent to a rank-one MIMO link:
/// S lives on [0,1]; the equal-cost case fixes its mean and caps n_t - 1
/// stop-loss moments; the bounded-cost case caps n_t stop-loss moments
/// (thresholds starting at zero) with no mean equality.
struct SISOConstraintSet {
    CostMode kind = CostMode::EqualCost;
    double mean = 0.0;  // equal-cost only
    std::vector<std::pair<double, double>> stop_loss_caps; // (threshold, cap), thresholds increasing
    double gain = 0.0;  // sigma_1 * 1^T v_1; channel gamma = gamma_siso + log(gain)
};

/// Equal-cost reduction (requires rank one and the nonnegative reduced
/// gain vector that rank one guarantees).  Antennas are taken in the
/// descending-alpha order carried by the profile.
SISOConstraintSet ec_constraints(const ReducedChannel& reduced, const IntensityProfile& profile);

/// Bounded-cost reduction: same thresholds plus the k = 0 cap on E[S].
SISOConstraintSet bc_constraints(const ReducedChannel& reduced, const IntensityProfile& profile);

/// Discrete law on [0,1] for stop-loss evaluation.
struct DiscreteDistribution {
    Eigen::VectorXd points;
    Eigen::VectorXd probs;
};

/// E[(S - c)_+] of a discrete law.
double stop_loss(const DiscreteDistribution& dist, double c);

/// Maximum differential entropy of S on [0,1] under the constraint set.
/// The value refers to the normalized scalar input; add log(gain) to
/// compare with the reduced-channel entropy offset.
GammaProblem gamma_siso(const SISOConstraintSet& cs, const MaxEntOptions& opts = {});

} // namespace oicap

#endif
