#ifndef OICAP_CAPACITY_HPP
#define OICAP_CAPACITY_HPP

#include <optional>
#include <vector>

#include "oicap/channel.hpp"
#include "oicap/maxent.hpp"
#include "oicap/rank_one.hpp"

namespace oicap {

/// Which equivalent formulation produced a high-SNR entropy offset.
enum class GammaPath {
    Fiber,          // rank n_t - 1: zonotope support + fiber-cost moments
    RankOne,        // scalar reduction with stop-loss moments
    FullColumnRank, // invertible reduction: affine moments only
    Degenerate      // input forced deterministic, gamma = -inf
};

/// Channel-level high-SNR entropy offset: gamma such that
///   C(sigma) + (k/2) log(2 pi e sigma^2)  ->  gamma  as sigma -> 0,
/// where k is the dimension of the equivalent vector channel.
struct GammaReport {
    double gamma = -std::numeric_limits<double>::infinity();
    int dim = 0;
    GammaPath path = GammaPath::Degenerate;
    SolveStatus status = SolveStatus::converged;
    std::vector<int> pinned_antennas;  // fixed by boundary alpha entries
    GammaProblem problem;              // underlying solve (empty for Degenerate)
    ReducedChannel reduced;            // reduction of the effective sub-channel
    IntensityProfile effective_profile;
    double log_gain = 0.0;             // added to the scalar-path entropy
};

/// Full pipeline: validation-side effects assumed done, boundary alpha
/// entries pinned (equal-cost pins both 0 and 1, bounded-cost pins 0),
/// the remaining sub-channel reduced and dispatched by rank.
/// Ranks other than 1, n_t - 1 and n_t are rejected.
GammaReport compute_gamma(const ChannelMatrix& channel, const IntensityProfile& profile,
                          CostMode mode, const MaxEntOptions& opts = {},
                          std::optional<GammaPath> force_path = std::nullopt);

} // namespace oicap

#endif
