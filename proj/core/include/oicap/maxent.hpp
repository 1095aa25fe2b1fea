#ifndef OICAP_MAXENT_HPP
#define OICAP_MAXENT_HPP

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "oicap/channel.hpp"
#include "oicap/quadrature.hpp"
#include "oicap/rng.hpp"

namespace oicap {

struct MaxEntOptions {
    double grad_tol = 1e-7;
    int max_iter = 500;
    double dual_norm_cap = 1e6;
    QuadratureOptions quad;
    bool qmc_doubling = true;      // dim >= 3: double points until gamma stabilises
    double qmc_gamma_tol = 1e-4;
    int qmc_max_doublings = 3;
};

enum class SolveStatus { converged, infeasible, max_iter };

/// Multipliers of the entropy dual.  nu is eliminated inside the solver
/// (it normalizes the density) and reported as -gamma.
struct DualPoint {
    Eigen::VectorXd u;       // equality multipliers
    Eigen::VectorXd lambda;  // inequality multipliers, >= 0
    double nu = 0.0;
};

struct MaxEntSolution {
    double gamma = -std::numeric_limits<double>::infinity(); // nats
    DualPoint dual;
    double grad_norm = std::numeric_limits<double>::infinity();
    std::int64_t n_quad = 0;
    SolveStatus status = SolveStatus::max_iter;
    int iterations = 0;
    Eigen::VectorXd eq_moments;    // E[h_i] under the solution density
    Eigen::VectorXd ineq_moments;  // E[g_j] under the solution density
    double log_norm = 0.0;         // log-normalizer in the cost convention of the solved problem
};

/// log of the unnormalized partition function for multipliers (u, lambda),
/// together with its gradient (the negated cost moments under the Gibbs
/// weight).  Overflow is handled by max-shifting.
std::pair<double, Eigen::VectorXd> log_partition(const MomentSpec& spec, const Eigen::VectorXd& u,
                                                 const Eigen::VectorXd& lambda,
                                                 const QuadratureOptions& quad = {});
std::pair<double, Eigen::VectorXd> log_partition(const QuadratureGrid& grid, const Eigen::VectorXd& u,
                                                 const Eigen::VectorXd& lambda);

/// Maximum differential entropy over densities on the given support under
/// the given moment constraints, via the convex dual.
MaxEntSolution solve_gamma_star(const MomentSpec& spec, const MaxEntOptions& opts = {});

/// A channel-level maximum-entropy problem: the solution together with the
/// spec whose cost convention matches the stored multipliers (needed to
/// evaluate or sample the solution density).
struct GammaProblem {
    MomentSpec spec;
    MaxEntSolution sol;
};

/// High-SNR entropy offset of the equal-cost channel of rank n_t - 1:
/// maxent over the zonotope under the mean equality and the two fiber-cost
/// inequalities.
GammaProblem gamma_ec(const ReducedChannel& reduced, const IntensityProfile& profile,
                      const MaxEntOptions& opts = {});

/// High-SNR entropy offset of the bounded-cost channel of rank n_t - 1.
/// Minimizes the saddle-reduced dual whose linear part carries the
/// positive-part terms over the per-antenna caps.
GammaProblem gamma_bc(const ReducedChannel& reduced, const IntensityProfile& profile,
                      const MaxEntOptions& opts = {});

/// Entropy-power capacity lower bound (k/2) log(1 + exp(2 gamma / k) / (2 pi e sigma^2)).
double epi_lower_bound(double gamma, int k, NoiseLevel noise);

/// Solution density p*(s); zero outside the support.
double density_eval(const MaxEntSolution& sol, const MomentSpec& spec, const Eigen::VectorXd& s);

/// Draw n samples from the solution density (inverse CDF in 1-D, rejection
/// from the uniform law on the support otherwise).
std::vector<Eigen::VectorXd> sample_density(const MaxEntSolution& sol, const MomentSpec& spec, int n,
                                            Rng& rng);

/// Deterministic map from the equivalent input S back to a feasible antenna
/// vector X with H~ X = S and E[X] = alpha, built from the solved equal-cost
/// problem (the fiber coordinate is interpolated between its extremes).
struct SignalingMap {
    ReducedChannel reduced;
    double tau = 1.0;
};
SignalingMap make_signaling_map(const ReducedChannel& reduced, const IntensityProfile& profile,
                                const MaxEntSolution& ec_solution);
Eigen::VectorXd apply_signaling(const SignalingMap& map, const Eigen::VectorXd& s);

/// The moment problem solved by gamma_ec (exposed for density plots and tests).
MomentSpec ec_moment_spec(const ReducedChannel& reduced, const IntensityProfile& profile);

} // namespace oicap

#endif
