#ifndef OICAP_LOW_SNR_HPP
#define OICAP_LOW_SNR_HPP

#include <Eigen/Dense>
#include <utility>

#include "oicap/channel.hpp"

namespace oicap {

/// Gram matrix H^T H of a nonnegative channel; entries are nonnegative.
Eigen::MatrixXd gram(const ChannelMatrix& channel);

/// Maximum output-covariance trace over equal-cost inputs with mean x:
///   sum_ij g_ij (min(x_i, x_j) - x_i x_j).
/// The low-SNR capacity slope is half this value.
double max_output_trace_ec(const Eigen::MatrixXd& G, const Eigen::VectorXd& x);

/// The comonotone binary law attaining the maximum trace: mass points
/// 0, e_1, e_1+e_2, ..., 1 with probabilities 1 - a_1, a_1 - a_2, ..., a_n.
/// Requires alpha sorted descending.
struct MaxCorrBinary {
    Eigen::MatrixXd points; // (n+1) x n, row per mass point
    Eigen::VectorXd probs;  // n+1
};
MaxCorrBinary maximally_correlated_binary(const Eigen::VectorXd& alpha_desc);

/// Negated trace objective f0(x) = -max_output_trace_ec(G, x) with a valid
/// subgradient; ties x_i = x_j split the pairwise slope evenly.
std::pair<double, Eigen::VectorXd> allocation_objective(const Eigen::MatrixXd& G,
                                                        const Eigen::VectorXd& x);

struct Allocation {
    Eigen::VectorXd x;     // optimal average-intensity vector
    double value = 0.0;    // max_output_trace_ec(G, x)
    int iterations = 0;
    bool converged = false;
};

struct AllocationOptions {
    int max_iter = 50000;
    double value_tol = 1e-6;   // stagnation tolerance on the best value
    int stagnation_window = 250;
};

/// Trace-maximizing average-intensity vector over the box [0, alpha]
/// (bounded-cost inputs).  The search is restricted to the proven optimal
/// box [min(alpha_min, 1/2), min(alpha_i, 1/2)] and driven by a projected
/// subgradient method with best-value memory.
Allocation solve_bc_allocation(const Eigen::MatrixXd& G, const Eigen::VectorXd& alpha,
                               const AllocationOptions& opts = {});

struct LadderResult {
    double beta = 0.0;
    double value = 0.0;   // max_output_trace_ec at x = min(beta 1, alpha)
};

/// Best ladder allocation x = min(beta 1, alpha): the objective is piecewise
/// quadratic in beta, so each interval between consecutive alpha levels is
/// maximized in closed form.  G and alpha share the same antenna order;
/// the descending-alpha permutation is applied to both internally.
LadderResult best_ladder_allocation(const Eigen::MatrixXd& G, const Eigen::VectorXd& alpha);

/// Ratio of the best ladder value to the solved optimum, in (0, 1].
/// Throws when the optimum is zero (alpha = 0).
double ladder_optimality_ratio(const Eigen::MatrixXd& G, const Eigen::VectorXd& alpha,
                               const AllocationOptions& opts = {});

} // namespace oicap

#endif
