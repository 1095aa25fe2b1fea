#ifndef OICAP_CHANNEL_HPP
#define OICAP_CHANNEL_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oicap {

/// Nonnegative gain matrix of an intensity-modulated MIMO link.
/// Rows are receive elements, columns are transmit elements (n_t >= 2
/// for the full pipeline; single-column matrices are accepted so that
/// reduced sub-channels can be represented).
struct ChannelMatrix {
    Eigen::MatrixXd H;

    int n_r() const { return static_cast<int>(H.rows()); }
    int n_t() const { return static_cast<int>(H.cols()); }
};

/// Per-antenna ratio of average to peak intensity, alpha_i in [0,1].
/// Stored in user order; `order_perm` sorts it descending for the results
/// that assume that ordering.
struct IntensityProfile {
    Eigen::VectorXd alpha;
    std::vector<int> order_perm;   // order_perm[k] = index of k-th largest alpha
    bool has_degenerate = false;   // some alpha_i is exactly 0 or 1

    Eigen::VectorXd sorted_alpha() const {
        Eigen::VectorXd out(alpha.size());
        for (int k = 0; k < alpha.size(); ++k) out[k] = alpha[order_perm[static_cast<std::size_t>(k)]];
        return out;
    }
};

/// Full-row-rank reduction of a channel matrix obtained from its SVD,
/// with the sign of every right-singular vector fixed deterministically
/// (sum positive; first significant entry positive on a zero sum, except
/// for v_1 where a zero sum is an error).
struct ReducedChannel {
    int rank = 0;                 // r, determined by rank_tol
    Eigen::VectorXd sigma;        // r singular values, descending, > 0
    Eigen::MatrixXd V1;           // n_t x r right-singular vectors
    Eigen::VectorXd v_tail;       // last right-singular vector; only set when r == n_t-1
    Eigen::MatrixXd H_tilde;      // r x n_t  =  diag(sigma) * V1^T
    Eigen::MatrixXd U;            // n_r x n_r orthogonal
    Eigen::VectorXd sigma_all;    // all min(n_r, n_t) singular values (for epsilon-rank)
    bool has_tail = false;        // r == n_t - 1

    int n_t() const { return static_cast<int>(V1.rows()); }
};

/// Noise standard deviation of the additive white Gaussian channel noise.
struct NoiseLevel {
    double sigma_noise;
};

struct ValidatedChannel {
    ChannelMatrix channel;
    IntensityProfile profile;
};

/// Checks gain non-negativity/finiteness and alpha in [0,1], computes the
/// descending-alpha permutation and the degenerate-entry flag.
/// Throws std::invalid_argument describing the first violation found.
ValidatedChannel validate(ChannelMatrix channel, Eigen::VectorXd alpha);

/// SVD-based reduction to a full-row-rank model.  `rank_tol` is relative to
/// the largest singular value: r = #{i : sigma_i / sigma_1 > rank_tol}.
/// Throws if the sign convention is ambiguous (|1^T v_1| below tolerance).
ReducedChannel reduce(const ChannelMatrix& channel, double rank_tol = 1e-10);

/// Smallest i such that the leading i singular values carry at least a
/// fraction eps of the squared singular-value energy, eps in (0, 1].
int epsilon_rank(const ReducedChannel& reduced, double eps);
int epsilon_rank(const ChannelMatrix& channel, double eps, double rank_tol = 1e-10);

/// Fraction of squared singular-value energy in the leading singular value.
double leading_energy_ratio(const ReducedChannel& reduced);

/// Factor a rank-one channel as H = w * b^T with both factors nonnegative
/// and b proportional to the first right-singular vector.
/// Throws if the numerical rank is not one.
std::pair<Eigen::VectorXd, Eigen::VectorXd> rank_one_factorization(const ChannelMatrix& channel,
                                                                   double rank_tol = 1e-10);

} // namespace oicap

#endif
