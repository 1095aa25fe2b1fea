#include "oicap/channel.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace oicap {

namespace {
constexpr double kSignTol = 1e-12;

// Flip (u_i, v_i) jointly so the column sum of v_i is positive; ties broken
// by the first entry exceeding kSignTol in magnitude.  Returns false when
// both rules are indecisive.
bool fix_sign(Eigen::Ref<Eigen::VectorXd> v, Eigen::MatrixXd* u_col_owner, int col) {
    const double s = v.sum();
    double decider = s;
    if (std::fabs(s) <= kSignTol) {
        decider = 0.0;
        for (int i = 0; i < v.size(); ++i) {
            if (std::fabs(v[i]) > kSignTol) {
                decider = v[i];
                break;
            }
        }
        if (decider == 0.0) return false;
    }
    if (decider < 0.0) {
        v = -v;
        if (u_col_owner) u_col_owner->col(col) = -u_col_owner->col(col);
    }
    return true;
}
} // namespace

ValidatedChannel validate(ChannelMatrix channel, Eigen::VectorXd alpha) {
    const auto& H = channel.H;
    if (H.rows() < 1 || H.cols() < 1) throw std::invalid_argument("channel matrix is empty");
    if (alpha.size() != H.cols()) {
        std::ostringstream os;
        os << "alpha has " << alpha.size() << " entries but the channel has " << H.cols()
           << " transmit antennas";
        throw std::invalid_argument(os.str());
    }
    bool any_positive = false;
    for (int i = 0; i < H.rows(); ++i) {
        for (int j = 0; j < H.cols(); ++j) {
            const double g = H(i, j);
            if (!std::isfinite(g)) throw std::invalid_argument("non-finite channel gain");
            if (g < 0.0) throw std::invalid_argument("negative gain");
            if (g > 0.0) any_positive = true;
        }
    }
    if (!any_positive) throw std::invalid_argument("all-zero channel matrix");

    IntensityProfile profile;
    profile.alpha = std::move(alpha);
    for (int i = 0; i < profile.alpha.size(); ++i) {
        const double a = profile.alpha[i];
        if (!std::isfinite(a)) throw std::invalid_argument("non-finite alpha entry");
        if (a < 0.0 || a > 1.0) throw std::invalid_argument("alpha outside [0,1]");
        if (a == 0.0 || a == 1.0) profile.has_degenerate = true;
    }
    profile.order_perm.resize(static_cast<std::size_t>(profile.alpha.size()));
    std::iota(profile.order_perm.begin(), profile.order_perm.end(), 0);
    std::stable_sort(profile.order_perm.begin(), profile.order_perm.end(),
                     [&](int a, int b) { return profile.alpha[a] > profile.alpha[b]; });

    return ValidatedChannel{std::move(channel), std::move(profile)};
}

ReducedChannel reduce(const ChannelMatrix& channel, double rank_tol) {
    if (rank_tol <= 0.0 || rank_tol >= 1.0) throw std::invalid_argument("rank_tol must be in (0,1)");
    const auto& H = channel.H;
    const int n_r = channel.n_r();
    const int n_t = channel.n_t();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    Eigen::MatrixXd U = svd.matrixU();
    Eigen::MatrixXd V = svd.matrixV();

    const double s1 = sv.size() > 0 ? sv[0] : 0.0;
    if (s1 <= 0.0) throw std::invalid_argument("all-zero channel matrix");

    int r = 0;
    while (r < sv.size() && sv[r] / s1 > rank_tol) ++r;

    // Sign convention: 1^T v_1 > 0, applied jointly to each (u_i, v_i) pair.
    {
        Eigen::VectorXd v1 = V.col(0);
        if (std::fabs(v1.sum()) <= kSignTol)
            throw std::invalid_argument("ambiguous sign convention: 1^T v_1 is zero within tolerance");
    }
    for (int i = 0; i < r; ++i) {
        Eigen::VectorXd vi = V.col(i);
        fix_sign(vi, &U, i);
        V.col(i) = vi;
    }

    ReducedChannel rc;
    rc.rank = r;
    rc.sigma = sv.head(r);
    rc.sigma_all = sv;
    rc.V1 = V.leftCols(r);
    rc.U = U;
    rc.H_tilde = rc.sigma.asDiagonal() * rc.V1.transpose();
    rc.has_tail = (r == n_t - 1);
    if (rc.has_tail) {
        // Null-space direction; its own sign is immaterial to any result,
        // fixed here only for deterministic output.
        Eigen::VectorXd vt = V.col(n_t - 1);
        fix_sign(vt, nullptr, 0);
        rc.v_tail = vt;
    }
    (void)n_r;
    return rc;
}

int epsilon_rank(const ReducedChannel& reduced, double eps) {
    if (eps <= 0.0 || eps > 1.0) throw std::invalid_argument("eps must be in (0,1]");
    const int r = reduced.rank;
    double total = 0.0;
    for (int j = 0; j < r; ++j) total += reduced.sigma_all[j] * reduced.sigma_all[j];
    double acc = 0.0;
    for (int i = 0; i < r; ++i) {
        acc += reduced.sigma_all[i] * reduced.sigma_all[i];
        if (acc / total >= eps) return i + 1;
    }
    return r;
}

int epsilon_rank(const ChannelMatrix& channel, double eps, double rank_tol) {
    return epsilon_rank(reduce(channel, rank_tol), eps);
}

double leading_energy_ratio(const ReducedChannel& reduced) {
    double total = 0.0;
    for (int j = 0; j < reduced.rank; ++j) total += reduced.sigma_all[j] * reduced.sigma_all[j];
    return reduced.sigma_all[0] * reduced.sigma_all[0] / total;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> rank_one_factorization(const ChannelMatrix& channel,
                                                                   double rank_tol) {
    ReducedChannel rc = reduce(channel, rank_tol);
    if (rc.rank != 1) throw std::invalid_argument("rank != 1");
    Eigen::VectorXd w = rc.sigma[0] * rc.U.col(0);
    Eigen::VectorXd b = rc.V1.col(0);
    // Nonnegative up to roundoff by the sign convention; clamp dust.
    for (int i = 0; i < w.size(); ++i) {
        if (w[i] < 0.0 && w[i] > -1e-12) w[i] = 0.0;
    }
    for (int i = 0; i < b.size(); ++i) {
        if (b[i] < 0.0 && b[i] > -1e-12) b[i] = 0.0;
    }
    return {std::move(w), std::move(b)};
}

} // namespace oicap
