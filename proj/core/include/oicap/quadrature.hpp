#ifndef OICAP_QUADRATURE_HPP
#define OICAP_QUADRATURE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "oicap/zonotope.hpp"

namespace oicap {

/// Convex piecewise-linear cost  cost(s) = max_p (A.row(p) . s + b[p]) - offset.
/// A single row represents an affine cost; two rows with one zero row give a
/// stop-loss term (s - c)_+.
struct PiecewiseLinearCost {
    Eigen::MatrixXd A;    // P x k
    Eigen::VectorXd b;    // P
    double offset = 0.0;

    double eval(const Eigen::VectorXd& s) const {
        double m = -std::numeric_limits<double>::infinity();
        for (int p = 0; p < A.rows(); ++p) {
            const double v = A.row(p).dot(s) + b[p];
            if (v > m) m = v;
        }
        return m - offset;
    }

    static PiecewiseLinearCost affine(const Eigen::VectorXd& a, double b0, double offset = 0.0) {
        PiecewiseLinearCost c;
        c.A = a.transpose();
        c.b = Eigen::VectorXd::Constant(1, b0);
        c.offset = offset;
        return c;
    }

    /// One-dimensional (s - threshold)_+ minus cap.
    static PiecewiseLinearCost stop_loss(double threshold, double cap) {
        PiecewiseLinearCost c;
        c.A.resize(2, 1);
        c.A << 0.0, 1.0;
        c.b.resize(2);
        c.b << 0.0, -threshold;
        c.offset = cap;
        return c;
    }
};

/// Moment-constrained maximum-entropy problem over a zonotope support:
/// equality costs must have zero mean under the solution density, inequality
/// costs nonpositive mean.
struct MomentSpec {
    ZonotopeDecomposition support;
    std::vector<PiecewiseLinearCost> equalities;
    std::vector<PiecewiseLinearCost> inequalities;

    int dim() const { return support.dim(); }
    int n_costs() const { return static_cast<int>(equalities.size() + inequalities.size()); }

    /// 1-D support [lo, hi] as a single-cell decomposition.
    static ZonotopeDecomposition interval_support(double lo, double hi);
};

struct QuadratureOptions {
    int gl_nodes = 64;             // per axis for dim <= 2
    int qmc_points = 1 << 17;      // per cell for dim >= 3
    std::uint64_t qmc_seed = 0xc0ffee123ULL;
};

/// Fixed integration nodes with pre-tabulated cost values.  Solver
/// iterations only reweight these columns, so every cost function is
/// evaluated exactly once per node.
struct QuadratureGrid {
    Eigen::VectorXd logw;   // log integration weight per node (volume element included)
    Eigen::MatrixXd nodes;  // k x N node positions in s-space
    Eigen::MatrixXd cost;   // K x N cost values, equalities stacked above inequalities
    int n_eq = 0;
    int n_ineq = 0;

    std::int64_t n_nodes() const { return logw.size(); }
};

/// For 1-D supports the cells are split at every kink of every cost, so the
/// per-piece integrands are smooth and Gauss-Legendre is exact to roundoff.
QuadratureGrid build_grid(const MomentSpec& spec, const QuadratureOptions& opts);

/// Gauss-Legendre nodes and weights on [0,1].
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights);

} // namespace oicap

#endif
