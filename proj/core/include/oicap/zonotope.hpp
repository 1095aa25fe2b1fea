#ifndef OICAP_ZONOTOPE_HPP
#define OICAP_ZONOTOPE_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "oicap/channel.hpp"
#include "oicap/rng.hpp"

namespace oicap {

/// One half-open parallelepiped of a zonotope partition:
///   cell = { translate + B t : t in [0,1)^r }.
struct ParallelepipedCell {
    std::vector<int> basis;     // column indices of the generating matrix
    Eigen::MatrixXd B;          // r x r, columns of the generator matrix
    Eigen::MatrixXd B_inv;
    double det_abs = 0.0;
    Eigen::VectorXd translate;
};

/// Partition of the zonotope spanned by the columns of a full-row-rank
/// generator matrix into disjoint half-open parallelepipeds, one per
/// linearly independent r-subset of columns.
struct ZonotopeDecomposition {
    Eigen::MatrixXd generators;               // r x n generator matrix
    std::vector<ParallelepipedCell> cells;
    double volume = 0.0;                      // sum of |det| over cells

    int dim() const { return static_cast<int>(generators.rows()); }
    int n_generators() const { return static_cast<int>(generators.cols()); }

    /// Axis-aligned bounding box [lo, hi] of the zonotope.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> bounding_box() const;
};

/// Builds the partition.  The translate of each cell comes from the optimal
/// basis structure of the parametric LP  min c^T x  s.t.  Gx = s, x in [0,1]^n,
/// for a fixed generic positive cost c; any such c yields a valid partition.
/// Generator counts are capped at 16 columns (the enumeration is C(n, r)).
ZonotopeDecomposition decompose(const Eigen::MatrixXd& generators);
ZonotopeDecomposition decompose(const ReducedChannel& reduced);

struct LocateResult {
    int cell_index;        // -1 when outside
    Eigen::VectorXd local; // t = B^{-1}(s - translate), in [0,1)^r when inside

    bool inside() const { return cell_index >= 0; }
};

/// Finds the unique cell containing s under the half-open convention,
/// or reports outside.
LocateResult locate(const ZonotopeDecomposition& zd, const Eigen::VectorXd& s);

/// Uniform point on the zonotope: cell chosen proportionally to |det|,
/// then the cell's unit cube is sampled.
Eigen::VectorXd sample_uniform(const ZonotopeDecomposition& zd, Rng& rng);

/// Closed fiber of s for a rank-(n_t - 1) reduction: the preimages of s in
/// the unit cube form the segment
///   { lambda * v_tail + base_point : lambda in [lo, hi] }.
struct FiberInterval {
    double lo = 0.0;           // f_min(s)
    double hi = 0.0;           // f_max(s)
    Eigen::VectorXd base_point; // V1 diag(sigma)^-1 s
};

/// Fiber endpoints; nullopt when the interval is empty (s outside the
/// admissible region by more than `tol`).
std::optional<FiberInterval> try_fiber_interval(const ReducedChannel& reduced,
                                                const Eigen::VectorXd& s, double tol = 1e-9);

/// Like try_fiber_interval but throws "outside admissible region" on an
/// empty fiber.  Requires reduced.has_tail.
FiberInterval fiber_interval(const ReducedChannel& reduced, const Eigen::VectorXd& s);

double fiber_min(const ReducedChannel& reduced, const Eigen::VectorXd& s);
double fiber_max(const ReducedChannel& reduced, const Eigen::VectorXd& s);

/// Point on the fiber segment: x = lambda v_tail + V1 diag(sigma)^-1 s.
/// Throws when lambda lies outside [f_min(s), f_max(s)] (small roundoff
/// excursions are clamped onto the cube).
Eigen::VectorXd fiber_point(const ReducedChannel& reduced, const Eigen::VectorXd& s, double lambda);

/// The two families of affine pieces behind f_min:
///   f_min(s)          = max_p ( rows(A)_p . s + b_p )
/// over transmit indices with a nonzero tail component.  Exposed so that
/// the max-entropy quadrature can tabulate fiber costs cheaply.
struct FiberPieces {
    Eigen::MatrixXd A; // P x r
    Eigen::VectorXd b; // P
};
FiberPieces fiber_min_pieces(const ReducedChannel& reduced);

} // namespace oicap

#endif
