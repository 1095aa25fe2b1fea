#include "oicap/zonotope.hpp"

#include <Eigen/LU>
#include <functional>
#include <limits>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oicap {

namespace {

constexpr int kMaxGenerators = 16;

void enumerate_subsets(int n, int r, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> idx(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        visit(idx);
        int k = r - 1;
        while (k >= 0 && idx[static_cast<std::size_t>(k)] == n - r + k) --k;
        if (k < 0) break;
        ++idx[static_cast<std::size_t>(k)];
        for (int j = k + 1; j < r; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

} // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> ZonotopeDecomposition::bounding_box() const {
    const int r = dim();
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(r);
    Eigen::VectorXd hi = Eigen::VectorXd::Zero(r);
    for (int j = 0; j < n_generators(); ++j) {
        for (int i = 0; i < r; ++i) {
            const double g = generators(i, j);
            if (g >= 0.0)
                hi[i] += g;
            else
                lo[i] += g;
        }
    }
    return {lo, hi};
}

ZonotopeDecomposition decompose(const Eigen::MatrixXd& generators) {
    const int r = static_cast<int>(generators.rows());
    const int n = static_cast<int>(generators.cols());
    if (r < 1) throw std::invalid_argument("zonotope dimension must be >= 1");
    if (n < r) throw std::invalid_argument("fewer generators than dimensions");
    if (n > kMaxGenerators) throw std::invalid_argument("generator count exceeds the supported cap of 16");

    // Column scale for relative singularity checks.
    Eigen::VectorXd col_norm(n);
    for (int j = 0; j < n; ++j) col_norm[j] = std::max(generators.col(j).norm(), 1e-300);

    // Generic positive cost vector; redrawn deterministically if some
    // reduced cost lands on a tie.
    ZonotopeDecomposition zd;
    zd.generators = generators;
    for (std::uint64_t attempt = 0; attempt < 32; ++attempt) {
        Rng rng(0x5eedc0defULL + attempt);
        Eigen::VectorXd cost(n);
        for (int j = 0; j < n; ++j) cost[j] = 1.0 + 0.25 * rng.uniform();

        zd.cells.clear();
        zd.volume = 0.0;
        bool tie = false;

        enumerate_subsets(n, r, [&](const std::vector<int>& subset) {
            if (tie) return;
            Eigen::MatrixXd B(r, r);
            double scale = 1.0;
            for (int k = 0; k < r; ++k) {
                B.col(k) = generators.col(subset[static_cast<std::size_t>(k)]);
                scale *= col_norm[subset[static_cast<std::size_t>(k)]];
            }
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
            const double det = lu.determinant();
            if (std::fabs(det) <= 1e-12 * scale) return; // dependent subset

            ParallelepipedCell cell;
            cell.basis = subset;
            cell.B = B;
            cell.B_inv = lu.inverse();
            cell.det_abs = std::fabs(det);

            // Reduced costs of the non-basis generators: y^T = c_U^T B^{-1};
            // generator j enters at its upper bound iff y^T g_j > c_j.
            Eigen::VectorXd c_basis(r);
            for (int k = 0; k < r; ++k) c_basis[k] = cost[subset[static_cast<std::size_t>(k)]];
            Eigen::RowVectorXd y = c_basis.transpose() * cell.B_inv;

            cell.translate = Eigen::VectorXd::Zero(r);
            std::size_t next_in_subset = 0;
            for (int j = 0; j < n; ++j) {
                if (next_in_subset < subset.size() && subset[next_in_subset] == j) {
                    ++next_in_subset;
                    continue;
                }
                const double reduced = y.dot(generators.col(j)) - cost[j];
                if (std::fabs(reduced) <= 1e-12 * (1.0 + std::fabs(cost[j]))) {
                    tie = true;
                    return;
                }
                if (reduced > 0.0) cell.translate += generators.col(j);
            }
            zd.volume += cell.det_abs;
            zd.cells.push_back(std::move(cell));
        });

        if (!tie) {
            if (zd.cells.empty()) throw std::invalid_argument("all generator subsets are singular");
            return zd;
        }
    }
    throw std::runtime_error("could not find a tie-free decomposition direction");
}

ZonotopeDecomposition decompose(const ReducedChannel& reduced) {
    if (reduced.rank < 1) throw std::invalid_argument("reduced channel has rank 0");
    return decompose(reduced.H_tilde);
}

LocateResult locate(const ZonotopeDecomposition& zd, const Eigen::VectorXd& s) {
    for (int c = 0; c < static_cast<int>(zd.cells.size()); ++c) {
        const auto& cell = zd.cells[static_cast<std::size_t>(c)];
        Eigen::VectorXd t = cell.B_inv * (s - cell.translate);
        bool in = true;
        for (int i = 0; i < t.size(); ++i) {
            if (!(t[i] >= 0.0 && t[i] < 1.0)) {
                in = false;
                break;
            }
        }
        if (in) return LocateResult{c, std::move(t)};
    }
    return LocateResult{-1, Eigen::VectorXd()};
}

Eigen::VectorXd sample_uniform(const ZonotopeDecomposition& zd, Rng& rng) {
    if (zd.volume <= 0.0) throw std::invalid_argument("zonotope has zero volume");
    double pick = rng.uniform() * zd.volume;
    std::size_t c = 0;
    for (; c + 1 < zd.cells.size(); ++c) {
        pick -= zd.cells[c].det_abs;
        if (pick < 0.0) break;
    }
    const auto& cell = zd.cells[c];
    Eigen::VectorXd t(zd.dim());
    for (int i = 0; i < t.size(); ++i) t[i] = rng.uniform();
    return cell.translate + cell.B * t;
}

FiberPieces fiber_min_pieces(const ReducedChannel& reduced) {
    if (!reduced.has_tail)
        throw std::invalid_argument("fiber geometry requires rank n_t - 1");
    const int n_t = reduced.n_t();
    const int r = reduced.rank;
    std::vector<int> active;
    for (int i = 0; i < n_t; ++i) {
        if (std::fabs(reduced.v_tail[i]) > 1e-14) active.push_back(i);
    }
    FiberPieces pieces;
    pieces.A.resize(static_cast<int>(active.size()), r);
    pieces.b.resize(static_cast<int>(active.size()));
    for (int p = 0; p < static_cast<int>(active.size()); ++p) {
        const int i = active[static_cast<std::size_t>(p)];
        const double v = reduced.v_tail[i];
        pieces.b[p] = (1.0 - (v > 0.0 ? 1.0 : -1.0)) / (2.0 * v);
        for (int j = 0; j < r; ++j) pieces.A(p, j) = -reduced.V1(i, j) / (v * reduced.sigma[j]);
    }
    return pieces;
}

namespace {

// Both fiber endpoints from the per-coordinate interval intersection:
// coordinate i of lambda*v_tail + base stays in [0,1] for lambda in an
// interval whose ends depend on sign(v_tail_i).
FiberInterval fiber_endpoints(const ReducedChannel& reduced, const Eigen::VectorXd& s) {
    const int n_t = reduced.n_t();
    Eigen::VectorXd base = reduced.V1 * (s.array() / reduced.sigma.array()).matrix();
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_t; ++i) {
        const double v = reduced.v_tail[i];
        if (std::fabs(v) <= 1e-14) continue; // coordinate pinned by the projection
        const double l0 = (0.0 - base[i]) / v;
        const double l1 = (1.0 - base[i]) / v;
        lo = std::max(lo, std::min(l0, l1));
        hi = std::min(hi, std::max(l0, l1));
    }
    FiberInterval fi;
    fi.lo = lo;
    fi.hi = hi;
    fi.base_point = std::move(base);
    return fi;
}

} // namespace

std::optional<FiberInterval> try_fiber_interval(const ReducedChannel& reduced,
                                                const Eigen::VectorXd& s, double tol) {
    if (!reduced.has_tail)
        throw std::invalid_argument("fiber geometry requires rank n_t - 1");
    if (s.size() != reduced.rank) throw std::invalid_argument("s has wrong dimension");
    FiberInterval fi = fiber_endpoints(reduced, s);
    if (fi.lo > fi.hi + tol) return std::nullopt;
    return fi;
}

FiberInterval fiber_interval(const ReducedChannel& reduced, const Eigen::VectorXd& s) {
    auto fi = try_fiber_interval(reduced, s);
    if (!fi) throw std::invalid_argument("outside admissible region");
    return *fi;
}

double fiber_min(const ReducedChannel& reduced, const Eigen::VectorXd& s) {
    return fiber_interval(reduced, s).lo;
}

double fiber_max(const ReducedChannel& reduced, const Eigen::VectorXd& s) {
    return fiber_interval(reduced, s).hi;
}

Eigen::VectorXd fiber_point(const ReducedChannel& reduced, const Eigen::VectorXd& s, double lambda) {
    FiberInterval fi = fiber_interval(reduced, s);
    if (lambda < fi.lo - 1e-9 || lambda > fi.hi + 1e-9)
        throw std::invalid_argument("lambda outside the fiber interval");
    Eigen::VectorXd x = lambda * reduced.v_tail + fi.base_point;
    for (int i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], 0.0, 1.0);
    return x;
}

} // namespace oicap
