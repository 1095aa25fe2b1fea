#include "oicap/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace oicap {

void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    // Newton iteration on P_n over [-1,1], then map to [0,1].
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
        nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + x);
        weights[static_cast<std::size_t>(i)] = 0.5 * w;
        weights[static_cast<std::size_t>(n - 1 - i)] = 0.5 * w;
    }
}

ZonotopeDecomposition MomentSpec::interval_support(double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("interval support must have hi > lo");
    ZonotopeDecomposition zd;
    zd.generators.resize(1, 1);
    zd.generators(0, 0) = hi - lo;
    ParallelepipedCell cell;
    cell.basis = {0};
    cell.B = zd.generators;
    cell.B_inv = zd.generators.cwiseInverse();
    cell.det_abs = hi - lo;
    cell.translate = Eigen::VectorXd::Constant(1, lo);
    zd.cells.push_back(std::move(cell));
    zd.volume = hi - lo;
    return zd;
}

namespace {

const std::vector<std::pair<std::vector<double>, std::vector<double>>>& gl_cache(int n) {
    static std::unordered_map<int, std::vector<std::pair<std::vector<double>, std::vector<double>>>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (slot.empty()) {
        std::vector<double> x, w;
        gauss_legendre_01(n, x, w);
        slot.emplace_back(std::move(x), std::move(w));
    }
    return slot;
}

// Halton radical inverse in base b.
double radical_inverse(std::int64_t n, int base) {
    double inv_base = 1.0 / base;
    double f = inv_base;
    double out = 0.0;
    while (n > 0) {
        out += f * static_cast<double>(n % base);
        n /= base;
        f *= inv_base;
    }
    return out;
}

constexpr int kHaltonBases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

// Kink locations of a piecewise-linear cost restricted to the segment
// [s_lo, s_hi] (1-D supports only).
void collect_breakpoints(const PiecewiseLinearCost& cost, double s_lo, double s_hi,
                         std::vector<double>& out) {
    const int P = static_cast<int>(cost.A.rows());
    for (int p = 0; p < P; ++p) {
        for (int q = p + 1; q < P; ++q) {
            const double da = cost.A(p, 0) - cost.A(q, 0);
            if (std::fabs(da) < 1e-14) continue;
            const double s = (cost.b[q] - cost.b[p]) / da;
            if (s > s_lo + 1e-13 && s < s_hi - 1e-13) out.push_back(s);
        }
    }
}

void eval_costs_into(const MomentSpec& spec, const Eigen::VectorXd& s, Eigen::MatrixXd& cost,
                     Eigen::MatrixXd& nodes, Eigen::VectorXd& logw, double log_weight,
                     std::int64_t col) {
    nodes.col(col) = s;
    logw[col] = log_weight;
    int row = 0;
    for (const auto& c : spec.equalities) cost(row++, col) = c.eval(s);
    for (const auto& c : spec.inequalities) cost(row++, col) = c.eval(s);
}

} // namespace

QuadratureGrid build_grid(const MomentSpec& spec, const QuadratureOptions& opts) {
    const int k = spec.dim();
    const int K = spec.n_costs();
    QuadratureGrid grid;
    grid.n_eq = static_cast<int>(spec.equalities.size());
    grid.n_ineq = static_cast<int>(spec.inequalities.size());

    if (k == 1) {
        // Split every cell at every cost kink, then Gauss-Legendre per piece.
        const auto& [gx, gw] = gl_cache(opts.gl_nodes)[0];
        std::vector<std::pair<double, double>> pieces; // (lo, hi) in s-space
        for (const auto& cell : spec.support.cells) {
            const double e0 = cell.translate[0];
            const double e1 = cell.translate[0] + cell.B(0, 0);
            const double lo = std::min(e0, e1), hi = std::max(e0, e1);
            std::vector<double> cuts{lo, hi};
            for (const auto& c : spec.equalities) collect_breakpoints(c, lo, hi, cuts);
            for (const auto& c : spec.inequalities) collect_breakpoints(c, lo, hi, cuts);
            std::sort(cuts.begin(), cuts.end());
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                if (cuts[i + 1] - cuts[i] > 1e-13) pieces.emplace_back(cuts[i], cuts[i + 1]);
            }
        }
        const std::int64_t N = static_cast<std::int64_t>(pieces.size()) * opts.gl_nodes;
        grid.logw.resize(N);
        grid.nodes.resize(1, N);
        grid.cost.resize(K, N);
        std::int64_t col = 0;
        Eigen::VectorXd s(1);
        for (const auto& [lo, hi] : pieces) {
            const double len = hi - lo;
            for (int q = 0; q < opts.gl_nodes; ++q) {
                s[0] = lo + len * gx[static_cast<std::size_t>(q)];
                eval_costs_into(spec, s, grid.cost, grid.nodes, grid.logw,
                                std::log(len * gw[static_cast<std::size_t>(q)]), col++);
            }
        }
        return grid;
    }

    if (k == 2) {
        const auto& [gx, gw] = gl_cache(opts.gl_nodes)[0];
        const int n = opts.gl_nodes;
        const std::int64_t per_cell = static_cast<std::int64_t>(n) * n;
        const std::int64_t N = per_cell * static_cast<std::int64_t>(spec.support.cells.size());
        grid.logw.resize(N);
        grid.nodes.resize(2, N);
        grid.cost.resize(K, N);
        std::int64_t col = 0;
        Eigen::VectorXd t(2);
        for (const auto& cell : spec.support.cells) {
            const double logdet = std::log(cell.det_abs);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    t[0] = gx[static_cast<std::size_t>(i)];
                    t[1] = gx[static_cast<std::size_t>(j)];
                    const Eigen::VectorXd s = cell.translate + cell.B * t;
                    const double lw =
                        logdet + std::log(gw[static_cast<std::size_t>(i)] * gw[static_cast<std::size_t>(j)]);
                    eval_costs_into(spec, s, grid.cost, grid.nodes, grid.logw, lw, col++);
                }
            }
        }
        return grid;
    }

    // dim >= 3: Halton sequence with a per-cell Cranley-Patterson rotation.
    if (k > 16) throw std::invalid_argument("quadrature supports at most 16 dimensions");
    const std::int64_t n_pts = opts.qmc_points;
    const std::int64_t N = n_pts * static_cast<std::int64_t>(spec.support.cells.size());
    grid.logw.resize(N);
    grid.nodes.resize(k, N);
    grid.cost.resize(K, N);
    std::int64_t col = 0;
    Eigen::VectorXd t(k);
    std::uint64_t cell_index = 0;
    for (const auto& cell : spec.support.cells) {
        Rng shift_rng(Rng::mix(opts.qmc_seed ^ (0xabcd1234ULL + cell_index++)));
        Eigen::VectorXd shift(k);
        for (int j = 0; j < k; ++j) shift[j] = shift_rng.uniform();
        const double lw = std::log(cell.det_abs / static_cast<double>(n_pts));
        for (std::int64_t p = 0; p < n_pts; ++p) {
            for (int j = 0; j < k; ++j) {
                const double v = radical_inverse(p + 1, kHaltonBases[j]) + shift[j];
                t[j] = v - std::floor(v);
            }
            const Eigen::VectorXd s = cell.translate + cell.B * t;
            eval_costs_into(spec, s, grid.cost, grid.nodes, grid.logw, lw, col++);
        }
    }
    return grid;
}

} // namespace oicap
