#ifndef OICAP_SCENARIO_HPP
#define OICAP_SCENARIO_HPP

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "oicap/channel.hpp"
#include "oicap/maxent.hpp"
#include "oicap/rng.hpp"

namespace oicap {

/// Four ceiling LED fixtures in a 6 m x 4 m x 3.2 m room, Lambert order 1,
/// 60-degree receiver field of view.
struct RoomLayout {
    Eigen::Vector3d dims{6.0, 4.0, 3.2};
    std::array<Eigen::Vector3d, 4> leds{Eigen::Vector3d(2.0, 1.0, 3.2), Eigen::Vector3d(2.0, -1.0, 3.2),
                                        Eigen::Vector3d(-2.0, 1.0, 3.2), Eigen::Vector3d(-2.0, -1.0, 3.2)};
    double lambert_order = 1.0;
    double fov_deg = 60.0;
};

enum class ReceiverKind {
    Screen,          // four coplanar PDs, all facing +z'
    MultiDirectional // PDs on several faces of the device
};

/// Device pose: position in the room frame and intrinsic yaw(z'), pitch(x'),
/// roll(y') angles in radians.
struct UEPose {
    Eigen::Vector3d position{0.0, 0.0, 1.0};
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
};

/// Intrinsic rotation: yaw about z', then pitch about x', then roll about y'.
Eigen::Matrix3d rotation_matrix(double yaw, double pitch, double roll);

/// Line-of-sight Lambertian gain between an LED (downward normal) and a PD:
///   (m+1) / (2 pi d^2) * cos^m(irradiance) * cos(incidence),
/// zero outside the field of view or behind either surface.
double lambertian_gain(const Eigen::Vector3d& led_pos, const Eigen::Vector3d& pd_pos,
                       const Eigen::Vector3d& pd_normal, double lambert_order, double fov_rad);

/// PD offsets and normals in the device frame for a receiver kind.
struct ReceiverGeometry {
    std::vector<Eigen::Vector3d> pd_offsets;
    std::vector<Eigen::Vector3d> pd_normals;
};
ReceiverGeometry receiver_geometry(ReceiverKind kind);

/// Random pose: X ~ U[-3,3], Y ~ U[-2,2], height 1 m, yaw U[0, 2pi),
/// pitch Laplace(41.39 deg, 5.43 deg), roll 0.
UEPose sample_pose(Rng& rng);

struct IndoorChannelModel {
    RoomLayout layout;
    ReceiverKind kind = ReceiverKind::Screen;
    /// Global factor mapping raw Lambertian gains so that the largest entry
    /// over the pose distribution is ~1.  Calibrated once per receiver kind
    /// (see calibrate_indoor_scale) and frozen here.
    double scale = 0.0;

    static IndoorChannelModel make(ReceiverKind kind);
};

struct IndoorSample {
    ChannelMatrix channel; // 4 x 4, rows = PDs, cols = LEDs
    UEPose pose;
    bool all_zero = false; // every PD outside every LED's view
};

IndoorSample gen_indoor(const IndoorChannelModel& model, const UEPose& pose);
IndoorSample gen_indoor(const IndoorChannelModel& model, Rng& rng);

/// Largest raw gain entry over `n_poses` random poses (used to freeze
/// IndoorChannelModel::scale).
double calibrate_indoor_scale(const RoomLayout& layout, ReceiverKind kind, int n_poses,
                              std::uint64_t seed);

/// i.i.d. lognormal fading: h_ij = exp(N_ij), N standard normal.
ChannelMatrix gen_lognormal(int n_r, int n_t, Rng& rng);

// ---------------------------------------------------------------------------
// Ensemble experiments

enum class EnsembleKind { IndoorScreen, IndoorMultiDirectional, Lognormal };

struct EnsembleConfig {
    EnsembleKind kind = EnsembleKind::IndoorScreen;
    int n_samples = 1000;
    std::uint64_t seed = 1;
    Eigen::VectorXd alpha;          // per-antenna average-intensity ratios
    double eps_rank_threshold = 0.95;
    int lognormal_n_r = 4;
    int lognormal_n_t = 4;

    bool with_low_snr = true;       // slopes, ladder ratio
    bool with_gamma = false;        // gamma offsets on rank-(n_t-1) samples
    int gamma_max_solves = 0;       // 0 = no cap
    MaxEntOptions maxent;
    int threads = 1;
};

struct EnsembleRow {
    std::uint64_t sample_index = 0;
    int rank = 0;
    int eps_rank = 0;
    double leading_energy = 0.0;    // sigma_1^2 / sum sigma_i^2
    double slope_ec = 0.0;          // half max trace at x = alpha
    double slope_bc = 0.0;          // half max trace at the solved allocation
    double ladder_ratio = 0.0;      // R_L
    double gamma_ec = std::numeric_limits<double>::quiet_NaN();
    double gamma_bc = std::numeric_limits<double>::quiet_NaN();
    bool all_zero = false;
    bool solver_failed = false;
};

struct CdfTable {
    std::string metric;
    Eigen::VectorXd values;  // sorted
    Eigen::VectorXd cdf;     // (i+1)/N
};

struct EnsembleResult {
    std::vector<EnsembleRow> rows;
    std::vector<CdfTable> cdfs;
    int n_failed = 0;
    int n_all_zero = 0;
};

/// Runs the ensemble with per-sample RNG substreams (bit-identical replay
/// for a fixed seed, independent of the thread count).
EnsembleResult ensemble_run(const EnsembleConfig& config);

/// Empirical CDF of the finite entries of a metric column.
CdfTable make_cdf(const std::string& metric, std::vector<double> values);

} // namespace oicap

#endif
