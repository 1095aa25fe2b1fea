#include "oicap/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <atomic>
#include <thread>

#include "oicap/capacity.hpp"
#include "oicap/low_snr.hpp"

namespace oicap {

namespace {
constexpr double kDegToRad = M_PI / 180.0;

// Frozen calibration factors for "largest gain entry over the pose
// distribution maps to 1"; computed by calibrate_indoor_scale with
// 100000 poses, seed 20240905 (see test_scenario for the regression).
constexpr double kScreenRawMax = 6.508957e-02;
constexpr double kMultiDirRawMax = 6.534255e-02;
} // namespace

Eigen::Matrix3d rotation_matrix(double yaw, double pitch, double roll) {
    Eigen::Matrix3d rz = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    Eigen::Matrix3d rx = Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()).toRotationMatrix();
    Eigen::Matrix3d ry = Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitY()).toRotationMatrix();
    // Intrinsic composition in application order yaw, pitch, roll.
    return rz * rx * ry;
}

double lambertian_gain(const Eigen::Vector3d& led_pos, const Eigen::Vector3d& pd_pos,
                       const Eigen::Vector3d& pd_normal, double lambert_order, double fov_rad) {
    const Eigen::Vector3d diff = pd_pos - led_pos;
    const double d = diff.norm();
    if (d <= 0.0) throw std::invalid_argument("coincident LED and PD positions");
    const Eigen::Vector3d dir = diff / d; // LED -> PD
    const double cos_irr = -dir.z();      // LED normal points straight down
    if (cos_irr <= 0.0) return 0.0;
    const double cos_inc = -dir.dot(pd_normal.normalized());
    if (cos_inc <= 0.0) return 0.0;
    if (std::acos(std::clamp(cos_inc, -1.0, 1.0)) > fov_rad) return 0.0;
    return (lambert_order + 1.0) / (2.0 * M_PI * d * d) * std::pow(cos_irr, lambert_order) * cos_inc;
}

ReceiverGeometry receiver_geometry(ReceiverKind kind) {
    ReceiverGeometry geo;
    if (kind == ReceiverKind::Screen) {
        geo.pd_offsets = {{0.03, 0.03, 0.0}, {0.03, -0.03, 0.0}, {-0.03, 0.03, 0.0}, {-0.03, -0.03, 0.0}};
        geo.pd_normals.assign(4, Eigen::Vector3d::UnitZ());
    } else {
        geo.pd_offsets = {{0.0, 0.0, 0.0}, {0.03, 0.0, -0.005}, {-0.03, 0.0, -0.005}, {0.0, 0.005, -0.005}};
        geo.pd_normals = {Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitX(), -Eigen::Vector3d::UnitX(),
                          Eigen::Vector3d::UnitY()};
    }
    return geo;
}

UEPose sample_pose(Rng& rng) {
    UEPose pose;
    pose.position = Eigen::Vector3d(rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0), 1.0);
    pose.yaw = rng.uniform(0.0, 2.0 * M_PI);
    pose.pitch = rng.laplace(41.39, 5.43) * kDegToRad;
    pose.roll = 0.0;
    return pose;
}

IndoorChannelModel IndoorChannelModel::make(ReceiverKind kind) {
    IndoorChannelModel model;
    model.kind = kind;
    model.scale = 1.0 / (kind == ReceiverKind::Screen ? kScreenRawMax : kMultiDirRawMax);
    return model;
}

IndoorSample gen_indoor(const IndoorChannelModel& model, const UEPose& pose) {
    const ReceiverGeometry geo = receiver_geometry(model.kind);
    const Eigen::Matrix3d rot = rotation_matrix(pose.yaw, pose.pitch, pose.roll);
    const double fov_rad = model.layout.fov_deg * kDegToRad;

    IndoorSample sample;
    sample.pose = pose;
    sample.channel.H.resize(static_cast<Eigen::Index>(geo.pd_offsets.size()),
                            static_cast<Eigen::Index>(model.layout.leds.size()));
    for (std::size_t p = 0; p < geo.pd_offsets.size(); ++p) {
        const Eigen::Vector3d pd_pos = pose.position + rot * geo.pd_offsets[p];
        const Eigen::Vector3d pd_normal = rot * geo.pd_normals[p];
        for (std::size_t l = 0; l < model.layout.leds.size(); ++l) {
            sample.channel.H(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(l)) =
                model.scale * lambertian_gain(model.layout.leds[l], pd_pos, pd_normal,
                                              model.layout.lambert_order, fov_rad);
        }
    }
    sample.all_zero = sample.channel.H.lpNorm<Eigen::Infinity>() == 0.0;
    return sample;
}

IndoorSample gen_indoor(const IndoorChannelModel& model, Rng& rng) {
    return gen_indoor(model, sample_pose(rng));
}

double calibrate_indoor_scale(const RoomLayout& layout, ReceiverKind kind, int n_poses,
                              std::uint64_t seed) {
    IndoorChannelModel raw;
    raw.layout = layout;
    raw.kind = kind;
    raw.scale = 1.0;
    Rng rng(seed);
    double max_gain = 0.0;
    for (int i = 0; i < n_poses; ++i) {
        const IndoorSample s = gen_indoor(raw, rng);
        max_gain = std::max(max_gain, s.channel.H.maxCoeff());
    }
    return max_gain;
}

ChannelMatrix gen_lognormal(int n_r, int n_t, Rng& rng) {
    if (n_r < 1 || n_t < 1) throw std::invalid_argument("dimensions must be positive");
    ChannelMatrix ch;
    ch.H.resize(n_r, n_t);
    for (int i = 0; i < n_r; ++i)
        for (int j = 0; j < n_t; ++j) ch.H(i, j) = std::exp(rng.normal());
    return ch;
}

CdfTable make_cdf(const std::string& metric, std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return !std::isfinite(v); }),
                 values.end());
    std::sort(values.begin(), values.end());
    CdfTable table;
    table.metric = metric;
    const int n = static_cast<int>(values.size());
    table.values.resize(n);
    table.cdf.resize(n);
    for (int i = 0; i < n; ++i) {
        table.values[i] = values[static_cast<std::size_t>(i)];
        table.cdf[i] = static_cast<double>(i + 1) / n;
    }
    return table;
}

EnsembleResult ensemble_run(const EnsembleConfig& config) {
    if (config.n_samples < 0) throw std::invalid_argument("negative sample count");
    EnsembleResult result;
    result.rows.resize(static_cast<std::size_t>(config.n_samples));

    const IndoorChannelModel indoor =
        IndoorChannelModel::make(config.kind == EnsembleKind::IndoorMultiDirectional
                                     ? ReceiverKind::MultiDirectional
                                     : ReceiverKind::Screen);
    const Rng master(config.seed);

    std::atomic<int> gamma_budget{config.gamma_max_solves > 0 ? config.gamma_max_solves
                                                              : config.n_samples};

    auto process = [&](int idx) {
        EnsembleRow& row = result.rows[static_cast<std::size_t>(idx)];
        row.sample_index = static_cast<std::uint64_t>(idx);
        Rng rng = master.substream(static_cast<std::uint64_t>(idx));

        ChannelMatrix channel;
        if (config.kind == EnsembleKind::Lognormal) {
            channel = gen_lognormal(config.lognormal_n_r, config.lognormal_n_t, rng);
        } else {
            const IndoorSample s = gen_indoor(indoor, rng);
            row.all_zero = s.all_zero;
            if (s.all_zero) return;
            channel = s.channel;
        }

        Eigen::VectorXd alpha = config.alpha;
        if (alpha.size() == 0) alpha = Eigen::VectorXd::Constant(channel.n_t(), 0.5);
        ValidatedChannel vc;
        try {
            vc = validate(std::move(channel), alpha);
        } catch (const std::exception&) {
            row.solver_failed = true;
            return;
        }

        const ReducedChannel rc = reduce(vc.channel);
        row.rank = rc.rank;
        row.eps_rank = epsilon_rank(rc, config.eps_rank_threshold);
        row.leading_energy = leading_energy_ratio(rc);

        if (config.with_low_snr) {
            const Eigen::MatrixXd G = gram(vc.channel);
            row.slope_ec = 0.5 * max_output_trace_ec(G, vc.profile.alpha);
            try {
                const Allocation alloc = solve_bc_allocation(G, vc.profile.alpha);
                row.slope_bc = 0.5 * alloc.value;
                const LadderResult ladder = best_ladder_allocation(G, vc.profile.alpha);
                row.ladder_ratio = alloc.value > 0.0 ? ladder.value / alloc.value
                                                     : std::numeric_limits<double>::quiet_NaN();
            } catch (const std::exception&) {
                row.solver_failed = true;
            }
        }

        if (config.with_gamma && rc.has_tail) {
            if (gamma_budget.fetch_sub(1) <= 0) return;
            try {
                const GammaReport ec =
                    compute_gamma(vc.channel, vc.profile, CostMode::EqualCost, config.maxent);
                const GammaReport bc =
                    compute_gamma(vc.channel, vc.profile, CostMode::BoundedCost, config.maxent);
                row.gamma_ec = ec.gamma;
                row.gamma_bc = bc.gamma;
                if (ec.status != SolveStatus::converged || bc.status != SolveStatus::converged)
                    row.solver_failed = true;
            } catch (const std::exception&) {
                row.solver_failed = true;
            }
        }
    };

    const int n_threads = std::max(1, config.threads);
    if (n_threads == 1) {
        for (int i = 0; i < config.n_samples; ++i) process(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                int i;
                while ((i = next.fetch_add(1)) < config.n_samples) process(i);
            });
        }
        for (auto& th : pool) th.join();
    }

    std::vector<double> eps_rank, energy, slope_ec, slope_bc, ladder, g_ec, g_bc;
    for (const auto& row : result.rows) {
        if (row.all_zero) {
            ++result.n_all_zero;
            continue;
        }
        if (row.solver_failed) ++result.n_failed;
        eps_rank.push_back(row.eps_rank);
        energy.push_back(row.leading_energy);
        slope_ec.push_back(row.slope_ec);
        slope_bc.push_back(row.slope_bc);
        ladder.push_back(row.ladder_ratio);
        g_ec.push_back(row.gamma_ec);
        g_bc.push_back(row.gamma_bc);
    }
    result.cdfs.push_back(make_cdf("eps_rank", std::move(eps_rank)));
    result.cdfs.push_back(make_cdf("leading_energy", std::move(energy)));
    if (config.with_low_snr) {
        result.cdfs.push_back(make_cdf("slope_ec", std::move(slope_ec)));
        result.cdfs.push_back(make_cdf("slope_bc", std::move(slope_bc)));
        result.cdfs.push_back(make_cdf("ladder_ratio", std::move(ladder)));
    }
    if (config.with_gamma) {
        result.cdfs.push_back(make_cdf("gamma_ec", std::move(g_ec)));
        result.cdfs.push_back(make_cdf("gamma_bc", std::move(g_bc)));
    }
    return result;
}

} // namespace oicap
