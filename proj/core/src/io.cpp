#include "oicap/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace oicap {

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    if (!rows.is_array() || rows.empty()) throw std::runtime_error("matrix must be a non-empty array");
    const std::size_t n_cols = rows[0].size();
    Eigen::MatrixXd H(rows.size(), n_cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != n_cols) throw std::runtime_error("ragged matrix rows");
        for (std::size_t j = 0; j < n_cols; ++j) H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
    return H;
}

json matrix_to_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

std::vector<double> split_doubles(const std::string& line) {
    std::vector<double> out;
    std::string token;
    std::stringstream ss(line);
    while (std::getline(ss, token, ',')) {
        if (token.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::size_t pos = 0;
        const double v = std::stod(token, &pos);
        out.push_back(v);
    }
    return out;
}

} // namespace

ChannelInput read_channel_json(const std::string& path) {
    const json j = load_json(path);
    if (!j.contains("H")) throw std::runtime_error(path + ": missing \"H\"");
    ChannelInput input;
    input.channel.H = matrix_from_json(j["H"]);
    if (j.contains("alpha")) {
        const auto& arr = j["alpha"];
        input.alpha.resize(static_cast<Eigen::Index>(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i) input.alpha[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return input;
}

ChannelInput read_channel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        rows.push_back(split_doubles(line));
    }
    if (rows.empty()) throw std::runtime_error(path + ": empty matrix");
    const std::size_t n_cols = rows[0].size();
    ChannelInput input;
    input.channel.H.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != n_cols) throw std::runtime_error(path + ": ragged rows");
        for (std::size_t j = 0; j < n_cols; ++j)
            input.channel.H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return input;
}

ChannelInput read_channel(const std::string& path) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return read_channel_json(path);
    return read_channel_csv(path);
}

Eigen::VectorXd parse_alpha(const std::string& text) {
    std::vector<double> vals;
    if (!text.empty() && text[0] == '@') {
        std::ifstream in(text.substr(1));
        if (!in) throw std::runtime_error("cannot open " + text.substr(1));
        std::string line;
        while (std::getline(in, line)) {
            const auto row = split_doubles(line);
            vals.insert(vals.end(), row.begin(), row.end());
        }
    } else {
        vals = split_doubles(text);
    }
    Eigen::VectorXd alpha(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) alpha[static_cast<Eigen::Index>(i)] = vals[i];
    return alpha;
}

void write_channel_json(const std::string& path, const ChannelMatrix& channel,
                        const Eigen::VectorXd& alpha) {
    json j;
    j["H"] = matrix_to_json(channel.H);
    if (alpha.size() > 0) j["alpha"] = vector_to_json(alpha);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_channel_csv(const std::string& path, const ChannelMatrix& channel) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << std::setprecision(9);
    for (Eigen::Index i = 0; i < channel.H.rows(); ++i) {
        for (Eigen::Index j = 0; j < channel.H.cols(); ++j) {
            if (j) out << ",";
            out << channel.H(i, j);
        }
        out << "\n";
    }
}

std::string decomposition_to_json(const ZonotopeDecomposition& zd) {
    json j;
    j["dim"] = zd.dim();
    j["volume"] = zd.volume;
    j["generators"] = matrix_to_json(zd.generators);
    json cells = json::array();
    for (const auto& cell : zd.cells) {
        json c;
        c["basis"] = cell.basis;
        c["det_abs"] = cell.det_abs;
        c["translate"] = vector_to_json(cell.translate);
        cells.push_back(std::move(c));
    }
    j["cells"] = std::move(cells);
    return j.dump(2);
}

std::string reduced_to_json(const ReducedChannel& rc) {
    json j;
    j["rank"] = rc.rank;
    j["sigma"] = vector_to_json(rc.sigma);
    j["V1"] = matrix_to_json(rc.V1);
    j["H_tilde"] = matrix_to_json(rc.H_tilde);
    if (rc.has_tail) j["v_tail"] = vector_to_json(rc.v_tail);
    return j.dump(2);
}

std::string gamma_report_to_json(const GammaReport& report) {
    json j;
    j["gamma"] = std::isfinite(report.gamma) ? json(report.gamma) : json("-inf");
    j["dim"] = report.dim;
    switch (report.path) {
        case GammaPath::Fiber: j["path"] = "fiber"; break;
        case GammaPath::RankOne: j["path"] = "rank-one"; break;
        case GammaPath::FullColumnRank: j["path"] = "full-column-rank"; break;
        case GammaPath::Degenerate: j["path"] = "degenerate"; break;
    }
    switch (report.status) {
        case SolveStatus::converged: j["status"] = "converged"; break;
        case SolveStatus::infeasible: j["status"] = "infeasible"; break;
        case SolveStatus::max_iter: j["status"] = "max_iter"; break;
    }
    j["pinned_antennas"] = report.pinned_antennas;
    if (report.path != GammaPath::Degenerate) {
        const auto& sol = report.problem.sol;
        j["grad_norm"] = sol.grad_norm;
        j["iterations"] = sol.iterations;
        j["n_quad"] = sol.n_quad;
        j["dual"] = {{"u", vector_to_json(sol.dual.u)},
                     {"lambda", vector_to_json(sol.dual.lambda)},
                     {"nu", sol.dual.nu}};
        j["eq_moments"] = vector_to_json(sol.eq_moments);
        j["ineq_moments"] = vector_to_json(sol.ineq_moments);
        j["log_gain"] = report.log_gain;
    }
    return j.dump(2);
}

void write_cdf_csv(const std::string& path, const CdfTable& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << std::setprecision(9);
    out << "value,cdf\n";
    for (Eigen::Index i = 0; i < table.values.size(); ++i)
        out << table.values[i] << "," << table.cdf[i] << "\n";
}

void write_ensemble_csv(const std::string& samples_path, const EnsembleResult& result) {
    std::ofstream out(samples_path);
    if (!out) throw std::runtime_error("cannot write " + samples_path);
    out << std::setprecision(9);
    out << "sample,rank,eps_rank,leading_energy,slope_ec,slope_bc,ladder_ratio,gamma_ec,gamma_bc,"
           "all_zero,solver_failed\n";
    for (const auto& row : result.rows) {
        out << row.sample_index << "," << row.rank << "," << row.eps_rank << ","
            << row.leading_energy << "," << row.slope_ec << "," << row.slope_bc << ","
            << row.ladder_ratio << "," << row.gamma_ec << "," << row.gamma_bc << ","
            << (row.all_zero ? 1 : 0) << "," << (row.solver_failed ? 1 : 0) << "\n";
    }
}

} // namespace oicap
