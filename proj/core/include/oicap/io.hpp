#ifndef OICAP_IO_HPP
#define OICAP_IO_HPP

#include <string>

#include "oicap/capacity.hpp"
#include "oicap/channel.hpp"
#include "oicap/scenario.hpp"
#include "oicap/zonotope.hpp"

namespace oicap {

/// Channel + alpha loaded from disk.  JSON files carry {"H": [[...]], "alpha":
/// [...]}; CSV files carry the matrix row-major, one row per line, with alpha
/// supplied separately (inline string "a1,a2,..." or a one-line CSV file via
/// "@path").
struct ChannelInput {
    ChannelMatrix channel;
    Eigen::VectorXd alpha; // may be empty when the file has no alpha block
};

ChannelInput read_channel_json(const std::string& path);
ChannelInput read_channel_csv(const std::string& path);
/// Dispatch on extension (.json vs anything else = CSV).
ChannelInput read_channel(const std::string& path);

/// Alpha from an inline comma list or "@file.csv".
Eigen::VectorXd parse_alpha(const std::string& text);

void write_channel_json(const std::string& path, const ChannelMatrix& channel,
                        const Eigen::VectorXd& alpha);
void write_channel_csv(const std::string& path, const ChannelMatrix& channel);

std::string decomposition_to_json(const ZonotopeDecomposition& zd);
std::string reduced_to_json(const ReducedChannel& rc);
std::string gamma_report_to_json(const GammaReport& report);

/// CSV with one row per ensemble sample, then the CDF tables.
void write_ensemble_csv(const std::string& samples_path, const EnsembleResult& result);
void write_cdf_csv(const std::string& path, const CdfTable& table);

} // namespace oicap

#endif
