#pragma once

#include <iosfwd>
#include <string>

#include "sativ/dgp.hpp"

namespace sativ {

/// Header of the observation CSV. One row per individual, LF line endings.
inline constexpr const char* kDataHeader = "group_id,saturation,z,d,y";
/// Header of the latent-truth CSV written next to simulated data.
inline constexpr const char* kLatentHeader = "group_id,complier,alpha,beta,gamma,delta";

/// Parses observation CSV. Groups are keyed by group_id and returned sorted by
/// id; members keep file order. Every validation failure names the line.
ExperimentData read_data_csv(std::istream& in);
ExperimentData ingest_csv(const std::string& path);

/// Doubles are written in shortest round-trip form, so reading back gives
/// bit-identical values.
void write_data_csv(const ExperimentData& data, std::ostream& out);
void write_data_csv(const ExperimentData& data, const std::string& path);

void write_latent_csv(const ExperimentData& data, std::ostream& out);
void write_latent_csv(const ExperimentData& data, const std::string& path);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

}  // namespace sativ
