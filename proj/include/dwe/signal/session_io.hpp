#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dwe/signal/features.hpp"
#include "dwe/signal/session.hpp"

namespace dwe::signal {

/// Session directory layout:
///   meta.json   subject_id, session_id, sample_rate_hz, channel_names, provenance
///   eeg.bin     little-endian float32, sample-major
///   events.csv  deviation_onset_s,response_onset_s,response_offset_s,rt_s
void write_session_dir(const std::filesystem::path& dir, const EegSession& session,
                       const nlohmann::json& provenance = nlohmann::json::object());

EegSession read_session_dir(const std::filesystem::path& dir);

/// Reads only meta.json and events.csv.
EegSession read_session_header(const std::filesystem::path& dir);

std::string events_to_csv(const std::vector<TrialEvent>& events);
std::vector<TrialEvent> events_from_csv(const std::string& text);

/// features.csv: optional leading "# ..." comment line, then the header
/// t_s, oz_p_<bin Hz>..., <band>_<channel>..., plv<B>_<ch1>_<ch2>...
std::string features_to_csv(const SessionFeatures& features, const std::string& comment = {});

/// Parses features.csv. Identity fields and events are not part of the file and are left empty.
SessionFeatures features_from_csv(const std::string& text);

}  // namespace dwe::signal
