#pragma once

// Heartbeat and record CSV.
//
//   time,I,II,III,aVR,aVL,aVF,V1,V2,V3,V4,V5,V6
//
// Time in seconds with 9 decimals, samples in mV in shortest round-trip form,
// LF line endings, no quoting. Files holding several beats prepend an integer
// `beat` column and restart time at 0 for every beat.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecgode/leads.hpp"
#include "ecgode/segmentation.hpp"

namespace ecgode {

std::string write_heartbeat_csv(const Heartbeat& beat);
std::string write_beats_csv(std::span<const Heartbeat> beats);

/// Accepts both the single-beat and the multi-beat layout. The sampling rate
/// of each beat is inferred from its time column.
std::vector<Heartbeat> read_beats_csv(std::string_view text);

std::string write_record_csv(const Record& rec);
Record read_record_csv(std::string_view text, std::string id = {});

}  // namespace ecgode
