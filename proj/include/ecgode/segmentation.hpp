#pragma once

// Splitting multi-lead recordings into R-to-R cycles detected on lead II.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ecgode/leads.hpp"

namespace ecgode {

struct Record {
    double fs;
    LeadMatrix channels;  // 12 x N, mV
    std::string id;
    std::optional<AbnormalityClass> label;

    /// Requires fs > 0 and at least one second of samples.
    Record(double sampling_hz, LeadMatrix samples, std::string record_id = {},
           std::optional<AbnormalityClass> cls = std::nullopt);

    std::size_t size() const { return static_cast<std::size_t>(channels.cols()); }
};

inline constexpr double kQrsWindowSeconds = 0.150;
inline constexpr double kRefractorySeconds = 0.200;
inline constexpr double kSnapSeconds = 0.050;
inline constexpr std::size_t kDefaultCycleLength = 512;

/// QRS detector: first difference, squaring, 150 ms moving-window integration,
/// adaptive threshold at half the running mean of accepted integrated peaks,
/// 200 ms refractory period, then a snap to the largest raw sample within
/// +-50 ms. May return fewer than two peaks. Requires at least fs samples.
std::vector<std::size_t> locate_qrs_peaks(const Eigen::Ref<const Eigen::VectorXd>& lead2, double fs);

/// locate_qrs_peaks, throwing NoRhythmError when fewer than two peaks are found.
std::vector<std::size_t> detect_r_peaks(const Eigen::Ref<const Eigen::VectorXd>& lead2, double fs);

/// Linear interpolation at `length` evenly spaced points spanning the segment.
Eigen::VectorXd resample_cycle(const Eigen::Ref<const Eigen::VectorXd>& segment, std::size_t length);

struct Cycle {
    std::size_t start;  // first sample, an R peak
    std::size_t end;    // next R peak, exclusive
    Heartbeat beat;
};

/// One cycle per pair of consecutive R peaks on lead II; all twelve rows cut
/// at the same bounds and resampled to `length`. The record label is copied to
/// every cycle.
std::vector<Cycle> segment_record_cycles(const Record& rec, std::size_t length = kDefaultCycleLength);

std::vector<Heartbeat> segment_record(const Record& rec, std::size_t length = kDefaultCycleLength);

}  // namespace ecgode
