#include "ecgode/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

#include "ecgode/error.hpp"

namespace ecgode {

Record::Record(double sampling_hz, LeadMatrix samples, std::string record_id,
               std::optional<AbnormalityClass> cls)
    : fs(sampling_hz), channels(std::move(samples)), id(std::move(record_id)), label(std::move(cls)) {
    if (!(std::isfinite(fs) && fs > 0)) throw InvalidArgument("record: fs must be positive");
    if (static_cast<double>(channels.cols()) < fs) {
        throw DimensionError("record " + id + ": shorter than one second");
    }
    if (!channels.allFinite()) throw InvalidArgument("record " + id + ": non-finite sample");
}

namespace {

std::size_t samples_for(double seconds, double fs) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(seconds * fs)));
}

// Centred moving average of the squared first difference.
Eigen::VectorXd integrated_slope_energy(const Eigen::Ref<const Eigen::VectorXd>& x, double fs) {
    const Eigen::Index n = x.size();
    Eigen::VectorXd energy = Eigen::VectorXd::Zero(n);
    energy.tail(n - 1) = (x.tail(n - 1) - x.head(n - 1)).array().square().matrix();

    std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + energy(i);
    }
    const auto half = static_cast<Eigen::Index>(samples_for(kQrsWindowSeconds, fs) / 2);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index hi = std::min<Eigen::Index>(n, i + half + 1);
        out(i) = (prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)]) /
                 static_cast<double>(hi - lo);
    }
    return out;
}

}  // namespace

std::vector<std::size_t> locate_qrs_peaks(const Eigen::Ref<const Eigen::VectorXd>& lead2, double fs) {
    if (!(std::isfinite(fs) && fs > 0)) throw InvalidArgument("QRS detector: fs must be positive");
    if (static_cast<double>(lead2.size()) < fs) {
        throw DimensionError("QRS detector: need at least one second of signal");
    }
    const Eigen::Index n = lead2.size();
    const Eigen::VectorXd energy = integrated_slope_energy(lead2, fs);
    const std::size_t refractory = samples_for(kRefractorySeconds, fs);

    // Seed the running mean with the largest value in the first two seconds.
    const Eigen::Index seed_span = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(2 * fs));
    const double seed = energy.head(seed_span).maxCoeff();
    if (!(seed > 0)) return {};

    constexpr std::size_t kHistory = 8;
    std::deque<double> history{seed};
    auto threshold = [&] {
        return 0.5 * std::accumulate(history.begin(), history.end(), 0.0) /
               static_cast<double>(history.size());
    };

    struct Mark {
        std::size_t index;
        double height;
    };
    std::vector<Mark> marks;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const double v = energy(i);
        if (!(v > energy(i - 1) && v >= energy(i + 1)) || v < threshold()) continue;
        const auto idx = static_cast<std::size_t>(i);
        if (!marks.empty() && idx - marks.back().index < refractory) {
            if (v > marks.back().height) {
                marks.back() = {idx, v};
                history.back() = v;
            }
            continue;
        }
        marks.push_back({idx, v});
        history.push_back(v);
        if (history.size() > kHistory) history.pop_front();
    }

    const auto snap = static_cast<Eigen::Index>(samples_for(kSnapSeconds, fs));
    std::vector<std::size_t> peaks;
    for (const auto& m : marks) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(m.index) - snap);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(m.index) + snap);
        Eigen::Index best = 0;
        lead2.segment(lo, hi - lo + 1).maxCoeff(&best);
        const auto p = static_cast<std::size_t>(lo + best);
        // Snapped marks closer than the refractory period collapse onto the
        // taller sample.
        if (!peaks.empty() && p < peaks.back() + refractory) {
            if (lead2(static_cast<Eigen::Index>(p)) > lead2(static_cast<Eigen::Index>(peaks.back())) &&
                (peaks.size() < 2 || p >= peaks[peaks.size() - 2] + refractory)) {
                peaks.back() = p;
            }
            continue;
        }
        peaks.push_back(p);
    }
    return peaks;
}

std::vector<std::size_t> detect_r_peaks(const Eigen::Ref<const Eigen::VectorXd>& lead2, double fs) {
    auto peaks = locate_qrs_peaks(lead2, fs);
    if (peaks.size() < 2) {
        throw NoRhythmError("found " + std::to_string(peaks.size()) + " R peak(s); need at least 2");
    }
    return peaks;
}

Eigen::VectorXd resample_cycle(const Eigen::Ref<const Eigen::VectorXd>& segment, std::size_t length) {
    const Eigen::Index m = segment.size();
    if (m < 2) throw DimensionError("resample: segment needs at least 2 samples");
    if (length < 2) throw InvalidArgument("resample: target length must be >= 2");
    if (static_cast<std::size_t>(m) == length) return segment;

    Eigen::VectorXd out(static_cast<Eigen::Index>(length));
    const double span = static_cast<double>(m - 1);
    const double last = static_cast<double>(length - 1);
    for (std::size_t j = 0; j < length; ++j) {
        const double pos = static_cast<double>(j) * span / last;
        const auto i = std::min(static_cast<Eigen::Index>(pos), m - 2);
        const double frac = pos - static_cast<double>(i);
        out(static_cast<Eigen::Index>(j)) = segment(i) + frac * (segment(i + 1) - segment(i));
    }
    return out;
}

std::vector<Cycle> segment_record_cycles(const Record& rec, std::size_t length) {
    const Eigen::VectorXd lead2 = rec.channels.row(row_of(LeadId::II)).transpose();
    const auto peaks = detect_r_peaks(lead2, rec.fs);

    std::vector<Cycle> cycles;
    for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
        const std::size_t start = peaks[k];
        const std::size_t end = peaks[k + 1];
        const auto m = static_cast<Eigen::Index>(end - start);
        if (m < 2) continue;
        LeadMatrix rows(static_cast<Eigen::Index>(kLeadCount), static_cast<Eigen::Index>(length));
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            rows.row(r) = resample_cycle(rec.channels.row(r).segment(static_cast<Eigen::Index>(start), m)
                                             .transpose(),
                                         length)
                              .transpose();
        }
        // The resampled cycle spans the same duration with `length` samples.
        const double duration = static_cast<double>(m - 1) / rec.fs;
        const SamplingGrid grid(static_cast<double>(length - 1) / duration, length);
        cycles.push_back({start, end, Heartbeat(grid, std::move(rows), rec.label)});
    }
    return cycles;
}

std::vector<Heartbeat> segment_record(const Record& rec, std::size_t length) {
    std::vector<Heartbeat> beats;
    for (auto& c : segment_record_cycles(rec, length)) beats.push_back(std::move(c.beat));
    return beats;
}

}  // namespace ecgode
