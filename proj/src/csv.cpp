#include "ecgode/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "ecgode/error.hpp"

namespace ecgode {

namespace {

std::string header(bool with_beat) {
    std::string h = with_beat ? "beat,time" : "time";
    for (LeadId id : kAllLeads) {
        h += ',';
        h += lead_name(id);
    }
    return h;
}

void append_row(std::string& out, const LeadMatrix& leads, Eigen::Index col, double t) {
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.9f", t);
    out += buf.data();
    for (Eigen::Index r = 0; r < leads.rows(); ++r) {
        out += ',';
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), leads(r, col));
        out.append(buf.data(), res.ptr);
    }
    out += '\n';
}

double parse_number(std::string_view s, std::size_t line) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ParseError(line, "bad number '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

// Sampling rate from a uniformly spaced time column; snapped to an integer
// when the 9-decimal time stamps are consistent with one.
double infer_fs(const std::vector<double>& times, std::size_t line) {
    if (times.size() < 2) throw ParseError(line, "need at least 2 samples to infer fs");
    const double span = times.back() - times.front();
    if (!(span > 0)) throw ParseError(line, "time column must increase");
    const double fs = static_cast<double>(times.size() - 1) / span;
    const double rounded = std::round(fs);
    return std::abs(fs - rounded) <= 1e-6 * fs ? rounded : fs;
}

struct Table {
    bool with_beat = false;
    std::map<long long, std::vector<std::array<double, kLeadCount + 1>>> beats;  // time + leads
    std::vector<long long> order;
    std::map<long long, std::size_t> first_line;
};

Table read_table(std::string_view text) {
    Table table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        if (!have_header) {
            if (line == header(true)) {
                table.with_beat = true;
            } else if (line != header(false)) {
                throw ParseError(line_no, "unexpected CSV header");
            }
            have_header = true;
            continue;
        }
        const auto fields = split_fields(line);
        const std::size_t expected = kLeadCount + (table.with_beat ? 2 : 1);
        if (fields.size() != expected) {
            throw ParseError(line_no, "expected " + std::to_string(expected) + " fields, got " +
                                          std::to_string(fields.size()));
        }
        long long beat = 0;
        std::size_t offset = 0;
        if (table.with_beat) {
            const auto [ptr, ec] =
                std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), beat);
            if (ec != std::errc() || ptr != fields[0].data() + fields[0].size()) {
                throw ParseError(line_no, "bad beat index '" + std::string(fields[0]) + "'");
            }
            offset = 1;
        }
        std::array<double, kLeadCount + 1> row{};
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = parse_number(fields[i + offset], line_no);
        auto [it, fresh] = table.beats.try_emplace(beat);
        if (fresh) {
            table.order.push_back(beat);
            table.first_line[beat] = line_no;
        }
        it->second.push_back(row);
    }
    if (!have_header) throw ParseError(line_no, "empty CSV");
    return table;
}

LeadMatrix to_matrix(const std::vector<std::array<double, kLeadCount + 1>>& rows,
                     std::vector<double>& times) {
    LeadMatrix m(static_cast<Eigen::Index>(kLeadCount), static_cast<Eigen::Index>(rows.size()));
    times.clear();
    for (std::size_t c = 0; c < rows.size(); ++c) {
        times.push_back(rows[c][0]);
        for (std::size_t r = 0; r < kLeadCount; ++r) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[c][r + 1];
        }
    }
    return m;
}

}  // namespace

std::string write_heartbeat_csv(const Heartbeat& beat) {
    std::string out = header(false) + '\n';
    for (Eigen::Index c = 0; c < beat.leads.cols(); ++c) {
        append_row(out, beat.leads, c, beat.grid.time(static_cast<std::size_t>(c)));
    }
    return out;
}

std::string write_beats_csv(std::span<const Heartbeat> beats) {
    std::string out = header(true) + '\n';
    for (std::size_t k = 0; k < beats.size(); ++k) {
        const auto& beat = beats[k];
        const std::string prefix = std::to_string(k) + ',';
        for (Eigen::Index c = 0; c < beat.leads.cols(); ++c) {
            out += prefix;
            append_row(out, beat.leads, c, beat.grid.time(static_cast<std::size_t>(c)));
        }
    }
    return out;
}

std::vector<Heartbeat> read_beats_csv(std::string_view text) {
    const Table table = read_table(text);
    if (table.order.empty()) throw ParseError(1, "CSV holds no samples");
    std::vector<Heartbeat> beats;
    std::vector<double> times;
    for (long long k : table.order) {
        const auto& rows = table.beats.at(k);
        LeadMatrix m = to_matrix(rows, times);
        const double fs = infer_fs(times, table.first_line.at(k));
        beats.emplace_back(SamplingGrid(fs, rows.size()), std::move(m));
    }
    return beats;
}

std::string write_record_csv(const Record& rec) {
    std::string out = header(false) + '\n';
    for (Eigen::Index c = 0; c < rec.channels.cols(); ++c) {
        append_row(out, rec.channels, c, static_cast<double>(c) / rec.fs);
    }
    return out;
}

Record read_record_csv(std::string_view text, std::string id) {
    const Table table = read_table(text);
    if (table.with_beat) throw ParseError(1, "record CSV must not carry a beat column");
    if (table.order.empty()) throw ParseError(1, "CSV holds no samples");
    std::vector<double> times;
    LeadMatrix m = to_matrix(table.beats.at(0), times);
    const double fs = infer_fs(times, 2);
    return Record(fs, std::move(m), std::move(id));
}

}  // namespace ecgode
