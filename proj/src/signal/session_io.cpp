#include "dwe/signal/session_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "dwe/common/error.hpp"
#include "dwe/common/io.hpp"

namespace dwe::signal {

namespace fs = std::filesystem;

namespace {

std::uint32_t swap_bytes(std::uint32_t u) {
    return (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    for (auto& line : split(text, '\n')) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        out.push_back(std::move(line));
    }
    return out;
}

EegSession read_meta(const fs::path& dir) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(dir / "meta.json"));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError((dir / "meta.json").string() + ": " + e.what());
    }
    EegSession s;
    try {
        s.subject_id = meta.at("subject_id").get<std::string>();
        s.session_id = meta.at("session_id").get<std::string>();
        s.sample_rate_hz = meta.at("sample_rate_hz").get<double>();
        s.channel_names = meta.at("channel_names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError((dir / "meta.json").string() + ": " + e.what());
    }
    s.events = events_from_csv(read_text_file(dir / "events.csv"));
    return s;
}

}  // namespace

void write_session_dir(const fs::path& dir, const EegSession& session, const nlohmann::json& provenance) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    nlohmann::json meta;
    meta["subject_id"] = session.subject_id;
    meta["session_id"] = session.session_id;
    meta["sample_rate_hz"] = session.sample_rate_hz;
    meta["channel_names"] = session.channel_names;
    meta["provenance"] = provenance;
    write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");

    std::string bytes(session.samples.size() * sizeof(float), '\0');
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(bytes.data(), session.samples.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < session.samples.size(); ++i) {
            const auto u = swap_bytes(std::bit_cast<std::uint32_t>(session.samples[i]));
            std::memcpy(bytes.data() + i * 4, &u, 4);
        }
    }
    write_file_atomic(dir / "eeg.bin", bytes);
    write_file_atomic(dir / "events.csv", events_to_csv(session.events));
}

EegSession read_session_header(const fs::path& dir) { return read_meta(dir); }

EegSession read_session_dir(const fs::path& dir) {
    EegSession s = read_meta(dir);
    const fs::path bin = dir / "eeg.bin";
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw IoError("cannot open " + bin.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t frame_bytes = s.channel_names.size() * sizeof(float);
    if (frame_bytes == 0 || bytes.size() % frame_bytes != 0) {
        throw ParseError(bin.string() + ": size " + std::to_string(bytes.size()) +
                         " is not a whole number of " + std::to_string(s.channel_names.size()) + "-channel samples");
    }
    s.samples.resize(bytes.size() / sizeof(float));
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(s.samples.data(), bytes.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < s.samples.size(); ++i) {
            std::uint32_t u;
            std::memcpy(&u, bytes.data() + i * 4, 4);
            s.samples[i] = std::bit_cast<float>(swap_bytes(u));
        }
    }
    s.validate();
    return s;
}

std::string events_to_csv(const std::vector<TrialEvent>& events) {
    std::string out = "deviation_onset_s,response_onset_s,response_offset_s,rt_s\n";
    for (const auto& ev : events) {
        out += format_double(ev.deviation_onset_s) + ',' + format_double(ev.response_onset_s) + ',' +
               format_double(ev.response_offset_s) + ',' + format_double(ev.rt_s) + '\n';
    }
    return out;
}

std::vector<TrialEvent> events_from_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != "deviation_onset_s,response_onset_s,response_offset_s,rt_s") {
        throw ParseError("events.csv: missing or unexpected header");
    }
    std::vector<TrialEvent> events;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split(lines[i], ',');
        if (cells.size() != 4) throw ParseError("events.csv line " + std::to_string(i + 1) + ": expected 4 fields");
        TrialEvent ev;
        ev.deviation_onset_s = parse_double(cells[0], "events.csv deviation_onset_s");
        ev.response_onset_s = parse_double(cells[1], "events.csv response_onset_s");
        ev.response_offset_s = parse_double(cells[2], "events.csv response_offset_s");
        ev.rt_s = parse_double(cells[3], "events.csv rt_s");
        events.push_back(ev);
    }
    return events;
}

namespace {

char band_letter(Band b) {
    switch (b) {
        case Band::kDelta: return 'D';
        case Band::kTheta: return 'T';
        case Band::kAlpha: return 'A';
        case Band::kBeta: return 'B';
    }
    return 'T';
}

}  // namespace

std::string features_to_csv(const SessionFeatures& features, const std::string& comment) {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    if (features.frames.empty()) throw ValidationError("features_to_csv: no frames");
    const FeatureFrame& first = features.frames.front();
    const auto pairs = weighting_pairs();
    out += "t_s";
    for (double hz : features.bin_hz) out += ",oz_p_" + format_double(hz);
    for (Band b : kAllBands) {
        if (first.band_powers[static_cast<int>(b)].empty()) continue;
        for (const auto& ch : features.channel_names) out += "," + std::string(band_name(b)) + "_" + ch;
    }
    for (Band b : kAllBands) {
        if (first.band_plv[static_cast<int>(b)].empty()) continue;
        for (const auto& [a, c] : pairs) out += std::string(",plv") + band_letter(b) + "_" + a + "_" + c;
    }
    out += '\n';
    for (const auto& f : features.frames) {
        out += std::to_string(f.t_s);
        for (double v : f.oz_spectrum) out += "," + format_double(v);
        for (Band b : kAllBands) {
            for (double v : f.band_powers[static_cast<int>(b)]) out += "," + format_double(v);
        }
        for (Band b : kAllBands) {
            for (double v : f.band_plv[static_cast<int>(b)]) out += "," + format_double(v);
        }
        out += '\n';
    }
    return out;
}

SessionFeatures features_from_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw ParseError("features.csv: empty");
    const auto header = split(lines.front(), ',');
    if (header.empty() || header.front() != "t_s") throw ParseError("features.csv: first column must be t_s");

    enum class Kind { kSpectrum, kPower, kPlv };
    struct Column {
        Kind kind;
        int band = 0;
    };
    std::vector<Column> columns;
    SessionFeatures out;
    std::array<std::vector<std::string>, 4> power_channels;
    std::array<std::size_t, 4> plv_counts{};
    for (std::size_t i = 1; i < header.size(); ++i) {
        const std::string& h = header[i];
        if (h.rfind("oz_p_", 0) == 0) {
            out.bin_hz.push_back(parse_double(h.substr(5), "features.csv bin frequency"));
            columns.push_back({Kind::kSpectrum});
            continue;
        }
        if (h.size() > 5 && h.rfind("plv", 0) == 0 && h[4] == '_') {
            int band = -1;
            for (Band b : kAllBands) {
                if (band_letter(b) == h[3]) band = static_cast<int>(b);
            }
            if (band < 0) throw ParseError("features.csv: unknown PLV column " + h);
            ++plv_counts[band];
            columns.push_back({Kind::kPlv, band});
            continue;
        }
        const auto us = h.find('_');
        const auto band = us == std::string::npos ? std::nullopt : parse_band(h.substr(0, us));
        if (!band) throw ParseError("features.csv: unknown column " + h);
        power_channels[static_cast<int>(*band)].push_back(h.substr(us + 1));
        columns.push_back({Kind::kPower, static_cast<int>(*band)});
    }
    for (const auto& chans : power_channels) {
        if (chans.empty()) continue;
        if (out.channel_names.empty()) out.channel_names = chans;
        if (chans != out.channel_names) throw ParseError("features.csv: band power columns disagree on channels");
    }
    const std::size_t n_pairs = weighting_pairs().size();
    for (std::size_t c : plv_counts) {
        if (c != 0 && c != n_pairs) throw ParseError("features.csv: incomplete PLV column set");
    }

    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto cells = split(lines[li], ',');
        if (cells.size() != header.size()) {
            throw ParseError("features.csv line " + std::to_string(li + 1) + ": expected " +
                             std::to_string(header.size()) + " fields");
        }
        FeatureFrame f;
        const double t = parse_double(cells[0], "features.csv t_s");
        f.t_s = static_cast<int>(t);
        if (static_cast<double>(f.t_s) != t) throw ParseError("features.csv: t_s must be an integer");
        for (std::size_t i = 1; i < cells.size(); ++i) {
            const double v = parse_double(cells[i], "features.csv value");
            const Column& col = columns[i - 1];
            switch (col.kind) {
                case Kind::kSpectrum: f.oz_spectrum.push_back(v); break;
                case Kind::kPower: f.band_powers[col.band].push_back(v); break;
                case Kind::kPlv: f.band_plv[col.band].push_back(v); break;
            }
        }
        if (!out.frames.empty() && f.t_s <= out.frames.back().t_s) {
            throw ParseError("features.csv: t_s not strictly increasing");
        }
        out.frames.push_back(std::move(f));
    }
    return out;
}

}  // namespace dwe::signal
