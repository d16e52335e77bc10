#include "dwe/harness/corpus.hpp"

#include <algorithm>

#include "dwe/common/error.hpp"
#include "dwe/common/io.hpp"
#include "dwe/common/log.hpp"
#include "dwe/signal/session_io.hpp"

namespace dwe::harness {

namespace fs = std::filesystem;

CorpusSession make_corpus_session(signal::SessionFeatures features, int archetype_id,
                                  std::optional<synthgen::GroundTruth> truth) {
    CorpusSession s;
    s.record = clustering::make_record(features);
    s.features = std::move(features);
    s.archetype_id = archetype_id;
    s.truth = std::move(truth);
    return s;
}

Corpus synthesize_corpus(const PipelineConfig& cfg) {
    cfg.validate();
    const auto gcfg = cfg.generator_config();
    Corpus corpus;
    for (const auto& entry : synthgen::corpus_plan(cfg.corpus, gcfg)) {
        auto g = synthgen::generate_entry(entry, gcfg);
        auto f = signal::extract_features(g.session, cfg.features);
        f.events = std::move(g.session.events);
        g.session.samples = {};
        corpus.push_back(make_corpus_session(std::move(f), entry.archetype_id, std::move(g.truth)));
    }
    return corpus;
}

CorpusSession load_session(const fs::path& dir, const PipelineConfig& cfg) {
    if (!fs::is_directory(dir)) throw IoError("session directory " + dir.string() + " does not exist");
    const fs::path features_csv = dir / "features.csv";
    signal::SessionFeatures f;
    if (fs::exists(features_csv)) {
        const auto header = signal::read_session_header(dir);
        f = signal::features_from_csv(read_text_file(features_csv));
        f.subject_id = header.subject_id;
        f.session_id = header.session_id;
        f.channel_names = header.channel_names;
        f.events = header.events;
    } else {
        auto s = signal::read_session_dir(dir);
        f = signal::extract_features(s, cfg.features);
        f.events = std::move(s.events);
    }
    int archetype = 0;
    std::optional<synthgen::GroundTruth> truth;
    const fs::path truth_json = dir / "truth.json";
    if (fs::exists(truth_json)) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text_file(truth_json));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(truth_json.string() + ": " + e.what());
        }
        truth = synthgen::truth_from_json(j);
        archetype = truth->archetype_id;
    }
    return make_corpus_session(std::move(f), archetype, std::move(truth));
}

Corpus load_corpus(const fs::path& dir, const PipelineConfig& cfg) {
    if (!fs::is_directory(dir)) throw IoError("corpus directory " + dir.string() + " does not exist");
    std::vector<std::string> ids;
    const fs::path manifest = dir / "manifest.csv";
    if (fs::exists(manifest)) {
        for (const auto& row : synthgen::manifest_from_csv(read_text_file(manifest))) ids.push_back(row.entry.session_id);
    } else {
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.is_directory() && fs::exists(e.path() / "meta.json")) ids.push_back(e.path().filename().string());
        }
        std::sort(ids.begin(), ids.end());
    }
    if (ids.empty()) throw ValidationError("corpus " + dir.string() + " holds no sessions");
    Corpus corpus;
    for (const auto& id : ids) {
        corpus.push_back(load_session(dir / id, cfg));
        log_info("loaded " + id);
    }
    return corpus;
}

std::vector<std::size_t> truth_labels(const Corpus& corpus) {
    std::vector<std::size_t> out;
    for (const auto& s : corpus) {
        if (s.archetype_id < 1) {
            throw ValidationError("session " + s.features.session_id + " has no planted archetype");
        }
        out.push_back(static_cast<std::size_t>(s.archetype_id - 1));
    }
    return out;
}

std::vector<clustering::SessionRecord> records_of(const Corpus& corpus, const std::vector<std::size_t>& indices) {
    std::vector<clustering::SessionRecord> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(corpus.at(i).record);
    return out;
}

}  // namespace dwe::harness
