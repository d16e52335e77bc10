#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dwe/clustering/clustering.hpp"
#include "dwe/harness/config.hpp"
#include "dwe/signal/features.hpp"
#include "dwe/synthgen/synthgen.hpp"

namespace dwe::harness {

/// A featurized session with everything evaluation needs; raw samples are not kept.
struct CorpusSession {
    signal::SessionFeatures features;  ///< carries ids and events
    clustering::SessionRecord record;
    int archetype_id = 0;  ///< 0 when unknown
    std::optional<synthgen::GroundTruth> truth;
};

using Corpus = std::vector<CorpusSession>;

CorpusSession make_corpus_session(signal::SessionFeatures features, int archetype_id = 0,
                                  std::optional<synthgen::GroundTruth> truth = std::nullopt);

/// Generates the planned corpus in memory and featurizes it, one session at a time.
Corpus synthesize_corpus(const PipelineConfig& cfg);

/// Loads a corpus directory written by generate_corpus. Session order follows manifest.csv
/// when present, else sorted subdirectory names. A session's features.csv is used when it
/// exists; otherwise features are extracted from eeg.bin with cfg.features.
Corpus load_corpus(const std::filesystem::path& dir, const PipelineConfig& cfg);

/// Loads one session directory the same way.
CorpusSession load_session(const std::filesystem::path& dir, const PipelineConfig& cfg);

/// Planted labels (archetype_id - 1); rejects sessions without a known archetype.
std::vector<std::size_t> truth_labels(const Corpus& corpus);

std::vector<clustering::SessionRecord> records_of(const Corpus& corpus, const std::vector<std::size_t>& indices);

}  // namespace dwe::harness
