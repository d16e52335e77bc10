#include "dwe/harness/report.hpp"

#include <map>
#include <sstream>

#include "dwe/common/error.hpp"
#include "dwe/common/io.hpp"

namespace dwe::harness {

namespace {

constexpr std::array<ensemble::Mode, kModeCount> kModes = {ensemble::Mode::kSingle, ensemble::Mode::kFixed,
                                                           ensemble::Mode::kDynamic};

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json mean_std_json(const std::optional<MeanStd>& v) {
    if (!v) return nullptr;
    return {{"mean", v->mean}, {"std", v->std}};
}

nlohmann::json matrix_json(const Matrix& m) {
    auto out = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

nlohmann::json per_mode(const std::array<std::optional<double>, kModeCount>& v) {
    nlohmann::json j = nlohmann::json::object();
    for (auto m : kModes) j[ensemble::mode_name(m)] = opt(v[mode_index(m)]);
    return j;
}

/// Index of the best-m cell of each band set, in first-appearance order.
std::vector<std::size_t> best_cells(const std::vector<mixture::AccuracyCell>& cells, bool with_coherence) {
    std::vector<std::string> order;
    std::map<std::string, std::size_t> best;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        if ((c.band_set.find("plv_") != std::string::npos) != with_coherence) continue;
        const auto it = best.find(c.band_set);
        if (it == best.end()) {
            order.push_back(c.band_set);
            best[c.band_set] = i;
        } else if (c.overall.mean > cells[it->second].overall.mean) {
            it->second = i;
        }
    }
    std::vector<std::size_t> out;
    for (const auto& b : order) out.push_back(best[b]);
    return out;
}

std::string confusion_csv(const EvalReport& report, bool with_coherence) {
    std::ostringstream os;
    os << "# " << provenance_comment(report.config_hash, report.seed) << "\n";
    os << "band_set,m,training_cluster";
    for (std::size_t j = 0; j < report.k; ++j) os << ",model_" << j + 1 << "_mean,model_" << j + 1 << "_std";
    os << ",overall_mean,overall_std\n";
    for (std::size_t idx : best_cells(report.accuracy, with_coherence)) {
        const auto& c = report.accuracy[idx];
        for (std::size_t i = 0; i < report.k; ++i) {
            os << c.band_set << ',' << c.m << ',' << i + 1;
            for (std::size_t j = 0; j < report.k; ++j) {
                os << ',' << format_double(c.confusion(i, j)) << ',' << format_double(c.confusion_std(i, j));
            }
            os << ',' << format_double(c.overall.mean) << ',' << format_double(c.overall.std) << '\n';
        }
    }
    return os.str();
}

}  // namespace

std::string provenance_comment(const std::string& config_hash, std::uint64_t seed) {
    return "config_hash=" + config_hash + " seed=" + std::to_string(seed);
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["schema"] = kReportSchema;
    j["config_hash"] = report.config_hash;
    j["seed"] = report.seed;
    j["config"] = report.config;
    j["k"] = report.k;

    nlohmann::json labels;
    labels["session_ids"] = report.session_ids;
    labels["cluster"] = nlohmann::json::array();
    for (std::size_t l : report.labels) labels["cluster"].push_back(l + 1);
    labels["agreement_with_planted"] = opt(report.label_agreement);
    j["labels"] = labels;

    nlohmann::json hp;
    hp["C"] = report.svr.C;
    hp["epsilon"] = report.svr.epsilon;
    hp["gamma"] = report.svr.gamma ? nlohmann::json(*report.svr.gamma) : nlohmann::json(nullptr);
    hp["grid"] = nlohmann::json::array();
    for (const auto& p : report.grid_scores) {
        hp["grid"].push_back({{"C", p.C}, {"epsilon", p.epsilon}, {"gamma", p.gamma}, {"cv_rmse", p.cv_rmse}});
    }
    j["hyperparameters"] = hp;

    j["sessions"] = nlohmann::json::array();
    for (const auto& s : report.loso.sessions) {
        nlohmann::json r;
        r["session_id"] = s.session_id;
        r["subject_id"] = s.subject_id;
        r["archetype_id"] = s.archetype_id > 0 ? nlohmann::json(s.archetype_id) : nlohmann::json(nullptr);
        r["cluster"] = s.cluster + 1;
        r["drift"] = s.drift;
        r["fold"] = s.fold + 1;
        r["n_pairs"] = s.n_pairs;
        r["excluded_trials"] = s.excluded_trials;
        r["rmse"] = per_mode(s.rmse);
        r["rmse_hold"] = per_mode(s.rmse_hold);
        j["sessions"].push_back(std::move(r));
    }

    nlohmann::json t3;
    t3["modes"] = nlohmann::json::array();
    for (auto m : kModes) t3["modes"].push_back(ensemble::mode_name(m));
    t3["clusters"] = nlohmann::json::array();
    for (std::size_t c = 0; c < report.clusters.size(); ++c) {
        nlohmann::json row;
        row["cluster"] = c + 1;
        row["n_sessions"] = report.clusters[c].n_sessions;
        for (auto m : kModes) row[ensemble::mode_name(m)] = mean_std_json(report.clusters[c].rmse[mode_index(m)]);
        t3["clusters"].push_back(std::move(row));
    }
    t3["median"] = per_mode(report.median_rmse);
    j["rmse_by_cluster"] = t3;

    j["confusion"] = nlohmann::json::array();
    for (const auto& c : report.accuracy) {
        j["confusion"].push_back({{"band_set", c.band_set},
                                  {"m", c.m},
                                  {"overall", {{"mean", c.overall.mean}, {"std", c.overall.std}}},
                                  {"skipped_folds", c.skipped_folds},
                                  {"mean", matrix_json(c.confusion)},
                                  {"std", matrix_json(c.confusion_std)}});
    }

    if (report.cross) {
        j["cross_model"] = {{"mean", matrix_json(report.cross->mean)},
                            {"std", matrix_json(report.cross->std)},
                            {"sessions_per_cluster", report.cross->sessions_per_cluster}};
    } else {
        j["cross_model"] = nullptr;
    }

    j["excluded_trials"] = report.excluded_trials;

    nlohmann::json folds;
    folds["count"] = report.loso.folds.size();
    folds["skipped"] = report.loso.skipped_folds;
    folds["details"] = nlohmann::json::array();
    for (const auto& f : report.loso.folds) {
        nlohmann::json d;
        d["held_out"] = f.held_out;
        d["n_training_sessions"] = f.labeling_sessions.size();
        d["skipped"] = f.skipped;
        d["skip_reason"] = f.skipped ? nlohmann::json(f.skip_reason) : nlohmann::json(nullptr);
        d["svr"] = {{"C", f.svr.C},
                    {"epsilon", f.svr.epsilon},
                    {"gamma", f.svr.gamma ? nlohmann::json(*f.svr.gamma) : nlohmann::json(nullptr)}};
        folds["details"].push_back(std::move(d));
    }
    j["folds"] = folds;

    std::size_t counted = 0;
    for (const auto& c : report.clusters) counted += c.n_sessions;
    j["conservation"] = {{"corpus_sessions", report.session_ids.size()},
                         {"evaluated_sessions", counted},
                         {"skipped_sessions", report.loso.skipped_sessions}};
    return j;
}

std::string table1_csv(const EvalReport& report) { return confusion_csv(report, false); }

std::string table2_csv(const EvalReport& report) { return confusion_csv(report, true); }

std::string table3_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "# " << provenance_comment(report.config_hash, report.seed) << "\n";
    os << "cluster,n_sessions";
    for (auto m : kModes) os << ',' << ensemble::mode_name(m) << "_mean," << ensemble::mode_name(m) << "_std";
    os << '\n';
    for (std::size_t c = 0; c < report.clusters.size(); ++c) {
        os << c + 1 << ',' << report.clusters[c].n_sessions;
        for (auto m : kModes) {
            const auto& v = report.clusters[c].rmse[mode_index(m)];
            if (v) os << ',' << format_double(v->mean) << ',' << format_double(v->std);
            else os << ",,";
        }
        os << '\n';
    }
    return os.str();
}

std::string table4_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "# " << provenance_comment(report.config_hash, report.seed) << "\n";
    os << "model";
    for (std::size_t j = 0; j < report.k; ++j) os << ",cluster_" << j + 1 << "_mean,cluster_" << j + 1 << "_std";
    os << '\n';
    if (!report.cross) return os.str();
    for (std::size_t i = 0; i < report.k; ++i) {
        os << i + 1;
        for (std::size_t j = 0; j < report.k; ++j) {
            os << ',' << format_double(report.cross->mean(i, j)) << ',' << format_double(report.cross->std(i, j));
        }
        os << '\n';
    }
    return os.str();
}

std::string sessions_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "# " << provenance_comment(report.config_hash, report.seed) << "\n";
    os << "session_id,subject_id,archetype_id,cluster,drift,n_pairs,excluded_trials";
    for (auto m : kModes) os << ",rmse_" << ensemble::mode_name(m);
    os << '\n';
    for (const auto& s : report.loso.sessions) {
        os << s.session_id << ',' << s.subject_id << ',' << s.archetype_id << ',' << s.cluster + 1 << ','
           << (s.drift ? 1 : 0) << ',' << s.n_pairs << ',' << s.excluded_trials;
        for (auto m : kModes) {
            os << ',';
            if (s.rmse[mode_index(m)]) os << format_double(*s.rmse[mode_index(m)]);
        }
        os << '\n';
    }
    return os.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_file_atomic(dir / "report.json", report_to_json(report).dump(1) + "\n");
    write_file_atomic(dir / "table1.csv", table1_csv(report));
    write_file_atomic(dir / "table2.csv", table2_csv(report));
    write_file_atomic(dir / "table3.csv", table3_csv(report));
    write_file_atomic(dir / "table4.csv", table4_csv(report));
    write_file_atomic(dir / "sessions.csv", sessions_csv(report));
}

}  // namespace dwe::harness
