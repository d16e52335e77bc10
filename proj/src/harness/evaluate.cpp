#include "dwe/harness/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "dwe/common/error.hpp"
#include "dwe/common/log.hpp"
#include "dwe/common/random.hpp"

namespace dwe::harness {

namespace {

void pooled_with_groups(const std::vector<clustering::SessionRecord>& records, const std::vector<std::size_t>& labels,
                        std::size_t cluster, Matrix& X, std::vector<double>& rt, std::vector<std::size_t>& groups) {
    for (std::size_t s = 0; s < records.size(); ++s) {
        if (labels[s] != cluster) continue;
        const auto& r = records[s];
        for (std::size_t i = 0; i < r.X.rows(); ++i) {
            X.append_row(r.X.row(i));
            rt.push_back(r.rt[i]);
            groups.push_back(s);
        }
    }
}

std::vector<std::size_t> cluster_sizes(const std::vector<std::size_t>& labels, std::size_t k) {
    std::vector<std::size_t> n(k, 0);
    for (std::size_t l : labels) ++n.at(l);
    return n;
}

double session_rmse(const svr::SvrModel& model, const clustering::SessionRecord& r) {
    return rmse(svr::predict(model, r.X), r.rt);
}

/// RMSE of a full trace against the RT of the most recent trial at every second from the first trial on.
std::optional<double> hold_rmse(const ensemble::PredictionTrace& trace, const std::vector<signal::TrialEvent>& events) {
    std::vector<double> pred;
    std::vector<double> rec;
    std::size_t next = 0;
    std::optional<double> held;
    for (const auto& row : trace.rows) {
        while (next < events.size() && std::floor(events[next].deviation_onset_s) <= row.t_s) {
            held = events[next].rt_s;
            ++next;
        }
        if (!held) continue;
        pred.push_back(row.rt_pred);
        rec.push_back(*held);
    }
    if (pred.empty()) return std::nullopt;
    return rmse(pred, rec);
}

std::vector<std::vector<std::size_t>> make_folds(const Corpus& corpus, FoldUnit unit) {
    std::vector<std::vector<std::size_t>> folds;
    if (unit == FoldUnit::kSession) {
        for (std::size_t i = 0; i < corpus.size(); ++i) folds.push_back({i});
        return folds;
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto [it, fresh] = index.emplace(corpus[i].features.subject_id, folds.size());
        if (fresh) folds.emplace_back();
        folds[it->second].push_back(i);
    }
    return folds;
}

}  // namespace

svr::TrainConfig select_hyperparameters(const std::vector<clustering::SessionRecord>& records,
                                        const std::vector<std::size_t>& labels, const PipelineConfig& cfg,
                                        std::uint64_t seed, std::vector<svr::GridPoint>* scores) {
    svr::TrainConfig best = cfg.svr;
    best.seed = seed;
    if (cfg.hyperparameters == HyperparameterMode::kFixed) return best;
    if (labels.size() != records.size()) throw ValidationError("select_hyperparameters: one label per record");

    std::vector<svr::GridPoint> total;
    std::size_t searched = 0;
    const auto sizes = cluster_sizes(labels, cfg.k);
    for (std::size_t c = 0; c < cfg.k; ++c) {
        if (sizes[c] < 2) {
            log_warning("select_hyperparameters: cluster " + std::to_string(c + 1) +
                        " has fewer than 2 sessions and is left out of the search");
            continue;
        }
        Matrix X;
        std::vector<double> rt;
        std::vector<std::size_t> groups;
        pooled_with_groups(records, labels, c, X, rt, groups);
        svr::TrainConfig base = best;
        base.seed = derive_seed(seed, c);
        const auto res = svr::grid_search(X, rt, cfg.grid, base, groups);
        if (total.empty()) {
            total = res.points;
            for (auto& p : total) p.cv_rmse = 0.0;
        }
        for (std::size_t p = 0; p < total.size(); ++p) total[p].cv_rmse += res.points[p].cv_rmse;
        ++searched;
    }
    if (searched == 0) {
        log_warning("select_hyperparameters: no cluster can be searched; keeping the configured values");
        return best;
    }
    for (auto& p : total) p.cv_rmse /= static_cast<double>(searched);
    // grid order is C-major with larger epsilon and smaller gamma first, so strict < keeps the tie rule
    std::size_t arg = 0;
    for (std::size_t p = 1; p < total.size(); ++p) {
        if (total[p].cv_rmse < total[arg].cv_rmse) arg = p;
    }
    best.C = total[arg].C;
    best.epsilon = total[arg].epsilon;
    best.gamma = total[arg].gamma;
    if (scores) *scores = std::move(total);
    return best;
}

Labeling label_sessions(const std::vector<clustering::SessionRecord>& records, const PipelineConfig& cfg,
                        std::uint64_t seed, const std::vector<std::size_t>* truth) {
    Labeling out;
    if (cfg.labels == LabelSource::kTruth) {
        if (!truth) throw ValidationError("label_sessions: truth labels requested but not available");
        if (truth->size() != records.size()) throw ValidationError("label_sessions: one truth label per record");
        out.labels = *truth;
        out.svr = select_hyperparameters(records, out.labels, cfg, seed, &out.grid_scores);
        return out;
    }
    auto init = clustering::initial_labels(records);
    init = clustering::fill_empty_clusters(records, std::move(init), cfg.k);
    out.svr = select_hyperparameters(records, init, cfg, seed, &out.grid_scores);
    clustering::ClusterConfig cc;
    cc.k = cfg.k;
    cc.svr = out.svr;
    cc.max_iter = cfg.cluster_max_iter;
    cc.group_by_subject = cfg.group_by_subject;
    auto res = clustering::recursive_cluster(records, std::move(init), cc);
    out.labels = res.labels;
    out.clustering = std::move(res);
    return out;
}

LosoResult loso_evaluate(const Corpus& corpus, const std::vector<std::size_t>& report_labels,
                         const PipelineConfig& cfg, const LosoOptions& opt) {
    cfg.validate();
    if (report_labels.size() != corpus.size()) throw ValidationError("loso_evaluate: one report label per session");
    for (std::size_t l : report_labels) {
        if (l >= cfg.k) throw ValidationError("loso_evaluate: report label out of range");
    }
    {
        std::set<std::string> ids;
        for (const auto& s : corpus) {
            if (!ids.insert(s.features.session_id).second) {
                throw ValidationError("loso_evaluate: duplicate session id " + s.features.session_id);
            }
        }
    }
    std::vector<std::size_t> truth;
    if (cfg.labels == LabelSource::kTruth) truth = truth_labels(corpus);

    LosoResult out;
    const auto folds = make_folds(corpus, cfg.folds);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto& held = folds[f];
        FoldRecord rec;
        std::vector<std::size_t> train;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            if (std::find(held.begin(), held.end(), i) == held.end()) train.push_back(i);
        }
        for (std::size_t i : held) rec.held_out.push_back(corpus[i].features.session_id);
        for (std::size_t i : train) rec.labeling_sessions.push_back(corpus[i].features.session_id);

        const auto skip = [&](const std::string& why) {
            log_warning("loso_evaluate: fold " + std::to_string(f + 1) + " skipped: " + why);
            rec.skipped = true;
            rec.skip_reason = why;
            ++out.skipped_folds;
            out.skipped_sessions += held.size();
            out.folds.push_back(rec);
        };

        if (train.size() < cfg.k) {
            skip("fewer training sessions than clusters");
            continue;
        }
        const std::uint64_t fold_seed = derive_seed(cfg.seed, 1000 + f);
        const auto records = records_of(corpus, train);
        std::vector<std::size_t> fold_truth;
        for (std::size_t i : train) fold_truth.push_back(truth.empty() ? 0 : truth[i]);
        const auto labeling = label_sessions(records, cfg, fold_seed, truth.empty() ? nullptr : &fold_truth);
        rec.training_labels = labeling.labels;
        rec.svr = labeling.svr;
        const auto sizes = cluster_sizes(labeling.labels, cfg.k);
        if (std::find(sizes.begin(), sizes.end(), std::size_t{0}) != sizes.end()) {
            skip("holding out would empty a cluster");
            continue;
        }

        std::vector<const signal::SessionFeatures*> train_features;
        for (std::size_t i : train) train_features.push_back(&corpus[i].features);
        const auto model = ensemble::train_ensemble(train_features, labeling.labels,
                                                    cfg.ensemble_config(labeling.svr, derive_seed(fold_seed, 99)));
        rec.model_sessions = model.training_sessions;

        std::vector<int> model_archetype(cfg.k, 0);
        for (std::size_t c = 0; c < cfg.k; ++c) {
            std::map<int, std::size_t> votes;
            for (std::size_t t = 0; t < train.size(); ++t) {
                if (labeling.labels[t] == c && corpus[train[t]].archetype_id > 0) ++votes[corpus[train[t]].archetype_id];
            }
            std::size_t best = 0;
            for (const auto& [a, n] : votes) {
                if (n > best) {
                    best = n;
                    model_archetype[c] = a;
                }
            }
        }

        for (std::size_t i : held) {
            const auto& s = corpus[i];
            SessionResult r;
            r.session_id = s.features.session_id;
            r.subject_id = s.features.subject_id;
            r.archetype_id = s.archetype_id;
            r.cluster = report_labels[i];
            r.drift = s.truth && s.truth->drift_onset_s.has_value();
            r.fold = f;
            r.model_archetype = model_archetype;
            const auto times = ensemble::trial_times(s.features.events);
            const bool full = cfg.zero_order_hold || opt.keep_dynamic_traces;
            for (auto mode : cfg.modes) {
                ensemble::PredictOptions po;
                if (!full) po.only_times = &times;
                auto trace = ensemble::predict(model, s.features, mode, po);
                const auto pairs = ensemble::align_trace_to_trials(trace, s.features.events);
                r.n_pairs = pairs.rt_rec.size();
                r.excluded_trials = pairs.excluded;
                if (!pairs.rt_rec.empty()) r.rmse[mode_index(mode)] = rmse(pairs.rt_pred, pairs.rt_rec);
                if (cfg.zero_order_hold) r.rmse_hold[mode_index(mode)] = hold_rmse(trace, s.features.events);
                if (mode == ensemble::Mode::kDynamic && opt.keep_dynamic_traces) {
                    ensemble::attach_recorded_rt(trace, s.features.events);
                    r.dynamic_trace = std::move(trace);
                }
            }
            if (r.n_pairs == 0) {
                log_warning("loso_evaluate: session " + r.session_id + " has no scorable trials");
                ++out.skipped_sessions;
                continue;
            }
            out.sessions.push_back(std::move(r));
        }
        out.folds.push_back(std::move(rec));
        log_info("fold " + std::to_string(f + 1) + "/" + std::to_string(folds.size()) + " done");
    }
    std::stable_sort(out.sessions.begin(), out.sessions.end(), [&](const SessionResult& a, const SessionResult& b) {
        return a.fold < b.fold;
    });
    return out;
}

HygieneReport check_fold_hygiene(const LosoResult& result) {
    HygieneReport rep;
    for (std::size_t f = 0; f < result.folds.size(); ++f) {
        const auto& fold = result.folds[f];
        ++rep.folds_checked;
        const std::set<std::string> labeling(fold.labeling_sessions.begin(), fold.labeling_sessions.end());
        const std::set<std::string> model(fold.model_sessions.begin(), fold.model_sessions.end());
        for (const auto& id : fold.held_out) {
            if (labeling.count(id)) rep.violations.push_back("fold " + std::to_string(f + 1) + ": " + id + " in labeling set");
            if (model.count(id)) rep.violations.push_back("fold " + std::to_string(f + 1) + ": " + id + " in model training set");
        }
    }
    return rep;
}

CrossModelMatrix cross_model_matrix(const std::vector<clustering::SessionRecord>& records,
                                    const std::vector<std::size_t>& labels, std::size_t k,
                                    const svr::TrainConfig& svr_cfg) {
    if (labels.size() != records.size()) throw ValidationError("cross_model_matrix: one label per record");
    for (std::size_t l : labels) {
        if (l >= k) throw ValidationError("cross_model_matrix: label out of range");
    }
    CrossModelMatrix out;
    out.sessions_per_cluster = cluster_sizes(labels, k);
    for (std::size_t c = 0; c < k; ++c) {
        if (out.sessions_per_cluster[c] < 2) {
            throw ValidationError("cross_model_matrix: cluster " + std::to_string(c + 1) +
                                  " needs at least 2 sessions for its held-out diagonal");
        }
    }
    const auto models = clustering::train_cluster_models(records, labels, k, svr_cfg);
    std::vector<std::vector<std::vector<double>>> cell(k, std::vector<std::vector<double>>(k));
    for (std::size_t s = 0; s < records.size(); ++s) {
        for (std::size_t i = 0; i < k; ++i) {
            if (i == labels[s]) continue;
            cell[i][labels[s]].push_back(session_rmse(models[i], records[s]));
        }
    }
    for (std::size_t s = 0; s < records.size(); ++s) {
        Matrix X;
        std::vector<double> rt;
        for (std::size_t o = 0; o < records.size(); ++o) {
            if (o == s || labels[o] != labels[s]) continue;
            for (std::size_t r = 0; r < records[o].X.rows(); ++r) {
                X.append_row(records[o].X.row(r));
                rt.push_back(records[o].rt[r]);
            }
        }
        const auto model = svr::train(X, rt, svr_cfg);
        cell[labels[s]][labels[s]].push_back(session_rmse(model, records[s]));
    }
    out.mean = Matrix(k, k, 0.0);
    out.std = Matrix(k, k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const MeanStd ms = mean_std(cell[i][j]);
            out.mean(i, j) = ms.mean;
            out.std(i, j) = ms.std;
        }
    }
    return out;
}

std::vector<ClusterSummary> summarize_clusters(const LosoResult& loso, std::size_t k) {
    std::vector<ClusterSummary> out(k);
    std::vector<std::array<std::vector<double>, kModeCount>> values(k);
    for (const auto& s : loso.sessions) {
        if (s.cluster >= k) throw ValidationError("summarize_clusters: cluster out of range");
        ++out[s.cluster].n_sessions;
        for (std::size_t m = 0; m < kModeCount; ++m) {
            if (s.rmse[m]) values[s.cluster][m].push_back(*s.rmse[m]);
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t m = 0; m < kModeCount; ++m) {
            if (!values[c][m].empty()) out[c].rmse[m] = mean_std(values[c][m]);
        }
    }
    return out;
}

EvalReport evaluate(const Corpus& corpus, const PipelineConfig& cfg, const LosoOptions& opt) {
    cfg.validate();
    EvalReport rep;
    rep.k = cfg.k;
    rep.seed = cfg.seed;
    rep.config = to_json(cfg);
    rep.config_hash = config_hash(cfg);
    for (const auto& s : corpus) rep.session_ids.push_back(s.features.session_id);

    std::vector<std::size_t> truth;
    const bool have_truth = std::all_of(corpus.begin(), corpus.end(), [](const CorpusSession& s) {
        return s.archetype_id > 0;
    });
    if (have_truth) truth = truth_labels(corpus);

    std::vector<std::size_t> all(corpus.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto records = records_of(corpus, all);
    const auto labeling = label_sessions(records, cfg, derive_seed(cfg.seed, 7), have_truth ? &truth : nullptr);
    rep.labels = labeling.labels;
    rep.svr = labeling.svr;
    rep.grid_scores = labeling.grid_scores;
    if (have_truth && cfg.k == 3) rep.label_agreement = clustering::best_agreement(rep.labels, truth, cfg.k).fraction;
    for (const auto& r : records) rep.excluded_trials += r.excluded_trials;

    rep.loso = loso_evaluate(corpus, rep.labels, cfg, opt);
    rep.clusters = summarize_clusters(rep.loso, cfg.k);
    for (std::size_t m = 0; m < kModeCount; ++m) {
        std::vector<double> v;
        for (const auto& s : rep.loso.sessions) {
            if (s.rmse[m]) v.push_back(*s.rmse[m]);
        }
        if (!v.empty()) rep.median_rmse[m] = median(v);
    }

    if (cfg.accuracy_grid) {
        std::vector<mixture::LabeledSession> labeled;
        for (std::size_t i = 0; i < corpus.size(); ++i) labeled.push_back({&corpus[i].features, rep.labels[i]});
        mixture::AccuracyGridConfig ac;
        ac.m_values = cfg.accuracy_m;
        ac.band_sets = cfg.accuracy_band_sets;
        ac.k = cfg.k;
        ac.train_stride = cfg.accuracy_stride;
        ac.em = cfg.em;
        ac.seed = derive_seed(cfg.seed, 11);
        rep.accuracy = mixture::accuracy_grid(labeled, ac);
    }
    if (cfg.cross_model) {
        std::vector<std::size_t> sizes(cfg.k, 0);
        for (std::size_t l : rep.labels) ++sizes[l];
        if (std::all_of(sizes.begin(), sizes.end(), [](std::size_t n) { return n >= 2; })) {
            rep.cross = cross_model_matrix(records, rep.labels, cfg.k, rep.svr);
        } else {
            log_warning("evaluate: a cluster holds fewer than 2 sessions; cross-model matrix skipped");
        }
    }
    return rep;
}

}  // namespace dwe::harness
