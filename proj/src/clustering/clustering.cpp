#include "dwe/clustering/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "dwe/common/error.hpp"
#include "dwe/common/log.hpp"
#include "dwe/common/stats.hpp"

namespace dwe::clustering {

SessionRecord make_record(const signal::SessionFeatures& features) {
    SessionRecord r;
    r.subject_id = features.subject_id;
    r.session_id = features.session_id;
    for (const auto& ev : features.events) {
        r.all_rts.push_back(ev.rt_s);
        const auto* frame = features.frame_at(static_cast<int>(std::floor(ev.deviation_onset_s)));
        if (!frame) {
            ++r.excluded_trials;
            continue;
        }
        r.X.append_row(frame->oz_spectrum);
        r.rt.push_back(ev.rt_s);
    }
    return r;
}

std::vector<double> rt_ratio(std::span<const double> rts) {
    if (rts.size() < kMinTrials) {
        throw ValidationError("rt_ratio: " + std::to_string(rts.size()) + " trials; at least " +
                              std::to_string(kMinTrials) + " are required");
    }
    std::vector<double> sorted(rts.begin(), rts.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n_fast = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(rts.size()) - 1e-9));
    double baseline = 0.0;
    for (std::size_t i = 0; i < n_fast; ++i) baseline += sorted[i];
    baseline /= static_cast<double>(n_fast);
    if (!(baseline > 0.0)) throw ValidationError("rt_ratio: reaction times must be positive");
    std::vector<double> out(rts.size());
    for (std::size_t i = 0; i < rts.size(); ++i) out[i] = rts[i] / baseline;
    return out;
}

std::size_t ratio_bucket(double ratio, const Thresholds& t) {
    if (ratio <= t.optimal) return 0;
    if (ratio <= t.suboptimal) return 1;
    return 2;
}

std::vector<std::size_t> initial_labels(const std::vector<SessionRecord>& sessions, const Thresholds& t,
                                        InitMode mode) {
    std::vector<std::size_t> labels;
    for (const auto& s : sessions) {
        const auto ratios = rt_ratio(s.all_rts);
        if (mode == InitMode::kMeanRatio) {
            labels.push_back(ratio_bucket(mean(ratios), t));
            continue;
        }
        std::array<std::size_t, 3> counts{};
        for (double r : ratios) ++counts[ratio_bucket(r, t)];
        // max_element returns the first maximum, i.e. the better bucket on ties
        labels.push_back(static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin()));
    }
    return labels;
}

std::vector<std::size_t> fill_empty_clusters(const std::vector<SessionRecord>& sessions,
                                             std::vector<std::size_t> labels, std::size_t k) {
    const std::size_t n = labels.size();
    if (n < k) throw ValidationError("clustering: fewer sessions than clusters");
    for (auto& l : labels) l = std::min(l, k - 1);
    std::vector<double> mean_ratio(n);
    for (std::size_t j = 0; j < n; ++j) mean_ratio[j] = mean(rt_ratio(sessions[j].all_rts));
    std::vector<std::size_t> by_ratio(n);
    std::iota(by_ratio.begin(), by_ratio.end(), std::size_t{0});
    std::stable_sort(by_ratio.begin(), by_ratio.end(),
                     [&](std::size_t a, std::size_t b) { return mean_ratio[a] < mean_ratio[b]; });
    std::vector<double> rank(n);
    for (std::size_t r = 0; r < n; ++r) rank[by_ratio[r]] = static_cast<double>(r);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<std::size_t> size(k, 0);
        for (auto l : labels) ++size[l];
        if (size[c] > 0) continue;
        // take the session whose performance rank sits closest to this cluster's share
        const double target = (static_cast<double>(c) + 0.5) / static_cast<double>(k) * static_cast<double>(n);
        std::size_t pick = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (size[labels[j]] < 2) continue;
            if (pick == n || std::abs(rank[j] - target) < std::abs(rank[pick] - target)) pick = j;
        }
        log_warning("clustering: initial cluster " + std::to_string(c + 1) + " is empty; moved session " +
                    sessions[pick].session_id + " into it");
        labels[pick] = c;
    }
    return labels;
}

void pooled_rows(const std::vector<SessionRecord>& sessions, const std::vector<std::size_t>& labels,
                 std::size_t cluster, Matrix& X, std::vector<double>& rt) {
    X = Matrix();
    rt.clear();
    for (std::size_t j = 0; j < sessions.size(); ++j) {
        if (labels[j] != cluster) continue;
        for (std::size_t r = 0; r < sessions[j].X.rows(); ++r) X.append_row(sessions[j].X.row(r));
        rt.insert(rt.end(), sessions[j].rt.begin(), sessions[j].rt.end());
    }
}

std::vector<svr::SvrModel> train_cluster_models(const std::vector<SessionRecord>& sessions,
                                                const std::vector<std::size_t>& labels, std::size_t k,
                                                const svr::TrainConfig& cfg) {
    std::vector<svr::SvrModel> models;
    Matrix X;
    std::vector<double> rt;
    for (std::size_t c = 0; c < k; ++c) {
        pooled_rows(sessions, labels, c, X, rt);
        if (X.empty()) throw ValidationError("clustering: cluster " + std::to_string(c + 1) + " has no training rows");
        models.push_back(svr::train(X, rt, cfg));
    }
    return models;
}

Matrix rmse_matrix(const std::vector<SessionRecord>& sessions, const std::vector<svr::SvrModel>& models) {
    Matrix M(sessions.size(), models.size());
    for (std::size_t j = 0; j < sessions.size(); ++j) {
        for (std::size_t i = 0; i < models.size(); ++i) {
            M(j, i) = rmse(svr::predict(models[i], sessions[j].X), sessions[j].rt);
        }
    }
    return M;
}

namespace {

constexpr double kTieTol = 1e-12;

std::vector<std::size_t> relabel(const Matrix& M, const std::vector<std::size_t>& current,
                                 const std::vector<SessionRecord>& sessions, bool by_subject) {
    const std::size_t n = current.size();
    const std::size_t k = M.cols();
    // group index per session: itself, or the first session of its subject
    std::vector<std::size_t> group(n);
    std::map<std::string, std::size_t> first;
    for (std::size_t j = 0; j < n; ++j) {
        group[j] = j;
        if (by_subject) group[j] = first.emplace(sessions[j].subject_id, j).first->second;
    }
    std::vector<std::size_t> out(current);
    for (std::size_t g = 0; g < n; ++g) {
        std::vector<double> cost(k, 0.0);
        bool any = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (group[j] != g) continue;
            any = true;
            for (std::size_t i = 0; i < k; ++i) cost[i] += M(j, i);
        }
        if (!any) continue;
        const std::size_t cur = current[g];
        std::size_t best = cur;
        for (std::size_t i = 0; i < k; ++i) {
            if (cost[i] < cost[best] - kTieTol) best = i;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (group[j] == g) out[j] = best;
        }
    }
    return out;
}

std::size_t repair_empty(const Matrix& M, std::vector<std::size_t>& labels, const std::vector<SessionRecord>& sessions) {
    const std::size_t k = M.cols();
    std::size_t repairs = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<std::size_t> size(k, 0);
        for (auto l : labels) ++size[l];
        if (size[c] > 0) continue;
        std::size_t pick = labels.size();
        double best_margin = 0.0;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (size[labels[j]] < 2) continue;
            const double margin = M(j, c) - M(j, labels[j]);
            if (pick == labels.size() || margin < best_margin) {
                pick = j;
                best_margin = margin;
            }
        }
        labels[pick] = c;
        ++repairs;
        log_warning("clustering: relabeling emptied cluster " + std::to_string(c + 1) + "; kept session " +
                    sessions[pick].session_id + " in it (RMSE margin " + std::to_string(best_margin) + ")");
    }
    return repairs;
}

}  // namespace

ClusteringResult recursive_cluster(const std::vector<SessionRecord>& sessions, std::vector<std::size_t> init,
                                   const ClusterConfig& cfg) {
    if (cfg.k == 0) throw ValidationError("recursive_cluster: k must be at least 1");
    if (cfg.max_iter < 1) throw ValidationError("recursive_cluster: max_iter must be at least 1");
    if (init.size() != sessions.size()) throw ValidationError("recursive_cluster: one initial label per session");
    for (const auto& s : sessions) {
        if (s.X.empty()) throw ValidationError("recursive_cluster: session " + s.session_id + " has no usable trials");
    }
    for (auto l : init) {
        if (l >= cfg.k) throw ValidationError("recursive_cluster: initial label out of range");
    }
    std::vector<std::size_t> size(cfg.k, 0);
    for (auto l : init) ++size[l];
    if (std::find(size.begin(), size.end(), std::size_t{0}) != size.end()) {
        init = fill_empty_clusters(sessions, std::move(init), cfg.k);
    }

    ClusteringResult res;
    res.history.push_back(init);
    std::vector<Matrix> mats;
    std::map<std::vector<std::size_t>, std::size_t> visited{{init, 0}};
    std::vector<std::size_t> labels = init;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const auto models = train_cluster_models(sessions, labels, cfg.k, cfg.svr);
        Matrix M = rmse_matrix(sessions, models);
        double total = 0.0;
        for (std::size_t j = 0; j < sessions.size(); ++j) total += M(j, labels[j]);
        res.history_total_rmse.push_back(total);
        mats.push_back(M);
        res.iterations = it;

        auto next = relabel(M, labels, sessions, cfg.group_by_subject);
        res.repairs += repair_empty(M, next, sessions);
        res.history.push_back(next);
        if (next == labels) {
            res.converged = true;
            break;
        }
        if (visited.count(next)) {
            res.cycle_detected = true;
            log_info("clustering: labeling recurred after iteration " + std::to_string(it));
            break;
        }
        visited.emplace(next, res.history.size() - 1);
        labels = std::move(next);
    }

    std::size_t chosen = 0;
    if (res.converged) {
        chosen = res.history.size() - 2;
    } else {
        for (std::size_t t = 1; t < res.history_total_rmse.size(); ++t) {
            if (res.history_total_rmse[t] < res.history_total_rmse[chosen]) chosen = t;
        }
        log_warning("clustering: no fixpoint after " + std::to_string(res.iterations) +
                    " iterations; keeping the visited labeling with the lowest total RMSE");
    }
    res.labels = res.history[chosen];
    res.per_session_rmse = mats[chosen];
    return res;
}

Agreement best_agreement(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b, std::size_t k) {
    if (a.size() != b.size() || a.empty()) throw ValidationError("best_agreement: label vectors differ in length");
    if (k == 0 || k > 8) throw ValidationError("best_agreement: k must be in [1, 8]");
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Agreement best;
    do {
        std::size_t hits = 0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[j] >= k || b[j] >= k) throw ValidationError("best_agreement: label out of range");
            hits += perm[a[j]] == b[j] ? 1 : 0;
        }
        const double f = static_cast<double>(hits) / static_cast<double>(a.size());
        if (best.mapping.empty() || f > best.fraction) {
            best.fraction = f;
            best.mapping = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

nlohmann::json to_json(const ClusteringResult& result, const std::vector<SessionRecord>& sessions) {
    auto one_based = [](const std::vector<std::size_t>& v) {
        std::vector<std::size_t> out(v);
        for (auto& x : out) ++x;
        return out;
    };
    nlohmann::json j;
    j["k"] = result.per_session_rmse.cols();
    nlohmann::json labels = nlohmann::json::object();
    std::vector<std::string> ids;
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        labels[sessions[s].session_id] = result.labels[s] + 1;
        ids.push_back(sessions[s].session_id);
    }
    j["session_ids"] = ids;
    j["labels"] = labels;
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    j["cycle_detected"] = result.cycle_detected;
    j["repairs"] = result.repairs;
    j["history"] = nlohmann::json::array();
    for (const auto& h : result.history) j["history"].push_back(one_based(h));
    j["history_total_rmse"] = result.history_total_rmse;
    j["rmse"] = nlohmann::json::array();
    for (std::size_t r = 0; r < result.per_session_rmse.rows(); ++r) {
        const auto row = result.per_session_rmse.row(r);
        j["rmse"].push_back(std::vector<double>(row.begin(), row.end()));
    }
    return j;
}

ClusterFile cluster_file_from_json(const nlohmann::json& j) {
    try {
        ClusterFile f;
        f.k = j.at("k").get<std::size_t>();
        f.session_ids = j.at("session_ids").get<std::vector<std::string>>();
        const auto& labels = j.at("labels");
        for (const auto& id : f.session_ids) {
            const auto l = labels.at(id).get<std::size_t>();
            if (l < 1 || l > f.k) throw ParseError("clusters.json: label of " + id + " out of range");
            f.labels.push_back(l - 1);
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("clusters.json: ") + e.what());
    }
}

}  // namespace dwe::clustering
