#include "dwe/mixture/accuracy.hpp"

#include <string>

#include "dwe/common/error.hpp"
#include "dwe/common/log.hpp"

namespace dwe::mixture {

Matrix weight_matrix(const signal::SessionFeatures& features, const signal::WeightFeatureSpec& spec, int t_begin,
                     int t_end, int stride) {
    if (stride < 1) throw ValidationError("weight_matrix: stride must be positive");
    Matrix out;
    for (const auto& f : features.frames) {
        if (f.t_s < t_begin || f.t_s > t_end || (f.t_s - t_begin) % stride != 0) continue;
        out.append_row(signal::weight_vector(f, spec));
    }
    return out;
}

std::vector<AccuracyCell> accuracy_grid(const std::vector<LabeledSession>& sessions, const AccuracyGridConfig& cfg) {
    if (cfg.k == 0) throw ValidationError("accuracy_grid: k must be positive");
    if (cfg.m_values.empty() || cfg.band_sets.empty()) throw ValidationError("accuracy_grid: empty grid");
    std::vector<std::size_t> per_cluster(cfg.k, 0);
    for (const auto& s : sessions) {
        if (!s.features) throw ValidationError("accuracy_grid: missing features");
        if (s.label >= cfg.k) throw ValidationError("accuracy_grid: label out of range");
        ++per_cluster[s.label];
    }
    for (std::size_t c = 0; c < cfg.k; ++c) {
        if (per_cluster[c] == 0) {
            throw ValidationError("accuracy_grid: cluster " + std::to_string(c + 1) + " has no sessions");
        }
    }

    std::vector<AccuracyCell> cells;
    for (const auto& spec : cfg.band_sets) {
        std::vector<Matrix> train_rows;
        std::vector<Matrix> test_rows;
        for (const auto& s : sessions) {
            train_rows.push_back(weight_matrix(*s.features, spec, kWeightWindowBegin, kWeightWindowEnd, cfg.train_stride));
            test_rows.push_back(weight_matrix(*s.features, spec));
        }
        for (std::size_t m : cfg.m_values) {
            AccuracyCell cell;
            cell.m = m;
            cell.band_set = spec.label();
            cell.confusion = Matrix(cfg.k, cfg.k, 0.0);
            // fractions[r][c]: per held-out session of cluster r, share of its frames classified to c
            std::vector<std::vector<std::vector<double>>> fractions(cfg.k, std::vector<std::vector<double>>(cfg.k));
            for (std::size_t h = 0; h < sessions.size(); ++h) {
                if (per_cluster[sessions[h].label] < 2) {
                    log_warning("accuracy_grid: session " + sessions[h].features->session_id +
                                " is the only member of its cluster; fold skipped");
                    ++cell.skipped_folds;
                    continue;
                }
                std::vector<Matrix> per(cfg.k);
                for (std::size_t s = 0; s < sessions.size(); ++s) {
                    if (s == h) continue;
                    const Matrix& rows = train_rows[s];
                    for (std::size_t r = 0; r < rows.rows(); ++r) per[sessions[s].label].append_row(rows.row(r));
                }
                WeightModelConfig wcfg;
                wcfg.m = m;
                wcfg.em = cfg.em;
                wcfg.priors = cfg.priors;
                const auto model = fit_cluster_weight_model(per, wcfg, cfg.seed);
                const Matrix& test = test_rows[h];
                if (test.empty()) throw ValidationError("accuracy_grid: held-out session has no frames in the window");
                std::vector<double> counts(cfg.k, 0.0);
                for (std::size_t r = 0; r < test.rows(); ++r) counts[map_classify(model, test.row(r))] += 1.0;
                const std::size_t truth = sessions[h].label;
                for (std::size_t c = 0; c < cfg.k; ++c) {
                    fractions[truth][c].push_back(counts[c] / static_cast<double>(test.rows()));
                }
                cell.session_accuracy.push_back(counts[truth] / static_cast<double>(test.rows()));
            }
            cell.confusion_std = Matrix(cfg.k, cfg.k, 0.0);
            for (std::size_t r = 0; r < cfg.k; ++r) {
                for (std::size_t c = 0; c < cfg.k; ++c) {
                    if (fractions[r][c].empty()) continue;
                    const MeanStd ms = mean_std(fractions[r][c]);
                    cell.confusion(r, c) = ms.mean;
                    cell.confusion_std(r, c) = ms.std;
                }
            }
            cell.overall = mean_std(cell.session_accuracy);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace dwe::mixture
