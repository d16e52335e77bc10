#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dwe/common/error.hpp"
#include "dwe/common/random.hpp"
#include "dwe/common/stats.hpp"
#include "dwe/harness/config.hpp"
#include "dwe/harness/corpus.hpp"
#include "dwe/harness/evaluate.hpp"
#include "dwe/harness/report.hpp"

using namespace dwe;
using namespace dwe::harness;

namespace {

double cluster_rt(std::size_t c, const std::vector<double>& x) {
    switch (c) {
        case 0: return 1.0 + 0.3 * x[0];
        case 1: return 2.0 - 0.5 * x[1];
        default: return 3.0 + 0.4 * x[2] * x[2];
    }
}

/// Frames t = 90..420 with a 3-bin spectrum, 2 theta powers centred on 3*cluster and one alpha
/// PLV; a trial every 4 s from t = 92.5 whose RT follows the cluster's mapping.
signal::SessionFeatures fake_features(std::size_t cluster, std::uint64_t seed, const std::string& subject = {}) {
    Rng rng(seed);
    signal::SessionFeatures s;
    s.subject_id = subject.empty() ? "subj" + std::to_string(seed) : subject;
    s.session_id = "sess" + std::to_string(seed);
    s.bin_hz = {5, 10, 15};
    for (int t = 90; t <= 420; ++t) {
        signal::FeatureFrame f;
        f.t_s = t;
        f.oz_spectrum = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
        const double centre = 3.0 * static_cast<double>(cluster);
        f.band_powers[static_cast<int>(signal::Band::kTheta)] = {centre + 0.3 * rng.normal(),
                                                                 centre + 0.3 * rng.normal()};
        f.band_plv[static_cast<int>(signal::Band::kAlpha)] = {0.2 + 0.3 * static_cast<double>(cluster) +
                                                              0.02 * rng.normal()};
        s.frames.push_back(std::move(f));
    }
    for (double t = 92.5; t < 420.0; t += 4.0) {
        const auto* f = s.frame_at(static_cast<int>(std::floor(t)));
        signal::TrialEvent ev;
        ev.deviation_onset_s = t;
        ev.rt_s = std::max(0.2, cluster_rt(cluster, f->oz_spectrum) + 0.03 * rng.normal());
        ev.response_onset_s = t + ev.rt_s;
        ev.response_offset_s = ev.response_onset_s + 0.5;
        s.events.push_back(ev);
    }
    return s;
}

Corpus fake_corpus(const std::vector<std::size_t>& clusters, std::uint64_t base = 100) {
    Corpus c;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        c.push_back(make_corpus_session(fake_features(clusters[i], base + i), static_cast<int>(clusters[i]) + 1));
    }
    return c;
}

PipelineConfig fast_config(std::size_t k = 3) {
    PipelineConfig cfg;
    cfg.k = k;
    cfg.m = 1;
    cfg.hyperparameters = HyperparameterMode::kFixed;
    cfg.svr.C = 10.0;
    cfg.svr.epsilon = 0.05;
    cfg.svr.gamma = 0.3;
    cfg.labels = LabelSource::kTruth;
    cfg.accuracy_grid = false;
    cfg.cross_model = false;
    return cfg;
}

std::vector<std::size_t> iota_n(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("rmse against a two-pass oracle") {
    const std::vector<double> rec = {0.5, 1.25, 3.0, 2.0};
    CHECK(rmse(rec, rec) == 0.0);
    std::vector<double> shifted(rec);
    for (double& v : shifted) v += 1.0;
    CHECK(rmse(shifted, rec) == doctest::Approx(1.0).epsilon(1e-15));

    Rng rng(12);
    std::vector<double> a(1000), b(1000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.normal(2.0, 1.0);
        b[i] = rng.normal(2.0, 1.0);
    }
    // pass 1: the mean squared difference; pass 2: correction for its rounding
    long double sq = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) sq += static_cast<long double>(a[i] - b[i]) * (a[i] - b[i]);
    const long double ms = sq / a.size();
    long double corr = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) corr += static_cast<long double>(a[i] - b[i]) * (a[i] - b[i]) - ms;
    const double oracle = static_cast<double>(std::sqrt(ms + corr / a.size()));
    CHECK(std::abs(rmse(a, b) - oracle) <= 1e-12 * oracle);

    CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), ValidationError);
    CHECK_THROWS_AS(rmse(a, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("pipeline config json round trip, hashing and rejection") {
    PipelineConfig cfg;
    cfg.seed = 9;
    cfg.k = 4;
    cfg.features.spectrum.pad_factor = 4;
    cfg.weight_features = parse_band_set("delta+beta+plv_alpha");
    cfg.folds = FoldUnit::kSubject;
    cfg.svr.gamma.reset();
    const auto j = to_json(cfg);
    const auto back = pipeline_config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(back.weight_features == cfg.weight_features);
    CHECK(back.weight_features.label() == "delta+beta+plv_alpha");

    auto other = cfg;
    other.seed = 10;
    CHECK(config_hash(other) != config_hash(cfg));

    // partial configs keep defaults
    const auto partial = pipeline_config_from_json(nlohmann::json{{"k", 2}});
    CHECK(partial.k == 2);
    CHECK(partial.m == PipelineConfig{}.m);

    auto bad = j;
    bad["extra"] = true;
    CHECK_THROWS_AS(pipeline_config_from_json(bad), ParseError);
    bad = j;
    bad["features"]["pad_factor"] = 3;
    CHECK_THROWS_AS(pipeline_config_from_json(bad), ValidationError);
    bad = j;
    bad["k"] = "three";
    CHECK_THROWS_AS(pipeline_config_from_json(bad), ParseError);
    CHECK_THROWS_AS(parse_band_set("theta+gamma"), ParseError);
}

TEST_CASE("two identical sessions in one cluster score identically") {
    auto f = fake_features(0, 7);
    Corpus corpus;
    corpus.push_back(make_corpus_session(f, 1));
    f.session_id = "copy";
    f.subject_id = "other";
    corpus.push_back(make_corpus_session(f, 1));
    const auto cfg = fast_config(1);
    const auto res = loso_evaluate(corpus, {0, 0}, cfg);
    REQUIRE(res.sessions.size() == 2);
    for (std::size_t m = 0; m < kModeCount; ++m) {
        REQUIRE(res.sessions[0].rmse[m]);
        CHECK(*res.sessions[0].rmse[m] == *res.sessions[1].rmse[m]);
    }
    CHECK(check_fold_hygiene(res).violations.empty());

    corpus[1].features.session_id = corpus[0].features.session_id;
    CHECK_THROWS_AS(loso_evaluate(corpus, {0, 0}, cfg), ValidationError);
}

TEST_CASE("leave-one-out accounting, hygiene and mode ordering") {
    const auto corpus = fake_corpus({0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2});
    const auto labels = truth_labels(corpus);
    const auto cfg = fast_config();
    const auto res = loso_evaluate(corpus, labels, cfg);
    CHECK(res.sessions.size() == corpus.size());
    CHECK(res.skipped_folds == 0);
    const auto hyg = check_fold_hygiene(res);
    CHECK(hyg.folds_checked == corpus.size());
    CHECK(hyg.violations.empty());
    for (const auto& f : res.folds) {
        CHECK(f.model_sessions.size() == corpus.size() - 1);
        CHECK(std::find(f.model_sessions.begin(), f.model_sessions.end(), f.held_out[0]) == f.model_sessions.end());
    }

    std::array<std::vector<double>, kModeCount> by_mode;
    for (const auto& s : res.sessions) {
        for (std::size_t m = 0; m < kModeCount; ++m) by_mode[m].push_back(*s.rmse[m]);
    }
    const auto single = median(by_mode[mode_index(ensemble::Mode::kSingle)]);
    const auto fixed = median(by_mode[mode_index(ensemble::Mode::kFixed)]);
    const auto dynamic = median(by_mode[mode_index(ensemble::Mode::kDynamic)]);
    CHECK(dynamic <= fixed + 1e-12);
    CHECK(fixed < single);

    const auto summary = summarize_clusters(res, 3);
    std::size_t counted = 0;
    for (const auto& c : summary) counted += c.n_sessions;
    CHECK(counted == corpus.size());

    // a leaked id is reported
    auto tampered = res;
    tampered.folds[3].model_sessions.push_back(tampered.folds[3].held_out[0]);
    CHECK(check_fold_hygiene(tampered).violations.size() == 1);
    tampered = res;
    tampered.folds[5].labeling_sessions.push_back(tampered.folds[5].held_out[0]);
    CHECK(check_fold_hygiene(tampered).violations.size() == 1);
}

TEST_CASE("a fold that would empty a cluster is skipped and the rest are conserved") {
    const auto corpus = fake_corpus({0, 0, 1, 1, 2});
    const auto cfg = fast_config();
    const auto res = loso_evaluate(corpus, truth_labels(corpus), cfg);
    CHECK(res.skipped_folds == 1);
    CHECK(res.skipped_sessions == 1);
    CHECK(res.sessions.size() == corpus.size() - 1);
    CHECK(res.folds[4].skipped);
    CHECK_FALSE(res.folds[4].skip_reason.empty());
}

TEST_CASE("subject folds hold out every session of a subject") {
    Corpus corpus;
    for (std::size_t i = 0; i < 8; ++i) {
        const std::size_t c = i % 2;
        corpus.push_back(make_corpus_session(fake_features(c, 300 + i, "subj" + std::to_string(i / 2)),
                                             static_cast<int>(c) + 1));
    }
    auto cfg = fast_config(2);
    cfg.folds = FoldUnit::kSubject;
    const auto res = loso_evaluate(corpus, truth_labels(corpus), cfg);
    CHECK(res.folds.size() == 4);
    for (const auto& f : res.folds) CHECK(f.held_out.size() == 2);
    CHECK(res.sessions.size() == 8);
    CHECK(check_fold_hygiene(res).violations.empty());
}

TEST_CASE("cross-model matrix with one cluster equals its leave-one-out RMSE") {
    const auto corpus = fake_corpus({0, 0, 0, 0});
    const auto records = records_of(corpus, iota_n(corpus.size()));
    const auto cfg = fast_config(1);
    const auto cm = cross_model_matrix(records, {0, 0, 0, 0}, 1, cfg.svr);
    CHECK(cm.mean.rows() == 1);

    std::vector<double> oracle;
    for (std::size_t h = 0; h < records.size(); ++h) {
        std::vector<clustering::SessionRecord> rest;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (i != h) rest.push_back(records[i]);
        }
        const auto models = clustering::train_cluster_models(rest, std::vector<std::size_t>(rest.size(), 0), 1, cfg.svr);
        const auto pred = svr::predict(models[0], records[h].X);
        oracle.push_back(rmse(pred, records[h].rt));
    }
    CHECK(cm.mean(0, 0) == doctest::Approx(mean(oracle)).epsilon(1e-12));
    CHECK(cm.std(0, 0) == doctest::Approx(stddev(oracle)).epsilon(1e-9));
}

TEST_CASE("cross-model matrix is diagonal dominant and permutation equivariant") {
    const auto corpus = fake_corpus({0, 1, 2, 0, 1, 2, 0, 1, 2});
    const auto records = records_of(corpus, iota_n(corpus.size()));
    const auto labels = truth_labels(corpus);
    const auto cfg = fast_config();
    const auto cm = cross_model_matrix(records, labels, 3, cfg.svr);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(cm.sessions_per_cluster[i] == 3);
        for (std::size_t j = 0; j < 3; ++j) {
            if (j != i) CHECK(cm.mean(i, i) < cm.mean(i, j));
        }
    }

    const std::array<std::size_t, 3> perm = {2, 0, 1};
    std::vector<std::size_t> permuted;
    for (auto l : labels) permuted.push_back(perm[l]);
    const auto pm = cross_model_matrix(records, permuted, 3, cfg.svr);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(pm.mean(perm[i], perm[j]) == doctest::Approx(cm.mean(i, j)).epsilon(1e-12));
        }
    }

    CHECK_THROWS_AS(cross_model_matrix(records, {0, 0, 0, 0, 0, 0, 0, 0, 1}, 2, cfg.svr), ValidationError);
}

TEST_CASE("evaluate report schema, conservation and determinism") {
    const auto corpus = fake_corpus({0, 1, 2, 0, 1, 2, 0, 1, 2});
    auto cfg = fast_config();
    cfg.labels = LabelSource::kClustered;
    cfg.hyperparameters = HyperparameterMode::kClusterGrid;
    cfg.grid.C = {1.0, 10.0};
    cfg.grid.epsilon = {0.05};
    cfg.grid.gamma_scale = {1.0};
    cfg.cross_model = true;
    cfg.accuracy_grid = true;
    cfg.accuracy_m = {1, 2};
    cfg.accuracy_band_sets = {parse_band_set("theta"), parse_band_set("theta+plv_alpha")};

    const auto rep = evaluate(corpus, cfg);
    const auto j = report_to_json(rep);
    CHECK(j.at("schema") == kReportSchema);
    CHECK(j.at("config_hash") == config_hash(cfg));
    CHECK(j.at("seed") == cfg.seed);
    CHECK(j.at("labels").at("cluster").size() == corpus.size());
    const auto& t3 = j.at("rmse_by_cluster");
    CHECK(t3.at("modes") == nlohmann::json({"single", "fixed", "dynamic"}));
    REQUIRE(t3.at("clusters").size() == 3);
    for (const auto& row : t3.at("clusters")) {
        for (const char* m : {"single", "fixed", "dynamic"}) CHECK(row.at(m).contains("mean"));
    }
    CHECK(j.at("confusion").size() == 4);
    CHECK(j.at("cross_model").at("mean").size() == 3);
    const auto& cons = j.at("conservation");
    CHECK(cons.at("evaluated_sessions").get<std::size_t>() + cons.at("skipped_sessions").get<std::size_t>() ==
          cons.at("corpus_sessions").get<std::size_t>());
    CHECK(rep.label_agreement.value_or(0.0) == 1.0);

    const std::string prefix = "# " + provenance_comment(rep.config_hash, rep.seed) + "\n";
    for (const auto& csv : {table1_csv(rep), table2_csv(rep), table3_csv(rep), table4_csv(rep), sessions_csv(rep)}) {
        CHECK(csv.rfind(prefix, 0) == 0);
    }
    // best m of each band set: one block of k rows per band set
    const auto t2 = table2_csv(rep);
    CHECK(std::count(t2.begin(), t2.end(), '\n') == 2 + 3);

    const auto again = evaluate(corpus, cfg);
    CHECK(report_to_json(again).dump() == j.dump());
}

TEST_CASE("labeling recovers separable clusters and checks truth requests") {
    const auto corpus = fake_corpus({0, 1, 2, 0, 1, 2, 0, 1, 2});
    const auto records = records_of(corpus, iota_n(corpus.size()));
    auto cfg = fast_config();
    cfg.labels = LabelSource::kClustered;
    const auto lab = label_sessions(records, cfg, 3);
    REQUIRE(lab.clustering);
    CHECK(clustering::best_agreement(lab.labels, truth_labels(corpus), 3).fraction == 1.0);

    cfg.labels = LabelSource::kTruth;
    CHECK_THROWS_AS(label_sessions(records, cfg, 3), ValidationError);
    Corpus unknown = corpus;
    unknown[0].archetype_id = 0;
    CHECK_THROWS_AS(truth_labels(unknown), ValidationError);
}

}  // TEST_SUITE
