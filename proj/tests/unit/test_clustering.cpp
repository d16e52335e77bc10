#include <doctest.h>

#include <cmath>

#include "dwe/clustering/clustering.hpp"
#include "dwe/common/error.hpp"
#include "dwe/common/random.hpp"

using namespace dwe;
using namespace dwe::clustering;

namespace {

double planted_rt(std::size_t archetype, std::span<const double> x) {
    switch (archetype) {
        case 0: return 1.0 + 0.3 * x[0];
        case 1: return 2.0 - 0.6 * x[0] + 0.3 * x[1];
        default: return 3.0 + 0.8 * x[1] * x[1] - 0.4 * x[2];
    }
}

std::vector<SessionRecord> planted(const std::vector<std::size_t>& truth, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<SessionRecord> out;
    for (std::size_t s = 0; s < truth.size(); ++s) {
        SessionRecord r;
        r.subject_id = "subj" + std::to_string(s / 2);
        r.session_id = "sess" + std::to_string(s);
        for (int t = 0; t < 30; ++t) {
            const double x[3] = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
            r.X.append_row(x);
            const double rt = std::max(0.2, planted_rt(truth[s], x) + 0.05 * rng.normal());
            r.rt.push_back(rt);
            r.all_rts.push_back(rt);
        }
        out.push_back(std::move(r));
    }
    return out;
}

svr::TrainConfig fast_svr() {
    svr::TrainConfig cfg;
    cfg.C = 10.0;
    cfg.epsilon = 0.05;
    cfg.gamma = 0.3;
    cfg.kkt_tol = 1e-4;
    return cfg;
}

}  // namespace

TEST_SUITE("clustering") {

TEST_CASE("rt ratio") {
    const std::vector<double> flat(12, 0.8);
    for (double r : rt_ratio(flat)) CHECK(r == doctest::Approx(1.0));
    const std::vector<double> rts = {1, 1, 1, 1, 1, 1, 1, 1, 1, 3};
    const auto r = rt_ratio(rts);
    CHECK(std::count(r.begin(), r.end(), 1.0) == 9);
    CHECK(r.back() == doctest::Approx(3.0));
    std::vector<double> inc;
    for (int i = 0; i < 20; ++i) inc.push_back(0.5 + 0.1 * i);
    const auto ri = rt_ratio(inc);
    CHECK(std::is_sorted(ri.begin(), ri.end()));
    CHECK(ri.front() <= 1.0);
    CHECK(ri.back() >= 1.0);
    // 30 trials: the three fastest form the baseline
    std::vector<double> thirty(30, 2.0);
    thirty[0] = 1.0;
    thirty[1] = 1.0;
    thirty[2] = 1.0;
    thirty[3] = 1.5;
    CHECK(rt_ratio(thirty)[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(rt_ratio(std::vector<double>(9, 1.0)), ValidationError);
}

TEST_CASE("initial labels from ratio buckets") {
    SessionRecord a;
    a.all_rts.assign(10, 1.2);
    SessionRecord b;
    // baseline = 1.0; 6 trials at ratio 2.5, 4 at ratio <= 2
    b.all_rts = {1.0, 1.0, 1.5, 2.0, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5};
    SessionRecord c;
    c.all_rts = {1.0, 1.0, 1.0, 1.0, 1.0, 4.0, 4.0, 4.0, 4.0, 4.0};  // tie between optimal and poor
    const auto labels = initial_labels({a, b, c});
    CHECK(labels == std::vector<std::size_t>{0, 1, 0});
    CHECK(initial_labels({c}, {}, InitMode::kMeanRatio) == std::vector<std::size_t>{1});
}

TEST_CASE("k = 1 stops after one iteration") {
    const auto sessions = planted({0, 1, 2, 0}, 1);
    ClusterConfig cfg;
    cfg.k = 1;
    cfg.svr = fast_svr();
    const auto res = recursive_cluster(sessions, std::vector<std::size_t>(4, 0), cfg);
    CHECK(res.iterations == 1);
    CHECK(res.converged);
    CHECK(res.labels == std::vector<std::size_t>(4, 0));
    CHECK(res.history.size() == 2);
}

TEST_CASE("planted partition recovered from random labels") {
    std::vector<std::size_t> truth;
    for (int i = 0; i < 24; ++i) truth.push_back(static_cast<std::size_t>(i % 3));
    const auto sessions = planted(truth, 2);
    Rng rng(5);
    std::vector<std::size_t> init;
    for (std::size_t i = 0; i < truth.size(); ++i) init.push_back(static_cast<std::size_t>(rng.below(3)));
    ClusterConfig cfg;
    cfg.svr = fast_svr();
    const auto res = recursive_cluster(sessions, init, cfg);
    CHECK(best_agreement(res.labels, truth, 3).fraction >= 0.9);
    if (res.converged) {
        // fixpoint certificate
        for (std::size_t j = 0; j < sessions.size(); ++j) {
            for (std::size_t i = 0; i < 3; ++i) {
                CHECK(res.per_session_rmse(j, res.labels[j]) <= res.per_session_rmse(j, i) + 1e-12);
            }
        }
        CHECK(res.history.back() == res.history[res.history.size() - 2]);
    }
    // relabeling never increases a session's own-model RMSE within an iteration
    CHECK(res.repairs == 0);

    // permuting the initial labels permutes the result
    const std::vector<std::size_t> perm = {2, 0, 1};
    std::vector<std::size_t> init_p;
    for (auto l : init) init_p.push_back(perm[l]);
    const auto res_p = recursive_cluster(sessions, init_p, cfg);
    for (std::size_t j = 0; j < sessions.size(); ++j) CHECK(res_p.labels[j] == perm[res.labels[j]]);
}

TEST_CASE("identical sessions terminate with stable labels") {
    auto sessions = planted({0}, 3);
    sessions.resize(6, sessions.front());
    for (std::size_t i = 0; i < sessions.size(); ++i) sessions[i].session_id = "s" + std::to_string(i);
    ClusterConfig cfg;
    cfg.svr = fast_svr();
    const auto res = recursive_cluster(sessions, {0, 1, 2, 0, 1, 2}, cfg);
    CHECK(res.converged);
    CHECK(res.labels == std::vector<std::size_t>{0, 1, 2, 0, 1, 2});
}

TEST_CASE("empty clusters are filled and repaired") {
    std::vector<std::size_t> truth(9, 0);
    auto sessions = planted(truth, 4);
    ClusterConfig cfg;
    cfg.svr = fast_svr();
    // initial labels leave cluster 3 empty
    const auto res = recursive_cluster(sessions, {0, 0, 0, 1, 1, 1, 0, 0, 1}, cfg);
    std::vector<std::size_t> size(3, 0);
    for (auto l : res.labels) ++size[l];
    for (auto s : size) CHECK(s > 0);
    CHECK(res.iterations <= cfg.max_iter);
}

TEST_CASE("subject grouping moves sessions together") {
    std::vector<std::size_t> truth;
    for (int i = 0; i < 12; ++i) truth.push_back(static_cast<std::size_t>((i / 2) % 3));
    const auto sessions = planted(truth, 6);
    ClusterConfig cfg;
    cfg.svr = fast_svr();
    cfg.group_by_subject = true;
    const auto res = recursive_cluster(sessions, truth, cfg);
    for (std::size_t j = 0; j + 1 < sessions.size(); j += 2) CHECK(res.labels[j] == res.labels[j + 1]);
}

TEST_CASE("best agreement and json") {
    const std::vector<std::size_t> a = {0, 0, 1, 1, 2, 2};
    const std::vector<std::size_t> b = {2, 2, 0, 0, 1, 0};
    const auto ag = best_agreement(a, b, 3);
    CHECK(ag.fraction == doctest::Approx(5.0 / 6.0));
    CHECK(ag.mapping == std::vector<std::size_t>{2, 0, 1});

    const auto sessions = planted({0, 1, 2}, 7);
    ClusterConfig cfg;
    cfg.svr = fast_svr();
    const auto res = recursive_cluster(sessions, {0, 1, 2}, cfg);
    const auto j = to_json(res, sessions);
    const auto f = cluster_file_from_json(nlohmann::json::parse(j.dump()));
    CHECK(f.labels == res.labels);
    CHECK(f.k == 3);
    CHECK(j["history"][0][0] == 1);
}

}  // TEST_SUITE
