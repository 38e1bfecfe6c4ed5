#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "perpscale/metrics.hpp"
#include "perpscale/pipeline.hpp"
#include "support.hpp"

using namespace perpscale;

namespace {

OptimizerConfig short_config(int ee = 60, int main = 140) {
    OptimizerConfig c;
    c.ee_iters = ee;
    c.main_iters = main;
    return c;
}

} // namespace

TEST_CASE("a rate-1.0 grid of one perplexity equals a plain full-set run") {
    const Dataset d = testsup::gaussian_mixture(150, 4, 3, 0.5, 8.0, 1);
    GridSpec spec;
    spec.rate = 1.0;
    spec.perplexities = {20.0};
    spec.optimizer = short_config();
    spec.optimizer.seed = 5;
    spec.seed = 5;
    const GridResult grid = explore_grid(d, spec);
    REQUIRE(grid.cells.size() == 1);

    const TsneResult direct = run_tsne(d, 20.0, spec.optimizer);
    CHECK(grid.cells[0].embedding.coords == direct.embedding.coords);
}

TEST_CASE("grid cells share one init and are ordered by perplexity") {
    const Dataset d = testsup::gaussian_mixture(300, 4, 2, 0.6, 6.0, 2);
    GridSpec spec;
    spec.rate = 0.5;
    spec.perplexities = {5.0, 12.0, 25.0};
    spec.optimizer = short_config(20, 30);
    spec.seed = 11;
    const GridResult grid = explore_grid(d, spec);
    REQUIRE(grid.cells.size() == 3);
    CHECK(grid.sample.n == 150);
    CHECK(grid.init.n == 150);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(grid.cells[i].perplexity == spec.perplexities[i]);
        CHECK(grid.cells[i].embedding.ids == grid.sample.ids);
    }

    // Determinism of the whole grid.
    const GridResult again = explore_grid(d, spec);
    CHECK(again.init.coords == grid.init.coords);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(again.cells[i].embedding.coords == grid.cells[i].embedding.coords);
    }
}

TEST_CASE("two-blob grids separate at both perplexities but differ in structure") {
    const Dataset d = testsup::blob_dataset(1000, {{0, 0, 0}, {15, 0, 0}}, 1.0, 3);
    GridSpec spec;
    spec.rate = 0.2;
    spec.perplexities = {5.0, 50.0};
    spec.optimizer = OptimizerConfig{};  // full schedule
    spec.optimizer.seed = 3;
    spec.seed = 3;
    const GridResult grid = explore_grid(d, spec, 2);
    REQUIRE(grid.cells.size() == 2);

    std::vector<std::int32_t> labels(*grid.sample.labels);
    CHECK(silhouette(grid.cells[0].embedding, labels) >= 0.3);
    CHECK(silhouette(grid.cells[1].embedding, labels) >= 0.3);
    const ConsistencyScore s = knn_overlap(grid.cells[0].embedding, grid.cells[1].embedding, 10);
    CHECK(s.knn_overlap < 0.9);
}

TEST_CASE("grid validation errors") {
    const Dataset d = testsup::random_gaussian(100, 3, 4);
    GridSpec spec;
    spec.rate = 0.1;
    spec.perplexities = {5.0, 12.0};
    spec.optimizer = short_config();
    CHECK_THROWS_AS(explore_grid(d, spec), UsageError);  // 12 >= sample size 10
    spec.perplexities = {12.0, 5.0};
    CHECK_THROWS_AS(explore_grid(d, spec), UsageError);  // not ascending
    spec.perplexities = {};
    CHECK_THROWS_AS(explore_grid(d, spec), UsageError);
}

TEST_CASE("prolong_k = 1 places points exactly on their nearest sampled neighbor") {
    const Dataset d = testsup::gaussian_mixture(120, 4, 2, 0.8, 5.0, 5);
    PipelinePlan plan;
    plan.rate = 0.5;
    plan.per_sample = 8.0;
    plan.per_full = 10.0;
    plan.prolong_k = 1;
    plan.stage_sample = short_config(20, 40);
    plan.stage_full = short_config(10, 20);
    plan.seed = 6;
    const PipelineResult r = sample_based_embed(d, plan);

    const SamplePlan sampling = draw_nested_samples(d, {0.5}, 6);
    const Dataset sample = materialize_sample(d, sampling, 0.5);
    for (std::size_t i = 0; i < d.n; ++i) {
        const bool sampled = std::binary_search(sample.ids.begin(), sample.ids.end(), d.ids[i]);
        if (sampled) continue;
        // Oracle: nearest sampled point by brute force, ties by smaller id.
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < sample.n; ++s) {
            const double dist = squared_distance(d.row(i), sample.row(s), d.dim);
            if (dist < best_d || (dist == best_d && sample.ids[s] < sample.ids[best])) {
                best_d = dist;
                best = s;
            }
        }
        CHECK(r.prolonged_init.coords[2 * i] == r.sample_embedding.coords[2 * best]);
        CHECK(r.prolonged_init.coords[2 * i + 1] == r.sample_embedding.coords[2 * best + 1]);
    }
}

TEST_CASE("rate 1.0 degenerates to a plain run from the rescaled sample embedding") {
    const Dataset d = testsup::gaussian_mixture(100, 4, 2, 0.7, 5.0, 7);
    PipelinePlan plan;
    plan.rate = 1.0;
    plan.per_sample = 9.0;
    plan.per_full = 12.0;
    plan.prolong_k = 3;
    plan.stage_sample = short_config(20, 30);
    plan.stage_full = short_config(15, 25);
    plan.seed = 8;
    const PipelineResult r = sample_based_embed(d, plan);

    // Steps (i)-(iii) are the identity on the sample embedding.
    CHECK(r.prolonged_init.coords == r.sample_embedding.coords);

    Embedding init = r.sample_embedding;
    rescale_first_coordinate_std(init, 1e-4);
    const TsneResult direct = run_tsne(d, 12.0, plan.stage_full, init);
    CHECK(r.embedding.coords == direct.embedding.coords);
}

TEST_CASE("three-blob pipeline separates clusters and pins prolonged points in anchor hulls") {
    const Dataset d = testsup::blob_dataset(600, {{0, 0, 0, 0}, {14, 0, 0, 0}, {0, 14, 0, 0}}, 0.5, 9);
    PipelinePlan plan;
    plan.rate = 0.2;
    plan.per_sample = 6.0;  // 30 scaled by rho = 0.2
    plan.per_full = 20.0;
    plan.prolong_k = 10;
    plan.stage_sample = short_config(100, 200);
    plan.stage_full = short_config(100, 200);
    plan.seed = 10;
    const PipelineResult r = sample_based_embed(d, plan, 2);

    CHECK(silhouette(r.embedding, *d.labels) >= 0.5);

    // Hull membership, anchors recomputed independently.
    const SamplePlan sampling = draw_nested_samples(d, {0.2}, 10);
    const Dataset sample = materialize_sample(d, sampling, 0.2);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < d.n && checked < 40; ++i) {
        if (std::binary_search(sample.ids.begin(), sample.ids.end(), d.ids[i])) continue;
        std::vector<std::pair<double, std::size_t>> cand;
        for (std::size_t s = 0; s < sample.n; ++s) {
            cand.emplace_back(squared_distance(d.row(i), sample.row(s), d.dim), s);
        }
        std::sort(cand.begin(), cand.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return sample.ids[a.second] < sample.ids[b.second];
        });
        std::vector<std::pair<double, double>> anchors;
        for (int m = 0; m < plan.prolong_k; ++m) {
            anchors.emplace_back(r.sample_embedding.coords[2 * cand[static_cast<std::size_t>(m)].second],
                                 r.sample_embedding.coords[2 * cand[static_cast<std::size_t>(m)].second + 1]);
        }
        CHECK(testsup::point_in_convex_hull(r.prolonged_init.coords[2 * i], r.prolonged_init.coords[2 * i + 1],
                                            anchors, 1e-9));
        ++checked;
    }
    CHECK(checked == 40);

    // Stage reports carry the (rho, perplexity) pairs for auditability.
    REQUIRE(r.stages.size() == 3);
    CHECK(r.stages[0].stage == "sample");
    CHECK(r.stages[0].rho == 0.2);
    CHECK(r.stages[0].perplexity == 6.0);
    CHECK(r.stages[2].stage == "full");
    CHECK(r.stages[2].rho == 1.0);
    CHECK(r.stages[2].perplexity == 20.0);
    CHECK(r.stages[0].has_kl);
    CHECK(r.stages[2].has_kl);
}

TEST_CASE("prolong_k larger than the sample is rejected") {
    const Dataset d = testsup::random_gaussian(50, 3, 11);
    PipelinePlan plan;
    plan.rate = 0.1;
    plan.per_sample = 2.0;
    plan.per_full = 5.0;
    plan.prolong_k = 6;  // sample has 5 points
    plan.stage_sample = short_config(5, 5);
    plan.stage_full = short_config(5, 5);
    CHECK_THROWS_AS(sample_based_embed(d, plan), UsageError);
}

TEST_CASE("budget plan: unconstrained budgets keep the full set") {
    Budget b{std::size_t{1} << 62, 8.0, AffinityMode::dense};
    const BudgetPlan p = budget_plan(10000, 30.0, b);
    CHECK(p.feasible);
    CHECK(p.rate == 1.0);
    CHECK(p.scaled_perplexity == 30.0);
}

TEST_CASE("budget plan inverts the dense cost model exactly") {
    Budget b;
    b.bytes_per_entry = 8.0;
    b.max_bytes = static_cast<std::size_t>(8.0 * 5000.0 * 5000.0);
    b.mode = AffinityMode::dense;
    const BudgetPlan p = budget_plan(10000, 40.0, b);
    CHECK(p.feasible);
    CHECK(p.rate == 0.5);
    CHECK(p.scaled_perplexity == Catch::Approx(20.0));
}

TEST_CASE("budget plan agrees with a direct scan of the published cost model") {
    // Spec model, sparse: bytes_per_entry * ceil(n rho) * 3 * (rho per) * 2.
    const std::size_t n = 327457;
    const double per = 200.0;
    Budget b{static_cast<std::size_t>(32e9), 12.0, AffinityMode::sparse};
    const BudgetPlan p = budget_plan(n, per, b);

    double expect_rate = 0.0;
    for (int i = 100; i >= 1; --i) {
        const double rho = i / 100.0;
        const double cost = 12.0 * std::ceil(static_cast<double>(n) * rho - 1e-9) * 3.0 * (rho * per) * 2.0;
        if (cost <= 32e9) {
            expect_rate = rho;
            break;
        }
    }
    CHECK(p.feasible);
    CHECK(p.rate == Catch::Approx(expect_rate));
    CHECK(p.scaled_perplexity == Catch::Approx(expect_rate * per));
}

TEST_CASE("budget plan monotonicity: more bytes never shrink the rate") {
    double prev_rate = 0.0;
    for (double gb : {0.05, 0.2, 0.8, 3.2, 12.8}) {
        Budget b{static_cast<std::size_t>(gb * 1e9), 8.0, AffinityMode::dense};
        const BudgetPlan p = budget_plan(200000, 50.0, b);
        if (p.feasible) {
            CHECK(p.rate >= prev_rate);
            prev_rate = p.rate;
        }
    }
}

TEST_CASE("budget plan flags infeasible and underflowing configurations") {
    Budget tiny{16, 8.0, AffinityMode::dense};
    const BudgetPlan p = budget_plan(100000, 30.0, tiny);
    CHECK_FALSE(p.feasible);
    CHECK(p.rate == 1.0);

    // Feasible by cost at rho = 0.02, but 0.02 * 40 = 0.8 <= 1 underflows.
    Budget low{static_cast<std::size_t>(8.0 * 2000.0 * 2000.0), 8.0, AffinityMode::dense};
    const BudgetPlan q = budget_plan(100000, 40.0, low);
    CHECK_FALSE(q.feasible);
}
