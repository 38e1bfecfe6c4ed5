// perpscale: t-SNE embeddings with perplexity scaled to sample size.
//
// Subcommands: embed, grid, mc, pipeline, budget, compare, sample.
// Exit codes: 0 ok, 2 usage, 3 data, 4 numeric divergence, 5 budget.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "perpscale/perpscale.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitBudget = 5;

struct GlobalOptions {
    std::uint64_t seed = 0;
    int threads = 0;  // 0: resolve from PERPSCALE_THREADS, else 1
    std::string format = "csv";
    std::string output_dir = ".";

    int resolved_threads() const {
        if (threads > 0) return threads;
        if (const char* env = std::getenv("PERPSCALE_THREADS")) {
            const int t = std::atoi(env);
            if (t > 0) return t;
        }
        return 1;
    }

    perpscale::FileFormat file_format() const {
        if (format == "csv") return perpscale::FileFormat::csv;
        if (format == "bin") return perpscale::FileFormat::binary;
        throw perpscale::UsageError("unknown --format '" + format + "', expected csv or bin");
    }

    fs::path out(const std::string& name) const { return fs::path(output_dir) / name; }
};

struct StageClock {
    std::vector<std::pair<std::string, double>> stages;
    std::chrono::steady_clock::time_point mark = std::chrono::steady_clock::now();

    void lap(const std::string& name) {
        const auto now = std::chrono::steady_clock::now();
        stages.emplace_back(name, std::chrono::duration<double>(now - mark).count());
        mark = now;
    }
};

perpscale::RunManifest make_manifest(const std::string& command, const std::vector<std::string>& argv,
                                     const GlobalOptions& global, const ordered_json& params,
                                     const std::vector<std::string>& inputs) {
    perpscale::RunManifest m;
    m.command = command;
    m.argv = argv;
    m.parameters = params;
    m.seed = global.seed;
    m.threads = global.resolved_threads();
    for (const auto& path : inputs) {
        m.input_checksums.emplace_back(path, perpscale::file_checksum_hex(path));
    }
    return m;
}

void ensure_output_dir(const GlobalOptions& global) {
    std::error_code ec;
    fs::create_directories(global.output_dir, ec);
    if (ec) throw perpscale::DataError("cannot create output directory " + global.output_dir + ": " + ec.message());
}

std::string format_per(double per) {
    std::string s = perpscale::svg::num(per);
    for (char& c : s) {
        if (c == '.') c = '_';
    }
    return s;
}

// ---------------------------------------------------------------- embed ----

struct EmbedOptions {
    std::string input;
    double perplexity = 30.0;
    double theta = 0.5;
    int ee_iters = 250;
    int main_iters = 750;
    double ee_factor = 12.0;
    double momentum_early = 0.5;
    double momentum_main = 0.8;
    std::optional<double> learning_rate;
    double max_dense_gib = 8.0;
    bool with_svg = false;
};

perpscale::OptimizerConfig optimizer_from(const EmbedOptions& opt, std::uint64_t seed) {
    perpscale::OptimizerConfig config;
    config.ee_iters = opt.ee_iters;
    config.main_iters = opt.main_iters;
    config.ee_factor = opt.ee_factor;
    config.momentum_early = opt.momentum_early;
    config.momentum_main = opt.momentum_main;
    config.learning_rate = opt.learning_rate;
    config.theta = opt.theta;
    config.seed = seed;
    return config;
}

int run_embed(const GlobalOptions& global, const EmbedOptions& opt, const std::vector<std::string>& argv) {
    ensure_output_dir(global);
    StageClock clock;
    const perpscale::Dataset data = perpscale::load_matrix(opt.input, global.file_format());
    clock.lap("load");

    const perpscale::OptimizerConfig config = optimizer_from(opt, global.seed);
    const auto max_dense = static_cast<std::size_t>(opt.max_dense_gib * 1024.0 * 1024.0 * 1024.0);
    perpscale::TsneResult result = perpscale::run_tsne(data, opt.perplexity, config, std::nullopt,
                                                       global.resolved_threads(), max_dense);
    clock.lap("tsne");

    const auto emb_path = global.out("embedding.csv");
    const auto trace_path = global.out("trace.csv");
    perpscale::write_embedding_csv(result.embedding, emb_path, data.labels ? &*data.labels : nullptr);
    perpscale::write_trace_csv(result.trace, trace_path);
    std::vector<std::string> outputs = {emb_path.string(), trace_path.string()};
    if (opt.with_svg) {
        const auto svg_path = global.out("embedding.svg");
        perpscale::detail::write_file_bytes(
            svg_path, perpscale::svg::scatter(result.embedding, data.labels ? &*data.labels : nullptr,
                                              data.name, global.seed));
        outputs.push_back(svg_path.string());
    }
    clock.lap("write");

    ordered_json params;
    params["input"] = opt.input;
    params["perplexity"] = opt.perplexity;
    params["theta"] = opt.theta;
    params["ee_iters"] = opt.ee_iters;
    params["main_iters"] = opt.main_iters;
    params["ee_factor"] = opt.ee_factor;
    params["momentum_early"] = opt.momentum_early;
    params["momentum_main"] = opt.momentum_main;
    params["learning_rate"] = opt.learning_rate ? ordered_json(*opt.learning_rate) : ordered_json(nullptr);
    params["resolved_learning_rate"] = config.resolved_learning_rate(data.n);
    params["n"] = data.n;
    params["d"] = data.dim;
    params["kl_initial"] = result.trace.points.empty() ? ordered_json(nullptr) : ordered_json(result.trace.points.front().cost);
    params["kl_final"] = result.trace.final_cost;

    perpscale::RunManifest manifest = make_manifest("embed", argv, global, params, {opt.input});
    manifest.stage_seconds = clock.stages;
    manifest.outputs = outputs;
    manifest.write(global.out("embed_manifest.json"));

    std::cout << "embed: n=" << data.n << " perplexity=" << opt.perplexity
              << " final_kl=" << result.trace.final_cost << "\n";
    return 0;
}

// ----------------------------------------------------------------- grid ----

struct GridOptions {
    std::string input;
    double rate = 0.1;
    std::vector<double> perplexities;
    EmbedOptions opt;  // optimizer knobs shared with embed
    std::optional<double> max_bytes;
    double bytes_per_entry = 8.0;
    std::string budget_mode = "sparse";
};

int run_grid(const GlobalOptions& global, const GridOptions& gopt, const std::vector<std::string>& argv) {
    ensure_output_dir(global);
    StageClock clock;
    const perpscale::Dataset data = perpscale::load_matrix(gopt.input, global.file_format());
    clock.lap("load");

    perpscale::GridSpec spec;
    spec.rate = gopt.rate;
    spec.perplexities = gopt.perplexities;
    spec.optimizer = optimizer_from(gopt.opt, global.seed);
    spec.seed = global.seed;

    // With a budget, infeasible cells become grayed panels instead of runs.
    std::vector<bool> feasible(gopt.perplexities.size(), true);
    if (gopt.max_bytes) {
        perpscale::Budget budget;
        budget.max_bytes = static_cast<std::size_t>(*gopt.max_bytes);
        budget.bytes_per_entry = gopt.bytes_per_entry;
        budget.mode = gopt.budget_mode == "dense" ? perpscale::AffinityMode::dense : perpscale::AffinityMode::sparse;
        for (std::size_t i = 0; i < gopt.perplexities.size(); ++i) {
            // Cost of embedding the sample at this cell's perplexity.
            const std::size_t m = perpscale::sample_size(data.n, gopt.rate);
            const double cost = budget.mode == perpscale::AffinityMode::dense
                                    ? budget.bytes_per_entry * static_cast<double>(m) * static_cast<double>(m)
                                    : budget.bytes_per_entry * static_cast<double>(m) * 3.0 * gopt.perplexities[i] * 2.0;
            feasible[i] = cost <= *gopt.max_bytes;
        }
    }

    std::vector<double> run_perplexities;
    for (std::size_t i = 0; i < gopt.perplexities.size(); ++i) {
        if (feasible[i]) run_perplexities.push_back(gopt.perplexities[i]);
    }
    if (run_perplexities.empty()) throw perpscale::BudgetError("grid: every cell exceeds the budget");

    perpscale::GridSpec run_spec = spec;
    run_spec.perplexities = run_perplexities;
    perpscale::GridResult grid = perpscale::explore_grid(data, run_spec, global.resolved_threads());
    clock.lap("grid");

    std::vector<std::string> outputs;
    std::vector<perpscale::svg::Panel> panels;
    std::size_t next_cell = 0;
    for (std::size_t i = 0; i < gopt.perplexities.size(); ++i) {
        perpscale::svg::Panel panel;
        panel.title = "Per = " + perpscale::svg::num(gopt.perplexities[i]);
        if (!feasible[i]) {
            panel.infeasible = true;
        } else {
            const auto& cell = grid.cells[next_cell++];
            panel.embedding = &cell.embedding;
            panel.labels = grid.sample.labels ? &*grid.sample.labels : nullptr;
            const auto cell_path = global.out("grid_cell_p" + format_per(cell.perplexity) + ".csv");
            perpscale::write_embedding_csv(cell.embedding, cell_path,
                                           grid.sample.labels ? &*grid.sample.labels : nullptr);
            outputs.push_back(cell_path.string());
        }
        panels.push_back(panel);
    }
    const auto svg_path = global.out("grid.svg");
    perpscale::detail::write_file_bytes(svg_path, perpscale::svg::scatter_grid({panels}, global.seed));
    outputs.push_back(svg_path.string());
    clock.lap("write");

    ordered_json params;
    params["input"] = gopt.input;
    params["rate"] = gopt.rate;
    params["perplexities"] = gopt.perplexities;
    params["sample_n"] = grid.sample.n;
    if (gopt.max_bytes) {
        params["max_bytes"] = *gopt.max_bytes;
        params["bytes_per_entry"] = gopt.bytes_per_entry;
        params["budget_mode"] = gopt.budget_mode;
    }

    perpscale::RunManifest manifest = make_manifest("grid", argv, global, params, {gopt.input});
    manifest.stage_seconds = clock.stages;
    manifest.outputs = outputs;
    manifest.write(global.out("grid_manifest.json"));

    std::cout << "grid: sample_n=" << grid.sample.n << " cells=" << grid.cells.size() << "\n";
    return 0;
}

// ------------------------------------------------------------------- mc ----

struct McOptions {
    std::string input;
    std::vector<double> rates;
    int repeats = 3;
    double perplexity = 30.0;
};

int run_mc(const GlobalOptions& global, const McOptions& mopt, const std::vector<std::string>& argv) {
    ensure_output_dir(global);
    StageClock clock;
    const perpscale::Dataset data = perpscale::load_matrix(mopt.input, global.file_format());
    clock.lap("load");

    const perpscale::MonteCarloReport report =
        perpscale::mc_report(data, mopt.rates, mopt.repeats, mopt.perplexity, global.seed, global.resolved_threads());
    clock.lap("mc");

    const auto csv_path = global.out("mc_points.csv");
    const auto json_path = global.out("mc_summary.json");
    const auto svg_path = global.out("mc.svg");
    perpscale::write_mc_csv(report, csv_path);
    perpscale::detail::write_file_bytes(json_path, perpscale::mc_summary_json(report).dump(2) + "\n");
    perpscale::detail::write_file_bytes(svg_path, perpscale::svg::mc_violin(report));
    clock.lap("write");

    ordered_json params;
    params["input"] = mopt.input;
    params["rates"] = mopt.rates;
    params["repeats"] = mopt.repeats;
    params["perplexity"] = mopt.perplexity;
    params["slope"] = report.fit_slope;
    params["r2"] = report.fit_r2;

    perpscale::RunManifest manifest = make_manifest("mc", argv, global, params, {mopt.input});
    manifest.stage_seconds = clock.stages;
    manifest.outputs = {csv_path.string(), json_path.string(), svg_path.string()};
    manifest.write(global.out("mc_manifest.json"));

    std::cout << "mc: slope=" << report.fit_slope << " r2=" << report.fit_r2 << "\n";
    return 0;
}

// ------------------------------------------------------------- pipeline ----

struct PipelineOptions {
    std::string input;
    double rate = 0.1;
    double per_sample = 0.0;
    double per_full = 30.0;
    int prolong_k = 10;
    EmbedOptions opt;
};

int run_pipeline(const GlobalOptions& global, const PipelineOptions& popt, const std::vector<std::string>& argv) {
    ensure_output_dir(global);
    StageClock clock;
    const perpscale::Dataset data = perpscale::load_matrix(popt.input, global.file_format());
    clock.lap("load");

    perpscale::PipelinePlan plan;
    plan.rate = popt.rate;
    plan.per_sample = popt.per_sample;
    plan.per_full = popt.per_full;
    plan.prolong_k = popt.prolong_k;
    plan.stage_sample = optimizer_from(popt.opt, global.seed);
    plan.stage_full = plan.stage_sample;
    plan.seed = global.seed;

    const perpscale::PipelineResult result = perpscale::sample_based_embed(data, plan, global.resolved_threads());
    clock.lap("pipeline");

    const auto emb_path = global.out("pipeline_embedding.csv");
    const auto sample_path = global.out("pipeline_sample_embedding.csv");
    const auto report_path = global.out("pipeline_report.json");
    perpscale::write_embedding_csv(result.embedding, emb_path, data.labels ? &*data.labels : nullptr);
    perpscale::write_embedding_csv(result.sample_embedding, sample_path);
    perpscale::detail::write_file_bytes(report_path, perpscale::stage_reports_json(result.stages).dump(2) + "\n");
    clock.lap("write");

    ordered_json params;
    params["input"] = popt.input;
    params["rate"] = popt.rate;
    params["per_sample"] = popt.per_sample;
    params["per_full"] = popt.per_full;
    params["prolong_k"] = popt.prolong_k;
    params["n"] = data.n;

    perpscale::RunManifest manifest = make_manifest("pipeline", argv, global, params, {popt.input});
    manifest.stage_seconds = clock.stages;
    manifest.outputs = {emb_path.string(), sample_path.string(), report_path.string()};
    manifest.write(global.out("pipeline_manifest.json"));

    std::cout << "pipeline: n=" << data.n << " rate=" << popt.rate
              << " per_sample=" << popt.per_sample << " per_full=" << popt.per_full << "\n";
    return 0;
}

// --------------------------------------------------------------- budget ----

struct BudgetOptions {
    std::size_t n = 0;
    double perplexity = 30.0;
    double max_bytes = 0.0;
    double bytes_per_entry = 8.0;
    std::string mode = "dense";
};

int run_budget(const GlobalOptions& global, const BudgetOptions& bopt, const std::vector<std::string>& argv) {
    ensure_output_dir(global);
    perpscale::Budget budget;
    budget.max_bytes = static_cast<std::size_t>(bopt.max_bytes);
    budget.bytes_per_entry = bopt.bytes_per_entry;
    budget.mode = bopt.mode == "dense" ? perpscale::AffinityMode::dense : perpscale::AffinityMode::sparse;
    const perpscale::BudgetPlan plan = perpscale::budget_plan(bopt.n, bopt.perplexity, budget);

    ordered_json j;
    j["feasible"] = plan.feasible;
    j["rate"] = plan.rate;
    j["scaled_perplexity"] = plan.scaled_perplexity;
    j["n"] = bopt.n;
    j["desired_perplexity"] = bopt.perplexity;
    j["max_bytes"] = bopt.max_bytes;
    j["bytes_per_entry"] = bopt.bytes_per_entry;
    j["mode"] = bopt.mode;
    const auto json_path = global.out("budget.json");
    perpscale::detail::write_file_bytes(json_path, j.dump(2) + "\n");

    perpscale::RunManifest manifest = make_manifest("budget", argv, global, j, {});
    manifest.outputs = {json_path.string()};
    manifest.write(global.out("budget_manifest.json"));

    std::cout << "budget: feasible=" << (plan.feasible ? "true" : "false") << " rate=" << plan.rate
              << " scaled_perplexity=" << plan.scaled_perplexity << "\n";
    return 0;
}

// -------------------------------------------------------------- compare ----

struct CompareOptions {
    std::string a, b;
    std::size_t k = 10;
};

int run_compare(const GlobalOptions& global, const CompareOptions& copt, const std::vector<std::string>& argv) {
    ensure_output_dir(global);
    const perpscale::LoadedEmbedding a = perpscale::read_embedding_csv(copt.a);
    const perpscale::LoadedEmbedding b = perpscale::read_embedding_csv(copt.b);
    const perpscale::ConsistencyScore score = perpscale::knn_overlap(a.embedding, b.embedding, copt.k);

    ordered_json j;
    j["a"] = copt.a;
    j["b"] = copt.b;
    j["k"] = score.k;
    j["n_shared"] = score.n_shared;
    j["knn_overlap"] = score.knn_overlap;
    const auto json_path = global.out("compare.json");
    perpscale::detail::write_file_bytes(json_path, j.dump(2) + "\n");

    perpscale::RunManifest manifest = make_manifest("compare", argv, global, j, {copt.a, copt.b});
    manifest.outputs = {json_path.string()};
    manifest.write(global.out("compare_manifest.json"));

    std::cout << "compare: knn_overlap=" << score.knn_overlap << " n_shared=" << score.n_shared << "\n";
    return 0;
}

// --------------------------------------------------------------- sample ----

struct SampleOptions {
    std::string input;
    std::vector<double> rates;
};

int run_sample(const GlobalOptions& global, const SampleOptions& sopt, const std::vector<std::string>& argv) {
    ensure_output_dir(global);
    const perpscale::Dataset data = perpscale::load_matrix(sopt.input, global.file_format());
    const perpscale::SamplePlan plan = perpscale::draw_nested_samples(data, sopt.rates, global.seed);

    std::vector<std::string> outputs;
    for (double rate : sopt.rates) {
        const perpscale::Dataset sample = perpscale::materialize_sample(data, plan, rate);
        const bool csv = global.file_format() == perpscale::FileFormat::csv;
        const auto path = global.out("sample_r" + format_per(rate) + (csv ? ".csv" : ".bin"));
        perpscale::store_matrix(sample, path, global.file_format());
        outputs.push_back(path.string());
    }

    ordered_json params;
    params["input"] = sopt.input;
    params["rates"] = sopt.rates;
    params["n"] = data.n;

    perpscale::RunManifest manifest = make_manifest("sample", argv, global, params, {sopt.input});
    manifest.outputs = outputs;
    manifest.write(global.out("sample_manifest.json"));

    std::cout << "sample: wrote " << outputs.size() << " level(s)\n";
    return 0;
}

void add_optimizer_flags(CLI::App* cmd, EmbedOptions& opt) {
    cmd->add_option("--theta", opt.theta, "Barnes-Hut opening threshold; 0 selects the exact gradient")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--ee-iters", opt.ee_iters, "early exaggeration iterations");
    cmd->add_option("--main-iters", opt.main_iters, "plain gradient descent iterations");
    cmd->add_option("--ee-factor", opt.ee_factor, "early exaggeration factor");
    cmd->add_option("--momentum-early", opt.momentum_early, "momentum during early exaggeration");
    cmd->add_option("--momentum-main", opt.momentum_main, "momentum after early exaggeration");
    cmd->add_option_function<double>(
        "--learning-rate", [&opt](const double& v) { opt.learning_rate = v; },
        "explicit learning rate (default: max(n/12, 50))");
    cmd->add_option("--max-dense-gib", opt.max_dense_gib, "memory cap for dense affinity matrices, GiB");
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> raw_argv(argv, argv + argc);

    CLI::App app{"t-SNE embeddings with perplexity scaled linearly to sample size"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("perpscale ") + perpscale::kVersion);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "base seed for all randomized steps")->capture_default_str();
    app.add_option("--threads", global.threads, "worker threads (default: PERPSCALE_THREADS or 1)");
    app.add_option("--format", global.format, "dataset file format: csv or bin")->capture_default_str();
    app.add_option("--output-dir", global.output_dir, "directory for output files")->capture_default_str();

    EmbedOptions embed_opt;
    CLI::App* embed = app.add_subcommand("embed", "embed a dataset with t-SNE");
    embed->add_option("--input", embed_opt.input, "input matrix file")->required();
    embed->add_option("--perplexity", embed_opt.perplexity, "target perplexity")->required();
    embed->add_flag("--svg", embed_opt.with_svg, "also write an SVG scatter");
    add_optimizer_flags(embed, embed_opt);

    GridOptions grid_opt;
    CLI::App* grid = app.add_subcommand("grid", "perplexity exploration grid on one sample");
    grid->add_option("--input", grid_opt.input, "input matrix file")->required();
    grid->add_option("--rate", grid_opt.rate, "sampling rate for the exploration sample")->required();
    grid->add_option("--perplexities", grid_opt.perplexities, "ascending perplexity list")
        ->required()->delimiter(',');
    grid->add_option("--max-bytes", [&grid_opt](const std::vector<std::string>& v) {
        grid_opt.max_bytes = std::stod(v.back());
        return true;
    }, "affinity budget; cells beyond it render as infeasible");
    grid->add_option("--bytes-per-entry", grid_opt.bytes_per_entry, "modeled bytes per affinity entry");
    grid->add_option("--budget-mode", grid_opt.budget_mode, "budget cost model: dense or sparse");
    add_optimizer_flags(grid, grid_opt.opt);

    McOptions mc_opt;
    CLI::App* mc = app.add_subcommand("mc", "Monte Carlo estimate of sample perplexities");
    mc->add_option("--input", mc_opt.input, "input matrix file")->required();
    mc->add_option("--rates", mc_opt.rates, "sampling rates")->required()->delimiter(',');
    mc->add_option("--repeats", mc_opt.repeats, "independent samples per rate")->capture_default_str();
    mc->add_option("--perplexity", mc_opt.perplexity, "anchor perplexity on the full set")->required();

    PipelineOptions pipe_opt;
    CLI::App* pipeline = app.add_subcommand("pipeline", "sample-based embedding with prolongation");
    pipeline->add_option("--input", pipe_opt.input, "input matrix file")->required();
    pipeline->add_option("--rate", pipe_opt.rate, "sampling rate for the sample stage")->required();
    pipeline->add_option("--per-sample", pipe_opt.per_sample, "perplexity for the sample stage")->required();
    pipeline->add_option("--per-full", pipe_opt.per_full, "perplexity for the full refinement")->capture_default_str();
    pipeline->add_option("--prolong-k", pipe_opt.prolong_k, "anchors per prolonged point")->capture_default_str();
    add_optimizer_flags(pipeline, pipe_opt.opt);

    BudgetOptions budget_opt;
    CLI::App* budget = app.add_subcommand("budget", "hardware-budget planning for rate and perplexity");
    budget->add_option("--n", budget_opt.n, "full dataset size")->required();
    budget->add_option("--perplexity", budget_opt.perplexity, "desired full-set perplexity")->required();
    budget->add_option("--max-bytes", budget_opt.max_bytes, "memory ceiling in bytes")->required();
    budget->add_option("--bytes-per-entry", budget_opt.bytes_per_entry, "affinity entry cost")->capture_default_str();
    budget->add_option("--mode", budget_opt.mode, "dense or sparse")->capture_default_str();

    CompareOptions compare_opt;
    CLI::App* compare = app.add_subcommand("compare", "kNN overlap between two embeddings");
    compare->add_option("--a", compare_opt.a, "first embedding CSV")->required();
    compare->add_option("--b", compare_opt.b, "second embedding CSV")->required();
    compare->add_option("--k", compare_opt.k, "neighborhood size")->capture_default_str();

    SampleOptions sample_opt;
    CLI::App* sample = app.add_subcommand("sample", "draw nested uniform subsamples");
    sample->add_option("--input", sample_opt.input, "input matrix file")->required();
    sample->add_option("--rates", sample_opt.rates, "descending sampling rates")->required()->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return kExitUsage;
    }

    try {
        if (embed->parsed()) return run_embed(global, embed_opt, raw_argv);
        if (grid->parsed()) return run_grid(global, grid_opt, raw_argv);
        if (mc->parsed()) return run_mc(global, mc_opt, raw_argv);
        if (pipeline->parsed()) return run_pipeline(global, pipe_opt, raw_argv);
        if (budget->parsed()) return run_budget(global, budget_opt, raw_argv);
        if (compare->parsed()) return run_compare(global, compare_opt, raw_argv);
        if (sample->parsed()) return run_sample(global, sample_opt, raw_argv);
    } catch (const perpscale::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const perpscale::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const perpscale::BudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const perpscale::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
