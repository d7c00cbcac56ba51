// netslab: simulate / fit / evaluate pipeline for network-guided selection of
// gene main effects and gene-gene interactions.
//
// Exit codes: 0 ok, 2 bad input, 3 finished with a convergence warning,
// 4 numerical failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "netslab/dataset.hpp"
#include "netslab/design.hpp"
#include "netslab/errors.hpp"
#include "netslab/io.hpp"
#include "netslab/metrics.hpp"
#include "netslab/model.hpp"
#include "netslab/oracle.hpp"
#include "netslab/penalty_graph.hpp"
#include "netslab/simgen.hpp"
#include "netslab/tuning.hpp"
#include "netslab/vbem.hpp"

namespace {

using namespace netslab;
namespace fs = std::filesystem;

struct SimulateArgs {
    Index n_train = 300, n_test = 100, p = 1000, K = 100;
    double rho = 0.4;
    double signal_ratio = 1.0 / std::sqrt(5.0);
    std::string scenario = "S1";
    std::string edge_model = "complete";
    double noise_variance = 1.0;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    std::string prefix = "sim";

    SimConfig to_config() const {
        SimConfig c;
        c.n_train = n_train;
        c.n_test = n_test;
        c.p = p;
        c.K = K;
        c.rho = rho;
        c.signal_ratio = signal_ratio;
        c.scenario = scenario_from_string(scenario);
        c.edge_model = edge_model_from_string(edge_model);
        c.noise_variance = noise_variance;
        c.seed = seed;
        return c;
    }
};

struct FitArgs {
    std::string x, y, networks;
    std::string out = "result.json";
    std::string grid_out, registry_out;
    Hyperparameters hyper;
    double tol = 1e-6;
    int max_iter = 500;
    bool standardize = false;
    bool tune = false;
    bool no_elbo_trace = false;
    std::vector<double> grid;
    int grid_points = 8;
    double grid_lo = 1e-4, grid_hi = 1e-1;

    FitOptions options() const {
        FitOptions o;
        o.tol = tol;
        o.max_iter = max_iter;
        o.standardize = standardize;
        return o;
    }
};

struct EvaluateArgs {
    std::string result, truth, test_x, test_y, networks;
    std::string metrics_out, metrics_in;
    std::string label = "rep";
    bool aggregate = false;
    int replicates = 0;
    int jobs = 0;
    SimulateArgs sim;
    FitArgs fit;
};

struct OracleArgs {
    std::string x, y, networks, out;
    Hyperparameters hyper;
    double tau = 100.0;
    double theta = 0.5;
};

// Registers config-file keys next to the CLI flags they mirror; flags parsed
// afterwards override whatever the file set.
class ConfigFile {
public:
    void load(const std::string& path) {
        try {
            doc_ = nlohmann::json::parse(detail::slurp(path));
        } catch (const nlohmann::json::exception& e) {
            throw input_error("config '" + path + "': " + e.what());
        }
        if (!doc_.is_object()) throw input_error("config '" + path + "' must be a JSON object");
    }

    template <typename T>
    void bind(const std::string& key, T& var) {
        setters_[key].push_back([&var](const nlohmann::json& v) { var = v.get<T>(); });
    }

    void apply() const {
        for (const auto& [key, value] : doc_.items()) {
            auto it = setters_.find(key);
            if (it == setters_.end()) throw input_error("config: unknown key '" + key + "'");
            for (const auto& f : it->second) f(value);
        }
    }

private:
    nlohmann::json doc_ = nlohmann::json::object();
    std::map<std::string, std::vector<std::function<void(const nlohmann::json&)>>> setters_;
};

int worker_cap() {
    if (const char* env = std::getenv("NETSLAB_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<int>(v);
        } catch (const std::exception&) {
            throw input_error(std::string("NETSLAB_THREADS='") + env + "' is not a positive integer");
        }
        throw input_error(std::string("NETSLAB_THREADS='") + env + "' is not a positive integer");
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Dataset load_dataset(const std::string& x_path, const std::string& y_path) {
    auto [X, ids] = read_x_csv(x_path);
    Eigen::VectorXd y = read_y_csv(y_path);
    if (X.rows() != y.size())
        throw input_error("'" + x_path + "' has " + std::to_string(X.rows()) + " subjects but '" + y_path +
                          "' has " + std::to_string(y.size()));
    Dataset d{std::move(X), std::move(y), std::move(ids)};
    validate_dataset(d);
    return d;
}

void apply_standardization(Dataset& test, const Eigen::VectorXd& means, const Eigen::VectorXd& scales) {
    if (means.size() != test.X.cols() || scales.size() != test.X.cols())
        throw input_error("standardization vectors do not match the test gene count");
    test.X = (test.X.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
}

std::string scaled_time(std::chrono::steady_clock::duration d) {
    const double s = std::chrono::duration<double>(d).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2fs", s);
    return buf;
}

int cmd_simulate(const SimulateArgs& args) {
    const SimConfig cfg = args.to_config();
    Simulation sim = simulate(cfg);

    fs::create_directories(args.out_dir);
    const auto path = [&](const char* suffix) { return (fs::path(args.out_dir) / (args.prefix + suffix)).string(); };
    write_x_csv(path("_train_x.csv"), sim.train.X, sim.train.gene_ids);
    write_y_csv(path("_train_y.csv"), sim.train.y);
    write_x_csv(path("_test_x.csv"), sim.test.X, sim.test.gene_ids);
    write_y_csv(path("_test_y.csv"), sim.test.y);
    write_networks(path("_networks.txt"), sim.networks);
    write_truth(path("_truth.json"), sim.truth, sim.train.gene_ids);
    write_registry(path("_registry.json"), sim.registry);

    std::cout << "simulate: scenario " << to_string(cfg.scenario) << ", n=" << cfg.n_train << "+" << cfg.n_test
              << ", p=" << cfg.p << ", K=" << cfg.K << ", seed=" << cfg.seed << "\n"
              << "simulate: wrote " << args.prefix << "_{train,test}_{x,y}.csv, _networks.txt, _truth.json, "
              << "_registry.json under " << args.out_dir << "\n";
    return 0;
}

struct FitProducts {
    FitResult fit;
    Hyperparameters hyper;  // post-tuning
    TuningResult tuning;    // grid empty when single fit
    bool tuned = false;
    Eigen::VectorXd means, scales;
};

FitProducts run_fit(ExpandedDesign& design, const Eigen::VectorXd& y,
                    const std::vector<std::string>& gene_ids, const std::vector<PenaltyGraph>& graphs,
                    const FitArgs& args) {
    FitProducts out;
    out.hyper = args.hyper;
    const FitOptions options = args.options();
    if (args.tune || !args.grid.empty()) {
        std::vector<double> grid = args.grid.empty()
                                       ? default_s2_grid(args.hyper.s1, args.grid_points, args.grid_lo, args.grid_hi)
                                       : args.grid;
        out.tuning = tune_s2(design, y, gene_ids, graphs, args.hyper, grid, options);
        out.fit = std::move(out.tuning.best_fit);
        out.hyper = out.tuning.best_hyper;
        out.tuned = true;
    } else {
        out.fit = fit_design(design, y, gene_ids, graphs, args.hyper, options);
    }
    if (design.standardized()) {
        out.means = design.means();
        out.scales = design.scales();
    }
    return out;
}

ResultDoc make_doc(const FitProducts& products, bool no_elbo_trace) {
    ResultDoc doc;
    doc.state = products.fit.state;
    doc.selection = products.fit.selection;
    doc.converged = products.fit.converged;
    doc.n_sweeps = products.fit.n_sweeps;
    doc.hyper = products.hyper;
    doc.standardized = products.means.size() > 0;
    doc.gene_means = products.means;
    doc.gene_scales = products.scales;
    if (no_elbo_trace) doc.state.elbo_trace.clear();
    return doc;
}

int cmd_fit(const FitArgs& args) {
    validate_hyperparameters(args.hyper);
    Dataset data = load_dataset(args.x, args.y);
    const auto networks = read_networks(args.networks);

    const auto t0 = std::chrono::steady_clock::now();
    auto registry = build_registry(networks, data);
    auto graphs = build_penalty_graphs(networks, args.hyper.ridge);
    ExpandedDesign design(std::move(registry), data, args.standardize);
    FitProducts products = run_fit(design, data.y, data.gene_ids, graphs, args);
    const auto elapsed = std::chrono::steady_clock::now() - t0;

    if (products.tuned) {
        std::cout << "fit: spike-variance grid (chosen marked *)\n";
        std::cout << "  s2             bic         df  mains ints nets conv\n";
        for (std::size_t i = 0; i < products.tuning.grid.size(); ++i) {
            const GridPoint& gp = products.tuning.grid[i];
            std::printf("  %-12.6g %-11.4f %-3td %-5td %-4td %-4td %s%s\n", gp.s2, gp.bic, gp.df, gp.n_mains,
                        gp.n_interactions, gp.n_networks, gp.converged ? "yes" : "no",
                        i == products.tuning.best_index ? " *" : "");
        }
        if (!args.grid_out.empty()) {
            nlohmann::json report;
            report["grid"] = grid_to_json(products.tuning);
            report["best_index"] = products.tuning.best_index;
            report["best_s2"] = products.hyper.s2;
            detail::spit(args.grid_out, report.dump(2) + "\n");
        }
    }

    const SelectionResult& sel = products.fit.selection;
    std::cout << "fit: " << (products.fit.converged ? "converged" : "stopped") << " after "
              << products.fit.n_sweeps << " sweeps in " << scaled_time(elapsed)
              << " (ELBO " << (products.fit.state.elbo_trace.empty() ? 0.0 : products.fit.state.elbo_trace.back())
              << ", s2 " << products.hyper.s2 << ")\n";
    std::cout << "fit: selected " << sel.distinct_mains.size() << " genes, " << sel.distinct_interactions.size()
              << " interactions, " << sel.selected_networks.size() << " networks\n";
    if (!sel.selected_networks.empty()) {
        std::cout << "fit: networks:";
        for (const std::string& id : sel.selected_networks) std::cout << ' ' << id;
        std::cout << "\n";
    }

    write_result(args.out, make_doc(products, args.no_elbo_trace));
    if (!args.registry_out.empty()) write_registry(args.registry_out, design.registry());
    std::cout << "fit: result written to " << args.out << "\n";
    if (!products.fit.converged) {
        std::cerr << "warning: ELBO did not converge within " << args.max_iter << " sweeps\n";
        return 3;
    }
    return 0;
}

void print_summary(const MetricsSummary& s) {
    std::cout << "replicates: " << s.n_replicates << "\n";
    const std::pair<const char*, std::pair<double, double>> rows[] = {
        {"M:TP", {s.mean.m_tp, s.sd.m_tp}},       {"M:FP", {s.mean.m_fp, s.sd.m_fp}},
        {"I:TP", {s.mean.i_tp, s.sd.i_tp}},       {"I:FP", {s.mean.i_fp, s.sd.i_fp}},
        {"N:TP", {s.mean.n_tp, s.sd.n_tp}},       {"N:FP", {s.mean.n_fp, s.sd.n_fp}},
        {"M:RSSE", {s.mean.m_rsse, s.sd.m_rsse}}, {"I:RSSE", {s.mean.i_rsse, s.sd.i_rsse}},
        {"PMSE", {s.mean.pmse, s.sd.pmse}},
    };
    for (const auto& [name, ms] : rows)
        std::cout << "  " << name << std::string(8 - std::string(name).size(), ' ')
                  << format_mean_sd(ms.first, ms.second) << "\n";
}

int cmd_evaluate_single(const EvaluateArgs& args) {
    ResultDoc doc = read_result(args.result);
    GroundTruth truth = read_truth(args.truth);
    Dataset test = load_dataset(args.test_x, args.test_y);
    const auto networks = read_networks(args.networks);
    ColumnRegistry registry = build_registry(networks, test);

    if (doc.state.m.size() != registry.total_dim())
        throw input_error("result has " + std::to_string(doc.state.m.size()) + " slots but networks imply " +
                          std::to_string(registry.total_dim()));
    if (truth.slot_coefficients.size() != registry.total_dim())
        throw input_error("truth has " + std::to_string(truth.slot_coefficients.size()) +
                          " slots but networks imply " + std::to_string(registry.total_dim()));
    if (doc.standardized) apply_standardization(test, doc.gene_means, doc.gene_scales);

    const MetricsReport rep = compute_metrics(doc.selection, truth, registry, test.gene_ids, test);
    std::cout << metrics_csv_header() << "\n" << metrics_csv_row(args.label, rep) << "\n";
    if (!args.metrics_out.empty()) append_metrics_row(args.metrics_out, args.label, rep);
    return 0;
}

int cmd_evaluate_aggregate(const EvaluateArgs& args) {
    const std::string path = args.metrics_in.empty() ? args.metrics_out : args.metrics_in;
    if (path.empty()) throw input_error("--aggregate needs --metrics-in (or --metrics-out) pointing at a CSV");
    const auto rows = read_metrics_csv(path);
    if (rows.empty()) throw input_error("'" + path + "' holds no replicate rows");
    std::vector<MetricsReport> reps;
    reps.reserve(rows.size());
    for (const auto& [label, r] : rows) reps.push_back(r);
    print_summary(aggregate_metrics(reps));
    return 0;
}

// In-process simulate -> fit -> evaluate over a worker pool; each replicate
// reseeds from (seed + index) so the pool size never changes the numbers.
int cmd_evaluate_pipeline(const EvaluateArgs& args) {
    const int R = args.replicates;
    int jobs = args.jobs >= 1 ? args.jobs : worker_cap();
    jobs = std::min({jobs, worker_cap(), R});

    std::vector<MetricsReport> reports(static_cast<std::size_t>(R));
    std::vector<bool> converged(static_cast<std::size_t>(R), true);
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    const auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= R || failed.load()) return;
            try {
                SimulateArgs sa = args.sim;
                sa.seed = args.sim.seed + static_cast<std::uint64_t>(i);
                Simulation sim = simulate(sa.to_config());

                auto graphs = build_penalty_graphs(sim.networks, args.fit.hyper.ridge);
                ExpandedDesign design(sim.registry, sim.train, args.fit.standardize);
                FitProducts products = run_fit(design, sim.train.y, sim.train.gene_ids, graphs, args.fit);
                converged[static_cast<std::size_t>(i)] = products.fit.converged;

                Dataset test = sim.test;
                if (design.standardized()) apply_standardization(test, design.means(), design.scales());
                reports[static_cast<std::size_t>(i)] =
                    compute_metrics(products.fit.selection, sim.truth, design.registry(), test.gene_ids, test);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    for (int i = 0; i < R; ++i)
        if (!args.metrics_out.empty())
            append_metrics_row(args.metrics_out, args.label + "_" + std::to_string(i),
                               reports[static_cast<std::size_t>(i)]);

    print_summary(aggregate_metrics(reports));
    const auto n_warn = static_cast<int>(std::count(converged.begin(), converged.end(), false));
    if (n_warn > 0) {
        std::cerr << "warning: " << n_warn << "/" << R << " replicates did not converge\n";
        return 3;
    }
    return 0;
}

int cmd_evaluate(const EvaluateArgs& args) {
    validate_hyperparameters(args.fit.hyper);
    if (args.aggregate) return cmd_evaluate_aggregate(args);
    if (args.replicates > 0) return cmd_evaluate_pipeline(args);
    if (args.result.empty() || args.truth.empty() || args.test_x.empty() || args.test_y.empty() ||
        args.networks.empty())
        throw input_error("evaluate needs --result, --truth, --test-x, --test-y and --networks "
                          "(or --aggregate / --replicates)");
    return cmd_evaluate_single(args);
}

int cmd_oracle(const OracleArgs& args) {
    validate_hyperparameters(args.hyper);
    Dataset data = load_dataset(args.x, args.y);
    const auto networks = read_networks(args.networks);
    auto registry = build_registry(networks, data);
    auto graphs = build_penalty_graphs(networks, args.hyper.ridge);
    ExpandedDesign design(std::move(registry), data);

    const OracleResult res = enumerate_posterior(design.materialize(), data.y, design.registry(), graphs,
                                                 args.hyper, args.tau, args.theta);

    nlohmann::json j;
    j["log_marginal_likelihood"] = res.log_marginal_likelihood;
    j["slot_inclusion"] = detail::to_std(res.slot_inclusion);
    j["network_inclusion"] = detail::to_std(res.network_inclusion);
    nlohmann::json map_slots = nlohmann::json::array(), map_nets = nlohmann::json::array();
    for (Index s = 0; s < res.total_dim; ++s)
        if (res.beta_bit(res.map_config, s)) map_slots.push_back(s);
    for (Index k = 0; k < res.n_networks; ++k)
        if (res.alpha_bit(res.map_config, k)) map_nets.push_back(design.registry().network_ids[static_cast<std::size_t>(k)]);
    j["map_slots"] = map_slots;
    j["map_networks"] = map_nets;

    if (args.out.empty())
        std::cout << j.dump(2) << "\n";
    else
        detail::spit(args.out, j.dump(2) + "\n");
    return 0;
}

void add_sim_flags(CLI::App* cmd, SimulateArgs& args, ConfigFile& cfg) {
    cmd->add_option("--n-train", args.n_train, "training subjects");
    cmd->add_option("--n-test", args.n_test, "held-out subjects");
    cmd->add_option("--p", args.p, "total genes (split evenly across networks)");
    cmd->add_option("--K,--k", args.K, "number of networks");
    cmd->add_option("--rho", args.rho, "hub-target correlation");
    cmd->add_option("--signal-ratio", args.signal_ratio, "non-hub coefficient scale");
    cmd->add_option("--scenario", args.scenario, "S1|S2|S3|S4");
    cmd->add_option("--edge-model", args.edge_model, "complete|star");
    cmd->add_option("--noise-variance", args.noise_variance, "response noise variance");
    cmd->add_option("--seed", args.seed, "RNG seed");
    cfg.bind("n-train", args.n_train);
    cfg.bind("n-test", args.n_test);
    cfg.bind("p", args.p);
    cfg.bind("K", args.K);
    cfg.bind("rho", args.rho);
    cfg.bind("signal-ratio", args.signal_ratio);
    cfg.bind("scenario", args.scenario);
    cfg.bind("edge-model", args.edge_model);
    cfg.bind("noise-variance", args.noise_variance);
    cfg.bind("seed", args.seed);
}

void add_hyper_flags(CLI::App* cmd, FitArgs& args, ConfigFile& cfg) {
    cmd->add_option("--s1", args.hyper.s1, "slab variance");
    cmd->add_option("--s2", args.hyper.s2, "spike variance (single fit)");
    cmd->add_option("--a", args.hyper.a, "Beta prior a");
    cmd->add_option("--b", args.hyper.b, "Beta prior b");
    cmd->add_option("--ridge", args.hyper.ridge, "Laplacian ridge");
    cmd->add_option("--threshold", args.hyper.threshold, "selection threshold on eta and r");
    cmd->add_option("--tol", args.tol, "relative ELBO tolerance");
    cmd->add_option("--max-iter", args.max_iter, "sweep cap");
    cmd->add_flag("--standardize", args.standardize, "center/scale gene columns before products");
    cmd->add_flag("--tune", args.tune, "pick s2 by BIC over a grid");
    cmd->add_option("--grid", args.grid, "explicit s2 grid values")->delimiter(',');
    cmd->add_option("--grid-points", args.grid_points, "default grid size");
    cmd->add_option("--grid-lo", args.grid_lo, "default grid low factor (times s1)");
    cmd->add_option("--grid-hi", args.grid_hi, "default grid high factor (times s1)");
    cfg.bind("s1", args.hyper.s1);
    cfg.bind("s2", args.hyper.s2);
    cfg.bind("a", args.hyper.a);
    cfg.bind("b", args.hyper.b);
    cfg.bind("ridge", args.hyper.ridge);
    cfg.bind("threshold", args.hyper.threshold);
    cfg.bind("tol", args.tol);
    cfg.bind("max-iter", args.max_iter);
    cfg.bind("standardize", args.standardize);
    cfg.bind("tune", args.tune);
    cfg.bind("grid", args.grid);
    cfg.bind("grid-points", args.grid_points);
    cfg.bind("grid-lo", args.grid_lo);
    cfg.bind("grid-hi", args.grid_hi);
}

}  // namespace

int main(int argc, char** argv) {
    std::string config_path;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];

    CLI::App app{"network-guided selection of gene main effects and interactions"};
    app.require_subcommand(1);
    app.add_option("--config", config_path, "JSON config; flags override its values")->expected(1);

    ConfigFile cfg;

    SimulateArgs sim_args;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "generate synthetic networks, expressions and response");
    add_sim_flags(sim_cmd, sim_args, cfg);
    sim_cmd->add_option("--out-dir", sim_args.out_dir, "output directory");
    sim_cmd->add_option("--prefix", sim_args.prefix, "output file prefix");
    cfg.bind("out-dir", sim_args.out_dir);
    cfg.bind("prefix", sim_args.prefix);

    FitArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit the model to expression data and networks");
    fit_cmd->add_option("--x", fit_args.x, "gene expression CSV")->required();
    fit_cmd->add_option("--y", fit_args.y, "response CSV")->required();
    fit_cmd->add_option("--networks", fit_args.networks, "network file (text or JSON)")->required();
    fit_cmd->add_option("--out", fit_args.out, "result JSON path");
    fit_cmd->add_option("--grid-out", fit_args.grid_out, "grid report JSON path");
    fit_cmd->add_option("--registry-out", fit_args.registry_out, "registry JSON path");
    fit_cmd->add_flag("--no-elbo-trace", fit_args.no_elbo_trace, "omit the ELBO trace from the result");
    add_hyper_flags(fit_cmd, fit_args, cfg);
    cfg.bind("x", fit_args.x);
    cfg.bind("y", fit_args.y);
    cfg.bind("networks", fit_args.networks);
    cfg.bind("out", fit_args.out);
    cfg.bind("grid-out", fit_args.grid_out);
    cfg.bind("registry-out", fit_args.registry_out);
    cfg.bind("no-elbo-trace", fit_args.no_elbo_trace);

    EvaluateArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "score a result against ground truth");
    eval_cmd->add_option("--result", eval_args.result, "result JSON from fit");
    eval_cmd->add_option("--truth", eval_args.truth, "truth JSON from simulate");
    eval_cmd->add_option("--test-x", eval_args.test_x, "held-out expression CSV");
    eval_cmd->add_option("--test-y", eval_args.test_y, "held-out response CSV");
    eval_cmd->add_option("--networks", eval_args.networks, "network file");
    eval_cmd->add_option("--metrics-out", eval_args.metrics_out, "append the row to this CSV");
    eval_cmd->add_option("--metrics-in", eval_args.metrics_in, "CSV to aggregate");
    eval_cmd->add_option("--label", eval_args.label, "row label");
    eval_cmd->add_flag("--aggregate", eval_args.aggregate, "summarize an existing metrics CSV as mean(SD)");
    eval_cmd->add_option("--replicates", eval_args.replicates, "run R simulate+fit+evaluate pipelines in-process");
    eval_cmd->add_option("--jobs", eval_args.jobs, "worker threads for --replicates (0 = auto)");
    add_sim_flags(eval_cmd, eval_args.sim, cfg);
    add_hyper_flags(eval_cmd, eval_args.fit, cfg);
    cfg.bind("result", eval_args.result);
    cfg.bind("truth", eval_args.truth);
    cfg.bind("test-x", eval_args.test_x);
    cfg.bind("test-y", eval_args.test_y);
    cfg.bind("networks", eval_args.networks);
    cfg.bind("metrics-out", eval_args.metrics_out);
    cfg.bind("metrics-in", eval_args.metrics_in);
    cfg.bind("label", eval_args.label);
    cfg.bind("aggregate", eval_args.aggregate);
    cfg.bind("replicates", eval_args.replicates);
    cfg.bind("jobs", eval_args.jobs);

    OracleArgs oracle_args;
    CLI::App* oracle_cmd = app.add_subcommand("oracle", "exact posterior by enumeration (tiny problems)");
    oracle_cmd->group("");  // debugging aid, hidden from --help
    oracle_cmd->add_option("--x", oracle_args.x)->required();
    oracle_cmd->add_option("--y", oracle_args.y)->required();
    oracle_cmd->add_option("--networks", oracle_args.networks)->required();
    oracle_cmd->add_option("--out", oracle_args.out);
    oracle_cmd->add_option("--s1", oracle_args.hyper.s1);
    oracle_cmd->add_option("--s2", oracle_args.hyper.s2);
    oracle_cmd->add_option("--a", oracle_args.hyper.a);
    oracle_cmd->add_option("--b", oracle_args.hyper.b);
    oracle_cmd->add_option("--ridge", oracle_args.hyper.ridge);
    oracle_cmd->add_option("--tau", oracle_args.tau);
    oracle_cmd->add_option("--theta", oracle_args.theta);

    for (CLI::App* c : {sim_cmd, fit_cmd, eval_cmd, oracle_cmd})
        c->add_option("--config", config_path, "JSON config; flags override its values");

    try {
        if (!config_path.empty()) {
            cfg.load(config_path);
            cfg.apply();
        }
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (sim_cmd->parsed()) return cmd_simulate(sim_args);
        if (fit_cmd->parsed()) return cmd_fit(fit_args);
        if (eval_cmd->parsed()) return cmd_evaluate(eval_args);
        if (oracle_cmd->parsed()) return cmd_oracle(oracle_args);
        throw contract_error("no subcommand dispatched");
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const contract_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
