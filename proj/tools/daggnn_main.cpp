#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "daggnn/acyclicity.hpp"
#include "daggnn/auglag.hpp"
#include "daggnn/datagen.hpp"
#include "daggnn/metrics.hpp"
#include "daggnn/notears.hpp"
#include "daggnn/vae.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace daggnn;

namespace {

constexpr const char* kArtifactVersion = "1";

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw ParseError("write failure on " + path.string());
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config) {
    json manifest;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["command"] = command;
    manifest["config"] = config;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string double_field(double v) { return format_double(v); }

struct GenerateOptions {
    int m = 10;
    int d = 1;
    int n = 5000;
    double degree = 3.0;
    std::string kind = "linear";
    uint64_t seed = 0;
    std::string out_dir = ".";
};

int run_generate(const GenerateOptions& opt) {
    GroundTruthDag dag = random_dag(opt.m, opt.degree, opt.seed);
    Dataset ds;
    if (opt.kind == "linear") {
        ds = sample_linear(dag, opt.n, opt.d, opt.seed + 1);
    } else if (opt.kind == "nonlinear-pre") {
        if (opt.d != 1) throw DomainError("nonlinear-pre generates scalar variables (d = 1)");
        ds = sample_nonlinear_pre(dag, opt.n, opt.seed + 1);
    } else if (opt.kind == "nonlinear-post") {
        if (opt.d != 1) throw DomainError("nonlinear-post generates scalar variables (d = 1)");
        ds = sample_nonlinear_post(dag, opt.n, opt.seed + 1);
    } else if (opt.kind == "vector") {
        ds = sample_vector_valued(dag, opt.n, opt.d, opt.seed + 1);
    } else {
        throw DomainError("unknown dataset kind: " + opt.kind);
    }

    const fs::path dir(opt.out_dir);
    fs::create_directories(dir);
    save_dataset(ds, (dir / "dataset.csv").string());
    save_adjacency(dag.adjacency, (dir / "truth.csv").string());
    // nonlinear-pre recovery is judged against the linearized weights
    if (opt.kind == "nonlinear-pre")
        save_adjacency(nonlinear_pre_effective_truth(dag), (dir / "truth_effective.csv").string());

    json config;
    config["m"] = opt.m;
    config["d"] = opt.d;
    config["n"] = opt.n;
    config["degree"] = double_field(opt.degree);
    config["kind"] = opt.kind;
    config["seed"] = opt.seed;
    write_manifest(dir, "generate", config);
    return 0;
}

struct TrainOptions {
    std::string data_path;
    std::string method = "dag-gnn";
    uint64_t seed = 0;
    std::string out_dir = ".";
    int d_z = 1;
    int hidden = 16;
    std::string variance = "fixed-unit";
    int mc_draws = 1;
    int batch = 0;
    double constraint_c = 1.0;
    double eta = 10.0;
    double gamma = 0.25;
    double lambda0 = 0.0;
    double c0 = 1.0;
    double c_max = 1e16;
    double h_tol = 1e-8;
    int max_outer = 100;
    int inner_steps = 300;
    double step_size = 3e-3;
    double huber_coeff = 0.0;
    double huber_delta = 1.0;
};

std::string log_line(const TrainLogRecord& r) {
    json line;
    line["iter"] = r.iter;
    line["f"] = double_field(r.f);
    line["h"] = double_field(r.h);
    line["lambda"] = double_field(r.lambda);
    line["c"] = double_field(r.c);
    return line.dump();
}

int run_train(const TrainOptions& opt) {
    Dataset ds = load_dataset(opt.data_path);

    AugLagConfig auglag;
    auglag.eta = opt.eta;
    auglag.gamma = opt.gamma;
    auglag.lambda0 = opt.lambda0;
    auglag.c0 = opt.c0;
    auglag.c_max = opt.c_max;
    auglag.h_tolerance = opt.h_tol;
    auglag.max_outer = opt.max_outer;
    auglag.constraint_c = opt.constraint_c;
    auglag.huber_coeff = opt.huber_coeff;
    auglag.huber_delta = opt.huber_delta;
    InnerSolverConfig inner;
    inner.max_steps = opt.inner_steps;
    inner.step_size = opt.step_size;
    inner.stochastic = opt.batch > 0;

    const fs::path dir(opt.out_dir);
    fs::create_directories(dir);

    TrainResult result;
    VaeConfig vae_cfg;
    if (opt.method == "notears") {
        result = train_notears(ds, auglag, inner);
    } else if (opt.method == "dag-gnn") {
        vae_cfg.m = ds.m();
        vae_cfg.d = ds.d();
        vae_cfg.d_z = opt.d_z;
        vae_cfg.hidden = opt.hidden;
        vae_cfg.likelihood = ds.kind == DatasetKind::one_hot_discrete ? Likelihood::categorical
                                                                      : Likelihood::gaussian;
        if (opt.variance == "learned")
            vae_cfg.variance = VarianceMode::learned;
        else if (opt.variance == "fixed-unit")
            vae_cfg.variance = VarianceMode::fixed_unit;
        else
            throw DomainError("unknown variance mode: " + opt.variance);
        result = train_vae(ds, vae_cfg, opt.seed, auglag, inner, opt.mc_draws, opt.batch);
    } else {
        throw DomainError("unknown method: " + opt.method);
    }

    save_adjacency(result.params[0], (dir / "adjacency.csv").string());

    std::string log_text;
    for (const TrainLogRecord& r : result.log) log_text += log_line(r) + "\n";
    write_text(dir / "train_log.jsonl", log_text);

    // wall-clock timing lives apart from the log so reruns diff clean
    json timing = json::array();
    for (const TrainLogRecord& r : result.log) {
        json entry;
        entry["iter"] = r.iter;
        entry["elapsed_seconds"] = r.elapsed_seconds;
        timing.push_back(entry);
    }
    write_text(dir / "timing.json", timing.dump(2) + "\n");

    if (opt.method == "dag-gnn") {
        VaeParams params = VaeParams::from_vector(vae_cfg, result.params);
        save_checkpoint(params, (dir / "checkpoint.txt").string());
    }

    json config;
    config["data"] = opt.data_path;
    config["method"] = opt.method;
    config["seed"] = opt.seed;
    config["d_z"] = opt.d_z;
    config["hidden"] = opt.hidden;
    config["variance"] = opt.variance;
    config["mc_draws"] = opt.mc_draws;
    config["batch"] = opt.batch;
    config["constraint_c"] = double_field(opt.constraint_c);
    config["eta"] = double_field(opt.eta);
    config["gamma"] = double_field(opt.gamma);
    config["lambda0"] = double_field(opt.lambda0);
    config["c0"] = double_field(opt.c0);
    config["c_max"] = double_field(opt.c_max);
    config["h_tolerance"] = double_field(opt.h_tol);
    config["max_outer"] = opt.max_outer;
    config["inner_steps"] = opt.inner_steps;
    config["step_size"] = double_field(opt.step_size);
    config["huber_coeff"] = double_field(opt.huber_coeff);
    config["huber_delta"] = double_field(opt.huber_delta);
    config["converged"] = result.converged;
    config["final_f"] = double_field(result.final_f);
    config["final_h"] = double_field(result.final_h);
    write_manifest(dir, "train", config);

    return result.converged ? 0 : 2;
}

struct EvaluateOptions {
    std::vector<std::string> estimates;
    std::string truth_path;
    double tau = 0.3;
    std::string data_path;  // optional, enables BIC on discrete data
    std::string out_path;   // optional, report also written here
};

int run_evaluate(const EvaluateOptions& opt) {
    Tensor truth_a = load_adjacency(opt.truth_path);
    EdgeSet truth = edges_from_adjacency(truth_a);

    Dataset data;
    bool have_discrete_data = false;
    if (!opt.data_path.empty()) {
        data = load_dataset(opt.data_path);
        have_discrete_data = data.kind == DatasetKind::one_hot_discrete;
    }

    json per_seed = json::array();
    double shd_sum = 0.0, fdr_sum = 0.0;
    std::vector<double> shd_values, fdr_values;
    for (const std::string& path : opt.estimates) {
        Tensor estimate = load_adjacency(path);
        if (estimate.rows() != truth_a.rows())
            throw ShapeError("estimate " + path + " and truth disagree on node count");
        ThresholdReport rep = threshold_adjacency(estimate, opt.tau);
        const int shd_value = shd(rep.edges, truth);
        const FdrResult fdr_value = fdr(rep.edges, truth);
        shd_sum += shd_value;
        fdr_sum += fdr_value.value;
        shd_values.push_back(shd_value);
        fdr_values.push_back(fdr_value.value);

        json entry;
        entry["estimate"] = path;
        entry["shd"] = shd_value;
        entry["fdr"] = double_field(fdr_value.value);
        entry["empty_prediction"] = fdr_value.empty_prediction;
        entry["predicted_edges"] = rep.edges.edges.size();
        json removed = json::array();
        for (auto [i, j, w] : rep.removed) {
            json e;
            e["from"] = i;
            e["to"] = j;
            e["weight"] = double_field(w);
            removed.push_back(e);
        }
        entry["cycle_repair_removed"] = removed;
        if (have_discrete_data) entry["bic"] = double_field(bic_score(data, rep.edges));
        per_seed.push_back(entry);
    }

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const size_t k = v.size();
        return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
    };

    json report;
    report["tau"] = double_field(opt.tau);
    report["truth"] = opt.truth_path;
    report["runs"] = per_seed;
    if (!opt.estimates.empty()) {
        json agg;
        agg["count"] = opt.estimates.size();
        agg["mean_shd"] = double_field(shd_sum / opt.estimates.size());
        agg["mean_fdr"] = double_field(fdr_sum / opt.estimates.size());
        agg["median_shd"] = double_field(median(shd_values));
        agg["median_fdr"] = double_field(median(fdr_values));
        report["aggregate"] = agg;
    }

    const std::string text = report.dump(2) + "\n";
    std::cout << text;
    if (!opt.out_path.empty()) write_text(opt.out_path, text);
    return 0;
}

struct ExportOptions {
    std::string estimate_path;
    double tau = 0.3;
    std::string format = "dot";
    std::string names_path;
    std::string out_path;
};

std::string round3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

int run_export(const ExportOptions& opt) {
    Tensor a = load_adjacency(opt.estimate_path);
    ThresholdReport rep = threshold_adjacency(a, opt.tau);
    const int m = rep.edges.m;

    std::vector<std::string> names;
    for (int i = 0; i < m; ++i) names.push_back("x" + std::to_string(i));
    if (!opt.names_path.empty()) {
        std::ifstream in(opt.names_path);
        if (!in) throw ParseError("cannot open " + opt.names_path);
        std::string line;
        for (int i = 0; i < m && std::getline(in, line); ++i)
            if (!line.empty()) names[i] = line;
    }

    std::string text;
    if (opt.format == "dot") {
        text += "digraph learned {\n";
        for (int i = 0; i < m; ++i)
            text += "  n" + std::to_string(i) + " [label=\"" + names[i] + "\"];\n";
        for (auto [i, j] : rep.edges.edges)
            text += "  n" + std::to_string(i) + " -> n" + std::to_string(j) + " [label=\"" +
                    round3(a(i, j)) + "\"];\n";
        text += "}\n";
    } else if (opt.format == "edge-list") {
        text += "# m=" + std::to_string(m) + "\n";
        for (auto [i, j] : rep.edges.edges)
            text += std::to_string(i) + "," + std::to_string(j) + "," + format_double(a(i, j)) +
                    "\n";
    } else {
        throw DomainError("unknown export format: " + opt.format);
    }

    if (opt.out_path.empty())
        std::cout << text;
    else
        write_text(opt.out_path, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DAG structure learning: generative-model and linear baselines"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read defaults from a TOML config file");

    GenerateOptions gen;
    CLI::App* generate = app.add_subcommand("generate", "Sample a synthetic dataset");
    generate->add_option("--m", gen.m, "Number of variables")->check(CLI::PositiveNumber);
    generate->add_option("--d", gen.d, "Dimension per variable")->check(CLI::PositiveNumber);
    generate->add_option("--n", gen.n, "Sample count")->check(CLI::PositiveNumber);
    generate->add_option("--degree", gen.degree, "Expected node degree");
    generate->add_option("--kind", gen.kind, "linear | nonlinear-pre | nonlinear-post | vector");
    generate->add_option("--seed", gen.seed, "Random seed");
    generate->add_option("--out", gen.out_dir, "Output directory")->envname("DAGGNN_OUT");

    TrainOptions tr;
    CLI::App* train_cmd = app.add_subcommand("train", "Fit an adjacency matrix to a dataset");
    train_cmd->add_option("--data", tr.data_path, "Dataset CSV")->required();
    train_cmd->add_option("--method", tr.method, "dag-gnn | notears");
    train_cmd->add_option("--seed", tr.seed, "Random seed");
    train_cmd->add_option("--out", tr.out_dir, "Output directory")->envname("DAGGNN_OUT");
    train_cmd->add_option("--d-z", tr.d_z, "Latent dimension")->check(CLI::PositiveNumber);
    train_cmd->add_option("--hidden", tr.hidden, "MLP width")->check(CLI::PositiveNumber);
    train_cmd->add_option("--variance", tr.variance, "learned | fixed-unit");
    train_cmd
        ->add_option("--mc-draws", tr.mc_draws,
                     "Reparameterization draws per step; 0 trains on the posterior mean")
        ->check(CLI::NonNegativeNumber);
    train_cmd
        ->add_option("--batch", tr.batch,
                     "Minibatch size for the inner solver; 0 uses the full batch")
        ->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--constraint-c", tr.constraint_c, "Constraint scale (alpha = c/m)");
    train_cmd->add_option("--eta", tr.eta, "Penalty growth factor");
    train_cmd->add_option("--gamma", tr.gamma, "Required constraint shrink factor");
    train_cmd->add_option("--lambda0", tr.lambda0, "Initial multiplier");
    train_cmd->add_option("--c0", tr.c0, "Initial penalty weight");
    train_cmd->add_option("--c-max", tr.c_max, "Penalty cap");
    train_cmd->add_option("--h-tol", tr.h_tol, "Constraint tolerance");
    train_cmd->add_option("--max-outer", tr.max_outer, "Outer iteration cap")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--inner-steps", tr.inner_steps, "Adam steps per subproblem")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", tr.step_size, "Adam step size");
    train_cmd->add_option("--huber", tr.huber_coeff, "Huber penalty coefficient on A");
    train_cmd->add_option("--huber-delta", tr.huber_delta, "Huber transition point");

    EvaluateOptions ev;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score estimates against a ground truth");
    evaluate->add_option("--estimate", ev.estimates, "Adjacency estimate CSV (repeatable)")
        ->required();
    evaluate->add_option("--truth", ev.truth_path, "Ground-truth adjacency CSV")->required();
    evaluate->add_option("--tau", ev.tau, "Edge threshold");
    evaluate->add_option("--data", ev.data_path, "Dataset CSV, enables BIC for discrete data");
    evaluate->add_option("--out", ev.out_path, "Also write the report here")
        ->envname("DAGGNN_OUT");

    ExportOptions ex;
    CLI::App* export_cmd = app.add_subcommand("export", "Write the thresholded graph");
    export_cmd->add_option("--estimate", ex.estimate_path, "Adjacency estimate CSV")->required();
    export_cmd->add_option("--tau", ex.tau, "Edge threshold");
    export_cmd->add_option("--format", ex.format, "dot | edge-list");
    export_cmd->add_option("--names", ex.names_path, "Optional node-name file, one per line");
    export_cmd->add_option("--out", ex.out_path, "Output file (stdout when omitted)")
        ->envname("DAGGNN_OUT");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*generate) return run_generate(gen);
        if (*train_cmd) return run_train(tr);
        if (*evaluate) return run_evaluate(ev);
        return run_export(ex);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
