// occ: coherent forecast combination experiments from the command line.
//
//   occ validate --config run.toml
//   occ run --config run.toml --threads 4
//   occ simulate --seed 7 --out sim/
//   occ report --input out/report.csv

#include "occ/error.hpp"
#include "occ/evaluation.hpp"
#include "occ/hierarchy.hpp"
#include "occ/io.hpp"
#include "occ/simulation.hpp"

#include "CLI11.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string dataset;
    std::string hierarchy;
    std::vector<std::string> approaches{"ew", "ow_var", "ow_cov", "mint_shr", "src", "scr_ew",
                                        "scr_var", "scr_cov", "occ_wlsv", "occ_be"};
    std::vector<std::string> experts{"snaive", "mean", "drift", "ses"};
    std::string import_path;
    std::optional<int> first_train;
    int horizon = 7;
    int step = 1;
    int period = 7;
    int gap_cap = 3;
    std::string benchmark = "ew";
    std::string out = "occ_out";
    std::uint64_t seed = 42;
    int threads = 1;

    // simulate
    int replications = 1000;
    int meta_runs = 20;
    int residual_rows = 200;
    int zones = 2;
    int sources = 4;

    // report
    std::string input;
};

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw occ::Error(occ::ErrorKind::Config, std::string("missing required --") + flag);
    if (!fs::is_regular_file(path)) {
        throw occ::Error(occ::ErrorKind::Config, std::string("--") + flag + " '" + path + "' does not exist");
    }
}

struct Loaded {
    occ::GroupedHierarchySpec spec;
    occ::ConstraintMatrix C;
    occ::DatasetTable table;
    occ::Dataset data;
    std::optional<occ::ImportedForecasts> imported;
    occ::ExperimentConfig config;
    occ::RollingPlan plan;
};

Loaded load(const Options& opt) {
    require_file(opt.dataset, "dataset");
    require_file(opt.hierarchy, "hierarchy");
    if (!opt.import_path.empty()) require_file(opt.import_path, "import");
    if (!opt.first_train) throw occ::Error(occ::ErrorKind::Config, "missing required --first-train");

    Loaded l;
    l.spec = occ::load_hierarchy_json(opt.hierarchy);
    l.C = occ::build_constraint_matrix(l.spec);
    l.table = occ::load_dataset_csv(opt.dataset, opt.gap_cap, opt.period);
    l.data = occ::align_to_hierarchy(l.table, l.C);

    std::vector<std::string> names;
    if (!opt.import_path.empty()) {
        l.imported = occ::import_forecast_bundle(opt.import_path, l.C);
        names = l.imported->experts;
    } else {
        for (const auto& e : opt.experts) {
            l.config.experts.push_back(occ::ExpertModel::parse(e));
            names.push_back(l.config.experts.back().name());
        }
    }
    if (std::find(opt.approaches.begin(), opt.approaches.end(), opt.benchmark) == opt.approaches.end()) {
        throw occ::Error(occ::ErrorKind::Config, "benchmark '" + opt.benchmark + "' is not among the approaches");
    }
    for (const auto& a : opt.approaches) occ::validate_approach(a, names);
    l.config.approaches = opt.approaches;
    l.config.benchmark = opt.benchmark;
    l.config.period = opt.period;
    l.config.threads = opt.threads;
    l.plan = occ::rolling_origin_plan(l.data.length(), *opt.first_train, opt.horizon, opt.step);
    return l;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw occ::Error(occ::ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << content;
}

int cmd_validate(const Options& opt) {
    const Loaded l = load(opt);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(l.C.matrix());
    if (qr.rank() != l.C.n_upper()) {
        throw occ::Error(occ::ErrorKind::RankDeficientConstraints, "constraint matrix rank " +
                                                                       std::to_string(qr.rank()) + " < n_u = " +
                                                                       std::to_string(l.C.n_upper()));
    }
    double worst = 0.0;
    for (Eigen::Index t = 0; t < l.data.values.rows(); ++t) {
        worst = std::max(worst, occ::coherence_residual(l.C, l.data.values.row(t).transpose()));
    }
    int filled = 0;
    for (const auto& [id, g] : l.table.gap_counts) filled += g;
    std::cout << "hierarchy: n = " << l.C.n() << ", n_u = " << l.C.n_upper() << ", rank(C) = " << qr.rank() << "\n"
              << "dataset: " << l.data.length() << " days (" << l.data.dates.front() << " .. " << l.data.dates.back()
              << "), " << filled << " gap-filled values\n"
              << "actuals max coherence residual: " << worst << "\n"
              << "plan: " << l.plan.origins.size() << " origins, Q_1 = " << l.plan.q(1) << ", Q_" << opt.horizon
              << " = " << l.plan.q(opt.horizon) << "\n"
              << "approaches: " << opt.approaches.size() << "\n"
              << "ok\n";
    return 0;
}

int cmd_run(const Options& opt) {
    Loaded l = load(opt);
    if (l.imported) l.config.imported = &*l.imported;
    const occ::EvalReport report = occ::run_experiment(l.data, l.C, l.plan, l.config);

    fs::create_directories(opt.out);
    std::ostringstream csv, coh;
    occ::write_report_csv(csv, report);
    occ::write_coherence_csv(coh, report);
    const std::string table = occ::format_ar_table(occ::make_ar_table(report));
    write_file(fs::path(opt.out) / "report.csv", csv.str());
    write_file(fs::path(opt.out) / "coherence.csv", coh.str());
    write_file(fs::path(opt.out) / "table.txt", table);
    std::cout << table;
    for (const auto& a : report.approaches) {
        if (a.failures > 0) {
            std::cerr << "warning: " << a.id << " failed at " << a.failures << " origin(s): " << a.first_failure << "\n";
        }
    }
    return 0;
}

int cmd_simulate(const Options& opt) {
    occ::SimulationConfig cfg;
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    cfg.replications = opt.replications;
    cfg.meta_runs = opt.meta_runs;
    cfg.residual_rows = opt.residual_rows;
    cfg.zones = opt.zones;
    cfg.sources = opt.sources;
    const occ::SimulationReport rep = occ::simulate(cfg);
    const std::string text = occ::format_simulation(rep);
    fs::create_directories(opt.out);
    write_file(fs::path(opt.out) / "simulation.txt", text);
    write_file(fs::path(opt.out) / "simulation.csv", occ::simulation_csv(rep));
    std::cout << text;
    return 0;
}

int cmd_report(const Options& opt, bool to_file) {
    require_file(opt.input, "input");
    std::ifstream in(opt.input);
    const std::string table = occ::format_ar_table(occ::parse_report_csv(in));
    if (to_file) {
        fs::create_directories(opt.out);
        write_file(fs::path(opt.out) / "table.txt", table);
    }
    std::cout << table;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coherent forecast combination for linearly constrained time series"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML file of option = value pairs; flags override it");

    Options opt;
    app.add_option("--dataset", opt.dataset, "CSV with date,series_id,value");
    app.add_option("--hierarchy", opt.hierarchy, "hierarchy spec JSON");
    app.add_option("--approaches", opt.approaches, "approach ids")->delimiter(',');
    app.add_option("--experts", opt.experts, "built-in experts: snaive, mean, drift, ses[:alpha]")->delimiter(',');
    app.add_option("--import", opt.import_path, "forecast bundle CSV replacing the built-in experts");
    app.add_option("--first-train", opt.first_train, "observations in the first training window");
    app.add_option("--horizon", opt.horizon, "maximum forecast horizon")->check(CLI::PositiveNumber);
    app.add_option("--step", opt.step, "origin increment")->check(CLI::PositiveNumber);
    app.add_option("--period", opt.period, "seasonal period")->check(CLI::PositiveNumber);
    app.add_option("--gap-cap", opt.gap_cap, "longest run of missing days filled forward")->check(CLI::NonNegativeNumber);
    app.add_option("--benchmark", opt.benchmark, "approach the AR metrics are relative to");
    auto* out_opt = app.add_option("--out", opt.out, "output directory");
    app.add_option("--seed", opt.seed, "random seed (simulate)");
    app.add_option("--threads", opt.threads, "OpenMP threads; 0 = runtime default")->check(CLI::NonNegativeNumber);
    app.add_option("--replications", opt.replications, "simulate: forecast cases per meta-run");
    app.add_option("--meta-runs", opt.meta_runs, "simulate: independent estimation panels");
    app.add_option("--residual-rows", opt.residual_rows, "simulate: residual rows per panel");
    app.add_option("--zones", opt.zones, "simulate: zones in the grid hierarchy");
    app.add_option("--sources", opt.sources, "simulate: sources in the grid hierarchy");
    app.add_option("--input", opt.input, "report: results CSV to reformat");

    auto* validate = app.add_subcommand("validate", "check config, hierarchy rank and data alignment; writes nothing");
    auto* run = app.add_subcommand("run", "rolling-origin experiment; writes report.csv, table.txt, coherence.csv");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study with known error covariance");
    auto* report = app.add_subcommand("report", "reformat a report CSV as the comparison table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : occ::exit_code(occ::ErrorKind::Config);
    }

    try {
        if (validate->parsed()) return cmd_validate(opt);
        if (run->parsed()) return cmd_run(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (report->parsed()) return cmd_report(opt, out_opt->count() > 0);
    } catch (const occ::Error& e) {
        std::cerr << "error: " << occ::to_string(e.kind()) << ": " << e.what() << "\n";
        return occ::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
