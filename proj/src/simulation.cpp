#include "occ/simulation.hpp"

#include "occ/combiner.hpp"
#include "occ/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace occ {

namespace {

constexpr double kBottomMean = 100.0;
constexpr double kBottomSd = 10.0;

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

double geo_mean_ratio(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::exp((a.array() / b.array()).log().mean());
}

}  // namespace

SimulationScenario make_scenario(const SimulationConfig& config) {
    if (config.experts < 1 || config.zones < 1 || config.sources < 1) {
        throw Error(ErrorKind::Config, "simulation needs at least one zone, source and expert");
    }
    if (static_cast<int>(config.expert_scale.size()) < config.experts ||
        static_cast<int>(config.expert_corr.size()) < config.experts) {
        throw Error(ErrorKind::Config, "simulation needs a scale and a correlation per expert");
    }
    SimulationScenario sc;
    std::vector<std::string> zones, sources;
    for (int z = 0; z < config.zones; ++z) zones.push_back("Z" + std::to_string(z + 1));
    for (int s = 0; s < config.sources; ++s) sources.push_back("S" + std::to_string(s + 1));
    sc.spec = make_grid_hierarchy(zones, sources);
    sc.C = build_constraint_matrix(sc.spec);
    sc.S = summing_matrix(sc.C);

    const int n = sc.C.n();
    const int p = config.experts;
    // error scale grows with the number of bottoms a series aggregates
    const Eigen::VectorXd width = sc.S.rowwise().sum();
    sc.W_true = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * p, static_cast<Eigen::Index>(n) * p);
    for (int j = 0; j < p; ++j) {
        const double rho = config.expert_corr[static_cast<std::size_t>(j)];
        Eigen::VectorXd sd(n);
        for (int i = 0; i < n; ++i) {
            const double hetero = 0.75 + 0.5 * static_cast<double>((i + 2 * j) % 4) / 3.0;
            sd(i) = config.expert_scale[static_cast<std::size_t>(j)] * std::sqrt(width(i)) * hetero;
        }
        Eigen::MatrixXd R = Eigen::MatrixXd::Constant(n, n, rho);
        R.diagonal().setOnes();
        sc.W_true.block(j * n, j * n, n, n) = sd.asDiagonal() * R * sd.asDiagonal();
    }
    return sc;
}

const std::vector<std::string>& simulation_approaches() {
    static const std::vector<std::string> ids{"ew", "ew_proj", "occ_oracle", "occ_be", "occ_wlsv", "src", "scr_var"};
    return ids;
}

namespace {

MetaRunResult run_meta(const SimulationConfig& config, const SimulationScenario& sc, int meta) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(config.seed >> 32), static_cast<std::uint32_t>(meta)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);

    const int n = sc.C.n();
    const int p = config.experts;
    const int m = n * p;
    const int nb = sc.C.n_bottom();
    const Eigen::MatrixXd L = sc.W_true.llt().matrixL();
    auto draw_error = [&]() {
        Eigen::VectorXd z(m);
        for (int k = 0; k < m; ++k) z(k) = normal(rng);
        return Eigen::VectorXd(L * z);
    };

    Eigen::MatrixXd E(config.residual_rows, m);
    for (int t = 0; t < config.residual_rows; ++t) E.row(t) = draw_error().transpose();
    const ResidualPanel panel(E, n, p);

    WMatrix w_oracle;
    w_oracle.W = sc.W_true;
    w_oracle.kind = WKind::general;
    const WMatrix w_be = assemble_W(panel, WKind::expert_block_shrunk);
    const WMatrix w_wlsv = assemble_W(panel, WKind::diagonal);
    std::vector<Eigen::MatrixXd> per_expert;
    for (int j = 0; j < p; ++j) per_expert.push_back(w_be.block(j));
    const Eigen::MatrixXd wt_var = ow_var_weights(panel);
    const Eigen::MatrixXd scr_W = ensure_pd(shrunk_covariance(combined_residuals(panel, wt_var)).S).W;
    const Eigen::MatrixXd I_n = Eigen::MatrixXd::Identity(n, n);

    const std::size_t A = simulation_approaches().size();
    MetaRunResult res;
    res.mse.assign(A, Eigen::VectorXd::Zero(n));
    res.mae.assign(A, Eigen::VectorXd::Zero(n));
    res.oracle_error_sum = Eigen::VectorXd::Zero(n);
    res.oracle_error_sq_sum = Eigen::VectorXd::Zero(n);
    res.be_error_sum = Eigen::VectorXd::Zero(n);
    res.be_error_sq_sum = Eigen::VectorXd::Zero(n);
    res.be_lambda = w_be.shrink_lambda;

    std::vector<CoherentForecast> out(A);
    for (int r = 0; r < config.replications; ++r) {
        Eigen::VectorXd b(nb);
        for (int k = 0; k < nb; ++k) b(k) = kBottomMean + kBottomSd * normal(rng);
        const Eigen::VectorXd y = sc.S * b;
        const Eigen::VectorXd eps = draw_error();
        Eigen::VectorXd yhat(m);
        for (int j = 0; j < p; ++j) yhat.segment(j * n, n) = y + eps.segment(j * n, n);
        const ForecastBundle bundle(yhat, n, p);

        const Eigen::VectorXd ew = combine_ew(bundle);
        out[0] = make_forecast(ew, Method::ew, sc.C);
        out[1] = mint_reconcile(ew, I_n, sc.C, Method::scr_ew);
        out[2] = occ_combine(bundle, w_oracle, sc.C);
        out[3] = occ_combine(bundle, w_be, sc.C);
        out[4] = occ_combine(bundle, w_wlsv, sc.C);
        out[5] = pipeline_src(bundle, per_expert, sc.C);
        out[6] = pipeline_scr(bundle, wt_var, sc.C, scr_W, Method::scr_var);

        for (std::size_t a = 0; a < A; ++a) {
            const Eigen::ArrayXd err = (out[a].y - y).array();
            res.mse[a].array() += err.square();
            res.mae[a].array() += err.abs();
            if (a != 0) res.max_residual = std::max(res.max_residual, out[a].residual);
        }
        const Eigen::VectorXd e_or = out[2].y - y;
        res.oracle_error_sum += e_or;
        res.oracle_error_sq_sum += e_or.cwiseAbs2();
        const Eigen::VectorXd e_be = out[3].y - y;
        res.be_error_sum += e_be;
        res.be_error_sq_sum += e_be.cwiseAbs2();
    }
    for (std::size_t a = 0; a < A; ++a) {
        res.mse[a] /= config.replications;
        res.mae[a] /= config.replications;
    }
    return res;
}

void check_config(const SimulationConfig& config) {
    if (config.replications < 2 || config.meta_runs < 1 || config.residual_rows < 2) {
        throw Error(ErrorKind::Config, "simulation needs replications >= 2, meta_runs >= 1, residual_rows >= 2");
    }
}

double bias_z(const SimulationReport& rep, bool oracle) {
    const auto& first = oracle ? rep.runs.front().oracle_error_sum : rep.runs.front().be_error_sum;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(first.size());
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(first.size());
    for (const auto& r : rep.runs) {
        sum += oracle ? r.oracle_error_sum : r.be_error_sum;
        sq += oracle ? r.oracle_error_sq_sum : r.be_error_sq_sum;
    }
    const double N = static_cast<double>(rep.runs.size()) * rep.config.replications;
    const Eigen::ArrayXd mean = sum.array() / N;
    const Eigen::ArrayXd var = (sq.array() - N * mean.square()) / (N - 1.0);
    const Eigen::ArrayXd se = (var / N).sqrt();
    return (mean.abs() / se).maxCoeff();
}

}  // namespace

int SimulationReport::approach_index(const std::string& id) const {
    const auto& ids = simulation_approaches();
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw Error(ErrorKind::Config, "unknown simulation approach '" + id + "'");
    return static_cast<int>(it - ids.begin());
}

double SimulationReport::ar_mse(int run, const std::string& id) const {
    const auto& r = runs.at(static_cast<std::size_t>(run));
    return geo_mean_ratio(r.mse[static_cast<std::size_t>(approach_index(id))], r.mse[0]);
}

double SimulationReport::ar_mae(int run, const std::string& id) const {
    const auto& r = runs.at(static_cast<std::size_t>(run));
    return geo_mean_ratio(r.mae[static_cast<std::size_t>(approach_index(id))], r.mae[0]);
}

double SimulationReport::mean_mse(int run, const std::string& id) const {
    return runs.at(static_cast<std::size_t>(run)).mse[static_cast<std::size_t>(approach_index(id))].mean();
}

double SimulationReport::mean_mse(const std::string& id) const {
    double s = 0.0;
    for (int k = 0; k < static_cast<int>(runs.size()); ++k) s += mean_mse(k, id);
    return s / static_cast<double>(runs.size());
}

double SimulationReport::oracle_bias_z() const { return bias_z(*this, true); }
double SimulationReport::be_bias_z() const { return bias_z(*this, false); }

double SimulationReport::max_residual() const {
    double out = 0.0;
    for (const auto& r : runs) out = std::max(out, r.max_residual);
    return out;
}

namespace serial {

SimulationReport simulate(const SimulationConfig& config) {
    check_config(config);
    const SimulationScenario sc = make_scenario(config);
    SimulationReport rep;
    rep.config = config;
    for (int k = 0; k < config.meta_runs; ++k) rep.runs.push_back(run_meta(config, sc, k));
    return rep;
}

}  // namespace serial

SimulationReport simulate(const SimulationConfig& config) {
    check_config(config);
    const SimulationScenario sc = make_scenario(config);
    SimulationReport rep;
    rep.config = config;
    rep.runs.resize(static_cast<std::size_t>(config.meta_runs));
#ifdef _OPENMP
    const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (int k = 0; k < config.meta_runs; ++k) rep.runs[static_cast<std::size_t>(k)] = run_meta(config, sc, k);
    return rep;
}

std::string format_simulation(const SimulationReport& rep) {
    const auto& c = rep.config;
    const auto& ids = simulation_approaches();
    const SimulationScenario sc = make_scenario(c);
    std::ostringstream os;
    os << "Monte Carlo coherent combination study\n";
    os << "hierarchy: " << c.zones << " zones x " << c.sources << " sources, n = " << sc.C.n()
       << ", n_u = " << sc.C.n_upper() << "\n";
    os << "experts: " << c.experts << ", replications: " << c.replications << ", meta-runs: " << c.meta_runs
       << ", residual rows: " << c.residual_rows << ", seed: " << c.seed << "\n\n";

    os << "AR-MSE vs ew by meta-run\n";
    os << "run";
    for (const auto& id : ids) os << "  " << id;
    os << "\n";
    for (int k = 0; k < static_cast<int>(rep.runs.size()); ++k) {
        os << k;
        for (const auto& id : ids) os << "  " << fmt(rep.ar_mse(k, id));
        os << "\n";
    }

    os << "\nsummary\n";
    for (const auto& id : ids) {
        double ar = 0.0;
        for (int k = 0; k < static_cast<int>(rep.runs.size()); ++k) ar += std::log(rep.ar_mse(k, id));
        os << id << ": mean MSE " << fmt(rep.mean_mse(id)) << ", geometric mean AR-MSE "
           << fmt(std::exp(ar / static_cast<double>(rep.runs.size()))) << "\n";
    }
    int be_wins = 0;
    for (int k = 0; k < static_cast<int>(rep.runs.size()); ++k) be_wins += rep.ar_mse(k, "occ_be") < 1.0;
    os << "occ_be AR-MSE < 1 in " << be_wins << " of " << rep.runs.size() << " meta-runs\n";
    os << "occ_oracle max |bias| / se: " << fmt(rep.oracle_bias_z(), 4) << "\n";
    os << "occ_be max |bias| / se: " << fmt(rep.be_bias_z(), 4) << "\n";
    os << "max coherence residual: " << (rep.max_residual() <= kCoherenceTol ? "<= 1e-8" : "> 1e-8") << "\n";
    return os.str();
}

std::string simulation_csv(const SimulationReport& rep) {
    std::ostringstream os;
    os << "meta_run,approach,metric,value\n";
    for (int k = 0; k < static_cast<int>(rep.runs.size()); ++k) {
        for (const auto& id : simulation_approaches()) {
            os << k << ',' << id << ",mean_mse," << fmt(rep.mean_mse(k, id), 9) << '\n';
            os << k << ',' << id << ",AR-MSE," << fmt(rep.ar_mse(k, id), 9) << '\n';
            os << k << ',' << id << ",AR-MAE," << fmt(rep.ar_mae(k, id), 9) << '\n';
        }
    }
    return os.str();
}

}  // namespace occ
