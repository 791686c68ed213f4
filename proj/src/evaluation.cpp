#include "occ/evaluation.hpp"

#include "occ/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace occ {

int RollingPlan::horizons_at(std::size_t k) const {
    return std::min(max_horizon, total_len - origins.at(k));
}

RollingPlan rolling_origin_plan(int total_len, int first_train_len, int max_horizon, int step) {
    if (max_horizon < 1 || step < 1 || first_train_len < 1) {
        throw Error(ErrorKind::Config, "rolling plan needs first_train >= 1, horizon >= 1 and step >= 1");
    }
    if (first_train_len + 1 > total_len) {
        throw Error(ErrorKind::EmptyTestSet, "no observations after the first training window (total " +
                                                 std::to_string(total_len) + ", first_train " +
                                                 std::to_string(first_train_len) + ")");
    }
    RollingPlan plan;
    plan.total_len = total_len;
    plan.first_train_len = first_train_len;
    plan.max_horizon = max_horizon;
    plan.step = step;
    plan.cases.assign(static_cast<std::size_t>(max_horizon), 0);
    for (int o = first_train_len; o < total_len; o += step) {
        plan.origins.push_back(o);
        for (int h = 1; h <= max_horizon && o + h <= total_len; ++h) ++plan.cases[static_cast<std::size_t>(h - 1)];
    }
    if (plan.cases.back() == 0) {
        throw Error(ErrorKind::EmptyTestSet, "no " + std::to_string(max_horizon) +
                                                 "-step-ahead forecast fits in the test period");
    }
    return plan;
}

HorizonScores score(const Eigen::Ref<const Eigen::MatrixXd>& actuals, const ApproachForecasts& forecasts,
                    const RollingPlan& plan) {
    const auto n = actuals.cols();
    const auto H = static_cast<std::size_t>(plan.max_horizon);
    if (forecasts.values.size() != plan.origins.size()) {
        throw Error(ErrorKind::MissingForecast, "forecasts cover " + std::to_string(forecasts.values.size()) +
                                                    " origins, plan has " + std::to_string(plan.origins.size()));
    }
    if (actuals.rows() < plan.total_len) {
        throw Error(ErrorKind::DimensionMismatch, "actuals are shorter than the plan");
    }
    HorizonScores s;
    s.mae.assign(H, Eigen::VectorXd::Zero(n));
    s.mse.assign(H, Eigen::VectorXd::Zero(n));
    s.cases.assign(H, 0);
    for (std::size_t k = 0; k < plan.origins.size(); ++k) {
        if (!forecasts.failed.empty() && forecasts.failed[k]) continue;
        const int o = plan.origins[k];
        for (int h = 1; h <= plan.horizons_at(k); ++h) {
            const auto hi = static_cast<std::size_t>(h - 1);
            const auto& row = forecasts.values[k];
            if (row.size() <= hi || row[hi].size() != n) {
                throw Error(ErrorKind::MissingForecast, "no forecast for origin " + std::to_string(o) + ", horizon " +
                                                            std::to_string(h));
            }
            const Eigen::ArrayXd err = actuals.row(o + h - 1).transpose().array() - row[hi].array();
            s.mae[hi].array() += err.abs();
            s.mse[hi].array() += err.square();
            ++s.cases[hi];
        }
    }
    for (std::size_t hi = 0; hi < H; ++hi) {
        const double q = s.cases[hi] > 0 ? static_cast<double>(s.cases[hi]) : std::numeric_limits<double>::quiet_NaN();
        s.mae[hi] /= q;
        s.mse[hi] /= q;
    }
    return s;
}

ArMetrics ar_relative(const HorizonScores& app, const HorizonScores& benchmark, std::span<const int> horizons) {
    ArMetrics out;
    double log_mae = 0.0;
    double log_mse = 0.0;
    bool zero_mae = false;
    bool zero_mse = false;
    for (int h : horizons) {
        const auto hi = static_cast<std::size_t>(h - 1);
        if (hi >= app.mae.size() || hi >= benchmark.mae.size()) {
            throw Error(ErrorKind::DimensionMismatch, "horizon " + std::to_string(h) + " is not in the report");
        }
        const Eigen::VectorXd& am = app.mae[hi];
        const Eigen::VectorXd& as = app.mse[hi];
        const Eigen::VectorXd& bm = benchmark.mae[hi];
        const Eigen::VectorXd& bs = benchmark.mse[hi];
        for (Eigen::Index i = 0; i < bm.size(); ++i) {
            if (!(bm(i) > 0.0) || !(bs(i) > 0.0)) {
                ++out.excluded;
                continue;
            }
            ++out.pairs;
            if (am(i) == 0.0) zero_mae = true; else log_mae += std::log(am(i) / bm(i));
            if (as(i) == 0.0) zero_mse = true; else log_mse += std::log(as(i) / bs(i));
        }
    }
    if (out.pairs == 0) {
        throw Error(ErrorKind::ZeroBenchmark, "every benchmark MAE/MSE is zero; relative accuracy is undefined");
    }
    out.mae = zero_mae ? 0.0 : std::exp(log_mae / out.pairs);
    out.mse = zero_mse ? 0.0 : std::exp(log_mse / out.pairs);
    return out;
}

const ApproachResult& EvalReport::find(const std::string& id) const {
    for (const auto& a : approaches) {
        if (a.id == id) return a;
    }
    throw Error(ErrorKind::Config, "approach '" + id + "' is not in the report");
}

ArMetrics ar_relative(const EvalReport& report, const std::string& approach, const std::string& benchmark,
                      std::span<const int> horizons) {
    return ar_relative(report.find(approach).scores, report.find(benchmark).scores, horizons);
}

std::vector<int> table_horizons(int max_horizon) {
    std::vector<int> out;
    for (int h : {1, 2, 3, 5, 7}) {
        if (h <= max_horizon) out.push_back(h);
    }
    return out;
}

std::vector<int> all_horizons(int max_horizon) {
    std::vector<int> out(static_cast<std::size_t>(max_horizon));
    for (int h = 1; h <= max_horizon; ++h) out[static_cast<std::size_t>(h - 1)] = h;
    return out;
}

namespace {

enum class Kind { base, ew, ow_var, ow_cov, mint_shr, src, scr_ew, scr_var, scr_cov, occ_wlsv, occ_be, occ_shr };

struct Approach {
    std::string id;
    Kind kind;
    int expert = -1;  // base / mint_shr; -1 picks the best in-sample expert
};

int expert_index(const std::string& name, const std::vector<std::string>& expert_names, const std::string& id) {
    auto it = std::find(expert_names.begin(), expert_names.end(), name);
    if (it == expert_names.end()) {
        throw Error(ErrorKind::Config, "approach '" + id + "' names unknown expert '" + name + "'");
    }
    return static_cast<int>(it - expert_names.begin());
}

Approach parse_approach(const std::string& id, const std::vector<std::string>& expert_names) {
    static const std::map<std::string, Kind> plain{
        {"ew", Kind::ew},           {"ow_var", Kind::ow_var},     {"ow_cov", Kind::ow_cov},
        {"src", Kind::src},         {"scr_ew", Kind::scr_ew},     {"scr_var", Kind::scr_var},
        {"scr_cov", Kind::scr_cov}, {"occ_wlsv", Kind::occ_wlsv}, {"occ_be", Kind::occ_be},
        {"occ_shr", Kind::occ_shr}, {"mint_shr", Kind::mint_shr},
    };
    if (auto it = plain.find(id); it != plain.end()) return {id, it->second, -1};
    const auto colon = id.find(':');
    if (colon != std::string::npos) {
        const std::string head = id.substr(0, colon);
        const std::string expert = id.substr(colon + 1);
        if (head == "base") return {id, Kind::base, expert_index(expert, expert_names, id)};
        if (head == "mint_shr") return {id, Kind::mint_shr, expert_index(expert, expert_names, id)};
    }
    throw Error(ErrorKind::Config, "unknown approach '" + id + "'");
}

bool coherent_by_construction(Kind k) {
    switch (k) {
        case Kind::base:
        case Kind::ew:
        case Kind::ow_var:
        case Kind::ow_cov: return false;
        default: return true;
    }
}

struct OriginOutput {
    std::vector<std::vector<Eigen::VectorXd>> forecasts;  // [approach][h - 1]
    std::vector<std::vector<double>> residuals;           // [approach][h - 1]
    std::vector<char> failed;
    std::vector<std::string> message;
};

// Lazily computed per-origin quantity that remembers a failure.
template <class T>
class Lazy {
public:
    explicit Lazy(std::function<T()> make) : make_(std::move(make)) {}
    const T& get() {
        if (!value_) value_.emplace(make_());
        return *value_;
    }

private:
    std::function<T()> make_;
    std::optional<T> value_;
};

class Experiment {
public:
    Experiment(const Dataset& data, const ConstraintMatrix& C, const RollingPlan& plan,
               const ExperimentConfig& config)
        : data_(data), C_(C), plan_(plan), config_(config) {
        if (data.values.cols() != C.n()) {
            throw Error(ErrorKind::DimensionMismatch, "dataset has " + std::to_string(data.values.cols()) +
                                                          " series, hierarchy has " + std::to_string(C.n()));
        }
        if (data.length() < plan.total_len) {
            throw Error(ErrorKind::DimensionMismatch, "plan is longer than the dataset");
        }
        if (config.imported) {
            expert_names_ = config.imported->experts;
        } else {
            for (const auto& e : config.experts) expert_names_.push_back(e.name());
        }
        if (expert_names_.empty()) throw Error(ErrorKind::Config, "no experts configured");
        for (const auto& id : config.approaches) approaches_.push_back(parse_approach(id, expert_names_));
        if (config.imported) check_imported();
    }

    OriginOutput run_origin(std::size_t k) const {
        const int o = plan_.origins[k];
        const int H = plan_.horizons_at(k);
        const std::size_t A = approaches_.size();
        OriginOutput out;
        out.forecasts.assign(A, {});
        out.residuals.assign(A, {});
        out.failed.assign(A, 0);
        out.message.assign(A, {});

        std::vector<ForecastBundle> bundles;
        std::optional<ResidualPanel> panel;
        std::string setup_error;
        try {
            bundles = make_bundles(o, H);
            panel.emplace(make_panel(o));
        } catch (const std::exception& e) {
            setup_error = e.what();
        }

        const int n = C_.n();
        const int p = static_cast<int>(expert_names_.size());
        auto need_panel = [&]() -> const ResidualPanel& {
            if (!panel) throw Error(ErrorKind::DegeneratePanel, "no residual panel: " + setup_error);
            return *panel;
        };
        Lazy<WMatrix> w_diag([&] { return assemble_W(need_panel(), WKind::diagonal); });
        Lazy<WMatrix> w_block([&] { return assemble_W(need_panel(), WKind::expert_block_shrunk); });
        Lazy<WMatrix> w_full([&] { return assemble_W(need_panel(), WKind::full_shrunk); });
        Lazy<Eigen::MatrixXd> wt_var([&] { return ow_var_weights(need_panel()); });
        Lazy<Eigen::MatrixXd> wt_cov([&] { return ow_cov_weights(need_panel()); });
        Lazy<std::vector<Eigen::MatrixXd>> per_expert_W([&] {
            std::vector<Eigen::MatrixXd> blocks;
            const WMatrix& W = w_block.get();
            for (int j = 0; j < p; ++j) blocks.push_back(W.block(j));
            return blocks;
        });
        Lazy<int> best_expert([&] {
            const auto& E = need_panel().residuals();
            int best = 0;
            double best_mse = std::numeric_limits<double>::infinity();
            for (int j = 0; j < p; ++j) {
                const double mse = E.middleCols(static_cast<Eigen::Index>(j) * n, n).squaredNorm();
                if (mse < best_mse) {
                    best_mse = mse;
                    best = j;
                }
            }
            return best;
        });
        auto scr_W = [&](const Eigen::MatrixXd& weights) {
            return ensure_pd(shrunk_covariance(combined_residuals(need_panel(), weights)).S).W;
        };
        const Eigen::MatrixXd ew_weights = Eigen::MatrixXd::Constant(n, p, 1.0 / p);
        Lazy<Eigen::MatrixXd> scr_ew_W([&] { return scr_W(ew_weights); });
        Lazy<Eigen::MatrixXd> scr_var_W([&] { return scr_W(wt_var.get()); });
        Lazy<Eigen::MatrixXd> scr_cov_W([&] { return scr_W(wt_cov.get()); });

        for (std::size_t a = 0; a < A; ++a) {
            const Approach& ap = approaches_[a];
            try {
                if (bundles.empty()) throw Error(ErrorKind::MissingForecast, "base forecasts failed: " + setup_error);
                for (int h = 1; h <= H; ++h) {
                    const ForecastBundle& b = bundles[static_cast<std::size_t>(h - 1)];
                    Eigen::VectorXd y;
                    switch (ap.kind) {
                        case Kind::base: y = b.expert(ap.expert); break;
                        case Kind::ew: y = combine_ew(b); break;
                        case Kind::ow_var: y = combine_weighted(b, wt_var.get()); break;
                        case Kind::ow_cov: y = combine_weighted(b, wt_cov.get()); break;
                        case Kind::mint_shr: {
                            const int j = ap.expert >= 0 ? ap.expert : best_expert.get();
                            y = mint_reconcile(b.expert(j), per_expert_W.get()[static_cast<std::size_t>(j)], C_).y;
                            break;
                        }
                        case Kind::src: y = pipeline_src(b, per_expert_W.get(), C_).y; break;
                        case Kind::scr_ew: y = pipeline_scr(b, ew_weights, C_, scr_ew_W.get(), Method::scr_ew).y; break;
                        case Kind::scr_var:
                            y = pipeline_scr(b, wt_var.get(), C_, scr_var_W.get(), Method::scr_var).y;
                            break;
                        case Kind::scr_cov:
                            y = pipeline_scr(b, wt_cov.get(), C_, scr_cov_W.get(), Method::scr_cov).y;
                            break;
                        case Kind::occ_wlsv: y = occ_combine(b, w_diag.get(), C_).y; break;
                        case Kind::occ_be: y = occ_combine(b, w_block.get(), C_).y; break;
                        case Kind::occ_shr: y = occ_combine(b, w_full.get(), C_).y; break;
                    }
                    if (!y.allFinite()) throw Error(ErrorKind::SingularW, "non-finite forecast");
                    out.residuals[a].push_back(coherence_residual(C_, y));
                    out.forecasts[a].push_back(std::move(y));
                }
            } catch (const std::exception& e) {
                out.failed[a] = 1;
                out.message[a] = e.what();
                out.forecasts[a].clear();
                out.residuals[a].clear();
            }
        }
        return out;
    }

    EvalReport collect(std::vector<OriginOutput>& outputs) const {
        EvalReport report;
        report.series_ids = C_.ids();
        report.max_horizon = plan_.max_horizon;
        report.benchmark = config_.benchmark;
        const std::size_t K = plan_.origins.size();
        for (std::size_t a = 0; a < approaches_.size(); ++a) {
            ApproachForecasts f;
            f.values.resize(K);
            f.failed.assign(K, 0);
            ApproachResult r;
            r.id = approaches_[a].id;
            for (std::size_t k = 0; k < K; ++k) {
                OriginOutput& o = outputs[k];
                if (o.failed[a]) {
                    f.failed[k] = 1;
                    if (r.failures++ == 0) r.first_failure = o.message[a];
                    continue;
                }
                f.values[k] = std::move(o.forecasts[a]);
                const std::string& date = origin_label(plan_.origins[k]);
                for (std::size_t hi = 0; hi < o.residuals[a].size(); ++hi) {
                    const double res = o.residuals[a][hi];
                    r.max_residual = std::max(r.max_residual, res);
                    report.audit.push_back({r.id, date, static_cast<int>(hi + 1), res});
                }
            }
            r.scores = score(data_.values, f, plan_);
            r.coherent = r.failures < static_cast<int>(K) && r.max_residual <= kCoherenceTol;
            report.approaches.push_back(std::move(r));
        }
        return report;
    }

    std::size_t origins() const { return plan_.origins.size(); }

private:
    const std::string& origin_label(int o) const {
        static const std::string none;
        if (o >= 1 && static_cast<std::size_t>(o) <= data_.dates.size()) return data_.dates[static_cast<std::size_t>(o - 1)];
        return none;
    }

    void check_imported() const {
        const auto& imp = *config_.imported;
        for (std::size_t k = 0; k < plan_.origins.size(); ++k) {
            const std::string& date = origin_label(plan_.origins[k]);
            for (int h = 1; h <= plan_.horizons_at(k); ++h) {
                auto it = imp.bundles.find({date, h});
                if (it == imp.bundles.end()) {
                    throw Error(ErrorKind::MissingForecast,
                                "imported forecasts lack origin " + date + ", horizon " + std::to_string(h));
                }
                if (it->second.n() != C_.n()) {
                    throw Error(ErrorKind::UnbalancedBundle, "imported bundle has the wrong series count");
                }
            }
        }
    }

    std::vector<ForecastBundle> make_bundles(int o, int H) const {
        std::vector<ForecastBundle> out;
        if (config_.imported) {
            const std::string& date = origin_label(o);
            for (int h = 1; h <= H; ++h) out.push_back(config_.imported->bundles.at({date, h}));
            return out;
        }
        const int n = C_.n();
        const int p = static_cast<int>(config_.experts.size());
        Eigen::MatrixXd all(static_cast<Eigen::Index>(n) * p, H);
        std::vector<double> col(static_cast<std::size_t>(o));
        for (int i = 0; i < n; ++i) {
            Eigen::Map<Eigen::VectorXd>(col.data(), o) = data_.values.col(i).head(o);
            for (int j = 0; j < p; ++j) {
                all.row(static_cast<Eigen::Index>(j) * n + i) =
                    forecast_base(config_.experts[static_cast<std::size_t>(j)], col, config_.period, H).transpose();
            }
        }
        for (int h = 0; h < H; ++h) out.emplace_back(all.col(h), n, p);
        return out;
    }

    ResidualPanel make_panel(int o) const {
        if (!config_.imported) {
            return build_residual_panel(config_.experts, data_.values.topRows(o), config_.period);
        }
        // Imported experts: one-step errors of earlier origins whose target is
        // already observed at o.
        const auto& imp = *config_.imported;
        const int n = C_.n();
        const int p = static_cast<int>(imp.experts.size());
        std::vector<Eigen::VectorXd> rows;
        for (int t = 1; t < o; ++t) {
            auto it = imp.bundles.find({data_.dates[static_cast<std::size_t>(t - 1)], 1});
            if (it == imp.bundles.end()) continue;
            Eigen::VectorXd r(static_cast<Eigen::Index>(n) * p);
            for (int j = 0; j < p; ++j) {
                r.segment(static_cast<Eigen::Index>(j) * n, n) = data_.values.row(t).transpose() - it->second.expert(j);
            }
            rows.push_back(std::move(r));
        }
        Eigen::MatrixXd E(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n) * p);
        for (std::size_t r = 0; r < rows.size(); ++r) E.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
        ResidualPanel panel(E, n, p);
        if (panel.rows() < 2) {
            throw Error(ErrorKind::TooFewObservations, "fewer than 2 past one-step errors before origin " +
                                                           origin_label(o));
        }
        return panel;
    }

    const Dataset& data_;
    const ConstraintMatrix& C_;
    const RollingPlan& plan_;
    const ExperimentConfig& config_;
    std::vector<std::string> expert_names_;
    std::vector<Approach> approaches_;
};

}  // namespace

void validate_approach(const std::string& id, const std::vector<std::string>& expert_names) {
    parse_approach(id, expert_names);
}

namespace serial {

EvalReport run_experiment(const Dataset& data, const ConstraintMatrix& C, const RollingPlan& plan,
                          const ExperimentConfig& config) {
    const Experiment ex(data, C, plan, config);
    std::vector<OriginOutput> outputs(ex.origins());
    for (std::size_t k = 0; k < outputs.size(); ++k) outputs[k] = ex.run_origin(k);
    return ex.collect(outputs);
}

}  // namespace serial

EvalReport run_experiment(const Dataset& data, const ConstraintMatrix& C, const RollingPlan& plan,
                          const ExperimentConfig& config) {
    const Experiment ex(data, C, plan, config);
    std::vector<OriginOutput> outputs(ex.origins());
    const long K = static_cast<long>(outputs.size());
#ifdef _OPENMP
    const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (long k = 0; k < K; ++k) outputs[static_cast<std::size_t>(k)] = ex.run_origin(static_cast<std::size_t>(k));
    return ex.collect(outputs);
}

}  // namespace occ
