#include "occ/baseforecast.hpp"

#include "occ/error.hpp"

#include <algorithm>
#include <cmath>

namespace occ {

ExpertModel ExpertModel::parse(const std::string& text) {
    ExpertModel m;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    if (head == "snaive" || head == "seasonal_naive") {
        m.kind = ModelKind::seasonal_naive;
    } else if (head == "mean") {
        m.kind = ModelKind::mean;
    } else if (head == "drift") {
        m.kind = ModelKind::drift;
    } else if (head == "ses") {
        m.kind = ModelKind::ses;
        if (colon != std::string::npos) {
            try {
                m.alpha = std::stod(text.substr(colon + 1));
            } catch (const std::exception&) {
                throw Error(ErrorKind::Config, "bad ses alpha in '" + text + "'");
            }
        }
        if (!(m.alpha > 0.0 && m.alpha < 1.0)) {
            throw Error(ErrorKind::Config, "ses alpha must lie in (0, 1), got '" + text + "'");
        }
        return m;
    } else {
        throw Error(ErrorKind::Config, "unknown expert model '" + text + "'");
    }
    if (colon != std::string::npos) {
        throw Error(ErrorKind::Config, "expert model '" + head + "' takes no parameter");
    }
    return m;
}

std::string ExpertModel::name() const {
    switch (kind) {
        case ModelKind::seasonal_naive: return "snaive";
        case ModelKind::mean: return "mean";
        case ModelKind::drift: return "drift";
        case ModelKind::ses: {
            if (alpha == 0.2) return "ses";
            std::string a = std::to_string(alpha);
            a.erase(a.find_last_not_of('0') + 1);
            return "ses:" + a;
        }
    }
    return "unknown";
}

int warmup(const ExpertModel& model, int period) {
    switch (model.kind) {
        case ModelKind::seasonal_naive: return period;
        case ModelKind::drift: return 2;
        case ModelKind::mean:
        case ModelKind::ses: return 1;
    }
    return 1;
}

namespace {

void require_length(const ExpertModel& model, std::size_t len, int period) {
    if (model.kind == ModelKind::seasonal_naive && period < 1) {
        throw Error(ErrorKind::Config, "seasonal period must be positive");
    }
    const auto need = static_cast<std::size_t>(warmup(model, period)) + 1;
    if (len < need) {
        throw Error(ErrorKind::SeriesTooShort, model.name() + " needs at least " + std::to_string(need) +
                                                   " observations, got " + std::to_string(len));
    }
}

// One-step forecast of y_t from y_0..y_{t-1}; t >= warmup.
struct OneStep {
    const ExpertModel& model;
    std::span<const double> y;
    int period;

    // running state for the expanding models
    double sum = 0.0;
    double level = 0.0;
    std::size_t consumed = 0;

    double next(std::size_t t) {
        switch (model.kind) {
            case ModelKind::seasonal_naive: return y[t - static_cast<std::size_t>(period)];
            case ModelKind::drift: {
                const double slope = (y[t - 1] - y[0]) / static_cast<double>(t - 1);
                return y[t - 1] + slope;
            }
            case ModelKind::mean: {
                while (consumed < t) sum += y[consumed++];
                return sum / static_cast<double>(t);
            }
            case ModelKind::ses: {
                if (consumed == 0) {
                    level = y[0];
                    consumed = 1;
                }
                while (consumed < t) level = model.alpha * y[consumed++] + (1.0 - model.alpha) * level;
                return level;
            }
        }
        return 0.0;
    }
};

}  // namespace

Eigen::VectorXd forecast_base(const ExpertModel& model, std::span<const double> y, int period, int h) {
    require_length(model, y.size(), period);
    Eigen::VectorXd out(h);
    const std::size_t T = y.size();
    switch (model.kind) {
        case ModelKind::seasonal_naive:
            for (int k = 0; k < h; ++k) out(k) = y[T - static_cast<std::size_t>(period) + static_cast<std::size_t>(k % period)];
            break;
        case ModelKind::drift: {
            const double slope = (y[T - 1] - y[0]) / static_cast<double>(T - 1);
            for (int k = 0; k < h; ++k) out(k) = y[T - 1] + (k + 1) * slope;
            break;
        }
        case ModelKind::mean:
        case ModelKind::ses: {
            // flat path at the one-step forecast after the whole history
            OneStep step{model, y, period};
            out.setConstant(step.next(T));
            break;
        }
    }
    return out;
}

Eigen::VectorXd forecast_base(const ExpertModel& model, const SeriesData& series, int h) {
    return forecast_base(model, series.values, series.period, h);
}

Eigen::VectorXd insample_residuals(const ExpertModel& model, std::span<const double> y, int period, int start) {
    require_length(model, y.size(), period);
    const int w = warmup(model, period);
    if (start < 0) start = w;
    if (start < w) {
        throw Error(ErrorKind::SeriesTooShort, "residual start " + std::to_string(start) + " precedes the warm-up of " +
                                                   model.name());
    }
    const auto T = static_cast<int>(y.size());
    Eigen::VectorXd out(std::max(0, T - start));
    OneStep step{model, y, period};
    for (int t = start; t < T; ++t) {
        out(t - start) = y[static_cast<std::size_t>(t)] - step.next(static_cast<std::size_t>(t));
    }
    return out;
}

Eigen::VectorXd insample_residuals(const ExpertModel& model, const SeriesData& series, int start) {
    return insample_residuals(model, series.values, series.period, start);
}

ResidualPanel build_residual_panel(const std::vector<ExpertModel>& experts,
                                   const Eigen::Ref<const Eigen::MatrixXd>& history, int period) {
    const int n = static_cast<int>(history.cols());
    const int p = static_cast<int>(experts.size());
    int start = 0;
    for (const auto& e : experts) start = std::max(start, warmup(e, period));
    const int T = static_cast<int>(history.rows());
    if (T - start < 2) {
        throw Error(ErrorKind::TooFewObservations, "training window of " + std::to_string(T) +
                                                       " leaves fewer than 2 residual rows");
    }
    Eigen::MatrixXd E(T - start, static_cast<Eigen::Index>(n) * p);
    std::vector<double> col(static_cast<std::size_t>(T));
    for (int i = 0; i < n; ++i) {
        Eigen::Map<Eigen::VectorXd>(col.data(), T) = history.col(i);
        for (int j = 0; j < p; ++j) {
            E.col(static_cast<Eigen::Index>(j) * n + i) =
                insample_residuals(experts[static_cast<std::size_t>(j)], col, period, start);
        }
    }
    return ResidualPanel(E, n, p);
}

}  // namespace occ
