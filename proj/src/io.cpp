#include "occ/io.hpp"

#include "occ/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace occ {

namespace {

using ojson = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    return in;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
    }
    return out;
}

void expect_header(std::istream& in, const std::string& header, const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, std::string(what) + ": empty file");
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) {
        throw Error(ErrorKind::ParseError, std::string(what) + ": expected header '" + header + "', got '" + line + "'");
    }
}

double parse_value(const std::string& text, std::size_t line_no) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        throw Error(ErrorKind::NonNumericValue, "line " + std::to_string(line_no) + ": value '" + text +
                                                   "' is not a finite number");
    }
    return v;
}

int parse_int(const std::string& text, std::size_t line_no) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": '" + text + "' is not an integer");
    }
    return v;
}

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

GroupedHierarchySpec parse_hierarchy_json(const std::string& text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("hierarchy json: ") + e.what());
    }
    GroupedHierarchySpec spec;
    try {
        spec.top_id = j.at("top").get<std::string>();
        spec.bottom_ids = j.at("bottoms").get<std::vector<std::string>>();
        for (const auto& g : j.at("groupings")) {
            Grouping grouping;
            grouping.name = g.value("name", std::string{});
            for (const auto& [agg, members] : g.at("aggregates").items()) {
                grouping.aggregates.emplace_back(agg, members.get<std::vector<std::string>>());
            }
            spec.groupings.push_back(std::move(grouping));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("hierarchy json: ") + e.what());
    }
    validate(spec);
    return spec;
}

GroupedHierarchySpec load_hierarchy_json(const std::filesystem::path& path) {
    return parse_hierarchy_json(read_file(path));
}

std::string hierarchy_to_json(const GroupedHierarchySpec& spec) {
    ojson j;
    j["top"] = spec.top_id;
    j["bottoms"] = spec.bottom_ids;
    j["groupings"] = ojson::array();
    for (const auto& g : spec.groupings) {
        ojson aggs = ojson::object();
        for (const auto& [id, members] : g.aggregates) aggs[id] = members;
        j["groupings"].push_back({{"name", g.name}, {"aggregates", aggs}});
    }
    return j.dump(2) + "\n";
}

int parse_iso_date(const std::string& text) {
    using namespace std::chrono;
    auto bad = [&] { return Error(ErrorKind::ParseError, "'" + text + "' is not a YYYY-MM-DD date"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
    for (std::size_t k : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (text[k] < '0' || text[k] > '9') throw bad();
    }
    const year_month_day ymd{year{std::stoi(text.substr(0, 4))}, month{static_cast<unsigned>(std::stoi(text.substr(5, 2)))},
                             day{static_cast<unsigned>(std::stoi(text.substr(8, 2)))}};
    if (!ymd.ok()) throw bad();
    return static_cast<int>(sys_days{ymd}.time_since_epoch().count());
}

std::string format_iso_date(int days) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

DatasetTable parse_dataset_csv(std::istream& in, int gap_cap, int period) {
    expect_header(in, "date,series_id,value", "dataset");
    std::map<std::string, std::map<int, double>> raw;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        if (f.size() != 3) {
            throw Error(ErrorKind::ParseError, "dataset line " + std::to_string(line_no) + ": expected 3 fields");
        }
        const int d = parse_iso_date(f[0]);
        const double v = parse_value(f[2], line_no);
        if (!raw[f[1]].emplace(d, v).second) {
            throw Error(ErrorKind::DuplicateRow, "dataset line " + std::to_string(line_no) + ": second value for " +
                                                     f[1] + " on " + f[0]);
        }
    }
    if (raw.empty()) throw Error(ErrorKind::ParseError, "dataset has no rows");

    int first = raw.begin()->second.begin()->first;
    int last = first;
    for (const auto& [id, obs] : raw) {
        first = std::min(first, obs.begin()->first);
        last = std::max(last, obs.rbegin()->first);
    }

    DatasetTable table;
    for (int d = first; d <= last; ++d) table.dates.push_back(format_iso_date(d));
    for (const auto& [id, obs] : raw) {
        if (obs.begin()->first != first) {
            throw Error(ErrorKind::NonContiguousDates, "series '" + id + "' starts on " +
                                                           format_iso_date(obs.begin()->first) + ", after " +
                                                           format_iso_date(first));
        }
        SeriesData s;
        s.id = id;
        s.period = period;
        s.values.reserve(table.dates.size());
        int gaps = 0;
        int run = 0;
        double prev = 0.0;
        for (int d = first; d <= last; ++d) {
            auto it = obs.find(d);
            if (it != obs.end()) {
                prev = it->second;
                run = 0;
            } else {
                ++gaps;
                if (++run > gap_cap) {
                    throw Error(ErrorKind::NonContiguousDates, "series '" + id + "' misses more than " +
                                                                   std::to_string(gap_cap) + " consecutive days before " +
                                                                   format_iso_date(d + 1));
                }
            }
            s.values.push_back(prev);
        }
        table.gap_counts[id] = gaps;
        table.series.emplace(id, std::move(s));
    }
    return table;
}

DatasetTable load_dataset_csv(const std::filesystem::path& path, int gap_cap, int period) {
    auto in = open_in(path);
    return parse_dataset_csv(in, gap_cap, period);
}

Dataset align_to_hierarchy(const DatasetTable& table, const ConstraintMatrix& C) {
    for (const auto& [id, s] : table.series) {
        if (!C.contains(id)) throw Error(ErrorKind::UnknownSeriesId, "dataset series '" + id + "' is not in the hierarchy");
    }
    Dataset out;
    out.dates = table.dates;
    out.series_ids = C.ids();
    out.values.resize(static_cast<Eigen::Index>(table.dates.size()), C.n());
    for (int j = 0; j < C.n(); ++j) {
        auto it = table.series.find(C.ids()[static_cast<std::size_t>(j)]);
        if (it == table.series.end()) {
            throw Error(ErrorKind::MissingSeries, "dataset has no rows for series '" + C.ids()[static_cast<std::size_t>(j)] + "'");
        }
        out.values.col(j) = Eigen::Map<const Eigen::VectorXd>(it->second.values.data(),
                                                              static_cast<Eigen::Index>(it->second.values.size()));
    }
    return out;
}

ImportedForecasts parse_forecast_bundle(std::istream& in, const ConstraintMatrix& index) {
    expect_header(in, "origin_date,horizon,expert_id,series_id,value", "forecast bundle");
    ImportedForecasts out;
    std::map<std::string, int> expert_pos;
    // (origin, h) -> (expert, series) -> value
    std::map<std::pair<std::string, int>, std::map<std::pair<int, int>, double>> cells;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        if (f.size() != 5) {
            throw Error(ErrorKind::ParseError, "forecast bundle line " + std::to_string(line_no) + ": expected 5 fields");
        }
        parse_iso_date(f[0]);
        const int h = parse_int(f[1], line_no);
        if (h < 1) throw Error(ErrorKind::ParseError, "forecast bundle line " + std::to_string(line_no) + ": horizon < 1");
        auto [eit, inserted] = expert_pos.emplace(f[2], static_cast<int>(out.experts.size()));
        if (inserted) out.experts.push_back(f[2]);
        const int series = index.column(f[3]);
        const double v = parse_value(f[4], line_no);
        if (!cells[{f[0], h}].emplace(std::pair{eit->second, series}, v).second) {
            throw Error(ErrorKind::DuplicateRow, "forecast bundle line " + std::to_string(line_no) + ": repeated cell");
        }
    }
    const int n = index.n();
    const int p = static_cast<int>(out.experts.size());
    for (const auto& [key, vals] : cells) {
        if (static_cast<int>(vals.size()) != n * p) {
            for (int j = 0; j < p; ++j) {
                for (int i = 0; i < n; ++i) {
                    if (!vals.count({j, i})) {
                        throw Error(ErrorKind::UnbalancedBundle,
                                    "origin " + key.first + ", horizon " + std::to_string(key.second) + ": expert '" +
                                        out.experts[static_cast<std::size_t>(j)] + "' has no forecast for '" +
                                        index.ids()[static_cast<std::size_t>(i)] + "'");
                    }
                }
            }
        }
        Eigen::VectorXd v(static_cast<Eigen::Index>(n) * p);
        for (const auto& [cell, value] : vals) v(static_cast<Eigen::Index>(cell.first) * n + cell.second) = value;
        out.bundles.emplace(key, ForecastBundle(std::move(v), n, p));
    }
    return out;
}

ImportedForecasts import_forecast_bundle(const std::filesystem::path& path, const ConstraintMatrix& index) {
    auto in = open_in(path);
    return parse_forecast_bundle(in, index);
}

namespace {

std::vector<std::pair<std::string, std::vector<int>>> report_columns(int H) {
    std::vector<std::pair<std::string, std::vector<int>>> cols;
    for (int h : table_horizons(H)) cols.push_back({std::to_string(h), {h}});
    cols.push_back({"1:" + std::to_string(H), all_horizons(H)});
    return cols;
}

}  // namespace

void write_report_csv(std::ostream& out, const EvalReport& report) {
    out << "approach,series,horizon,metric,value\n";
    const int H = report.max_horizon;
    for (const auto& a : report.approaches) {
        for (int h = 1; h <= H; ++h) {
            const auto hi = static_cast<std::size_t>(h - 1);
            for (std::size_t i = 0; i < report.series_ids.size(); ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                out << a.id << ',' << report.series_ids[i] << ',' << h << ",MAE," << fmt_num(a.scores.mae[hi](ii)) << '\n';
                out << a.id << ',' << report.series_ids[i] << ',' << h << ",MSE," << fmt_num(a.scores.mse[hi](ii)) << '\n';
            }
        }
    }
    out << report.benchmark << ",*,*,benchmark,1\n";
    for (const auto& a : report.approaches) {
        for (int h = 1; h <= H; ++h) {
            out << a.id << ",*," << h << ",Q," << a.scores.cases[static_cast<std::size_t>(h - 1)] << '\n';
        }
        for (const auto& [label, hs] : report_columns(H)) {
            std::string mae = "nan", mse = "nan";
            try {
                const ArMetrics ar = ar_relative(report, a.id, report.benchmark, hs);
                mae = fmt_num(ar.mae);
                mse = fmt_num(ar.mse);
            } catch (const Error&) {
            }
            out << a.id << ",*," << label << ",AR-MAE," << mae << '\n';
            out << a.id << ",*," << label << ",AR-MSE," << mse << '\n';
        }
        out << a.id << ",*,*,failures," << a.failures << '\n';
        out << a.id << ",*,*,max_residual," << fmt_num(a.max_residual) << '\n';
    }
}

void write_coherence_csv(std::ostream& out, const EvalReport& report) {
    out << "approach,origin,horizon,residual\n";
    for (const auto& r : report.audit) {
        out << r.approach << ',' << r.origin << ',' << r.horizon << ',' << fmt_num(r.residual) << '\n';
    }
}

void write_residual_panel_csv(std::ostream& out, const ResidualPanel& panel, const std::vector<std::string>& experts,
                              const std::vector<std::string>& series) {
    if (static_cast<int>(experts.size()) != panel.p() || static_cast<int>(series.size()) != panel.n()) {
        throw Error(ErrorKind::DimensionMismatch, "residual dump: label counts do not match the panel");
    }
    for (int j = 0; j < panel.p(); ++j) {
        for (int i = 0; i < panel.n(); ++i) {
            out << (j || i ? "," : "") << experts[static_cast<std::size_t>(j)] << ':' << series[static_cast<std::size_t>(i)];
        }
    }
    out << '\n';
    const auto& E = panel.residuals();
    for (Eigen::Index t = 0; t < E.rows(); ++t) {
        for (Eigen::Index c = 0; c < E.cols(); ++c) out << (c ? "," : "") << fmt_num(E(t, c));
        out << '\n';
    }
}

ArTable make_ar_table(const EvalReport& report) {
    std::stringstream ss;
    write_report_csv(ss, report);
    return parse_report_csv(ss);
}

ArTable parse_report_csv(std::istream& in) {
    expect_header(in, "approach,series,horizon,metric,value", "report");
    ArTable t;
    std::set<std::string> seen_cols;
    std::string line;
    std::size_t line_no = 1;
    auto num = [&](const std::string& s) {
        if (s == "nan") return std::nan("");
        return parse_value(s, line_no);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        if (f.size() != 5) throw Error(ErrorKind::ParseError, "report line " + std::to_string(line_no) + ": expected 5 fields");
        const std::string& app = f[0];
        const std::string& metric = f[3];
        if (std::find(t.approaches.begin(), t.approaches.end(), app) == t.approaches.end()) t.approaches.push_back(app);
        if (metric == "benchmark") {
            t.benchmark = app;
        } else if (metric == "AR-MAE" || metric == "AR-MSE") {
            if (seen_cols.insert(f[2]).second) t.columns.push_back(f[2]);
            auto& cell = t.values[{app, f[2]}];
            (metric == "AR-MAE" ? cell.first : cell.second) = num(f[4]);
        } else if (metric == "failures") {
            t.failures[app] = parse_int(f[4], line_no);
        } else if (metric == "max_residual") {
            t.max_residual[app] = num(f[4]);
        }
    }
    if (t.columns.empty()) throw Error(ErrorKind::ParseError, "report has no AR-MAE/AR-MSE rows");
    return t;
}

std::string format_ar_table(const ArTable& t) {
    std::size_t w = 8;
    for (const auto& a : t.approaches) w = std::max(w, a.size() + 1);
    std::ostringstream os;
    auto cell = [](double v) {
        char buf[32];
        if (std::isnan(v)) return std::string("     -");
        std::snprintf(buf, sizeof buf, "%6.3f", v);
        return std::string(buf);
    };
    const std::size_t block = t.columns.size() * 7;
    auto pad = [](std::string s, std::size_t width) {
        if (s.size() < width) s.append(width - s.size(), ' ');
        return s;
    };
    os << pad("", w) << "| " << pad("AR-MAE", block) << "| " << "AR-MSE" << '\n';
    os << pad("Approach", w) << "| ";
    for (const auto& c : t.columns) os << pad(c, 6) << ' ';
    os << "| ";
    for (const auto& c : t.columns) os << pad(c, 6) << ' ';
    os << "| coherent  failures\n";
    os << std::string(w + 2 * block + 25, '-') << '\n';
    for (const auto& a : t.approaches) {
        os << pad(a, w) << "| ";
        for (const auto& c : t.columns) {
            auto it = t.values.find({a, c});
            os << cell(it == t.values.end() ? std::nan("") : it->second.first) << ' ';
        }
        os << "| ";
        for (const auto& c : t.columns) {
            auto it = t.values.find({a, c});
            os << cell(it == t.values.end() ? std::nan("") : it->second.second) << ' ';
        }
        auto r = t.max_residual.find(a);
        const bool coherent = r != t.max_residual.end() && r->second <= 1e-8;
        auto fl = t.failures.find(a);
        os << "| " << pad(coherent ? "yes" : "no", 10) << (fl == t.failures.end() ? 0 : fl->second) << '\n';
    }
    os << "benchmark: " << t.benchmark << '\n';
    return os.str();
}

}  // namespace occ
