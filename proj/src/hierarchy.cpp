#include "occ/hierarchy.hpp"

#include "occ/error.hpp"

#include <set>

namespace occ {

ConstraintMatrix::ConstraintMatrix(Eigen::MatrixXd C, std::vector<std::string> ids, int n_upper)
    : C_(std::move(C)), ids_(std::move(ids)), n_upper_(n_upper) {
    if (static_cast<Eigen::Index>(ids_.size()) != C_.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "constraint matrix: id count does not match column count");
    }
    for (int j = 0; j < static_cast<int>(ids_.size()); ++j) {
        if (!column_.emplace(ids_[j], j).second) {
            throw Error(ErrorKind::DuplicateSeriesId, "duplicate series id '" + ids_[j] + "'");
        }
    }
}

ConstraintMatrix ConstraintMatrix::unconstrained(std::vector<std::string> ids) {
    const auto n = static_cast<Eigen::Index>(ids.size());
    return ConstraintMatrix(Eigen::MatrixXd::Zero(0, n), std::move(ids), 0);
}

int ConstraintMatrix::column(const std::string& id) const {
    auto it = column_.find(id);
    if (it == column_.end()) {
        throw Error(ErrorKind::UnknownSeriesId, "series id '" + id + "' is not in the hierarchy");
    }
    return it->second;
}

bool ConstraintMatrix::contains(const std::string& id) const {
    return column_.count(id) != 0;
}

namespace {

bool is_top_alias(const GroupedHierarchySpec& spec, const std::string& agg_id) {
    return agg_id == spec.top_id;
}

}  // namespace

void validate(const GroupedHierarchySpec& spec) {
    if (spec.top_id.empty()) {
        throw Error(ErrorKind::InconsistentPartition, "hierarchy has no top series");
    }
    if (spec.bottom_ids.empty()) {
        throw Error(ErrorKind::InconsistentPartition, "hierarchy has no bottom series");
    }
    if (spec.groupings.empty()) {
        throw Error(ErrorKind::InconsistentPartition, "hierarchy needs at least one grouping");
    }

    std::set<std::string> seen{spec.top_id};
    std::set<std::string> bottoms;
    for (const auto& b : spec.bottom_ids) {
        if (!seen.insert(b).second) {
            throw Error(ErrorKind::DuplicateSeriesId, "duplicate series id '" + b + "'");
        }
        bottoms.insert(b);
    }

    for (const auto& g : spec.groupings) {
        std::set<std::string> covered;
        for (const auto& [agg_id, members] : g.aggregates) {
            if (!is_top_alias(spec, agg_id) && !seen.insert(agg_id).second) {
                throw Error(ErrorKind::DuplicateSeriesId, "duplicate series id '" + agg_id + "'");
            }
            if (members.empty()) {
                throw Error(ErrorKind::InconsistentPartition,
                            "grouping '" + g.name + "': aggregate '" + agg_id + "' is empty");
            }
            for (const auto& b : members) {
                if (!bottoms.count(b)) {
                    throw Error(ErrorKind::InconsistentPartition,
                                "grouping '" + g.name + "': '" + b + "' is not a bottom series");
                }
                if (!covered.insert(b).second) {
                    throw Error(ErrorKind::InconsistentPartition,
                                "grouping '" + g.name + "': bottom '" + b + "' appears more than once");
                }
            }
            if (is_top_alias(spec, agg_id) && members.size() != bottoms.size()) {
                throw Error(ErrorKind::InconsistentPartition,
                            "grouping '" + g.name + "': top aggregate must cover every bottom");
            }
        }
        if (covered.size() != bottoms.size()) {
            throw Error(ErrorKind::InconsistentPartition,
                        "grouping '" + g.name + "' does not cover every bottom series");
        }
    }
}

ConstraintMatrix build_constraint_matrix(const GroupedHierarchySpec& spec) {
    validate(spec);

    std::vector<std::string> ids{spec.top_id};
    std::vector<const std::vector<std::string>*> members;
    // The top is expressed against the bottoms of the first grouping, which
    // after validation is the full bottom set.
    members.push_back(&spec.bottom_ids);
    for (const auto& g : spec.groupings) {
        for (const auto& [agg_id, m] : g.aggregates) {
            if (is_top_alias(spec, agg_id)) continue;
            ids.push_back(agg_id);
            members.push_back(&m);
        }
    }
    const int n_upper = static_cast<int>(ids.size());
    ids.insert(ids.end(), spec.bottom_ids.begin(), spec.bottom_ids.end());

    std::map<std::string, int> col;
    for (int j = 0; j < static_cast<int>(ids.size()); ++j) col[ids[j]] = j;

    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n_upper, static_cast<Eigen::Index>(ids.size()));
    for (int r = 0; r < n_upper; ++r) {
        C(r, r) = 1.0;
        for (const auto& b : *members[r]) C(r, col.at(b)) = -1.0;
    }
    return ConstraintMatrix(std::move(C), std::move(ids), n_upper);
}

double coherence_residual(const ConstraintMatrix& C, const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (y.size() != C.n()) {
        throw Error(ErrorKind::DimensionMismatch, "coherence_residual: vector length " + std::to_string(y.size()) +
                                                      " does not match n = " + std::to_string(C.n()));
    }
    if (C.n_upper() == 0) return 0.0;
    const double num = (C.matrix() * y).cwiseAbs().maxCoeff();
    const double scale = y.size() > 0 ? y.cwiseAbs().maxCoeff() : 0.0;
    return num / (1.0 + scale);
}

Eigen::VectorXd aggregate_bottom_up(const GroupedHierarchySpec& spec,
                                    const std::map<std::string, double>& bottoms) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(spec.bottom_ids.size()));
    for (std::size_t k = 0; k < spec.bottom_ids.size(); ++k) {
        auto it = bottoms.find(spec.bottom_ids[k]);
        if (it == bottoms.end()) {
            throw Error(ErrorKind::MissingBottomValue, "no value for bottom series '" + spec.bottom_ids[k] + "'");
        }
        b(static_cast<Eigen::Index>(k)) = it->second;
    }
    return aggregate_bottom_up(spec, b);
}

Eigen::VectorXd aggregate_bottom_up(const GroupedHierarchySpec& spec,
                                    const Eigen::Ref<const Eigen::VectorXd>& bottoms) {
    if (bottoms.size() != static_cast<Eigen::Index>(spec.bottom_ids.size())) {
        throw Error(ErrorKind::MissingBottomValue, "expected " + std::to_string(spec.bottom_ids.size()) +
                                                       " bottom values, got " + std::to_string(bottoms.size()));
    }
    return summing_matrix(build_constraint_matrix(spec)) * bottoms;
}

Eigen::MatrixXd summing_matrix(const ConstraintMatrix& C) {
    const int nu = C.n_upper();
    const int nb = C.n_bottom();
    Eigen::MatrixXd S(C.n(), nb);
    S.topRows(nu) = -C.matrix().rightCols(nb);
    S.bottomRows(nb).setIdentity();
    return S;
}

GroupedHierarchySpec make_grid_hierarchy(const std::vector<std::string>& zones,
                                         const std::vector<std::string>& sources,
                                         const std::string& top_id) {
    GroupedHierarchySpec spec;
    spec.top_id = top_id;
    Grouping by_zone{"zones", {}};
    Grouping by_source{"sources", {}};
    for (const auto& s : sources) by_source.aggregates.push_back({s, {}});
    for (const auto& z : zones) {
        std::vector<std::string> cells;
        for (std::size_t k = 0; k < sources.size(); ++k) {
            std::string id = z + "_" + sources[k];
            spec.bottom_ids.push_back(id);
            cells.push_back(id);
            by_source.aggregates[k].second.push_back(id);
        }
        by_zone.aggregates.push_back({z, std::move(cells)});
    }
    spec.groupings = {std::move(by_zone), std::move(by_source)};
    return spec;
}

}  // namespace occ
