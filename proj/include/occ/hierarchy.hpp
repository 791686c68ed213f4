#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace occ {

/// One aggregation tree over the bottom level, e.g. "zones" or "sources".
/// Aggregates keep their declaration order so the column layout is stable.
struct Grouping {
    std::string name;
    std::vector<std::pair<std::string, std::vector<std::string>>> aggregates;
};

/// Grouped hierarchy: every grouping partitions the same bottom set and all
/// of them roll up to a single top series.
struct GroupedHierarchySpec {
    std::string top_id;
    std::vector<std::string> bottom_ids;
    std::vector<Grouping> groupings;
};

/// Zero-constraint matrix C (n_u x n) with C y = 0 for every coherent y.
///
/// Columns are ordered uppers first (top, then each grouping's aggregates in
/// declaration order), then bottoms. Row k carries +1 on upper series k and
/// -1 on every bottom series it aggregates.
class ConstraintMatrix {
public:
    ConstraintMatrix() = default;
    ConstraintMatrix(Eigen::MatrixXd C, std::vector<std::string> ids, int n_upper);

    /// A constraint set with no rows over `ids` (unconstrained combination).
    static ConstraintMatrix unconstrained(std::vector<std::string> ids);

    const Eigen::MatrixXd& matrix() const noexcept { return C_; }
    int n() const noexcept { return static_cast<int>(C_.cols()); }
    int n_upper() const noexcept { return n_upper_; }
    int n_bottom() const noexcept { return n() - n_upper_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    /// Column index of a series id; throws UnknownSeriesId.
    int column(const std::string& id) const;
    bool contains(const std::string& id) const;

private:
    Eigen::MatrixXd C_;
    std::vector<std::string> ids_;
    std::map<std::string, int> column_;
    int n_upper_ = 0;
};

/// Throws DuplicateSeriesId or InconsistentPartition when the spec is invalid.
void validate(const GroupedHierarchySpec& spec);

/// Builds C from a validated spec. An aggregate whose id equals the top id is
/// accepted (it must cover every bottom) and folded into the top row.
ConstraintMatrix build_constraint_matrix(const GroupedHierarchySpec& spec);

/// ||C y||_inf / (1 + ||y||_inf).
double coherence_residual(const ConstraintMatrix& C, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Fills every upper series by summing its bottoms. Output follows the column
/// order of build_constraint_matrix(spec).
Eigen::VectorXd aggregate_bottom_up(const GroupedHierarchySpec& spec,
                                    const std::map<std::string, double>& bottoms);

/// Same as above with bottoms given positionally in bottom_ids order.
Eigen::VectorXd aggregate_bottom_up(const GroupedHierarchySpec& spec,
                                    const Eigen::Ref<const Eigen::VectorXd>& bottoms);

/// Summing matrix S (n x n_b) with y = S b for the column layout of C.
Eigen::MatrixXd summing_matrix(const ConstraintMatrix& C);

/// Convenience builder for zone x source style grids. Bottoms are named
/// "<zone>_<source>" with the zone-major order used throughout the tests.
GroupedHierarchySpec make_grid_hierarchy(const std::vector<std::string>& zones,
                                         const std::vector<std::string>& sources,
                                         const std::string& top_id = "Total");

}  // namespace occ
