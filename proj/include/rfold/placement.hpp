#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rfold/shapes.hpp"
#include "rfold/topology.hpp"
#include "rfold/workload.hpp"

namespace rfold {

enum class PolicyKind : int { FirstFit = 0, Folding = 1, Reconfig = 2, RFold = 3 };

std::string to_string(PolicyKind p);
std::optional<PolicyKind> policy_from_string(const std::string& name);

/// FirstFit/Folding run on a static torus, Reconfig/RFold on a
/// reconfigurable one.
bool policy_compatible(PolicyKind p, const ClusterSpec& spec);

struct PlanCost {
    int cubes_used = 0;
    int ocs_circuits_used = 0;
};

/// A committable allocation candidate. Planning never mutates state; the
/// plan carries the OCS circuits that commit() will program.
struct PlacementPlan {
    Shape shape;               // the job's original logical shape
    std::string variant_kind;  // identity / serpentine / reflection / cycle / snake
    PlacementMapping mapping;
    std::vector<std::pair<PortId, PortId>> circuits_to_set;
    PlanCost cost;

    Mode mode() const { return mapping.mode; }
    /// Smallest mapped XPU; the deterministic ranking tiebreak.
    XpuId anchor() const;
};

/// Static torus: first fully free axis-aligned block over rotations in
/// deterministic order, anchors scanned lexicographically (wrapped blocks
/// allowed).
std::optional<PlacementPlan> first_fit(const ClusterState& state, const Shape& shape);

/// Static torus: ring_complete placements of every fold variant (plus a free
/// cycle search for 1D shapes), then line_complete fallbacks. First success.
std::optional<PlacementPlan> folding_place(const ClusterState& state, const Shape& shape);

/// Reconfigurable torus: split each rotation into cube-length pieces laid on
/// a virtual cube grid, assign pieces to physical cubes (most-utilized
/// first), and emit the circuits that stitch them; minimum-cost rotation
/// wins. Rings close only when the extent divides evenly into cubes.
std::optional<PlacementPlan> reconfig_place(const ClusterState& state, const Shape& shape);

/// Reconfigurable torus: reconfig embedding of every fold variant plus free
/// cycle/path plans for 1D shapes, ranked ring-first then by cost.
std::optional<PlacementPlan> rfold_place(const ClusterState& state, const Shape& shape);

std::optional<PlacementPlan> place(PolicyKind policy, const ClusterState& state,
                                   const Shape& shape);

/// Lexicographic minimum by (ring_complete first, cubes_used,
/// ocs_circuits_used, anchor). Throws ConfigError on an empty list.
const PlacementPlan& rank(const std::vector<PlacementPlan>& plans);

/// Memoized can-this-shape-ever-place check against a pristine cluster.
class FeasibilityCache {
  public:
    FeasibilityCache(PolicyKind policy, const ClusterSpec& spec);
    bool feasible_on_empty(const Shape& shape);

  private:
    PolicyKind policy_;
    ClusterState pristine_;
    std::unordered_map<Shape, bool, ShapeHash> memo_;
};

bool feasible_on_empty(PolicyKind policy, const Shape& shape, const ClusterSpec& spec);

/// Re-verify the plan against current state, program its circuits, then
/// allocate. Atomic from the caller's view; throws StalePlanError without
/// mutating when resources were taken since planning.
void commit(ClusterState& state, const PlacementPlan& plan, const std::string& job_id);

}  // namespace rfold
