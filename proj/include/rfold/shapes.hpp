#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rfold/topology.hpp"
#include "rfold/workload.hpp"

namespace rfold {

/// One logical AllReduce ring: the shape's nodes along one dimension at a
/// fixed cross position, in cycle order.
struct Ring {
    Dim dim = Dim::X;
    std::vector<Coord> nodes;
};

/// The set of rings a shape must realize: for every dimension with extent
/// s > 1, one ring of length s per combination of the other two coordinates.
struct CommGraph {
    Shape shape;
    std::vector<Coord> nodes;  // all logical coords, index = shape_node_index
    std::vector<Ring> rings;
};

long shape_node_index(const Shape& s, const Coord& c);
Coord shape_node_at(const Shape& s, long index);

CommGraph comm_graph(const Shape& shape);

/// All distinct coordinate permutations of a shape, deduplicated, in a fixed
/// deterministic order starting with the shape itself.
std::vector<Shape> rotations(const Shape& shape);

enum class Mode : int { RingComplete = 0, LineComplete = 1 };

std::string to_string(Mode m);

/// A homomorphic rewrite of a shape. node_map sends each source coordinate to
/// a target coordinate (bijective); ring_paths give, per source ring, the
/// cyclic order of target coordinates that realizes it. Consecutive path
/// coordinates are single grid hops or, where flagged, wrap hops
/// (coordinate 0 <-> extent-1), which the embedding must provide.
struct FoldVariant {
    Shape source, target;
    std::string kind;  // "identity", "serpentine", "reflection"
    std::vector<Coord> node_map;                 // by source node index
    std::vector<std::vector<Coord>> ring_paths;  // by comm-graph ring index
    // Per target dimension: some ring path takes a wrap hop mid-path
    // (mandatory even for open rings) / only as its cycle-closing hop
    // (droppable in line_complete mode).
    std::array<bool, 3> interior_wrap{false, false, false};
    std::array<bool, 3> closure_wrap{false, false, false};
};

FoldVariant identity_variant(const Shape& shape);

/// The identity variant composed with every distinct rotation: node maps stay
/// keyed by the job's own logical coordinates. Deterministic order, identity
/// first.
std::vector<FoldVariant> rotation_variants(const Shape& shape);

/// The constructive fold catalogue: identity and rotations, serpentine folds
/// of one dimension into a p x q block, and reflection folds
/// (A,B,C) -> (A,B/2,2C) for even B and C == 2, each composed with all
/// rotations. Wrap-assisted variants are emitted only when the context can
/// plausibly wrap a dimension of the required extent. Sound, not complete.
std::vector<FoldVariant> enumerate_folds(const Shape& shape, const ClusterSpec& context);

/// One ring realized on hardware: XPUs in the ring's logical order plus the
/// chosen physical links (size L for a closed cycle, L-1 for an open path,
/// 1 for a two-node ring).
struct RealizedRing {
    std::vector<XpuId> xpus;
    std::vector<LinkId> links;
    bool closed = false;
};

/// A candidate embedding of a job's communication graph. `assignment` maps
/// each logical source coordinate (fold already composed in) to its XPU;
/// `rings` follow the comm-graph ring order.
struct PlacementMapping {
    Mode mode = Mode::LineComplete;
    std::vector<std::pair<Coord, XpuId>> assignment;  // sorted by coord
    std::vector<RealizedRing> rings;

    const XpuId* find(const Coord& c) const;
    std::vector<XpuId> xpus() const;
    std::vector<LinkId> all_links() const;
};

struct Violation {
    std::string what;
};

/// Full-mapping audit against live state: injectivity, free XPUs, physical
/// adjacency of every hop, closure per mode, pairwise edge-disjointness, and
/// link availability. Returns every violation found, not just the first.
std::vector<Violation> verify_mapping(const PlacementMapping& mapping, const CommGraph& comm,
                                      const ClusterState& state);

/// Link lookup used while planning: live links plus any links a plan's
/// pending circuits would create.
using LinkLookup = std::function<std::vector<LinkId>(const XpuId&, const XpuId&)>;

/// Realize every ring path of `variant` through `xpu_of_target`, choosing
/// pairwise-distinct links. Mandatory hops must exist; closing hops must
/// exist in ring mode and are taken opportunistically in line mode.
/// Returns nullopt when a mandatory (or ring-mode closing) hop has no link.
std::optional<std::vector<RealizedRing>> realize_rings(
    const FoldVariant& variant, const std::function<XpuId(const Coord&)>& xpu_of_target,
    const LinkLookup& links_between, Mode requested);

constexpr long kDefaultSearchBudget = 1'000'000;

/// Simple cycle of exactly `length` free XPUs with physical adjacency between
/// consecutive (and wrap-closing) members. Seeded by deterministic serpentine
/// constructions, then budgeted DFS; returns nullopt on absence or budget
/// exhaustion. length 1 = a free XPU, length 2 = a free adjacent pair.
std::optional<std::vector<XpuId>> find_cycle(const ClusterState& state, long length,
                                             long budget = kDefaultSearchBudget);

/// Open simple path of exactly `length` free XPUs (line_complete fallback
/// for 1D shapes).
std::optional<std::vector<XpuId>> find_path(const ClusterState& state, long length,
                                            long budget = kDefaultSearchBudget);

/// Exhaustive embedding oracle for small instances: decides whether the
/// shape's comm graph embeds into a free torus of `target_extents` (wrap
/// links present per `wrap`) in the given mode. Independent of the fold
/// catalogue and placement code; test tooling only. Throws ConfigError when
/// the shape's product exceeds `product_bound`.
bool brute_force_embeddable(const Shape& shape, Coord target_extents, std::array<bool, 3> wrap,
                            Mode mode, long product_bound = 24);

}  // namespace rfold
