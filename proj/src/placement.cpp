#include "rfold/placement.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>

namespace rfold {

std::string to_string(PolicyKind p) {
    switch (p) {
        case PolicyKind::FirstFit: return "firstfit";
        case PolicyKind::Folding: return "folding";
        case PolicyKind::Reconfig: return "reconfig";
        default: return "rfold";
    }
}

std::optional<PolicyKind> policy_from_string(const std::string& name) {
    if (name == "firstfit") return PolicyKind::FirstFit;
    if (name == "folding") return PolicyKind::Folding;
    if (name == "reconfig") return PolicyKind::Reconfig;
    if (name == "rfold") return PolicyKind::RFold;
    return std::nullopt;
}

bool policy_compatible(PolicyKind p, const ClusterSpec& spec) {
    bool wants_static = p == PolicyKind::FirstFit || p == PolicyKind::Folding;
    return wants_static == spec.static_mode;
}

XpuId PlacementPlan::anchor() const {
    XpuId best;
    bool first = true;
    for (const auto& [c, x] : mapping.assignment)
        if (first || x < best) {
            best = x;
            first = false;
        }
    return best;
}

namespace {

// 3D busy-count prefix sums, one table per cube (one total in static mode),
// so block-free queries cost O(1) per corner.
struct OccupancyIndex {
    const ClusterState& state;
    int ex, ey, ez, cubes;
    std::vector<int32_t> ps;

    explicit OccupancyIndex(const ClusterState& s) : state(s) {
        ex = s.spec().extent(Dim::X);
        ey = s.spec().extent(Dim::Y);
        ez = s.spec().extent(Dim::Z);
        cubes = s.spec().static_mode ? 1 : s.spec().cube_count;
        const long stride = static_cast<long>(ex + 1) * (ey + 1) * (ez + 1);
        ps.assign(stride * cubes, 0);
        for (int c = 0; c < cubes; ++c) {
            int32_t* t = ps.data() + stride * c;
            auto at = [&](int x, int y, int z) -> int32_t& {
                return t[(static_cast<long>(x) * (ey + 1) + y) * (ez + 1) + z];
            };
            for (int x = 1; x <= ex; ++x)
                for (int y = 1; y <= ey; ++y)
                    for (int z = 1; z <= ez; ++z) {
                        XpuId id{c, Coord{x - 1, y - 1, z - 1}};
                        int busy = state.busy_bitmap()[state.xpu_index(id)] ? 1 : 0;
                        at(x, y, z) = busy + at(x - 1, y, z) + at(x, y - 1, z) + at(x, y, z - 1) -
                                      at(x - 1, y - 1, z) - at(x - 1, y, z - 1) -
                                      at(x, y - 1, z - 1) + at(x - 1, y - 1, z - 1);
                    }
        }
    }

    int32_t busy_in(int cube, int x0, int x1, int y0, int y1, int z0, int z1) const {
        const long stride = static_cast<long>(ex + 1) * (ey + 1) * (ez + 1);
        const int32_t* t = ps.data() + stride * cube;
        auto at = [&](int x, int y, int z) -> int32_t {
            return t[(static_cast<long>(x) * (ey + 1) + y) * (ez + 1) + z];
        };
        return at(x1, y1, z1) - at(x0, y1, z1) - at(x1, y0, z1) - at(x1, y1, z0) +
               at(x0, y0, z1) + at(x0, y1, z0) + at(x1, y0, z0) - at(x0, y0, z0);
    }

    /// Block given per-dim as up to two segments (wrapped blocks split).
    bool block_free(int cube, const std::array<std::vector<std::pair<int, int>>, 3>& segs) const {
        for (const auto& [x0, xl] : segs[0])
            for (const auto& [y0, yl] : segs[1])
                for (const auto& [z0, zl] : segs[2])
                    if (busy_in(cube, x0, x0 + xl, y0, y0 + yl, z0, z0 + zl) > 0) return false;
        return true;
    }
};

std::array<std::vector<std::pair<int, int>>, 3> block_segments(const int lo[3], const int size[3],
                                                               const int ext[3]) {
    std::array<std::vector<std::pair<int, int>>, 3> segs;
    for (int d = 0; d < 3; ++d) {
        if (lo[d] + size[d] <= ext[d]) {
            segs[d].push_back({lo[d], size[d]});
        } else {  // wrapped block
            segs[d].push_back({lo[d], ext[d] - lo[d]});
            segs[d].push_back({0, lo[d] + size[d] - ext[d]});
        }
    }
    return segs;
}

PlanCost plan_cost(const ClusterState& state, const PlacementMapping& mapping) {
    PlanCost cost;
    std::set<int> cubes;
    for (const auto& [c, x] : mapping.assignment) cubes.insert(x.cube);
    cost.cubes_used = static_cast<int>(cubes.size());
    if (!state.spec().static_mode) {
        std::set<LinkId> wraps;
        for (const auto& ring : mapping.rings)
            for (const auto& l : ring.links)
                if (l.kind == LinkKind::Wrap) wraps.insert(l);
        cost.ocs_circuits_used = static_cast<int>(wraps.size());
    }
    return cost;
}

PlacementMapping build_mapping(const FoldVariant& variant,
                               const std::function<XpuId(const Coord&)>& xpu_of_target,
                               std::vector<RealizedRing> rings) {
    PlacementMapping m;
    CommGraph g = comm_graph(variant.source);
    m.assignment.reserve(g.nodes.size());
    for (size_t i = 0; i < g.nodes.size(); ++i)
        m.assignment.emplace_back(g.nodes[i], xpu_of_target(variant.node_map[i]));
    std::sort(m.assignment.begin(), m.assignment.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    m.rings = std::move(rings);
    m.mode = Mode::RingComplete;
    for (const auto& r : m.rings)
        if (!r.closed) m.mode = Mode::LineComplete;
    return m;
}

// --- static-torus block embedding ------------------------------------------------

std::optional<PlacementPlan> embed_variant_static(const ClusterState& state,
                                                  const OccupancyIndex& occ,
                                                  const FoldVariant& variant, Mode requested) {
    const int ext[3] = {occ.ex, occ.ey, occ.ez};
    int size[3];
    for (int d = 0; d < 3; ++d) {
        size[d] = variant.target[d];
        if (size[d] > ext[d]) return std::nullopt;
        bool need_wrap = variant.interior_wrap[d] ||
                         (requested == Mode::RingComplete && variant.closure_wrap[d]);
        if (need_wrap && size[d] != ext[d]) return std::nullopt;
    }

    auto links = [&state](const XpuId& u, const XpuId& v) { return state.links_between(u, v); };

    // Lexicographic anchor scan; a dimension the block spans fully pins its
    // anchor at 0, the rest may wrap around the torus edge.
    const int ax = size[0] == ext[0] ? 1 : ext[0];
    const int ay = size[1] == ext[1] ? 1 : ext[1];
    const int az = size[2] == ext[2] ? 1 : ext[2];
    for (int ox = 0; ox < ax; ++ox)
        for (int oy = 0; oy < ay; ++oy)
            for (int oz = 0; oz < az; ++oz) {
                int lo[3] = {ox, oy, oz};
                if (!occ.block_free(0, block_segments(lo, size, ext))) continue;
                auto xpu_of = [&](const Coord& t) {
                    return XpuId{0, Coord{(ox + t.x) % ext[0], (oy + t.y) % ext[1],
                                          (oz + t.z) % ext[2]}};
                };
                auto rings = realize_rings(variant, xpu_of, links, requested);
                if (!rings) continue;
                PlacementPlan plan;
                plan.shape = variant.source;
                plan.variant_kind = variant.kind;
                plan.mapping = build_mapping(variant, xpu_of, std::move(*rings));
                if (requested == Mode::RingComplete &&
                    plan.mapping.mode != Mode::RingComplete) continue;
                plan.cost = plan_cost(state, plan.mapping);
                plan.cost.cubes_used = 1;  // the single static torus
                return plan;
            }
    return std::nullopt;
}

// --- reconfigurable embedding -----------------------------------------------------

std::optional<PlacementPlan> embed_variant_reconfig(const ClusterState& state,
                                                    const OccupancyIndex& occ,
                                                    const FoldVariant& variant, Mode requested,
                                                    long assign_budget = 100'000) {
    const ClusterSpec& spec = state.spec();
    const int n = spec.cube_size;
    const int cube_count = spec.cube_count;

    int t[3], k[3];
    long cells_needed = 1;
    for (int d = 0; d < 3; ++d) {
        t[d] = variant.target[d];
        k[d] = (t[d] + n - 1) / n;
        cells_needed *= k[d];
        bool can_wrap = t[d] % n == 0;
        bool need_wrap = variant.interior_wrap[d] ||
                         (requested == Mode::RingComplete && variant.closure_wrap[d]);
        if (need_wrap && !can_wrap) return std::nullopt;
    }
    if (cells_needed > cube_count) return std::nullopt;
    if (variant.target.size() > state.free_xpus()) return std::nullopt;

    // Piece geometry. Chained dims use full [0,n) pieces with the remainder
    // last, anchored at 0; a singleton dim narrower than the cube shares one
    // anchor offset across all pieces, searched exhaustively.
    auto piece_size = [&](int d, int cell) { return cell < k[d] - 1 ? n : t[d] - (k[d] - 1) * n; };
    int anchor_range[3];
    for (int d = 0; d < 3; ++d) anchor_range[d] = (k[d] == 1 && t[d] < n) ? n - t[d] + 1 : 1;

    const long cell_total = cells_needed;
    auto cell_index = [&](int u, int v, int w) { return (u * k[1] + v) * k[2] + w; };

    // Cubes in most-utilized-first order, index ascending on ties.
    std::vector<int> cube_order(cube_count);
    std::iota(cube_order.begin(), cube_order.end(), 0);
    std::stable_sort(cube_order.begin(), cube_order.end(), [&](int a, int b) {
        return state.busy_in_cube(a) > state.busy_in_cube(b);
    });

    const int ext[3] = {n, n, n};
    for (int ox = 0; ox < anchor_range[0]; ++ox)
        for (int oy = 0; oy < anchor_range[1]; ++oy)
            for (int oz = 0; oz < anchor_range[2]; ++oz) {
                const int offset[3] = {ox, oy, oz};
                // Cells of the same piece geometry are interchangeable, so
                // the cell-to-cube assignment is a bipartite matching. Kuhn's
                // augmenting paths over cubes in most-utilized-first order:
                // complete, deterministic, and bounded by the node budget.
                auto type_of = [&](long idx) {
                    int u = static_cast<int>(idx / (k[1] * k[2]));
                    int v = static_cast<int>(idx / k[2] % k[1]);
                    int w = static_cast<int>(idx % k[2]);
                    const int cell[3] = {u, v, w};
                    int t = 0;
                    for (int d = 0; d < 3; ++d) t = t * 2 + (cell[d] == k[d] - 1 ? 1 : 0);
                    return t;
                };
                // fits_cache[type][cube]: -1 unknown, 0 no, 1 yes
                std::array<std::vector<int8_t>, 8> fits_cache;
                auto fits = [&](long idx, int cube) {
                    int type = type_of(idx);
                    if (fits_cache[type].empty()) fits_cache[type].assign(cube_count, -1);
                    int8_t& memo = fits_cache[type][cube];
                    if (memo < 0) {
                        int u = static_cast<int>(idx / (k[1] * k[2]));
                        int v = static_cast<int>(idx / k[2] % k[1]);
                        int w = static_cast<int>(idx % k[2]);
                        const int cell[3] = {u, v, w};
                        int lo[3], size[3];
                        for (int d = 0; d < 3; ++d) {
                            size[d] = piece_size(d, cell[d]);
                            lo[d] = k[d] == 1 ? offset[d] : 0;
                        }
                        memo = occ.block_free(cube, block_segments(lo, size, ext)) ? 1 : 0;
                    }
                    return memo == 1;
                };
                std::vector<int> cell_cube(cell_total, -1);
                std::vector<long> cube_cell(cube_count, -1);
                std::vector<uint8_t> visited(cube_count, 0);
                long budget = assign_budget;
                std::function<bool(long)> augment = [&](long idx) -> bool {
                    for (int cube : cube_order) {
                        if (budget-- <= 0) return false;
                        if (visited[cube] || !fits(idx, cube)) continue;
                        visited[cube] = 1;
                        if (cube_cell[cube] < 0 || augment(cube_cell[cube])) {
                            cube_cell[cube] = idx;
                            cell_cube[idx] = cube;
                            return true;
                        }
                    }
                    return false;
                };
                bool matched = true;
                for (long idx = 0; idx < cell_total && matched; ++idx) {
                    std::fill(visited.begin(), visited.end(), 0);
                    matched = augment(idx);
                }
                if (!matched) continue;

                auto xpu_of = [&](const Coord& tc) {
                    int cell[3], off[3];
                    for (int d = 0; d < 3; ++d) {
                        if (k[d] == 1) {
                            cell[d] = 0;
                            off[d] = offset[d] + tc[d];
                        } else {
                            cell[d] = tc[d] / n;
                            off[d] = tc[d] % n;
                        }
                    }
                    return XpuId{cell_cube[cell_index(cell[0], cell[1], cell[2])],
                                 Coord{off[0], off[1], off[2]}};
                };

                // Planned inter-piece wiring: cell adjacency along each dim,
                // plus the chain-closing pair when the extent divides evenly.
                std::array<std::unordered_map<int, int>, 3> planned;  // out cube -> in cube
                for (int d = 0; d < 3; ++d) {
                    std::vector<std::array<int, 3>> cells;
                    for (int u = 0; u < k[0]; ++u)
                        for (int v = 0; v < k[1]; ++v)
                            for (int w = 0; w < k[2]; ++w) cells.push_back({u, v, w});
                    for (const auto& cell : cells) {
                        if (cell[d] + 1 < k[d]) {
                            auto next = cell;
                            next[d]++;
                            planned[d][cell_cube[cell_index(cell[0], cell[1], cell[2])]] =
                                cell_cube[cell_index(next[0], next[1], next[2])];
                        } else if (t[d] % n == 0 && t[d] >= 3) {
                            auto first = cell;
                            first[d] = 0;
                            planned[d][cell_cube[cell_index(cell[0], cell[1], cell[2])]] =
                                cell_cube[cell_index(first[0], first[1], first[2])];
                        }
                    }
                }

                auto links = [&](const XpuId& u, const XpuId& v) {
                    auto ls = state.links_between(u, v);
                    for (int d = 0; d < 3; ++d) {
                        bool cross_equal = true;
                        for (int o = 0; o < 3; ++o)
                            if (o != d && u.coord[o] != v.coord[o]) cross_equal = false;
                        if (!cross_equal) continue;
                        const XpuId* hi = nullptr;
                        const XpuId* lo_x = nullptr;
                        if (u.coord[d] == n - 1 && v.coord[d] == 0) {
                            hi = &u;
                            lo_x = &v;
                        } else if (v.coord[d] == n - 1 && u.coord[d] == 0) {
                            hi = &v;
                            lo_x = &u;
                        }
                        if (!hi) continue;
                        auto it = planned[d].find(hi->cube);
                        if (it == planned[d].end() || it->second != lo_x->cube) continue;
                        LinkId link = LinkId::make(LinkKind::Wrap, u, v, static_cast<Dim>(d));
                        if (std::find(ls.begin(), ls.end(), link) == ls.end()) ls.push_back(link);
                    }
                    return ls;
                };

                auto rings = realize_rings(variant, xpu_of, links, requested);
                if (!rings) continue;

                PlacementPlan plan;
                plan.shape = variant.source;
                plan.variant_kind = variant.kind;
                plan.mapping = build_mapping(variant, xpu_of, std::move(*rings));
                if (requested == Mode::RingComplete &&
                    plan.mapping.mode != Mode::RingComplete) continue;
                plan.cost = plan_cost(state, plan.mapping);

                // Circuits the plan must program: every wrap link its rings
                // use that is not wired exactly so already.
                std::set<LinkId> wraps;
                for (const auto& ring : plan.mapping.rings)
                    for (const auto& l : ring.links)
                        if (l.kind == LinkKind::Wrap) wraps.insert(l);
                for (const LinkId& l : wraps) {
                    const XpuId& out_x = l.a.coord[dim_index(l.dim)] == n - 1 ? l.a : l.b;
                    const XpuId& in_x = l.a.coord[dim_index(l.dim)] == n - 1 ? l.b : l.a;
                    PortId out_port{out_x, l.dim, Sign::Plus};
                    PortId in_port{in_x, l.dim, Sign::Minus};
                    auto current = state.circuit_on(out_port);
                    if (current && current->in_port.xpu == in_x) continue;  // already wired
                    plan.circuits_to_set.emplace_back(out_port, in_port);
                }
                return plan;
            }
    return std::nullopt;
}

// 1D free-form plans: a found cycle (or open path) hosting the single ring.
std::optional<PlacementPlan> one_d_plan(const ClusterState& state, const Shape& shape,
                                        bool cycle) {
    auto found = cycle ? find_cycle(state, shape.size()) : find_path(state, shape.size());
    if (!found) return std::nullopt;
    FoldVariant ident = identity_variant(Shape{static_cast<int>(shape.size()), 1, 1});
    auto xpu_of = [&](const Coord& t) { return (*found)[t.x]; };
    auto links = [&state](const XpuId& u, const XpuId& v) { return state.links_between(u, v); };
    auto rings = realize_rings(ident, xpu_of, links,
                               cycle ? Mode::RingComplete : Mode::LineComplete);
    if (!rings) return std::nullopt;

    // Re-key the assignment by the job's own (possibly rotated) 1D coords.
    PlacementPlan plan;
    plan.shape = shape;
    plan.variant_kind = cycle ? "cycle" : "snake";
    CommGraph g = comm_graph(shape);
    PlacementMapping m;
    for (size_t i = 0; i < g.nodes.size(); ++i)
        m.assignment.emplace_back(g.nodes[i], (*found)[i]);
    std::sort(m.assignment.begin(), m.assignment.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    m.rings = std::move(*rings);
    m.mode = Mode::RingComplete;
    for (const auto& r : m.rings)
        if (!r.closed) m.mode = Mode::LineComplete;
    plan.mapping = std::move(m);
    plan.cost = plan_cost(state, plan.mapping);
    if (state.spec().static_mode) plan.cost.cubes_used = 1;
    return plan;
}

}  // namespace

// --- policies ----------------------------------------------------------------------

std::optional<PlacementPlan> first_fit(const ClusterState& state, const Shape& shape) {
    if (!state.spec().static_mode) throw ConfigError("first_fit requires a static torus");
    OccupancyIndex occ(state);
    for (const FoldVariant& rot : rotation_variants(shape)) {
        auto plan = embed_variant_static(state, occ, rot, Mode::LineComplete);
        if (plan) return plan;
    }
    return std::nullopt;
}

std::optional<PlacementPlan> folding_place(const ClusterState& state, const Shape& shape) {
    if (!state.spec().static_mode) throw ConfigError("folding_place requires a static torus");
    OccupancyIndex occ(state);
    const bool one_d = shape.dims() <= 1;
    if (one_d) {
        if (auto plan = one_d_plan(state, shape, true)) return plan;
    }
    auto variants = enumerate_folds(shape, state.spec());
    for (const auto& v : variants)
        if (auto plan = embed_variant_static(state, occ, v, Mode::RingComplete)) return plan;
    for (const auto& v : variants)
        if (auto plan = embed_variant_static(state, occ, v, Mode::LineComplete)) return plan;
    if (one_d) {
        if (auto plan = one_d_plan(state, shape, false)) return plan;
    }
    return std::nullopt;
}

std::optional<PlacementPlan> reconfig_place(const ClusterState& state, const Shape& shape) {
    if (state.spec().static_mode) throw ConfigError("reconfig_place requires OCS cubes");
    OccupancyIndex occ(state);
    std::vector<PlacementPlan> plans;
    for (const FoldVariant& rot : rotation_variants(shape)) {
        // Closure is decided by divisibility: the line request closes rings
        // opportunistically exactly when the chain wraps.
        auto plan = embed_variant_reconfig(state, occ, rot, Mode::LineComplete);
        if (plan) plans.push_back(std::move(*plan));
    }
    if (plans.empty()) return std::nullopt;
    return rank(plans);
}

std::optional<PlacementPlan> rfold_place(const ClusterState& state, const Shape& shape) {
    if (state.spec().static_mode) throw ConfigError("rfold_place requires OCS cubes");
    OccupancyIndex occ(state);
    std::vector<PlacementPlan> plans;
    const bool one_d = shape.dims() <= 1;
    if (one_d) {
        if (auto plan = one_d_plan(state, shape, true)) plans.push_back(std::move(*plan));
    }

    auto variants = enumerate_folds(shape, state.spec());
    const int n = state.spec().cube_size;
    auto cube_lower_bound = [&](const FoldVariant& v) {
        long cells = 1;
        for (int d = 0; d < 3; ++d) cells *= (v.target[d] + n - 1) / n;
        return cells;
    };
    std::stable_sort(variants.begin(), variants.end(), [&](const auto& a, const auto& b) {
        return cube_lower_bound(a) < cube_lower_bound(b);
    });

    auto best_key = [&]() -> std::pair<int, long> {
        const PlacementPlan& b = rank(plans);
        return {b.mode() == Mode::RingComplete ? 0 : 1, b.cost.cubes_used};
    };
    for (const auto& v : variants) {
        if (!plans.empty()) {
            auto [bmode, bcubes] = best_key();
            if (bmode == 0 && cube_lower_bound(v) > bcubes) continue;  // cannot win
        }
        if (auto plan = embed_variant_reconfig(state, occ, v, Mode::RingComplete)) {
            plans.push_back(std::move(*plan));
        } else if (auto line = embed_variant_reconfig(state, occ, v, Mode::LineComplete)) {
            plans.push_back(std::move(*line));
        }
    }
    if (plans.empty() && one_d) {
        if (auto plan = one_d_plan(state, shape, false)) plans.push_back(std::move(*plan));
    }
    if (plans.empty()) return std::nullopt;
    return rank(plans);
}

std::optional<PlacementPlan> place(PolicyKind policy, const ClusterState& state,
                                   const Shape& shape) {
    if (!policy_compatible(policy, state.spec()))
        throw ConfigError("policy " + to_string(policy) + " incompatible with " +
                          state.spec().to_string());
    switch (policy) {
        case PolicyKind::FirstFit: return first_fit(state, shape);
        case PolicyKind::Folding: return folding_place(state, shape);
        case PolicyKind::Reconfig: return reconfig_place(state, shape);
        default: return rfold_place(state, shape);
    }
}

const PlacementPlan& rank(const std::vector<PlacementPlan>& plans) {
    if (plans.empty()) throw ConfigError("rank() requires a non-empty plan list");
    auto key = [](const PlacementPlan& p) {
        XpuId a = p.anchor();
        return std::tuple(p.mode() == Mode::RingComplete ? 0 : 1, p.cost.cubes_used,
                          p.cost.ocs_circuits_used, a.cube, a.coord);
    };
    const PlacementPlan* best = &plans.front();
    auto best_k = key(*best);
    for (const auto& p : plans) {
        auto k = key(p);
        if (k < best_k) {
            best = &p;
            best_k = k;
        }
    }
    return *best;
}

FeasibilityCache::FeasibilityCache(PolicyKind policy, const ClusterSpec& spec)
    : policy_(policy), pristine_(spec) {}

bool FeasibilityCache::feasible_on_empty(const Shape& shape) {
    auto it = memo_.find(shape);
    if (it != memo_.end()) return it->second;
    bool ok = place(policy_, pristine_, shape).has_value();
    memo_.emplace(shape, ok);
    return ok;
}

bool feasible_on_empty(PolicyKind policy, const Shape& shape, const ClusterSpec& spec) {
    FeasibilityCache cache(policy, spec);
    return cache.feasible_on_empty(shape);
}

void commit(ClusterState& state, const PlacementPlan& plan, const std::string& job_id) {
    // Full re-verification before any mutation.
    for (const auto& [c, x] : plan.mapping.assignment)
        if (!state.xpu_valid(x) || !state.xpu_free(x))
            throw StalePlanError("XPU taken since planning: " + to_string(x));

    std::set<LinkId> pending;
    for (const auto& [out_port, in_port] : plan.circuits_to_set) {
        for (const PortId* p : {&out_port, &in_port}) {
            auto existing = state.circuit_on(*p);
            if (existing && state.link_owner(state.link_of(*existing)))
                throw StalePlanError("circuit port busy since planning");
        }
        pending.insert(
            LinkId::make(LinkKind::Wrap, out_port.xpu, in_port.xpu, out_port.dim));
    }
    for (const LinkId& l : plan.mapping.all_links()) {
        if (pending.count(l)) continue;
        if (!state.link_exists(l))
            throw StalePlanError("link vanished since planning: " + to_string(l));
        if (state.link_owner(l)) throw StalePlanError("link taken since planning");
    }

    for (const auto& [out_port, in_port] : plan.circuits_to_set)
        state.set_circuit(out_port, in_port);
    auto xpus = plan.mapping.xpus();
    auto links = plan.mapping.all_links();
    state.allocate(job_id, xpus, links);
}

}  // namespace rfold
