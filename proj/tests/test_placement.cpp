#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "rfold/placement.hpp"

using namespace rfold;

namespace {

// Planning never mutates; verification needs the plan's circuits applied.
std::vector<Violation> verify_plan(const ClusterState& state, const PlacementPlan& plan) {
    ClusterState scratch = state;
    for (const auto& [out_port, in_port] : plan.circuits_to_set)
        scratch.set_circuit(out_port, in_port);
    return verify_mapping(plan.mapping, comm_graph(plan.shape), scratch);
}

void occupy_block(ClusterState& s, const std::string& job, Coord lo, Coord hi) {
    std::vector<XpuId> xpus;
    for (int x = lo.x; x <= hi.x; ++x)
        for (int y = lo.y; y <= hi.y; ++y)
            for (int z = lo.z; z <= hi.z; ++z) xpus.push_back(XpuId{0, {x, y, z}});
    s.allocate(job, xpus, {});
}

}  // namespace

TEST_CASE("first_fit: empty torus anchors at the origin") {
    ClusterState s = build_cluster(ClusterSpec::static_torus(16, 16, 16));
    auto plan = first_fit(s, Shape{4, 4, 4});
    REQUIRE(plan.has_value());
    CHECK(plan->anchor() == XpuId{0, {0, 0, 0}});
    CHECK(plan->mapping.assignment.size() == 64);
    CHECK(verify_plan(s, *plan).empty());
}

TEST_CASE("first_fit: a dimension exceeding the torus can never place") {
    ClusterState s = build_cluster(ClusterSpec::static_torus(16, 16, 16));
    CHECK(!first_fit(s, Shape{17, 1, 1}).has_value());
    CHECK(!first_fit(s, Shape{1, 1, 17}).has_value());
}

TEST_CASE("first_fit: lexicographic scan lands after the busy block") {
    ClusterState s = build_cluster(ClusterSpec::static_torus(16, 16, 16));
    occupy_block(s, "front", {0, 0, 0}, {15, 15, 7});
    auto plan = first_fit(s, Shape{16, 16, 8});
    REQUIRE(plan.has_value());
    CHECK(plan->anchor() == XpuId{0, {0, 0, 8}});
    CHECK(verify_plan(s, *plan).empty());
    // Spanning dims close their rings; the z rings of an interior block stay open.
    CHECK(plan->mode() == Mode::LineComplete);
}

TEST_CASE("first_fit: full-span block is ring complete") {
    ClusterState s = build_cluster(ClusterSpec::static_torus(8, 8, 8));
    auto plan = first_fit(s, Shape{8, 8, 8});
    REQUIRE(plan.has_value());
    CHECK(plan->mode() == Mode::RingComplete);
    // extents 1 and 2 also count as closed
    auto small = first_fit(s, Shape{2, 2, 1});
    REQUIRE(small.has_value());
    CHECK(small->mode() == Mode::RingComplete);
}

TEST_CASE("folding_place: 18-node 1D job folds to a cycle on a 4x8x4 torus") {
    ClusterState s = build_cluster(ClusterSpec::static_torus(4, 8, 4));
    auto plan = folding_place(s, Shape{18, 1, 1});
    REQUIRE(plan.has_value());
    CHECK(plan->mode() == Mode::RingComplete);
    CHECK(plan->variant_kind == "cycle");
    CHECK(verify_plan(s, *plan).empty());
}

TEST_CASE("folding_place: fold fits where the identity cannot") {
    // Only a 4x2x3 torus of space: the 1x6x4 job folds into it. The
    // length-4 rings ride the wrapped X dimension, which the block spans.
    ClusterState s = build_cluster(ClusterSpec::static_torus(4, 2, 3));
    auto plan = folding_place(s, Shape{1, 6, 4});
    REQUIRE(plan.has_value());
    CHECK(plan->mode() == Mode::RingComplete);
    CHECK(plan->mapping.assignment.size() == 24);
    CHECK(verify_plan(s, *plan).empty());
}

TEST_CASE("folding_place: 17x17 job never fits a 16^3 torus") {
    ClusterState s = build_cluster(ClusterSpec::static_torus(16, 16, 16));
    CHECK(!folding_place(s, Shape{17, 17, 1}).has_value());
}

TEST_CASE("folding_place: odd 1D falls back to an open snake") {
    ClusterState s = build_cluster(ClusterSpec::static_torus(16, 16, 16));
    auto plan = folding_place(s, Shape{17, 1, 1});
    REQUIRE(plan.has_value());
    CHECK(plan->mode() == Mode::LineComplete);
    CHECK(verify_plan(s, *plan).empty());
}

TEST_CASE("reconfig_place: 4x4x32 chains eight cubes with a closed ring") {
    ClusterState s = build_cluster(ClusterSpec::reconfigurable(64, 4));
    auto plan = reconfig_place(s, Shape{4, 4, 32});
    REQUIRE(plan.has_value());
    CHECK(plan->cost.cubes_used == 8);
    CHECK(plan->mode() == Mode::RingComplete);
    CHECK(verify_plan(s, *plan).empty());
}

TEST_CASE("reconfig_place: 4x4x34 leaves a partial cube and open rings") {
    ClusterState s = build_cluster(ClusterSpec::reconfigurable(64, 4));
    auto plan = reconfig_place(s, Shape{4, 4, 34});
    REQUIRE(plan.has_value());
    CHECK(plan->cost.cubes_used == 9);
    CHECK(plan->mode() == Mode::LineComplete);
    CHECK(verify_plan(s, *plan).empty());
}

TEST_CASE("reconfig_place: a 2x2x2 job needs one cube and no circuits") {
    ClusterState s = build_cluster(ClusterSpec::reconfigurable(64, 4));
    auto plan = reconfig_place(s, Shape{2, 2, 2});
    REQUIRE(plan.has_value());
    CHECK(plan->cost.cubes_used == 1);
    CHECK(plan->cost.ocs_circuits_used == 0);
    CHECK(plan->circuits_to_set.empty());
    CHECK(plan->mode() == Mode::RingComplete);
    CHECK(verify_plan(s, *plan).empty());
}

TEST_CASE("reconfig_place: exact multiples of the cube size close their rings") {
    ClusterState s = build_cluster(ClusterSpec::reconfigurable(64, 4));
    for (const Shape& shape : {Shape{4, 4, 4}, Shape{8, 4, 4}, Shape{8, 8, 8}, Shape{4, 16, 4}}) {
        auto plan = reconfig_place(s, shape);
        REQUIRE(plan.has_value());
        CHECK(plan->mode() == Mode::RingComplete);
    }
}

TEST_CASE("rfold_place: folding beats chaining for 4x8x2") {
    ClusterState s = build_cluster(ClusterSpec::reconfigurable(64, 4));
    auto reconfig = reconfig_place(s, Shape{4, 8, 2});
    auto rfold = rfold_place(s, Shape{4, 8, 2});
    REQUIRE(reconfig.has_value());
    REQUIRE(rfold.has_value());
    CHECK(reconfig->cost.cubes_used == 2);
    CHECK(rfold->cost.cubes_used == 1);
    CHECK(rfold->mode() == Mode::RingComplete);
    CHECK(verify_plan(s, *rfold).empty());
}

TEST_CASE("rfold_place: 18-node 1D job rings inside a single free cube") {
    // Two whole cubes are more than needed: an 18-cycle fits in one 4^3
    // cube, and ranking prefers the fewest cubes.
    ClusterState s = build_cluster(ClusterSpec::reconfigurable(8, 4));
    for (int cube = 0; cube < 6; ++cube) {
        std::vector<XpuId> xpus;
        for (int x = 0; x < 4; ++x)
            for (int y = 0; y < 4; ++y)
                for (int z = 0; z < 4; ++z) xpus.push_back(XpuId{cube, {x, y, z}});
        s.allocate("filler" + std::to_string(cube), xpus, {});
    }
    auto plan = rfold_place(s, Shape{18, 1, 1});
    REQUIRE(plan.has_value());
    CHECK(plan->mode() == Mode::RingComplete);
    CHECK(plan->cost.cubes_used == 1);
    CHECK(verify_plan(s, *plan).empty());
}

TEST_CASE("rfold_place: 18-node 1D job rings across two reconfigured cubes when it must") {
    // No single cube can host 18 XPUs: cube 6 keeps a free 3x4x1 slab and
    // cube 7 a free 3x2x1 slab at the same cross positions, so the only
    // ring-complete option folds the job over a two-cube chain.
    ClusterState s = build_cluster(ClusterSpec::reconfigurable(8, 4));
    for (int cube = 0; cube < 8; ++cube) {
        std::vector<XpuId> xpus;
        for (int x = 0; x < 4; ++x)
            for (int y = 0; y < 4; ++y)
                for (int z = 0; z < 4; ++z) {
                    bool keep_free = (cube == 6 && x < 3 && z == 0) ||
                                     (cube == 7 && x < 3 && y < 2 && z == 0);
                    if (!keep_free) xpus.push_back(XpuId{cube, {x, y, z}});
                }
        s.allocate("filler" + std::to_string(cube), xpus, {});
    }
    auto plan = rfold_place(s, Shape{18, 1, 1});
    REQUIRE(plan.has_value());
    CHECK(plan->mode() == Mode::RingComplete);
    std::set<int> cubes;
    for (const auto& [c, x] : plan->mapping.assignment) cubes.insert(x.cube);
    CHECK(cubes.size() == 2);
    CHECK(!plan->circuits_to_set.empty());
    CHECK(verify_plan(s, *plan).empty());
}

TEST_CASE("rfold_place: identity is already optimal for a cube-shaped job") {
    ClusterState s = build_cluster(ClusterSpec::reconfigurable(64, 4));
    auto reconfig = reconfig_place(s, Shape{4, 4, 4});
    auto rfold = rfold_place(s, Shape{4, 4, 4});
    REQUIRE(reconfig.has_value());
    REQUIRE(rfold.has_value());
    CHECK(rfold->cost.cubes_used == reconfig->cost.cubes_used);
    CHECK(rfold->cost.ocs_circuits_used == reconfig->cost.ocs_circuits_used);
}

TEST_CASE("rank: fewest cubes first, then circuits, then anchor") {
    auto mk = [](Mode mode, int cubes, int circuits, int cube_idx) {
        PlacementPlan p;
        p.mapping.mode = mode;
        p.mapping.assignment.emplace_back(Coord{0, 0, 0}, XpuId{cube_idx, {0, 0, 0}});
        p.cost = {cubes, circuits};
        return p;
    };
    std::vector<PlacementPlan> plans;
    plans.push_back(mk(Mode::RingComplete, 2, 4, 0));
    plans.push_back(mk(Mode::RingComplete, 1, 0, 1));
    CHECK(rank(plans).cost.cubes_used == 1);

    std::vector<PlacementPlan> tie;
    tie.push_back(mk(Mode::RingComplete, 2, 4, 0));
    tie.push_back(mk(Mode::RingComplete, 2, 0, 1));
    CHECK(rank(tie).cost.ocs_circuits_used == 0);

    std::vector<PlacementPlan> one;
    one.push_back(mk(Mode::LineComplete, 3, 9, 2));
    CHECK(&rank(one) == &one.front());

    // ring_complete outranks any cost advantage
    std::vector<PlacementPlan> modes;
    modes.push_back(mk(Mode::LineComplete, 1, 0, 0));
    modes.push_back(mk(Mode::RingComplete, 5, 9, 1));
    CHECK(rank(modes).mode() == Mode::RingComplete);

    std::vector<PlacementPlan> none;
    CHECK_THROWS_AS(rank(none), ConfigError);
}

TEST_CASE("feasible_on_empty: worked examples") {
    ClusterSpec static16 = ClusterSpec::static_torus(16, 16, 16);
    ClusterSpec cube4 = ClusterSpec::reconfigurable(64, 4);
    CHECK(!feasible_on_empty(PolicyKind::FirstFit, Shape{17, 1, 1}, static16));
    CHECK(feasible_on_empty(PolicyKind::Folding, Shape{17, 1, 1}, static16));
    CHECK(feasible_on_empty(PolicyKind::Reconfig, Shape{4, 4, 32}, cube4));
    CHECK(!feasible_on_empty(PolicyKind::Reconfig, Shape{4, 4, 260}, cube4));  // 65 cubes
}

TEST_CASE("feasibility supersets: Folding covers FirstFit, RFold covers Reconfig") {
    ClusterSpec static16 = ClusterSpec::static_torus(16, 16, 16);
    ClusterSpec cube8 = ClusterSpec::reconfigurable(8, 8);
    FeasibilityCache ff(PolicyKind::FirstFit, static16);
    FeasibilityCache fold(PolicyKind::Folding, static16);
    FeasibilityCache rec(PolicyKind::Reconfig, cube8);
    FeasibilityCache rf(PolicyKind::RFold, cube8);
    Rng rng(17);
    for (int i = 0; i < 60; ++i) {
        long size = 1 + static_cast<long>(rng.uniform01() * 500);
        Shape s = sample_shape(size, 1 + static_cast<int>(rng.below(3)), std::nullopt, rng);
        if (ff.feasible_on_empty(s)) CHECK(fold.feasible_on_empty(s));
        if (rec.feasible_on_empty(s)) CHECK(rf.feasible_on_empty(s));
    }
}

TEST_CASE("policy/cluster compatibility is enforced") {
    ClusterState cube = build_cluster(ClusterSpec::reconfigurable(2, 4));
    ClusterState flat = build_cluster(ClusterSpec::static_torus(4, 4, 4));
    CHECK_THROWS_AS(place(PolicyKind::FirstFit, cube, Shape{2, 2, 2}), ConfigError);
    CHECK_THROWS_AS(place(PolicyKind::RFold, flat, Shape{2, 2, 2}), ConfigError);
    CHECK(policy_compatible(PolicyKind::Folding, flat.spec()));
    CHECK(!policy_compatible(PolicyKind::Folding, cube.spec()));
}

TEST_CASE("commit: programs circuits, allocates, and survives release") {
    ClusterState s = build_cluster(ClusterSpec::reconfigurable(64, 4));
    auto plan = reconfig_place(s, Shape{4, 4, 8});
    REQUIRE(plan.has_value());
    CHECK(!plan->circuits_to_set.empty());
    commit(s, *plan, "job1");
    CHECK(s.busy_xpus() == 128);
    CHECK(s.check_invariants().empty());
    s.release("job1");
    CHECK(s.busy_xpus() == 0);
    // Lazy reprogramming: the chained circuits remain after release.
    const auto& [out_port, in_port] = plan->circuits_to_set.front();
    auto still = s.circuit_on(out_port);
    REQUIRE(still.has_value());
    CHECK(still->in_port.xpu == in_port.xpu);
}

TEST_CASE("commit: stale plans are rejected without mutation") {
    ClusterState s = build_cluster(ClusterSpec::reconfigurable(64, 4));
    auto plan = rfold_place(s, Shape{4, 4, 4});
    REQUIRE(plan.has_value());
    // Someone grabs one of the plan's XPUs in the meantime.
    std::vector<XpuId> grab{plan->mapping.assignment.front().second};
    s.allocate("intruder", grab, {});
    long busy_before = s.busy_xpus();
    CHECK_THROWS_AS(commit(s, *plan, "job1"), StalePlanError);
    CHECK(s.busy_xpus() == busy_before);
    CHECK(!s.has_allocation("job1"));
}

TEST_CASE("property: every policy's plan verifies against its planning state") {
    std::mt19937 seed_rng(123);
    ClusterSpec cube4 = ClusterSpec::reconfigurable(16, 4);
    ClusterSpec static8 = ClusterSpec::static_torus(8, 8, 8);
    for (auto [policy, spec] : {std::pair{PolicyKind::Reconfig, cube4},
                                std::pair{PolicyKind::RFold, cube4},
                                std::pair{PolicyKind::FirstFit, static8},
                                std::pair{PolicyKind::Folding, static8}}) {
        ClusterState s = build_cluster(spec);
        Rng rng(seed_rng());
        int committed = 0;
        for (int step = 0; step < 40; ++step) {
            long size = 1 + static_cast<long>(rng.uniform01() * 120);
            Shape shape = sample_shape(size, 1 + static_cast<int>(rng.below(3)), 64, rng);
            auto plan = place(policy, s, shape);
            if (!plan) continue;
            auto violations = verify_plan(s, *plan);
            REQUIRE_MESSAGE(violations.empty(),
                            (violations.empty() ? std::string() : violations.front().what));
            // Commit everything that fits, fragmenting the fabric as we go.
            commit(s, *plan, "job" + std::to_string(step));
            ++committed;
            REQUIRE(s.check_invariants().empty());
        }
        CHECK(committed > 0);
    }
}

TEST_CASE("determinism: identical state and shape give identical plans") {
    ClusterSpec spec = ClusterSpec::reconfigurable(16, 4);
    for (const Shape& shape : {Shape{3, 5, 2}, Shape{12, 1, 1}, Shape{4, 8, 2}}) {
        ClusterState s1 = build_cluster(spec);
        ClusterState s2 = build_cluster(spec);
        auto p1 = rfold_place(s1, shape);
        auto p2 = rfold_place(s2, shape);
        REQUIRE(p1.has_value());
        REQUIRE(p2.has_value());
        CHECK(p1->mapping.assignment == p2->mapping.assignment);
        CHECK(p1->circuits_to_set == p2->circuits_to_set);
        CHECK(p1->cost.cubes_used == p2->cost.cubes_used);
        CHECK(p1->cost.ocs_circuits_used == p2->cost.ocs_circuits_used);
    }
}
