#include "rfold/shapes.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

namespace rfold {

std::string to_string(Mode m) {
    return m == Mode::RingComplete ? "ring_complete" : "line_complete";
}

long shape_node_index(const Shape& s, const Coord& c) {
    return (static_cast<long>(c.x) * s.b + c.y) * s.c + c.z;
}

Coord shape_node_at(const Shape& s, long index) {
    Coord c;
    c.z = static_cast<int>(index % s.c);
    index /= s.c;
    c.y = static_cast<int>(index % s.b);
    c.x = static_cast<int>(index / s.b);
    return c;
}

CommGraph comm_graph(const Shape& shape) {
    CommGraph g;
    g.shape = shape;
    g.nodes.reserve(shape.size());
    for (int x = 0; x < shape.a; ++x)
        for (int y = 0; y < shape.b; ++y)
            for (int z = 0; z < shape.c; ++z) g.nodes.push_back(Coord{x, y, z});
    for (int d = 0; d < 3; ++d) {
        const int len = shape[d];
        if (len <= 1) continue;
        const int o1 = d == 0 ? 1 : 0;
        const int o2 = d == 2 ? 1 : 2;
        for (int u = 0; u < shape[o1]; ++u)
            for (int v = 0; v < shape[o2]; ++v) {
                Ring ring;
                ring.dim = static_cast<Dim>(d);
                ring.nodes.reserve(len);
                for (int t = 0; t < len; ++t) {
                    Coord c;
                    c[d] = t;
                    c[o1] = u;
                    c[o2] = v;
                    ring.nodes.push_back(c);
                }
                g.rings.push_back(std::move(ring));
            }
    }
    return g;
}

// Permutations in a fixed order; perm[k] = source slot feeding target slot k.
static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                     {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

std::vector<Shape> rotations(const Shape& shape) {
    std::vector<Shape> out;
    for (const auto& p : kPerms) {
        Shape r{shape[p[0]], shape[p[1]], shape[p[2]]};
        if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
    }
    return out;
}

// --- fold variants -------------------------------------------------------------

static Coord permute_coord(const Coord& c, const int* p) {
    return Coord{c[p[0]], c[p[1]], c[p[2]]};
}

// Classify every hop of every ring path, filling the wrap-need flags and
// rejecting paths that are not unit grid walks with wrap shortcuts.
static void derive_wrap_flags(FoldVariant& v) {
    v.interior_wrap = {false, false, false};
    v.closure_wrap = {false, false, false};
    auto classify = [&](const Coord& u, const Coord& w, bool closing) {
        int changed = -1;
        for (int d = 0; d < 3; ++d)
            if (u[d] != w[d]) {
                if (changed >= 0) throw std::logic_error("fold hop changes two dims");
                changed = d;
            }
        if (changed < 0) throw std::logic_error("fold hop is a self-loop");
        int delta = std::abs(u[changed] - w[changed]);
        if (delta == 1) return;
        if (delta == v.target[changed] - 1 && v.target[changed] >= 3) {
            (closing ? v.closure_wrap : v.interior_wrap)[changed] = true;
            return;
        }
        throw std::logic_error("fold hop is not grid- or wrap-adjacent");
    };
    for (const auto& path : v.ring_paths) {
        const size_t n = path.size();
        if (n < 2) continue;
        for (size_t h = 0; h + 1 < n; ++h) classify(path[h], path[h + 1], false);
        if (n >= 3) classify(path[n - 1], path[0], true);
    }
}

FoldVariant identity_variant(const Shape& shape) {
    FoldVariant v;
    v.source = v.target = shape;
    v.kind = "identity";
    CommGraph g = comm_graph(shape);
    v.node_map = g.nodes;
    v.ring_paths.reserve(g.rings.size());
    for (const auto& r : g.rings) v.ring_paths.push_back(r.nodes);
    derive_wrap_flags(v);
    return v;
}

static FoldVariant rotate_variant(const FoldVariant& v, const int* p) {
    FoldVariant r;
    r.source = v.source;
    r.target = Shape{v.target[p[0]], v.target[p[1]], v.target[p[2]]};
    r.kind = v.kind;
    r.node_map.reserve(v.node_map.size());
    for (const auto& c : v.node_map) r.node_map.push_back(permute_coord(c, p));
    r.ring_paths.reserve(v.ring_paths.size());
    for (const auto& path : v.ring_paths) {
        std::vector<Coord> q;
        q.reserve(path.size());
        for (const auto& c : path) q.push_back(permute_coord(c, p));
        r.ring_paths.push_back(std::move(q));
    }
    for (int k = 0; k < 3; ++k) {
        r.interior_wrap[k] = v.interior_wrap[p[k]];
        r.closure_wrap[k] = v.closure_wrap[p[k]];
    }
    return r;
}

// Hamiltonian cycle of a p x q grid using grid hops only; needs q even.
// Top row, serpentine over columns 1..p-1 of the remaining rows, then back
// up column 0.
static std::vector<std::pair<int, int>> comb_cycle(int p, int q) {
    std::vector<std::pair<int, int>> seq;
    seq.reserve(static_cast<size_t>(p) * q);
    for (int i = 0; i < p; ++i) seq.emplace_back(i, 0);
    for (int j = 1; j < q; ++j) {
        if (j % 2 == 1)
            for (int i = p - 1; i >= 1; --i) seq.emplace_back(i, j);
        else
            for (int i = 1; i <= p - 1; ++i) seq.emplace_back(i, j);
    }
    for (int j = q - 1; j >= 1; --j) seq.emplace_back(0, j);
    return seq;
}

// Hamiltonian cycle of a p x q block for odd p and q, using one wrap hop in
// the q direction: full column 0, serpentine over rows 1..q-1 of the other
// columns, wrap from (p-1,q-1) to (p-1,0), then back along row 0.
static std::vector<std::pair<int, int>> odd_wrap_cycle(int p, int q) {
    std::vector<std::pair<int, int>> seq;
    seq.reserve(static_cast<size_t>(p) * q);
    for (int j = 0; j < q; ++j) seq.emplace_back(0, j);
    for (int i = 1; i < p; ++i) {
        if (i % 2 == 1)
            for (int j = q - 1; j >= 1; --j) seq.emplace_back(i, j);
        else
            for (int j = 1; j <= q - 1; ++j) seq.emplace_back(i, j);
    }
    for (int i = p - 1; i >= 1; --i) seq.emplace_back(i, 0);
    return seq;
}

// Serpentine fold: dimension fd of extent p*q is spread over a p x q block
// occupying fd and a spare extent-1 dimension sd. The block order makes each
// length-(p*q) ring a Hamiltonian cycle of the block.
static FoldVariant serpentine_variant(const Shape& shape, int fd, int sd,
                                      const std::vector<std::pair<int, int>>& seq, int p, int q,
                                      const char* kind) {
    FoldVariant v;
    v.source = shape;
    v.kind = kind;
    v.target = shape;
    v.target[fd] = p;
    v.target[sd] = q;
    CommGraph g = comm_graph(shape);
    v.node_map.reserve(g.nodes.size());
    for (const auto& c : g.nodes) {
        Coord t = c;
        t[fd] = seq[c[fd]].first;
        t[sd] = seq[c[fd]].second;
        v.node_map.push_back(t);
    }
    v.ring_paths.reserve(g.rings.size());
    for (const auto& r : g.rings) {
        std::vector<Coord> path;
        path.reserve(r.nodes.size());
        for (const auto& c : r.nodes) path.push_back(v.node_map[shape_node_index(shape, c)]);
        v.ring_paths.push_back(std::move(path));
    }
    derive_wrap_flags(v);
    return v;
}

// Reflection fold (fd even, dd of extent 2): the upper half of fd folds back
// over a doubled dd. Outer-layer rings close through two wrap hops in dd,
// inner-layer rings close through grid hops alone.
static FoldVariant reflection_variant(const Shape& shape, int fd, int dd) {
    const int half = shape[fd] / 2;
    FoldVariant v;
    v.source = shape;
    v.kind = "reflection";
    v.target = shape;
    v.target[fd] = half;
    v.target[dd] = 2 * shape[dd];
    CommGraph g = comm_graph(shape);
    v.node_map.reserve(g.nodes.size());
    for (const auto& c : g.nodes) {
        Coord t = c;
        if (c[fd] < half) {
            t[fd] = c[fd];
        } else {
            t[fd] = shape[fd] - 1 - c[fd];
            t[dd] = 2 * shape[dd] - 1 - c[dd];
        }
        v.node_map.push_back(t);
    }
    v.ring_paths.reserve(g.rings.size());
    for (const auto& r : g.rings) {
        std::vector<Coord> path;
        path.reserve(r.nodes.size());
        for (const auto& c : r.nodes) path.push_back(v.node_map[shape_node_index(shape, c)]);
        v.ring_paths.push_back(std::move(path));
    }
    derive_wrap_flags(v);
    return v;
}

// Could the context ever close a ring over a dimension of this extent?
static bool wrap_supportable(int extent, const ClusterSpec& context) {
    if (extent < 3) return true;
    if (context.static_mode)
        return extent == context.static_extents.x || extent == context.static_extents.y ||
               extent == context.static_extents.z;
    return extent % context.cube_size == 0;
}

std::vector<FoldVariant> rotation_variants(const Shape& shape) {
    FoldVariant ident = identity_variant(shape);
    std::vector<FoldVariant> out;
    std::set<std::pair<Shape, std::vector<Coord>>> seen;
    for (const auto& p : kPerms) {
        FoldVariant r = rotate_variant(ident, p);
        if (seen.emplace(r.target, r.node_map).second) out.push_back(std::move(r));
    }
    return out;
}

std::vector<FoldVariant> enumerate_folds(const Shape& shape, const ClusterSpec& context) {
    std::vector<FoldVariant> base;
    base.push_back(identity_variant(shape));

    // Serpentine folds need a spare extent-1 dimension to host q.
    for (int fd = 0; fd < 3; ++fd) {
        if (shape[fd] <= 1) continue;
        int sd = -1;
        for (int d = 0; d < 3; ++d)
            if (d != fd && shape[d] == 1) sd = sd < 0 ? d : sd;
        if (sd < 0) continue;
        const int s = shape[fd];
        for (int p = 2; p * p <= s; ++p) {
            if (s % p) continue;
            const int q = s / p;
            if (q < 2) continue;
            std::vector<std::pair<int, int>> blocks{{p, q}};
            if (p != q) blocks.emplace_back(q, p);
            for (auto [bp, bq] : blocks) {
                if (bp * bq % 2 == 0) {
                    // Grid-only Hamiltonian cycle; orient so the even side is q.
                    std::vector<std::pair<int, int>> seq;
                    if (bq % 2 == 0) {
                        seq = comb_cycle(bp, bq);
                    } else {
                        for (auto [j, i] : comb_cycle(bq, bp)) seq.emplace_back(i, j);
                    }
                    base.push_back(serpentine_variant(shape, fd, sd, seq, bp, bq, "serpentine"));
                } else if (wrap_supportable(bq, context)) {
                    base.push_back(serpentine_variant(shape, fd, sd, odd_wrap_cycle(bp, bq), bp,
                                                      bq, "serpentine"));
                }
            }
        }
    }

    // Reflection folds: fd even, dd of extent exactly 2, doubled dd must be
    // wrappable or the outer-layer rings cannot close.
    for (int fd = 0; fd < 3; ++fd) {
        if (shape[fd] < 2 || shape[fd] % 2) continue;
        for (int dd = 0; dd < 3; ++dd) {
            if (dd == fd || shape[dd] != 2) continue;
            if (!wrap_supportable(2 * shape[dd], context)) continue;
            base.push_back(reflection_variant(shape, fd, dd));
        }
    }

    // Compose with every rotation; dedupe on (target, node_map).
    std::vector<FoldVariant> out;
    std::set<std::pair<Shape, std::vector<Coord>>> seen;
    for (const auto& v : base)
        for (const auto& p : kPerms) {
            FoldVariant r = rotate_variant(v, p);
            if (seen.emplace(r.target, r.node_map).second) out.push_back(std::move(r));
        }
    return out;
}

// --- mappings ------------------------------------------------------------------

const XpuId* PlacementMapping::find(const Coord& c) const {
    auto it = std::lower_bound(assignment.begin(), assignment.end(), c,
                               [](const auto& kv, const Coord& key) { return kv.first < key; });
    if (it == assignment.end() || !(it->first == c)) return nullptr;
    return &it->second;
}

std::vector<XpuId> PlacementMapping::xpus() const {
    std::vector<XpuId> out;
    out.reserve(assignment.size());
    for (const auto& [c, x] : assignment) out.push_back(x);
    return out;
}

std::vector<LinkId> PlacementMapping::all_links() const {
    std::vector<LinkId> out;
    for (const auto& r : rings) out.insert(out.end(), r.links.begin(), r.links.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::optional<std::vector<RealizedRing>> realize_rings(
    const FoldVariant& variant, const std::function<XpuId(const Coord&)>& xpu_of_target,
    const LinkLookup& links_between, Mode requested) {
    std::vector<RealizedRing> rings(variant.ring_paths.size());
    std::unordered_set<LinkId, LinkIdHash> used;

    auto take_link = [&](const XpuId& u, const XpuId& v) -> std::optional<LinkId> {
        for (const LinkId& l : links_between(u, v))
            if (!used.count(l)) {
                used.insert(l);
                return l;
            }
        return std::nullopt;
    };

    for (size_t i = 0; i < variant.ring_paths.size(); ++i) {
        const auto& path = variant.ring_paths[i];
        RealizedRing& ring = rings[i];
        ring.xpus.reserve(path.size());
        for (const auto& c : path) ring.xpus.push_back(xpu_of_target(c));
        if (path.size() < 2) {
            ring.closed = true;
            continue;
        }
        for (size_t h = 0; h + 1 < path.size(); ++h) {
            auto link = take_link(ring.xpus[h], ring.xpus[h + 1]);
            if (!link) return std::nullopt;
            ring.links.push_back(*link);
        }
        ring.closed = path.size() == 2;  // a 2-ring is the single edge
    }

    // Closing hops after all mandatory hops, so best-effort closure never
    // steals a cable a later ring needs.
    for (auto& ring : rings) {
        if (ring.closed || ring.xpus.size() < 3) continue;
        auto link = take_link(ring.xpus.back(), ring.xpus.front());
        if (link) {
            ring.links.push_back(*link);
            ring.closed = true;
        } else if (requested == Mode::RingComplete) {
            return std::nullopt;
        }
    }
    return rings;
}

std::vector<Violation> verify_mapping(const PlacementMapping& mapping, const CommGraph& comm,
                                      const ClusterState& state) {
    std::vector<Violation> out;
    auto fail = [&](std::string msg) { out.push_back(Violation{std::move(msg)}); };

    // Coverage and injectivity.
    if (mapping.assignment.size() != comm.nodes.size())
        fail("mapping covers " + std::to_string(mapping.assignment.size()) + " of " +
             std::to_string(comm.nodes.size()) + " logical nodes");
    std::set<XpuId> images;
    for (const auto& [c, x] : mapping.assignment) {
        if (!state.xpu_valid(x)) {
            fail("mapped XPU does not exist: " + to_string(x));
            continue;
        }
        if (!images.insert(x).second) fail("mapping not injective at " + to_string(x));
        if (!state.xpu_free(x)) fail("mapped XPU busy: " + to_string(x));
    }
    for (const auto& c : comm.nodes)
        if (!mapping.find(c)) fail("logical node unmapped: " + to_string(c));
    if (!out.empty()) return out;  // structural failures make ring checks meaningless

    if (mapping.rings.size() != comm.rings.size()) {
        fail("realized ring count mismatch");
        return out;
    }

    std::map<LinkId, int> link_uses;
    for (size_t i = 0; i < comm.rings.size(); ++i) {
        const Ring& ring = comm.rings[i];
        const RealizedRing& r = mapping.rings[i];
        const size_t len = ring.nodes.size();
        std::string tag = "ring " + std::to_string(i);
        if (r.xpus.size() != len) {
            fail(tag + ": wrong node count");
            continue;
        }
        size_t expected_links = len == 1 ? 0 : (len == 2 ? 1 : (r.closed ? len : len - 1));
        if (r.links.size() != expected_links) {
            fail(tag + ": has " + std::to_string(r.links.size()) + " links, expected " +
                 std::to_string(expected_links));
            continue;
        }
        bool aligned = true;
        for (size_t k = 0; k < len; ++k) {
            const XpuId* img = mapping.find(ring.nodes[k]);
            if (!img || !(*img == r.xpus[k])) {
                fail(tag + ": member " + std::to_string(k) + " disagrees with the node map");
                aligned = false;
                break;
            }
        }
        if (!aligned) continue;
        for (size_t h = 0; h < r.links.size(); ++h) {
            const XpuId& u = r.xpus[h];
            const XpuId& v = r.xpus[(h + 1) % len];
            const LinkId& l = r.links[h];
            if (!((l.a == u && l.b == v) || (l.a == v && l.b == u)))
                fail(tag + ": link " + std::to_string(h) + " does not join consecutive members");
            else if (!state.link_exists(l))
                fail(tag + ": no physical link between " + to_string(u) + " and " + to_string(v));
            else
                link_uses[l]++;
        }
    }

    // Closure per mode.
    for (size_t i = 0; i < mapping.rings.size(); ++i)
        if (mapping.mode == Mode::RingComplete && !mapping.rings[i].closed)
            fail("ring " + std::to_string(i) + " open in ring_complete mode");

    for (const auto& [l, n] : link_uses) {
        if (n > 1) fail("link used by " + std::to_string(n) + " hops: " + to_string(l));
        auto owner = state.link_owner(l);
        if (owner) fail("link owned by job " + *owner + ": " + to_string(l));
    }
    return out;
}

// --- cycle / path search ---------------------------------------------------------

// Every link in the model flips coordinate-sum parity when cube size (or each
// linked static extent) is even, so such fabrics are bipartite and carry no
// odd cycle regardless of the circuit table.
static bool fabric_bipartite(const ClusterSpec& spec) {
    if (spec.static_mode) {
        for (int d = 0; d < 3; ++d) {
            int e = spec.static_extents[d];
            if (e >= 3 && e % 2 == 1) return false;
        }
        return true;
    }
    return spec.cube_size % 2 == 0;
}

namespace {

struct FreeGraph {
    const ClusterState& state;
    std::vector<int32_t> offsets;  // into neigh, size total+1
    std::vector<int32_t> neigh;

    explicit FreeGraph(const ClusterState& s) : state(s) {
        const long n = s.total_xpus();
        std::vector<std::vector<int32_t>> adj(n);
        for (long i = 0; i < n; ++i) {
            if (s.busy_bitmap()[i]) continue;
            XpuId x = s.xpu_at(i);
            for (const auto& [link, v] : s.neighbors(x)) {
                long j = s.xpu_index(v);
                if (!s.busy_bitmap()[j]) adj[i].push_back(static_cast<int32_t>(j));
            }
            std::sort(adj[i].begin(), adj[i].end());
            adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
        }
        offsets.resize(n + 1);
        for (long i = 0; i < n; ++i) offsets[i + 1] = offsets[i] + adj[i].size();
        neigh.reserve(offsets[n]);
        for (auto& a : adj) neigh.insert(neigh.end(), a.begin(), a.end());
    }

    bool adjacent(int32_t u, int32_t v) const {
        auto b = neigh.begin() + offsets[u], e = neigh.begin() + offsets[u + 1];
        return std::binary_search(b, e, v);
    }
};

struct DfsSearch {
    const FreeGraph& g;
    long budget;
    long length;
    bool want_cycle;
    std::vector<int32_t> path;
    std::vector<uint8_t> on_path;
    int32_t start = 0;

    DfsSearch(const FreeGraph& graph, long len, bool cycle, long b)
        : g(graph), budget(b), length(len), want_cycle(cycle),
          on_path(g.offsets.size() - 1, 0) {}

    bool extend() {
        if (budget-- <= 0) return false;
        int32_t u = path.back();
        if (static_cast<long>(path.size()) == length)
            return !want_cycle || g.adjacent(u, start);
        for (int32_t k = g.offsets[u]; k < g.offsets[u + 1]; ++k) {
            int32_t v = g.neigh[k];
            // Canonical cycles: the start is the smallest member.
            if (want_cycle && v <= start) continue;
            if (on_path[v]) continue;
            on_path[v] = 1;
            path.push_back(v);
            if (extend()) return true;
            path.pop_back();
            on_path[v] = 0;
            if (budget <= 0) return false;
        }
        return false;
    }

    std::optional<std::vector<int32_t>> run() {
        const long n = static_cast<long>(on_path.size());
        for (int32_t s = 0; s < n && budget > 0; ++s) {
            if (g.offsets[s] == g.offsets[s + 1]) continue;  // busy or isolated
            start = s;
            path.assign(1, s);
            std::fill(on_path.begin(), on_path.end(), 0);
            on_path[s] = 1;
            if (extend()) return path;
        }
        return std::nullopt;
    }
};

}  // namespace

// Deterministic serpentine seeding: look for a fully free p x q block (in any
// plane of any cube, or the static grid) whose Hamiltonian cycle has exactly
// the requested length.
static std::optional<std::vector<XpuId>> serpentine_seed(const ClusterState& state, long length,
                                                         bool want_cycle) {
    const ClusterSpec& spec = state.spec();
    const int cubes = spec.static_mode ? 1 : spec.cube_count;
    int ext[3] = {spec.extent(Dim::X), spec.extent(Dim::Y), spec.extent(Dim::Z)};

    std::vector<std::pair<int, int>> factors;
    for (long p = 1; p <= length; ++p)
        if (length % p == 0) factors.emplace_back(static_cast<int>(p),
                                                  static_cast<int>(length / p));

    for (int cube = 0; cube < cubes; ++cube) {
        if (state.total_xpus() - state.busy_xpus() < length) break;
        if (!spec.static_mode &&
            static_cast<long>(ext[0]) * ext[1] * ext[2] - state.busy_in_cube(cube) < length)
            continue;
        for (int du = 0; du < 3; ++du)
            for (int dv = 0; dv < 3; ++dv) {
                if (du == dv) continue;
                int dw = 3 - du - dv;
                for (auto [p, q] : factors) {
                    if (p > ext[du] || q > ext[dv]) continue;
                    std::vector<std::pair<int, int>> seq;
                    if (want_cycle) {
                        if (p >= 2 && q >= 2 && q % 2 == 0)
                            seq = comb_cycle(p, q);
                        else
                            continue;
                    } else {
                        // Row-major boustrophedon path, any parity (p=1 is a line).
                        for (int j = 0; j < q; ++j) {
                            if (j % 2 == 0)
                                for (int i = 0; i < p; ++i) seq.emplace_back(i, j);
                            else
                                for (int i = p - 1; i >= 0; --i) seq.emplace_back(i, j);
                        }
                    }
                    for (int ow = 0; ow < ext[dw]; ++ow)
                        for (int ou = 0; ou + p <= ext[du]; ++ou)
                            for (int ov = 0; ov + q <= ext[dv]; ++ov) {
                                bool ok = true;
                                std::vector<XpuId> cyc;
                                cyc.reserve(seq.size());
                                for (const auto& [i, j] : seq) {
                                    Coord c;
                                    c[du] = ou + i;
                                    c[dv] = ov + j;
                                    c[dw] = ow;
                                    XpuId x{spec.static_mode ? 0 : cube, c};
                                    if (state.busy_bitmap()[state.xpu_index(x)]) {
                                        ok = false;
                                        break;
                                    }
                                    cyc.push_back(x);
                                }
                                if (ok) return cyc;
                            }
                }
            }
    }
    return std::nullopt;
}

static std::optional<std::vector<XpuId>> search(const ClusterState& state, long length,
                                                bool want_cycle, long budget) {
    if (length < 1 || length > state.free_xpus()) return std::nullopt;
    if (length == 1) {
        for (long i = 0; i < state.total_xpus(); ++i)
            if (!state.busy_bitmap()[i]) return std::vector<XpuId>{state.xpu_at(i)};
        return std::nullopt;
    }
    if (want_cycle && length % 2 == 1 && length >= 3 && fabric_bipartite(state.spec()))
        return std::nullopt;

    if (length == 2) {
        for (long i = 0; i < state.total_xpus(); ++i) {
            if (state.busy_bitmap()[i]) continue;
            XpuId x = state.xpu_at(i);
            for (const auto& [link, v] : state.neighbors(x))
                if (state.xpu_free(v)) return std::vector<XpuId>{x, v};
        }
        return std::nullopt;
    }

    if (auto seeded = serpentine_seed(state, length, want_cycle)) return seeded;

    FreeGraph graph(state);
    DfsSearch dfs(graph, length, want_cycle, budget);
    auto found = dfs.run();
    if (!found) return std::nullopt;
    std::vector<XpuId> out;
    out.reserve(found->size());
    for (int32_t i : *found) out.push_back(state.xpu_at(i));
    return out;
}

std::optional<std::vector<XpuId>> find_cycle(const ClusterState& state, long length,
                                             long budget) {
    return search(state, length, true, budget);
}

std::optional<std::vector<XpuId>> find_path(const ClusterState& state, long length, long budget) {
    return search(state, length, false, budget);
}

// --- exhaustive oracle -------------------------------------------------------------

namespace {

// Backtracking embedder over an abstract free torus. Logical edges consume
// cable capacity (2 parallel cables join a pair when a wrapped extent-2
// dimension supplies both a grid and a wrap cable, else 1); in line mode
// each ring may instead drop at most one of its edges, and both options are
// branched on for completeness.
struct Oracle {
    Coord ext;
    Mode mode = Mode::RingComplete;
    int cells = 0;

    std::map<std::pair<int, int>, int> capacity;  // canonical cell pair -> cables
    std::map<std::pair<int, int>, int> used;
    std::vector<std::vector<int>> cell_adj;
    std::vector<std::vector<std::pair<int, int>>> node_edges;  // node -> (other, ring)
    std::vector<int> order;
    std::vector<int> image;
    std::vector<uint8_t> taken;
    std::vector<uint8_t> ring_dropped;

    long cell_of(const Coord& c) const {
        return (static_cast<long>(c.x) * ext.y + c.y) * ext.z + c.z;
    }

    bool solve(size_t k) {
        if (k == order.size()) return true;
        const int node = order[k];
        // Ring mode: the image must be adjacent to every assigned neighbour,
        // so scanning one neighbour's adjacency suffices.
        const std::vector<int>* candidates = nullptr;
        if (mode == Mode::RingComplete)
            for (auto [other, ring] : node_edges[node])
                if (image[other] >= 0) {
                    candidates = &cell_adj[image[other]];
                    break;
                }
        if (candidates) {
            for (int cell : *candidates)
                if (!taken[cell] && place(node, cell, k)) return true;
        } else {
            for (int cell = 0; cell < cells; ++cell)
                if (!taken[cell] && place(node, cell, k)) return true;
        }
        return false;
    }

    bool place(int node, int cell, size_t k) {
        image[node] = cell;
        taken[cell] = 1;
        std::vector<std::pair<std::pair<int, int>, int>> pending;  // (pair, ring)
        for (auto [other, ring] : node_edges[node])
            if (image[other] >= 0) {
                int lo = std::min(cell, image[other]), hi = std::max(cell, image[other]);
                pending.push_back({{lo, hi}, ring});
            }
        if (place_edges(pending, 0, k)) return true;
        image[node] = -1;
        taken[cell] = 0;
        return false;
    }

    bool place_edges(const std::vector<std::pair<std::pair<int, int>, int>>& pending, size_t i,
                     size_t k) {
        if (i == pending.size()) return solve(k + 1);
        const auto& [pk, ring] = pending[i];
        auto cap = capacity.find(pk);
        const int have = cap == capacity.end() ? 0 : cap->second;
        if (have > used[pk]) {
            used[pk]++;
            if (place_edges(pending, i + 1, k)) return true;
            used[pk]--;
        }
        if (mode == Mode::LineComplete && !ring_dropped[ring]) {
            ring_dropped[ring] = 1;
            if (place_edges(pending, i + 1, k)) return true;
            ring_dropped[ring] = 0;
        }
        return false;
    }
};

}  // namespace

bool brute_force_embeddable(const Shape& shape, Coord target_extents, std::array<bool, 3> wrap,
                            Mode mode, long product_bound) {
    if (shape.size() > product_bound)
        throw ConfigError("oracle refuses shapes larger than " + std::to_string(product_bound) +
                          " nodes");
    const long cells = static_cast<long>(target_extents.x) * target_extents.y * target_extents.z;
    if (shape.size() > cells) return false;

    CommGraph g = comm_graph(shape);

    Oracle o;
    o.ext = target_extents;
    o.mode = mode;
    o.cells = static_cast<int>(cells);
    o.image.assign(g.nodes.size(), -1);
    o.taken.assign(cells, 0);
    o.ring_dropped.assign(g.rings.size(), 0);

    // Target adjacency with cable capacities.
    for (int x = 0; x < target_extents.x; ++x)
        for (int y = 0; y < target_extents.y; ++y)
            for (int z = 0; z < target_extents.z; ++z) {
                Coord c{x, y, z};
                long u = o.cell_of(c);
                for (int d = 0; d < 3; ++d) {
                    const int e = target_extents[d];
                    if (c[d] + 1 < e) {
                        Coord n = c;
                        n[d]++;
                        long v = o.cell_of(n);
                        o.capacity[{static_cast<int>(std::min(u, v)),
                                    static_cast<int>(std::max(u, v))}] += 1;
                    }
                    if (wrap[d] && e >= 2 && c[d] == 0) {
                        Coord n = c;
                        n[d] = e - 1;
                        long v = o.cell_of(n);
                        o.capacity[{static_cast<int>(std::min(u, v)),
                                    static_cast<int>(std::max(u, v))}] += 1;
                    }
                }
            }
    o.cell_adj.assign(cells, {});
    for (const auto& [pk, cap] : o.capacity) {
        o.cell_adj[pk.first].push_back(pk.second);
        o.cell_adj[pk.second].push_back(pk.first);
    }
    for (auto& adj : o.cell_adj) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }

    // Logical edges per node (each ring contributes its cycle edges; a
    // 2-ring is a single edge).
    o.node_edges.assign(g.nodes.size(), {});
    for (size_t r = 0; r < g.rings.size(); ++r) {
        const auto& nodes = g.rings[r].nodes;
        const size_t len = nodes.size();
        const size_t hops = len == 2 ? 1 : len;
        for (size_t h = 0; h < hops; ++h) {
            int u = static_cast<int>(shape_node_index(shape, nodes[h]));
            int v = static_cast<int>(shape_node_index(shape, nodes[(h + 1) % len]));
            o.node_edges[u].emplace_back(v, static_cast<int>(r));
            o.node_edges[v].emplace_back(u, static_cast<int>(r));
        }
    }

    // Assignment order: walk rings shortest-first so tight odd rings prune
    // immediately, then append any disconnected leftovers.
    std::vector<size_t> ring_order(g.rings.size());
    for (size_t i = 0; i < ring_order.size(); ++i) ring_order[i] = i;
    std::stable_sort(ring_order.begin(), ring_order.end(), [&](size_t a, size_t b) {
        return g.rings[a].nodes.size() < g.rings[b].nodes.size();
    });
    std::vector<uint8_t> queued(g.nodes.size(), 0);
    for (size_t r : ring_order)
        for (const auto& c : g.rings[r].nodes) {
            int idx = static_cast<int>(shape_node_index(shape, c));
            if (!queued[idx]) {
                queued[idx] = 1;
                o.order.push_back(idx);
            }
        }
    for (size_t i = 0; i < g.nodes.size(); ++i)
        if (!queued[i]) o.order.push_back(static_cast<int>(i));

    return o.solve(0);
}

}  // namespace rfold
