#include "rfold/topology.hpp"

#include <algorithm>
#include <sstream>

namespace rfold {

std::string to_string(const Coord& c) {
    std::ostringstream os;
    os << "(" << c.x << "," << c.y << "," << c.z << ")";
    return os.str();
}

std::string to_string(const XpuId& x) {
    std::ostringstream os;
    os << "cube" << x.cube << to_string(x.coord);
    return os.str();
}

std::string to_string(const LinkId& l) {
    std::ostringstream os;
    os << (l.kind == LinkKind::Intra ? "intra" : "wrap") << "[" << to_string(l.a) << "-"
       << to_string(l.b) << ",dim" << dim_index(l.dim) << "]";
    return os.str();
}

static size_t hash_mix(size_t h, size_t v) {
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

size_t XpuIdHash::operator()(const XpuId& x) const {
    size_t h = std::hash<int>()(x.cube);
    h = hash_mix(h, std::hash<int>()(x.coord.x));
    h = hash_mix(h, std::hash<int>()(x.coord.y));
    h = hash_mix(h, std::hash<int>()(x.coord.z));
    return h;
}

size_t LinkIdHash::operator()(const LinkId& l) const {
    XpuIdHash xh;
    size_t h = std::hash<int>()(static_cast<int>(l.kind));
    h = hash_mix(h, xh(l.a));
    h = hash_mix(h, xh(l.b));
    h = hash_mix(h, std::hash<int>()(dim_index(l.dim)));
    return h;
}

// --- ClusterSpec -------------------------------------------------------------

ClusterSpec ClusterSpec::reconfigurable(int cubes, int n) {
    ClusterSpec s;
    s.static_mode = false;
    s.cube_count = cubes;
    s.cube_size = n;
    return s;
}

ClusterSpec ClusterSpec::static_torus(int lx, int ly, int lz) {
    ClusterSpec s;
    s.static_mode = true;
    s.static_extents = Coord{lx, ly, lz};
    return s;
}

void ClusterSpec::validate() const {
    if (static_mode) {
        if (static_extents.x < 1 || static_extents.y < 1 || static_extents.z < 1)
            throw ConfigError("static torus extents must be positive");
        return;
    }
    if (cube_count < 1) throw ConfigError("cube count must be positive");
    if (cube_size < 1) throw ConfigError("cube size must be positive");
    if (cube_size < 2 && !allow_unit_cube)
        throw ConfigError("cube size 1 has no interior links; set allow_unit_cube to force");
}

long ClusterSpec::total_xpus() const {
    if (static_mode)
        return static_cast<long>(static_extents.x) * static_extents.y * static_extents.z;
    return static_cast<long>(cube_count) * cube_size * cube_size * cube_size;
}

int ClusterSpec::ocs_count() const {
    if (static_mode) return 0;
    return 3 * cube_size * cube_size;
}

int ClusterSpec::extent(Dim d) const {
    if (static_mode) return static_extents[dim_index(d)];
    return cube_size;
}

std::string ClusterSpec::to_string() const {
    std::ostringstream os;
    if (static_mode)
        os << "static" << static_extents.x << "x" << static_extents.y << "x" << static_extents.z;
    else
        os << "cube" << cube_size << "x" << cube_count;
    return os.str();
}

// --- ClusterState ------------------------------------------------------------

ClusterState::ClusterState(const ClusterSpec& spec) : spec_(spec) {
    spec_.validate();
    if (spec_.static_mode) {
        extents_[0] = spec_.static_extents.x;
        extents_[1] = spec_.static_extents.y;
        extents_[2] = spec_.static_extents.z;
        cube_count_ = 1;
    } else {
        extents_[0] = extents_[1] = extents_[2] = spec_.cube_size;
        cube_count_ = spec_.cube_count;
    }
    total_xpus_ = spec_.total_xpus();
    xpu_busy_.assign(total_xpus_, 0);
    xpu_owner_.assign(total_xpus_, std::string());
    busy_per_cube_.assign(cube_count_, 0);

    if (!spec_.static_mode) {
        // Default wiring: every face port self-wrapped to its own cube.
        const int n = spec_.cube_size;
        const long slots = 3L * n * n * cube_count_;
        circuit_out_to_in_.assign(slots, -1);
        circuit_in_to_out_.assign(slots, -1);
        for (int d = 0; d < 3; ++d)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int c = 0; c < cube_count_; ++c) {
                        long idx = face_index(static_cast<Dim>(d), i, j, c);
                        circuit_out_to_in_[idx] = c;
                        circuit_in_to_out_[idx] = c;
                    }
    }
}

ClusterState build_cluster(const ClusterSpec& spec) { return ClusterState(spec); }

bool ClusterState::xpu_valid(const XpuId& x) const {
    if (x.cube < 0 || x.cube >= cube_count_) return false;
    for (int d = 0; d < 3; ++d)
        if (x.coord[d] < 0 || x.coord[d] >= extents_[d]) return false;
    return true;
}

long ClusterState::xpu_index(const XpuId& x) const {
    if (!xpu_valid(x)) throw LookupError("unknown XPU " + rfold::to_string(x));
    long within = x.coord.x + static_cast<long>(extents_[0]) *
                                  (x.coord.y + static_cast<long>(extents_[1]) * x.coord.z);
    return static_cast<long>(x.cube) * extents_[0] * extents_[1] * extents_[2] + within;
}

XpuId ClusterState::xpu_at(long index) const {
    long per_cube = static_cast<long>(extents_[0]) * extents_[1] * extents_[2];
    XpuId x;
    x.cube = static_cast<int>(index / per_cube);
    long w = index % per_cube;
    x.coord.x = static_cast<int>(w % extents_[0]);
    w /= extents_[0];
    x.coord.y = static_cast<int>(w % extents_[1]);
    x.coord.z = static_cast<int>(w / extents_[1]);
    return x;
}

long ClusterState::face_index(Dim d, int i, int j, int cube) const {
    const int n = spec_.cube_size;
    return ((static_cast<long>(dim_index(d)) * n + i) * n + j) * cube_count_ + cube;
}

// Cross-position of a face port: the coordinates in the two other dimensions,
// in dimension order.
static std::pair<int, int> cross_position(const Coord& c, Dim d) {
    switch (d) {
        case Dim::X: return {c.y, c.z};
        case Dim::Y: return {c.x, c.z};
        default: return {c.x, c.y};
    }
}

static Coord with_dim(Coord c, Dim d, int value) {
    c[dim_index(d)] = value;
    return c;
}

std::vector<std::pair<LinkId, XpuId>> ClusterState::neighbors(const XpuId& xpu) const {
    if (!xpu_valid(xpu)) throw LookupError("unknown XPU " + rfold::to_string(xpu));
    std::vector<std::pair<LinkId, XpuId>> out;
    out.reserve(6);
    for (int d = 0; d < 3; ++d) {
        const Dim dim = static_cast<Dim>(d);
        const int e = extents_[d];
        // Intra links: +/-1 within the cube (or static grid), no wrap.
        if (xpu.coord[d] + 1 < e) {
            XpuId v{xpu.cube, with_dim(xpu.coord, dim, xpu.coord[d] + 1)};
            out.emplace_back(LinkId::make(LinkKind::Intra, xpu, v, dim), v);
        }
        if (xpu.coord[d] - 1 >= 0) {
            XpuId v{xpu.cube, with_dim(xpu.coord, dim, xpu.coord[d] - 1)};
            out.emplace_back(LinkId::make(LinkKind::Intra, xpu, v, dim), v);
        }
        if (spec_.static_mode) {
            if (e >= 2) {
                if (xpu.coord[d] == e - 1) {
                    XpuId v{0, with_dim(xpu.coord, dim, 0)};
                    out.emplace_back(LinkId::make(LinkKind::Wrap, xpu, v, dim), v);
                } else if (xpu.coord[d] == 0) {
                    XpuId v{0, with_dim(xpu.coord, dim, e - 1)};
                    out.emplace_back(LinkId::make(LinkKind::Wrap, xpu, v, dim), v);
                }
            }
            continue;
        }
        const auto [i, j] = cross_position(xpu.coord, dim);
        if (xpu.coord[d] == e - 1) {  // dim+ face port
            int in_cube = circuit_out_to_in_[face_index(dim, i, j, xpu.cube)];
            if (in_cube >= 0) {
                XpuId v{in_cube, with_dim(xpu.coord, dim, 0)};
                if (!(v == xpu))
                    out.emplace_back(LinkId::make(LinkKind::Wrap, xpu, v, dim), v);
            }
        }
        if (xpu.coord[d] == 0) {  // dim- face port
            int out_cube = circuit_in_to_out_[face_index(dim, i, j, xpu.cube)];
            if (out_cube >= 0) {
                XpuId v{out_cube, with_dim(xpu.coord, dim, e - 1)};
                if (!(v == xpu))
                    out.emplace_back(LinkId::make(LinkKind::Wrap, xpu, v, dim), v);
            }
        }
    }
    return out;
}

std::vector<LinkId> ClusterState::links_between(const XpuId& u, const XpuId& v) const {
    std::vector<LinkId> out;
    if (!xpu_valid(u) || !xpu_valid(v) || u == v) return out;
    for (int d = 0; d < 3; ++d) {
        const Dim dim = static_cast<Dim>(d);
        const int e = extents_[d];
        bool cross_equal = true;
        for (int o = 0; o < 3; ++o)
            if (o != d && u.coord[o] != v.coord[o]) cross_equal = false;
        if (!cross_equal) continue;
        if (u.cube == v.cube && std::abs(u.coord[d] - v.coord[d]) == 1)
            out.push_back(LinkId::make(LinkKind::Intra, u, v, dim));
        if (e < 2) continue;
        // Wrap cable: + face of one endpoint to - face of the other.
        const XpuId* hi = nullptr;
        const XpuId* lo = nullptr;
        if (u.coord[d] == e - 1 && v.coord[d] == 0) {
            hi = &u;
            lo = &v;
        } else if (v.coord[d] == e - 1 && u.coord[d] == 0) {
            hi = &v;
            lo = &u;
        }
        if (!hi) continue;
        if (spec_.static_mode) {
            out.push_back(LinkId::make(LinkKind::Wrap, u, v, dim));
        } else {
            const auto [i, j] = cross_position(hi->coord, dim);
            if (circuit_out_to_in_[face_index(dim, i, j, hi->cube)] == lo->cube)
                out.push_back(LinkId::make(LinkKind::Wrap, u, v, dim));
        }
    }
    return out;
}

bool ClusterState::link_exists(const LinkId& link) const {
    auto ls = links_between(link.a, link.b);
    return std::find(ls.begin(), ls.end(), link) != ls.end();
}

bool ClusterState::is_face_port(const PortId& p) const {
    if (spec_.static_mode || !xpu_valid(p.xpu)) return false;
    const int d = dim_index(p.dim);
    return p.sign == Sign::Plus ? p.xpu.coord[d] == extents_[d] - 1 : p.xpu.coord[d] == 0;
}

OcsId ClusterState::ocs_of(const PortId& p) const {
    if (!is_face_port(p))
        throw AlignmentError("port is not a face port (" + rfold::to_string(p.xpu) + ")");
    auto [i, j] = cross_position(p.xpu.coord, p.dim);
    return OcsId{p.dim, i, j};
}

std::optional<Circuit> ClusterState::circuit_on(const PortId& p) const {
    if (spec_.static_mode || !is_face_port(p)) return std::nullopt;
    const auto [i, j] = cross_position(p.xpu.coord, p.dim);
    const int n = spec_.cube_size;
    int out_cube, in_cube;
    if (p.sign == Sign::Plus) {
        out_cube = p.xpu.cube;
        in_cube = circuit_out_to_in_[face_index(p.dim, i, j, out_cube)];
        if (in_cube < 0) return std::nullopt;
    } else {
        in_cube = p.xpu.cube;
        out_cube = circuit_in_to_out_[face_index(p.dim, i, j, in_cube)];
        if (out_cube < 0) return std::nullopt;
    }
    Coord base = p.xpu.coord;
    Circuit c;
    c.ocs = OcsId{p.dim, i, j};
    c.out_port = PortId{XpuId{out_cube, with_dim(base, p.dim, n - 1)}, p.dim, Sign::Plus};
    c.in_port = PortId{XpuId{in_cube, with_dim(base, p.dim, 0)}, p.dim, Sign::Minus};
    return c;
}

LinkId ClusterState::link_of(const Circuit& c) const {
    return LinkId::make(LinkKind::Wrap, c.out_port.xpu, c.in_port.xpu, c.ocs.dim);
}

void ClusterState::remove_circuit_at(Dim d, int i, int j, int out_cube) {
    long idx = face_index(d, i, j, out_cube);
    int in_cube = circuit_out_to_in_[idx];
    if (in_cube < 0) return;
    circuit_out_to_in_[idx] = -1;
    circuit_in_to_out_[face_index(d, i, j, in_cube)] = -1;
}

Circuit ClusterState::set_circuit(const PortId& out_port, const PortId& in_port) {
    if (spec_.static_mode) throw ConfigError("static torus has no OCS to program");
    if (out_port.sign != Sign::Plus || in_port.sign != Sign::Minus)
        throw AlignmentError("circuit must run from a dim+ face port to a dim- face port");
    if (!is_face_port(out_port) || !is_face_port(in_port))
        throw AlignmentError("circuit endpoints must be face ports");
    if (out_port.dim != in_port.dim)
        throw AlignmentError("ports belong to different OCS dimension groups");
    const Dim d = out_port.dim;
    const auto [oi, oj] = cross_position(out_port.xpu.coord, d);
    const auto [ii, ij] = cross_position(in_port.xpu.coord, d);
    if (oi != ii || oj != ij)
        throw AlignmentError("ports are misaligned: cross-positions (" + std::to_string(oi) +
                             "," + std::to_string(oj) + ") vs (" + std::to_string(ii) + "," +
                             std::to_string(ij) + ") share no OCS");

    // Neither port may carry an owned link.
    for (const PortId* p : {&out_port, &in_port}) {
        auto existing = circuit_on(*p);
        if (existing) {
            auto owner = link_owner(link_of(*existing));
            if (owner)
                throw BusyError("port carries a link owned by job " + *owner);
        }
    }

    remove_circuit_at(d, oi, oj, out_port.xpu.cube);
    auto stale_in = circuit_on(in_port);
    if (stale_in) remove_circuit_at(d, oi, oj, stale_in->out_port.xpu.cube);

    circuit_out_to_in_[face_index(d, oi, oj, out_port.xpu.cube)] = in_port.xpu.cube;
    circuit_in_to_out_[face_index(d, oi, oj, in_port.xpu.cube)] = out_port.xpu.cube;
    Circuit c{OcsId{d, oi, oj}, out_port, in_port};
    return c;
}

std::optional<std::string> ClusterState::xpu_owner(const XpuId& x) const {
    long idx = xpu_index(x);
    if (!xpu_busy_[idx]) return std::nullopt;
    return xpu_owner_[idx];
}

bool ClusterState::xpu_free(const XpuId& x) const { return !xpu_busy_[xpu_index(x)]; }

std::optional<std::string> ClusterState::link_owner(const LinkId& l) const {
    auto it = link_owner_.find(l);
    if (it == link_owner_.end()) return std::nullopt;
    return it->second;
}

void ClusterState::allocate(const std::string& job, std::span<const XpuId> xpus,
                            std::span<const LinkId> links) {
    if (allocations_.count(job))
        throw ExclusivityError("job " + job + " already holds an allocation");
    std::vector<long> idxs;
    idxs.reserve(xpus.size());
    for (const auto& x : xpus) {
        long idx = xpu_index(x);
        if (xpu_busy_[idx])
            throw ExclusivityError("XPU " + rfold::to_string(x) + " already owned by " +
                                   xpu_owner_[idx]);
        idxs.push_back(idx);
    }
    std::vector<long> sorted = idxs;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ExclusivityError("duplicate XPU in allocation request");

    auto in_request = [&](const XpuId& x) {
        long idx = xpu_index(x);
        return std::binary_search(sorted.begin(), sorted.end(), idx);
    };
    std::vector<LinkId> link_list(links.begin(), links.end());
    std::sort(link_list.begin(), link_list.end());
    if (std::adjacent_find(link_list.begin(), link_list.end()) != link_list.end())
        throw ExclusivityError("duplicate link in allocation request");
    for (const auto& l : link_list) {
        if (!link_exists(l)) throw LookupError("link does not exist: " + rfold::to_string(l));
        if (link_owner_.count(l))
            throw ExclusivityError("link already owned: " + rfold::to_string(l));
        if (!in_request(l.a) || !in_request(l.b))
            throw ExclusivityError("link endpoint outside the allocated XPU set: " +
                                   rfold::to_string(l));
    }

    Allocation alloc;
    alloc.xpus.assign(xpus.begin(), xpus.end());
    alloc.links = link_list;
    for (long idx : idxs) {
        xpu_busy_[idx] = 1;
        xpu_owner_[idx] = job;
        busy_per_cube_[xpu_at(idx).cube]++;
    }
    busy_xpus_ += static_cast<long>(idxs.size());
    for (const auto& l : link_list) link_owner_.emplace(l, job);
    allocations_.emplace(job, std::move(alloc));
}

void ClusterState::release(const std::string& job) {
    auto it = allocations_.find(job);
    if (it == allocations_.end()) throw LookupError("job " + job + " holds no allocation");
    for (const auto& x : it->second.xpus) {
        long idx = xpu_index(x);
        xpu_busy_[idx] = 0;
        xpu_owner_[idx].clear();
        busy_per_cube_[x.cube]--;
    }
    busy_xpus_ -= static_cast<long>(it->second.xpus.size());
    for (const auto& l : it->second.links) link_owner_.erase(l);
    allocations_.erase(it);
}

bool ClusterState::has_allocation(const std::string& job) const {
    return allocations_.count(job) > 0;
}

std::vector<std::string> ClusterState::check_invariants() const {
    std::vector<std::string> bad;
    long busy = 0;
    for (uint8_t b : xpu_busy_) busy += b;
    if (busy != busy_xpus_) bad.push_back("busy counter drifted from bitmap");
    if (busy_xpus_ < 0 || busy_xpus_ > total_xpus_) bad.push_back("conservation violated");

    long per_cube_sum = 0;
    for (long c : busy_per_cube_) per_cube_sum += c;
    if (per_cube_sum != busy_xpus_) bad.push_back("per-cube busy counters drifted");

    // Ownership bookkeeping matches the allocation table.
    long alloc_xpus = 0;
    for (const auto& [job, alloc] : allocations_) {
        alloc_xpus += static_cast<long>(alloc.xpus.size());
        for (const auto& x : alloc.xpus) {
            long idx = xpu_index(x);
            if (!xpu_busy_[idx] || xpu_owner_[idx] != job)
                bad.push_back("XPU " + rfold::to_string(x) + " not recorded as owned by " + job);
        }
        for (const auto& l : alloc.links) {
            auto it = link_owner_.find(l);
            if (it == link_owner_.end() || it->second != job)
                bad.push_back("link owner mismatch for " + rfold::to_string(l));
            if (!link_exists(l))
                bad.push_back("owned link no longer exists: " + rfold::to_string(l));
            auto oa = xpu_owner(l.a);
            auto ob = xpu_owner(l.b);
            if (!oa || !ob || *oa != job || *ob != job)
                bad.push_back("owned link endpoints not owned by " + job);
        }
    }
    if (alloc_xpus != busy_xpus_) bad.push_back("allocation table does not cover all busy XPUs");

    // Circuit table is a matching with consistent inverse.
    if (!spec_.static_mode) {
        const int n = spec_.cube_size;
        for (int d = 0; d < 3; ++d)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    std::vector<int> seen_in(cube_count_, 0);
                    for (int c = 0; c < cube_count_; ++c) {
                        int in_cube =
                            circuit_out_to_in_[face_index(static_cast<Dim>(d), i, j, c)];
                        if (in_cube < 0) continue;
                        if (in_cube >= cube_count_ || seen_in[in_cube]++)
                            bad.push_back("circuit table is not a matching");
                        else if (circuit_in_to_out_[face_index(static_cast<Dim>(d), i, j,
                                                               in_cube)] != c)
                            bad.push_back("circuit table inverse inconsistent");
                    }
                }
    }
    return bad;
}

}  // namespace rfold
