#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rfold/errors.hpp"

namespace rfold {

enum class Dim : int { X = 0, Y = 1, Z = 2 };

constexpr std::array<Dim, 3> kDims{Dim::X, Dim::Y, Dim::Z};

constexpr int dim_index(Dim d) { return static_cast<int>(d); }

enum class Sign : int { Plus = 0, Minus = 1 };

struct Coord {
    int x = 0, y = 0, z = 0;

    int operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    int& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    auto operator<=>(const Coord&) const = default;
    bool operator==(const Coord&) const = default;
};

std::string to_string(const Coord& c);

/// One accelerator node. In static mode the cube index is always 0.
struct XpuId {
    int cube = 0;
    Coord coord;

    auto operator<=>(const XpuId&) const = default;
    bool operator==(const XpuId&) const = default;
};

std::string to_string(const XpuId& x);

struct PortId {
    XpuId xpu;
    Dim dim = Dim::X;
    Sign sign = Sign::Plus;

    bool operator==(const PortId&) const = default;
};

/// One optical circuit switch. OCS (dim,i,j) owns, for every cube, the dim+
/// face port at cross-position (i,j) and the dim- face port at the same
/// position. (i,j) are the other two coordinates in dimension order.
struct OcsId {
    Dim dim = Dim::X;
    int i = 0, j = 0;

    bool operator==(const OcsId&) const = default;
};

struct Circuit {
    OcsId ocs;
    PortId out_port;  // a dim+ face port
    PortId in_port;   // a dim- face port (possibly of the same cube)

    bool operator==(const Circuit&) const = default;
};

enum class LinkKind : int {
    Intra,  // hardwired link inside a cube (or a static torus, non-wrap)
    Wrap,   // dimension-closing link: an OCS circuit, or a static wrap wire
};

/// Identity of one physical cable. Endpoints are stored in canonical order.
/// With extent 2 (or cube size 2) an intra link and a wrap link can join the
/// same pair of XPUs; the kind disambiguates the two parallel cables.
struct LinkId {
    LinkKind kind = LinkKind::Intra;
    XpuId a, b;
    Dim dim = Dim::X;

    static LinkId make(LinkKind kind, XpuId u, XpuId v, Dim d) {
        if (v < u) std::swap(u, v);
        return LinkId{kind, u, v, d};
    }
    auto operator<=>(const LinkId&) const = default;
    bool operator==(const LinkId&) const = default;
};

std::string to_string(const LinkId& l);

struct LinkIdHash {
    size_t operator()(const LinkId& l) const;
};

struct XpuIdHash {
    size_t operator()(const XpuId& x) const;
};

struct ClusterSpec {
    bool static_mode = false;
    // Reconfigurable mode: cube_count cubes of cube_size^3 XPUs each.
    int cube_count = 0;
    int cube_size = 0;
    // Static mode: one hardwired torus of these extents, no OCS.
    Coord static_extents{0, 0, 0};
    // A 1x1x1 cube has no interior links; refuse it unless explicitly allowed.
    bool allow_unit_cube = false;

    static ClusterSpec reconfigurable(int cubes, int n);
    static ClusterSpec static_torus(int lx, int ly, int lz);

    void validate() const;  // throws ConfigError
    long total_xpus() const;
    int ocs_count() const;
    /// Extent of one dimension of the addressable space: cube_size in
    /// reconfigurable mode, the static extent otherwise.
    int extent(Dim d) const;
    std::string to_string() const;  // e.g. "cube4x64" / "static16x16x16"

    bool operator==(const ClusterSpec&) const = default;
};

/// The full mutable fabric: XPUs, hardwired intra-cube links, the OCS
/// circuit table, and per-job ownership of XPUs and links.
///
/// Single-owner mutable value; run independent copies in parallel, never
/// share one across threads.
class ClusterState {
  public:
    explicit ClusterState(const ClusterSpec& spec);

    const ClusterSpec& spec() const { return spec_; }

    // --- identity/indexing -------------------------------------------------
    long total_xpus() const { return total_xpus_; }
    long busy_xpus() const { return busy_xpus_; }
    long free_xpus() const { return total_xpus_ - busy_xpus_; }
    bool xpu_valid(const XpuId& x) const;
    long xpu_index(const XpuId& x) const;  // dense [0, total_xpus)
    XpuId xpu_at(long index) const;

    // --- adjacency ---------------------------------------------------------
    /// All links currently incident on `xpu` (at most 6).
    std::vector<std::pair<LinkId, XpuId>> neighbors(const XpuId& xpu) const;
    /// Existing physical links joining u and v (0, 1 or 2 parallel cables).
    std::vector<LinkId> links_between(const XpuId& u, const XpuId& v) const;
    bool link_exists(const LinkId& link) const;

    // --- circuits ----------------------------------------------------------
    bool is_face_port(const PortId& p) const;
    OcsId ocs_of(const PortId& p) const;  // throws AlignmentError if not a face port
    /// Current circuit on a face port, if any.
    std::optional<Circuit> circuit_on(const PortId& p) const;
    /// Program a circuit joining two face ports of the same OCS. Any prior
    /// unowned circuits on the two ports are removed first. Throws
    /// AlignmentError / BusyError / ConfigError (static mode).
    Circuit set_circuit(const PortId& out_port, const PortId& in_port);
    /// The link a circuit induces.
    LinkId link_of(const Circuit& c) const;

    // --- ownership ---------------------------------------------------------
    std::optional<std::string> xpu_owner(const XpuId& x) const;
    bool xpu_free(const XpuId& x) const;
    std::optional<std::string> link_owner(const LinkId& l) const;
    /// Grant `job` exclusive use of the XPUs and links. All must be unowned,
    /// all links must exist, and link endpoints must lie inside `xpus`.
    /// Atomic: throws ExclusivityError/LookupError without mutating.
    void allocate(const std::string& job, std::span<const XpuId> xpus,
                  std::span<const LinkId> links);
    /// Release everything `job` holds. Circuits stay programmed as-is.
    void release(const std::string& job);
    bool has_allocation(const std::string& job) const;

    // --- diagnostics ---------------------------------------------------------
    /// Structural invariant sweep: circuit table is a matching, ownership is
    /// consistent, conservation holds. Returns human-readable violations.
    std::vector<std::string> check_invariants() const;

    /// Free/busy as a dense bitmap indexed by xpu_index (hot-path queries).
    const std::vector<uint8_t>& busy_bitmap() const { return xpu_busy_; }
    long busy_in_cube(int cube) const { return busy_per_cube_[cube]; }

  private:
    struct Allocation {
        std::vector<XpuId> xpus;
        std::vector<LinkId> links;
    };

    long face_index(Dim d, int i, int j, int cube) const;
    void remove_circuit_at(Dim d, int i, int j, int out_cube);

    ClusterSpec spec_;
    long total_xpus_ = 0;
    long busy_xpus_ = 0;
    int extents_[3] = {0, 0, 0};  // per-dim addressable extent (N or Lx/Ly/Lz)
    int cube_count_ = 1;

    std::vector<uint8_t> xpu_busy_;              // by xpu_index
    std::vector<std::string> xpu_owner_;         // by xpu_index, "" when free
    std::vector<long> busy_per_cube_;

    // Circuit table, reconfigurable mode only. For each (dim, i, j): the cube
    // whose dim- port receives from this cube's dim+ port, or -1.
    std::vector<int32_t> circuit_out_to_in_;
    std::vector<int32_t> circuit_in_to_out_;

    std::unordered_map<LinkId, std::string, LinkIdHash> link_owner_;
    std::unordered_map<std::string, Allocation> allocations_;
};

/// Fresh cluster in the default wiring: every XPU free; in reconfigurable
/// mode every face port self-wrapped, in static mode fixed wraps close each
/// dimension. Deterministic.
ClusterState build_cluster(const ClusterSpec& spec);

}  // namespace rfold
