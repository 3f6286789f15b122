#pragma once

#include "roadsim/geom.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace roadsim {

/// Binary bounding-volume hierarchy over a fixed set of boxes. Built bottom-up
/// by greedy nearest-neighbor merging in sorted Morton order; queries return
/// exactly the ids whose stored box intersects the query box. Queries are
/// read-only and safe to run from multiple threads.
class Bvh {
  public:
    struct Node {
        AABB box;
        int32_t left = -1;
        int32_t right = -1;
        int32_t item = -1; // leaf payload; -1 for internal nodes
    };

    Bvh() = default;
    static Bvh build(std::span<const AABB> boxes);

    void query(const AABB& q, std::vector<int32_t>& out) const;
    std::vector<int32_t> query(const AABB& q) const;

    std::size_t size() const { return leaf_count_; }
    bool empty() const { return nodes_.empty(); }

    const std::vector<Node>& nodes() const { return nodes_; }
    int32_t root() const { return root_; }

  private:
    std::vector<Node> nodes_;
    int32_t root_ = -1;
    std::size_t leaf_count_ = 0;
};

struct RangeQueryStats {
    std::size_t nodes_visited = 0;
    std::size_t probe_steps = 0;
    std::size_t total() const { return nodes_visited + probe_steps; }
};

/// Static 2D range tree: a balanced tree on x where every node carries its
/// subtree's points sorted by y. Point ids are the indices of the input;
/// duplicates are preserved. Queries cost O(log^2 n + k) and report exactly
/// the ids inside the closed query box.
class RangeTree {
  public:
    RangeTree() = default;
    static RangeTree build(std::span<const Vec2> points);

    void query(const AABB& q, std::vector<int32_t>& out, RangeQueryStats* stats = nullptr) const;
    std::vector<int32_t> query(const AABB& q) const;

    std::size_t size() const { return points_.size(); }
    const Vec2& point(int32_t id) const { return points_[static_cast<std::size_t>(id)]; }

  private:
    struct Node {
        double x_min = 0.0;
        double x_max = 0.0;
        int32_t left = -1;
        int32_t right = -1;
        int32_t assoc_begin = 0;
        int32_t assoc_end = 0; // slice of assoc_, sorted by (y, id)
    };

    int32_t build_rec(std::span<const int32_t> ids);

    std::vector<Node> nodes_;
    std::vector<std::pair<double, int32_t>> assoc_;
    std::vector<Vec2> points_;
    int32_t root_ = -1;
};

} // namespace roadsim
