#include "roadsim/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace roadsim {

namespace {

uint32_t expand_bits16(uint32_t v) {
    v &= 0xffffu;
    v = (v | (v << 8)) & 0x00ff00ffu;
    v = (v | (v << 4)) & 0x0f0f0f0fu;
    v = (v | (v << 2)) & 0x33333333u;
    v = (v | (v << 1)) & 0x55555555u;
    return v;
}

uint32_t morton2(uint32_t x, uint32_t y) { return expand_bits16(x) | (expand_bits16(y) << 1); }

double half_perimeter(const AABB& b) { return b.sizes().sum(); }

} // namespace

Bvh Bvh::build(std::span<const AABB> boxes) {
    Bvh out;
    out.leaf_count_ = boxes.size();
    if (boxes.empty()) return out;

    AABB bounds;
    for (const AABB& b : boxes) bounds.extend(b.center());
    const Vec2 extent = bounds.sizes().cwiseMax(1e-12);

    std::vector<std::pair<uint32_t, int32_t>> order(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const Vec2 rel = (boxes[i].center() - bounds.min()).cwiseQuotient(extent);
        const auto qx = static_cast<uint32_t>(std::min(65535.0, std::max(0.0, rel.x() * 65535.0)));
        const auto qy = static_cast<uint32_t>(std::min(65535.0, std::max(0.0, rel.y() * 65535.0)));
        order[i] = {morton2(qx, qy), static_cast<int32_t>(i)};
    }
    std::sort(order.begin(), order.end());

    out.nodes_.reserve(2 * boxes.size());
    std::vector<int32_t> clusters;
    clusters.reserve(boxes.size());
    for (const auto& [code, idx] : order) {
        (void)code;
        out.nodes_.push_back(Node{boxes[static_cast<std::size_t>(idx)], -1, -1, idx});
        clusters.push_back(static_cast<int32_t>(out.nodes_.size() - 1));
    }

    // Greedy agglomeration: each pass merges Morton-adjacent clusters,
    // preferring the cheaper of the two neighboring unions. At most one
    // deferral in a row, so every pass shrinks the list by at least a third
    // and the tree stays logarithmic.
    std::vector<int32_t> next;
    while (clusters.size() > 1) {
        next.clear();
        std::size_t i = 0;
        bool deferred = false;
        while (i < clusters.size()) {
            if (i + 1 >= clusters.size()) {
                next.push_back(clusters[i]);
                ++i;
                continue;
            }
            const AABB with_next =
                out.nodes_[clusters[i]].box.merged(out.nodes_[clusters[i + 1]].box);
            if (!deferred && i + 2 < clusters.size()) {
                const AABB skip =
                    out.nodes_[clusters[i + 1]].box.merged(out.nodes_[clusters[i + 2]].box);
                if (half_perimeter(skip) < half_perimeter(with_next)) {
                    next.push_back(clusters[i]);
                    ++i;
                    deferred = true;
                    continue;
                }
            }
            out.nodes_.push_back(Node{with_next, clusters[i], clusters[i + 1], -1});
            next.push_back(static_cast<int32_t>(out.nodes_.size() - 1));
            i += 2;
            deferred = false;
        }
        clusters.swap(next);
    }
    out.root_ = clusters.front();
    return out;
}

void Bvh::query(const AABB& q, std::vector<int32_t>& out) const {
    if (root_ < 0) return;
    int32_t stack[128];
    int top = 0;
    stack[top++] = root_;
    while (top > 0) {
        const Node& n = nodes_[static_cast<std::size_t>(stack[--top])];
        if (!n.box.intersects(q)) continue;
        if (n.item >= 0) {
            out.push_back(n.item);
        } else {
            stack[top++] = n.right;
            stack[top++] = n.left;
        }
    }
}

std::vector<int32_t> Bvh::query(const AABB& q) const {
    std::vector<int32_t> out;
    query(q, out);
    return out;
}

RangeTree RangeTree::build(std::span<const Vec2> points) {
    RangeTree t;
    t.points_.assign(points.begin(), points.end());
    if (points.empty()) return t;

    std::vector<int32_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
        const Vec2& pa = points[static_cast<std::size_t>(a)];
        const Vec2& pb = points[static_cast<std::size_t>(b)];
        if (pa.x() != pb.x()) return pa.x() < pb.x();
        if (pa.y() != pb.y()) return pa.y() < pb.y();
        return a < b;
    });

    t.nodes_.reserve(2 * points.size());
    t.root_ = t.build_rec(order);
    return t;
}

int32_t RangeTree::build_rec(std::span<const int32_t> ids) {
    if (ids.size() == 1) {
        Node n;
        const int32_t id = ids.front();
        n.x_min = n.x_max = points_[static_cast<std::size_t>(id)].x();
        n.assoc_begin = static_cast<int32_t>(assoc_.size());
        assoc_.emplace_back(points_[static_cast<std::size_t>(id)].y(), id);
        n.assoc_end = static_cast<int32_t>(assoc_.size());
        nodes_.push_back(n);
        return static_cast<int32_t>(nodes_.size() - 1);
    }

    const std::size_t mid = ids.size() / 2;
    const int32_t left = build_rec(ids.subspan(0, mid));
    const int32_t right = build_rec(ids.subspan(mid));

    Node n;
    n.left = left;
    n.right = right;
    n.x_min = nodes_[static_cast<std::size_t>(left)].x_min;
    n.x_max = nodes_[static_cast<std::size_t>(right)].x_max;
    n.assoc_begin = static_cast<int32_t>(assoc_.size());

    // Merge the children's y-sorted slices. The children were built first, so
    // their slices are already final.
    const Node& ln = nodes_[static_cast<std::size_t>(left)];
    const Node& rn = nodes_[static_cast<std::size_t>(right)];
    int32_t a = ln.assoc_begin, b = rn.assoc_begin;
    while (a < ln.assoc_end && b < rn.assoc_end) {
        if (assoc_[static_cast<std::size_t>(a)] <= assoc_[static_cast<std::size_t>(b)]) {
            assoc_.push_back(assoc_[static_cast<std::size_t>(a++)]);
        } else {
            assoc_.push_back(assoc_[static_cast<std::size_t>(b++)]);
        }
    }
    while (a < ln.assoc_end) assoc_.push_back(assoc_[static_cast<std::size_t>(a++)]);
    while (b < rn.assoc_end) assoc_.push_back(assoc_[static_cast<std::size_t>(b++)]);

    n.assoc_end = static_cast<int32_t>(assoc_.size());
    nodes_.push_back(n);
    return static_cast<int32_t>(nodes_.size() - 1);
}

void RangeTree::query(const AABB& q, std::vector<int32_t>& out, RangeQueryStats* stats) const {
    if (root_ < 0) return;
    RangeQueryStats local;
    RangeQueryStats& st = stats ? *stats : local;

    int32_t stack[96];
    int top = 0;
    stack[top++] = root_;
    while (top > 0) {
        const Node& n = nodes_[static_cast<std::size_t>(stack[--top])];
        ++st.nodes_visited;
        if (n.x_max < q.min().x() || n.x_min > q.max().x()) continue;
        if (q.min().x() <= n.x_min && n.x_max <= q.max().x()) {
            // Canonical node: binary-search the y slice.
            int32_t lo = n.assoc_begin, hi = n.assoc_end;
            while (lo < hi) {
                ++st.probe_steps;
                const int32_t mid = lo + (hi - lo) / 2;
                if (assoc_[static_cast<std::size_t>(mid)].first < q.min().y()) {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            for (int32_t i = lo; i < n.assoc_end; ++i) {
                const auto& [y, id] = assoc_[static_cast<std::size_t>(i)];
                if (y > q.max().y()) break;
                out.push_back(id);
            }
            continue;
        }
        if (n.left < 0) continue; // partially covered leaf: single x, handled above
        stack[top++] = n.right;
        stack[top++] = n.left;
    }
}

std::vector<int32_t> RangeTree::query(const AABB& q) const {
    std::vector<int32_t> out;
    query(q, out);
    return out;
}

} // namespace roadsim
