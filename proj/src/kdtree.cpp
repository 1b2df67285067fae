#include "pcreg/kdtree.hpp"

#include <algorithm>
#include <limits>

namespace pcreg {

NeighborIndex::NeighborIndex(const PointCloud& cloud) : points_(cloud.points()) {
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::int32_t>(i);
    nodes_.reserve(2 * points_.size() / kLeafSize + 4);
    root_ = build(0, static_cast<std::int32_t>(order_.size()));
}

std::int32_t NeighborIndex::build(std::int32_t begin, std::int32_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
        nodes_.push_back(node);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    // Split on the axis with the widest extent.
    Vec3 lo = points_[order_[begin]];
    Vec3 hi = lo;
    for (std::int32_t i = begin + 1; i < end; ++i) {
        const Vec3& p = points_[order_[i]];
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    int axis = 0;
    double extent = hi[0] - lo[0];
    for (int a = 1; a < 3; ++a) {
        if (hi[a] - lo[a] > extent) {
            extent = hi[a] - lo[a];
            axis = a;
        }
    }
    if (extent == 0.0) {  // all points coincide; keep as a leaf
        nodes_.push_back(node);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    const std::int32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::int32_t a, std::int32_t b) {
                         const double ca = points_[a][axis];
                         const double cb = points_[b][axis];
                         if (ca != cb) return ca < cb;
                         return a < b;
                     });
    node.axis = axis;
    node.split = points_[order_[mid]][axis];

    nodes_.push_back(node);
    const std::int32_t id = static_cast<std::int32_t>(nodes_.size() - 1);
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

namespace {

// "Is candidate a better than b" under (distance, index) ordering.
struct ByIndex {
    bool operator()(double d2a, std::size_t ia, double d2b, std::size_t ib) const {
        if (d2a != d2b) return d2a < d2b;
        return ia < ib;
    }
};

// (distance, lexicographic coordinates, index) ordering; independent of the
// input point order except between exactly coincident points.
struct Canonical {
    const std::vector<Vec3>* pts;
    bool operator()(double d2a, std::size_t ia, double d2b, std::size_t ib) const {
        if (d2a != d2b) return d2a < d2b;
        const Vec3& a = (*pts)[ia];
        const Vec3& b = (*pts)[ib];
        if (!(a == b)) return lex_less(a, b);
        return ia < ib;
    }
};

}  // namespace

template <class Better>
void NeighborIndex::knn_search(const Vec3& q, std::size_t k, const Better& better,
                               std::vector<std::pair<double, std::size_t>>& found) const {
    found.clear();
    if (k == 0) return;
    k = std::min(k, points_.size());
    found.reserve(k + 1);

    auto consider = [&](std::size_t idx) {
        const double d2 = squared_distance(points_[idx], q);
        if (found.size() == k && !better(d2, idx, found.back().first, found.back().second)) return;
        // Insert keeping the list sorted best-first.
        auto pos = found.begin();
        while (pos != found.end() && better(pos->first, pos->second, d2, idx)) ++pos;
        found.insert(pos, {d2, idx});
        if (found.size() > k) found.pop_back();
    };

    // Recursive traversal, near side first. Subtrees are pruned only when the
    // plane distance strictly exceeds the current worst distance, so boundary
    // ties are always visited and resolved by the comparator.
    auto visit = [&](auto&& self, std::int32_t node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (std::int32_t i = node.begin; i < node.end; ++i) consider(order_[i]);
            return;
        }
        const double delta = q[node.axis] - node.split;
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        self(self, near);
        if (found.size() < k || delta * delta <= found.back().first) self(self, far);
    };
    visit(visit, root_);
}

std::size_t NeighborIndex::nearest(const Vec3& q) const {
    std::vector<std::pair<double, std::size_t>> found;
    knn_search(q, 1, ByIndex{}, found);
    return found.front().second;
}

double NeighborIndex::nearest_squared_distance(const Vec3& q) const {
    std::vector<std::pair<double, std::size_t>> found;
    knn_search(q, 1, ByIndex{}, found);
    return found.front().first;
}

std::vector<std::size_t> NeighborIndex::query(const Vec3& q, std::size_t k) const {
    std::vector<std::pair<double, std::size_t>> found;
    knn_search(q, k, ByIndex{}, found);
    std::vector<std::size_t> out;
    out.reserve(found.size());
    for (const auto& [d2, idx] : found) out.push_back(idx);
    return out;
}

std::vector<std::size_t> NeighborIndex::query_canonical(const Vec3& q, std::size_t k) const {
    std::vector<std::pair<double, std::size_t>> found;
    knn_search(q, k, Canonical{&points_}, found);
    std::vector<std::size_t> out;
    out.reserve(found.size());
    for (const auto& [d2, idx] : found) out.push_back(idx);
    return out;
}

std::vector<std::size_t> NeighborIndex::within(const Vec3& q, double radius) const {
    std::vector<std::size_t> out;
    const double r2 = radius * radius;
    auto visit = [&](auto&& self, std::int32_t node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (std::int32_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                if (squared_distance(points_[idx], q) <= r2) out.push_back(idx);
            }
            return;
        }
        const double delta = q[node.axis] - node.split;
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        self(self, near);
        if (delta * delta <= r2) self(self, far);
    };
    visit(visit, root_);
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t NeighborIndex::count_within(const Vec3& q, double radius) const {
    std::size_t count = 0;
    const double r2 = radius * radius;
    auto visit = [&](auto&& self, std::int32_t node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (std::int32_t i = node.begin; i < node.end; ++i) {
                if (squared_distance(points_[order_[i]], q) <= r2) ++count;
            }
            return;
        }
        const double delta = q[node.axis] - node.split;
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        self(self, near);
        if (delta * delta <= r2) self(self, far);
    };
    visit(visit, root_);
    return count;
}

}  // namespace pcreg
