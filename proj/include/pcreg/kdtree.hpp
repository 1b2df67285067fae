#pragma once

#include <cstddef>
#include <vector>

#include "pcreg/point_cloud.hpp"
#include "pcreg/vec3.hpp"

namespace pcreg {

// Exact nearest-neighbor index over a point cloud (3-d KD-tree, no
// approximation). Immutable after construction and safe to share across
// threads. Equal distances are broken by the lowest point index so query
// results are fully deterministic.
class NeighborIndex {
  public:
    explicit NeighborIndex(const PointCloud& cloud);

    std::size_t size() const { return points_.size(); }
    const Vec3& point(std::size_t i) const { return points_[i]; }

    // Index of the closest point to q (ties: lowest index).
    std::size_t nearest(const Vec3& q) const;

    double nearest_squared_distance(const Vec3& q) const;

    // The min(k, N) nearest indices, ascending by (distance, index).
    std::vector<std::size_t> query(const Vec3& q, std::size_t k) const;

    // As query(), but distance ties are broken by lexicographic point
    // coordinates before the index, making the result independent of the
    // input point order. Used by the registration model.
    std::vector<std::size_t> query_canonical(const Vec3& q, std::size_t k) const;

    // All indices with squared distance <= radius^2, ascending by index.
    std::vector<std::size_t> within(const Vec3& q, double radius) const;

    std::size_t count_within(const Vec3& q, double radius) const;

  private:
    struct Node {
        int axis = -1;          // -1 marks a leaf
        double split = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::int32_t begin = 0;  // range into order_ (leaves)
        std::int32_t end = 0;
    };

    std::int32_t build(std::int32_t begin, std::int32_t end);

    template <class Better>
    void knn_search(const Vec3& q, std::size_t k, const Better& better,
                    std::vector<std::pair<double, std::size_t>>& heap) const;

    std::vector<Vec3> points_;
    std::vector<std::int32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;

    static constexpr std::int32_t kLeafSize = 8;
};

}  // namespace pcreg
