#ifndef PERPSCALE_QUADTREE_HPP
#define PERPSCALE_QUADTREE_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

namespace perpscale {

/// Barnes-Hut quadtree over 2-D embedding coordinates. Cells are squares;
/// subdivision stops at single points, coincident points, or a depth guard.
/// A cell is summarized by its center of mass and point count. The opening
/// criterion compares cell side length to the distance from the query point
/// to the cell's center of mass: side^2 < theta^2 * dist^2 permits the
/// far-field approximation, so theta = 0 always descends to exact leaves.
class QuadTree {
public:
    QuadTree(const double* coords, std::size_t n) : coords_(coords) {
        double min_x = coords[0], max_x = coords[0];
        double min_y = coords[1], max_y = coords[1];
        for (std::size_t i = 1; i < n; ++i) {
            min_x = std::min(min_x, coords[2 * i]);
            max_x = std::max(max_x, coords[2 * i]);
            min_y = std::min(min_y, coords[2 * i + 1]);
            max_y = std::max(max_y, coords[2 * i + 1]);
        }
        const double cx = 0.5 * (min_x + max_x);
        const double cy = 0.5 * (min_y + max_y);
        double half = 0.5 * std::max(max_x - min_x, max_y - min_y);
        half = half * (1.0 + 1e-12) + 1e-300;

        order_.resize(n);
        for (std::size_t i = 0; i < n; ++i) order_[i] = static_cast<std::uint32_t>(i);
        nodes_.reserve(2 * n);
        build(0, n, cx, cy, half, 0);
    }

    struct Repulsion {
        double fx = 0.0, fy = 0.0;  // sum of count * w^2 * (q - com)
        double z = 0.0;             // sum of count * w, query's own unit term included
    };

    /// Accumulates the repulsive field at (qx, qy). The query point itself,
    /// being in the tree, contributes w = 1 and zero force when resolved
    /// exactly; callers subtract 1 from z to exclude it.
    Repulsion repulsion(double qx, double qy, double theta) const {
        const double theta_sq = theta * theta;
        Repulsion out;
        // Depth is capped at 61, so DFS stack depth is bounded by 3*61+1.
        std::int32_t stack[256];
        int top = 0;
        stack[top++] = 0;
        while (top > 0) {
            const Node& node = nodes_[static_cast<std::size_t>(stack[--top])];
            const double dx = qx - node.com_x;
            const double dy = qy - node.com_y;
            const double dist_sq = dx * dx + dy * dy;
            const double side = 2.0 * node.half;
            if (node.leaf || side * side < theta_sq * dist_sq) {
                const double w = 1.0 / (1.0 + dist_sq);
                const double cw = static_cast<double>(node.count) * w;
                out.z += cw;
                out.fx += cw * w * dx;
                out.fy += cw * w * dy;
            } else {
                // Push in reverse so children are visited in quadrant order.
                for (int c = 3; c >= 0; --c) {
                    if (node.child[c] >= 0) stack[top++] = node.child[c];
                }
            }
        }
        return out;
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        double com_x = 0.0, com_y = 0.0;
        double half = 0.0;
        std::uint32_t count = 0;
        bool leaf = true;
        std::int32_t child[4] = {-1, -1, -1, -1};
    };

    std::int32_t build(std::size_t begin, std::size_t end, double cx, double cy, double half, int depth) {
        const auto index = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        {
            Node& node = nodes_.back();
            node.half = half;
            node.count = static_cast<std::uint32_t>(end - begin);
            double sx = 0.0, sy = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                sx += coords_[2 * order_[i]];
                sy += coords_[2 * order_[i] + 1];
            }
            node.com_x = sx / static_cast<double>(node.count);
            node.com_y = sy / static_cast<double>(node.count);
        }

        bool all_equal = true;
        {
            const double x0 = coords_[2 * order_[begin]];
            const double y0 = coords_[2 * order_[begin] + 1];
            for (std::size_t i = begin + 1; i < end; ++i) {
                if (coords_[2 * order_[i]] != x0 || coords_[2 * order_[i] + 1] != y0) {
                    all_equal = false;
                    break;
                }
            }
        }
        if (end - begin == 1 || all_equal || depth > 60) {
            return index;
        }

        // Partition the span into the four quadrants around (cx, cy).
        const auto base = order_.begin();
        auto mid_y = std::partition(base + static_cast<std::ptrdiff_t>(begin), base + static_cast<std::ptrdiff_t>(end),
                                    [&](std::uint32_t p) { return coords_[2 * p + 1] < cy; });
        auto lo_x = std::partition(base + static_cast<std::ptrdiff_t>(begin), mid_y,
                                   [&](std::uint32_t p) { return coords_[2 * p] < cx; });
        auto hi_x = std::partition(mid_y, base + static_cast<std::ptrdiff_t>(end),
                                   [&](std::uint32_t p) { return coords_[2 * p] < cx; });

        const std::size_t b0 = begin;
        const std::size_t b1 = static_cast<std::size_t>(lo_x - base);
        const std::size_t b2 = static_cast<std::size_t>(mid_y - base);
        const std::size_t b3 = static_cast<std::size_t>(hi_x - base);
        const std::size_t spans[5] = {b0, b1, b2, b3, end};
        const double h = 0.5 * half;
        const double child_cx[4] = {cx - h, cx + h, cx - h, cx + h};
        const double child_cy[4] = {cy - h, cy - h, cy + h, cy + h};

        std::int32_t children[4] = {-1, -1, -1, -1};
        for (int c = 0; c < 4; ++c) {
            if (spans[c + 1] > spans[c]) {
                children[c] = build(spans[c], spans[c + 1], child_cx[c], child_cy[c], h, depth + 1);
            }
        }
        Node& node = nodes_[static_cast<std::size_t>(index)];
        node.leaf = false;
        for (int c = 0; c < 4; ++c) node.child[c] = children[c];
        return index;
    }

    const double* coords_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

} // namespace perpscale

#endif
