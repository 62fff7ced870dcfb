#pragma once

// Minimal 2-D k-d tree for k-nearest-neighbour distance queries. Built once
// over a fixed point set; queries are read-only and safe to run concurrently.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ratehalf/signal.hpp"

namespace ratehalf::detail {

class KdTree2D {
 public:
  explicit KdTree2D(std::span<const ComplexSample> points) {
    nodes_.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
      nodes_[i] = Node{points[i].real(), points[i].imag(),
                       static_cast<std::int64_t>(i)};
    build(0, static_cast<std::ptrdiff_t>(nodes_.size()), 0);
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  // Distance from q to its k-th nearest neighbour among the stored points,
  // skipping the point whose original index equals `exclude` (pass -1 to keep
  // all points). Requires at least k eligible points.
  double kth_nn_distance(ComplexSample q, int k, std::int64_t exclude = -1) const {
    BestK best(k);
    search(0, static_cast<std::ptrdiff_t>(nodes_.size()), 0,
           q.real(), q.imag(), exclude, best);
    return std::sqrt(best.worst());
  }

 private:
  struct Node {
    double x = 0.0, y = 0.0;
    std::int64_t idx = 0;
  };

  // Fixed-capacity max-heap of squared distances.
  class BestK {
   public:
    explicit BestK(int k) : k_(static_cast<std::size_t>(k)) { d2_.reserve(k_); }
    bool full() const noexcept { return d2_.size() == k_; }
    double worst() const noexcept {
      return full() ? d2_.front() : std::numeric_limits<double>::infinity();
    }
    void offer(double d2) {
      if (!full()) {
        d2_.push_back(d2);
        std::push_heap(d2_.begin(), d2_.end());
      } else if (d2 < d2_.front()) {
        std::pop_heap(d2_.begin(), d2_.end());
        d2_.back() = d2;
        std::push_heap(d2_.begin(), d2_.end());
      }
    }

   private:
    std::size_t k_;
    std::vector<double> d2_;
  };

  void build(std::ptrdiff_t lo, std::ptrdiff_t hi, int depth) {
    if (hi - lo <= 1) return;
    const std::ptrdiff_t mid = lo + (hi - lo) / 2;
    const bool use_x = (depth % 2) == 0;
    std::nth_element(nodes_.begin() + lo, nodes_.begin() + mid, nodes_.begin() + hi,
                     [use_x](const Node& a, const Node& b) {
                       return use_x ? a.x < b.x : a.y < b.y;
                     });
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
  }

  void search(std::ptrdiff_t lo, std::ptrdiff_t hi, int depth, double qx,
              double qy, std::int64_t exclude, BestK& best) const {
    if (hi <= lo) return;
    const std::ptrdiff_t mid = lo + (hi - lo) / 2;
    const Node& node = nodes_[static_cast<std::size_t>(mid)];
    if (node.idx != exclude) {
      const double dx = qx - node.x, dy = qy - node.y;
      best.offer(dx * dx + dy * dy);
    }
    const bool use_x = (depth % 2) == 0;
    const double split_gap = use_x ? qx - node.x : qy - node.y;
    const bool go_left_first = split_gap <= 0.0;
    if (go_left_first) {
      search(lo, mid, depth + 1, qx, qy, exclude, best);
      if (split_gap * split_gap < best.worst())
        search(mid + 1, hi, depth + 1, qx, qy, exclude, best);
    } else {
      search(mid + 1, hi, depth + 1, qx, qy, exclude, best);
      if (split_gap * split_gap < best.worst())
        search(lo, mid, depth + 1, qx, qy, exclude, best);
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace ratehalf::detail
