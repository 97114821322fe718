#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lope/types.hpp"

namespace lope {

struct KMeansResult {
  Matrix centroids;                      // k x dim
  std::vector<std::size_t> assignments;  // nearest centroid per point
  // Within-cluster sum of squares after every assignment step.
  std::vector<double> objective_trace;
};

/// Lloyd's algorithm. Centroids start at k distinct data points drawn with the
/// seed; at most max_iterations update/assign rounds run, stopping early once
/// assignments stop changing. A centroid that loses all its points is moved
/// onto the point farthest from its current centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iterations = 25);

double within_cluster_sum_of_squares(const Matrix& points, const Matrix& centroids,
                                     const std::vector<std::size_t>& assignments);

}  // namespace lope
