#include "lope/models/kmeans.hpp"

#include <limits>
#include <numeric>

#include "lope/error.hpp"
#include "lope/random.hpp"

namespace lope {
namespace {

// Returns true if any assignment changed.
bool assign_points(const Matrix& points, const Matrix& centroids, std::vector<std::size_t>& assignments) {
  bool changed = false;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Eigen::Index best = 0;
    (centroids.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
    const auto best_index = static_cast<std::size_t>(best);
    if (assignments[static_cast<std::size_t>(i)] != best_index) {
      assignments[static_cast<std::size_t>(i)] = best_index;
      changed = true;
    }
  }
  return changed;
}

void update_centroids(const Matrix& points, Matrix& centroids, const std::vector<std::size_t>& assignments) {
  const auto k = centroids.rows();
  Matrix sums = Matrix::Zero(k, points.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto c = assignments[static_cast<std::size_t>(i)];
    sums.row(static_cast<Eigen::Index>(c)) += points.row(i);
    ++counts[c];
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      continue;
    }
    // Empty cluster: move it onto the point farthest from its own centroid.
    Eigen::Index farthest = 0;
    double worst = -1.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const auto own = static_cast<Eigen::Index>(assignments[static_cast<std::size_t>(i)]);
      const double d = (points.row(i) - centroids.row(own)).squaredNorm();
      if (d > worst) {
        worst = d;
        farthest = i;
      }
    }
    centroids.row(c) = points.row(farthest);
  }
}

}  // namespace

double within_cluster_sum_of_squares(const Matrix& points, const Matrix& centroids,
                                     const std::vector<std::size_t>& assignments) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += (points.row(i) - centroids.row(static_cast<Eigen::Index>(assignments[static_cast<std::size_t>(i)])))
                 .squaredNorm();
  }
  return total;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iterations) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0) throw PreconditionError("kmeans needs k >= 1");
  if (k > n) throw PreconditionError("kmeans needs k <= number of points");

  // Partial Fisher-Yates: the first k entries become the initial centroids.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }

  KMeansResult result;
  result.centroids.resize(static_cast<Eigen::Index>(k), points.cols());
  for (std::size_t c = 0; c < k; ++c) {
    result.centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(order[c]));
  }
  result.assignments.assign(n, std::numeric_limits<std::size_t>::max());
  assign_points(points, result.centroids, result.assignments);
  result.objective_trace.push_back(within_cluster_sum_of_squares(points, result.centroids, result.assignments));

  for (std::size_t it = 0; it < max_iterations; ++it) {
    update_centroids(points, result.centroids, result.assignments);
    const bool changed = assign_points(points, result.centroids, result.assignments);
    result.objective_trace.push_back(within_cluster_sum_of_squares(points, result.centroids, result.assignments));
    if (!changed) break;
  }
  return result;
}

}  // namespace lope
