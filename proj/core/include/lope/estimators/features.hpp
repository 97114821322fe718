#pragma once

#include <cstddef>
#include <span>

#include "lope/types.hpp"

namespace lope {

// Regression inputs built from a user's feature row.
//   xs:  x (+) s
//   xa:  x (+) onehot(a), optionally followed by x (x) onehot(a)
//   xas: the xa encoding followed by s
// With `cross`, the xs and xas encodings end with x (x) s.
Vector encode_xs(const Eigen::Ref<const Vector>& x, std::span<const double> s, bool cross = false);
Vector encode_xa(const Eigen::Ref<const Vector>& x, std::size_t action, std::size_t n_actions,
                 bool interactions = false);
Vector encode_xas(const Eigen::Ref<const Vector>& x, std::size_t action, std::size_t n_actions,
                  std::span<const double> s, bool interactions = false, bool cross = false);

std::size_t encoded_xa_dim(std::size_t dim_x, std::size_t n_actions, bool interactions);

// One row per logged record.
Matrix design_xs(const HistoricalDataset& data, const Matrix& features, bool cross = false);
Matrix design_xa(const HistoricalDataset& data, const Matrix& features, std::size_t n_actions,
                 bool interactions = false);
Matrix design_xas(const HistoricalDataset& data, const Matrix& features, std::size_t n_actions,
                  bool interactions = false, bool cross = false);

/// Rows encode (x, a) for every user and action, user-major: row x * n_actions + a.
Matrix design_all_xa(const Matrix& features, std::size_t n_actions, bool interactions = false);

}  // namespace lope
