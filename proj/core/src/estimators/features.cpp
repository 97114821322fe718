#include "lope/estimators/features.hpp"

#include "lope/error.hpp"

namespace lope {
namespace {

void check_user(const HistoricalDataset& data, const Matrix& features) {
  for (const auto u : data.users) {
    if (u >= static_cast<std::size_t>(features.rows())) {
      throw DimensionError("record refers to user " + std::to_string(u) + " outside the context set");
    }
  }
}

}  // namespace

namespace {

// Appends s and, with `cross`, x (x) s (s-major) after `head`.
Vector append_surrogate(const Vector& head, const Eigen::Ref<const Vector>& x, std::span<const double> s,
                        bool cross) {
  const auto ds = static_cast<Eigen::Index>(s.size());
  Vector z(head.size() + ds + (cross ? ds * x.size() : 0));
  z.head(head.size()) = head;
  for (Eigen::Index d = 0; d < ds; ++d) {
    z(head.size() + d) = s[static_cast<std::size_t>(d)];
    if (cross) z.segment(head.size() + ds + d * x.size(), x.size()) = s[static_cast<std::size_t>(d)] * x;
  }
  return z;
}

}  // namespace

Vector encode_xs(const Eigen::Ref<const Vector>& x, std::span<const double> s, bool cross) {
  return append_surrogate(x, x, s, cross);
}

std::size_t encoded_xa_dim(std::size_t dim_x, std::size_t n_actions, bool interactions) {
  return dim_x + n_actions + (interactions ? dim_x * n_actions : 0);
}

Vector encode_xa(const Eigen::Ref<const Vector>& x, std::size_t action, std::size_t n_actions, bool interactions) {
  if (action >= n_actions) throw DimensionError("action index out of range");
  const auto dx = x.size();
  const auto A = static_cast<Eigen::Index>(n_actions);
  Vector z = Vector::Zero(static_cast<Eigen::Index>(encoded_xa_dim(static_cast<std::size_t>(dx), n_actions, interactions)));
  z.head(dx) = x;
  z(dx + static_cast<Eigen::Index>(action)) = 1.0;
  if (interactions) z.segment(dx + A + static_cast<Eigen::Index>(action) * dx, dx) = x;
  return z;
}

Vector encode_xas(const Eigen::Ref<const Vector>& x, std::size_t action, std::size_t n_actions,
                  std::span<const double> s, bool interactions, bool cross) {
  return append_surrogate(encode_xa(x, action, n_actions, interactions), x, s, cross);
}

Matrix design_xs(const HistoricalDataset& data, const Matrix& features, bool cross) {
  check_user(data, features);
  const auto ds = static_cast<Eigen::Index>(data.dim_s);
  Matrix X(static_cast<Eigen::Index>(data.size()), features.cols() + ds + (cross ? ds * features.cols() : 0));
  for (std::size_t i = 0; i < data.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) =
        encode_xs(features.row(static_cast<Eigen::Index>(data.users[i])).transpose(), data.short_row(i), cross)
            .transpose();
  }
  return X;
}

Matrix design_xa(const HistoricalDataset& data, const Matrix& features, std::size_t n_actions, bool interactions) {
  check_user(data, features);
  const auto dim = encoded_xa_dim(static_cast<std::size_t>(features.cols()), n_actions, interactions);
  Matrix X(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < data.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) =
        encode_xa(features.row(static_cast<Eigen::Index>(data.users[i])).transpose(), data.actions[i], n_actions,
                  interactions)
            .transpose();
  }
  return X;
}

Matrix design_xas(const HistoricalDataset& data, const Matrix& features, std::size_t n_actions,
                  bool interactions, bool cross) {
  check_user(data, features);
  const auto ds = static_cast<Eigen::Index>(data.dim_s);
  const auto dim = static_cast<Eigen::Index>(encoded_xa_dim(static_cast<std::size_t>(features.cols()), n_actions,
                                                            interactions)) +
                   ds + (cross ? ds * features.cols() : 0);
  Matrix X(static_cast<Eigen::Index>(data.size()), dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) =
        encode_xas(features.row(static_cast<Eigen::Index>(data.users[i])).transpose(), data.actions[i], n_actions,
                   data.short_row(i), interactions, cross)
            .transpose();
  }
  return X;
}

Matrix design_all_xa(const Matrix& features, std::size_t n_actions, bool interactions) {
  const auto dim = encoded_xa_dim(static_cast<std::size_t>(features.cols()), n_actions, interactions);
  Matrix X(features.rows() * static_cast<Eigen::Index>(n_actions), static_cast<Eigen::Index>(dim));
  for (Eigen::Index u = 0; u < features.rows(); ++u) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      X.row(u * static_cast<Eigen::Index>(n_actions) + static_cast<Eigen::Index>(a)) =
          encode_xa(features.row(u).transpose(), a, n_actions, interactions).transpose();
    }
  }
  return X;
}

}  // namespace lope
