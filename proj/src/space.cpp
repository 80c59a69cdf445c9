#include "lndev/space.hpp"

#include "lndev/error.hpp"

namespace lndev {

namespace {

Field identity_frame(int n) {
  std::vector<double> id(static_cast<std::size_t>(n * n), 0.0);
  for (int i = 0; i < n; ++i) id[static_cast<std::size_t>(i * n + i)] = 1.0;
  return Field::constant(n, std::move(id));
}

void check_field(const Field& f, int dim, int components, const char* what) {
  if (f.dim() != dim || f.components() != components) {
    throw ContractError(std::string(what) + " field has wrong shape for the space dimension");
  }
}

}  // namespace

ConnectionSpace::ConnectionSpace(std::string name, int dim, Field frame, Field connection,
                                 std::optional<Field> metric)
    : name_(std::move(name)),
      dim_(dim),
      frame_(std::move(frame)),
      connection_(std::move(connection)),
      metric_(std::move(metric)) {
  if (dim_ < 2 || dim_ > kMaxDim) throw ContractError("space dimension must be in [2, kMaxDim]");
  check_field(frame_, dim_, dim_ * dim_, "frame");
  check_field(connection_, dim_, dim_ * dim_ * dim_, "connection");
  if (metric_) check_field(*metric_, dim_, dim_ * dim_, "metric");
}

ConnectionSpace ConnectionSpace::coordinate(std::string name, int dim, Field connection,
                                            std::optional<Field> metric) {
  ConnectionSpace s(std::move(name), dim, identity_frame(dim), std::move(connection),
                    std::move(metric));
  s.identity_frame_ = true;
  return s;
}

const Field& ConnectionSpace::metric() const {
  if (!metric_) throw ContractError("space '" + name_ + "' has no metric attached");
  return *metric_;
}

DerivativeMode ConnectionSpace::derivative_mode() const {
  const bool fd = frame_.mode() == DerivativeMode::finite_difference ||
                  connection_.mode() == DerivativeMode::finite_difference ||
                  (metric_ && metric_->mode() == DerivativeMode::finite_difference);
  return fd ? DerivativeMode::finite_difference : DerivativeMode::analytic;
}

ConnectionSpace ConnectionSpace::with_metric(Field metric) const {
  ConnectionSpace s = *this;
  check_field(metric, dim_, dim_ * dim_, "metric");
  s.metric_ = std::move(metric);
  return s;
}

ConnectionSpace ConnectionSpace::with_connection(Field connection) const {
  ConnectionSpace s = *this;
  check_field(connection, dim_, dim_ * dim_ * dim_, "connection");
  s.connection_ = std::move(connection);
  return s;
}

}  // namespace lndev
