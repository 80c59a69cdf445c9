#include "lndev/geometry.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <utility>

#include "lndev/error.hpp"

namespace lndev {

namespace {

std::size_t ipow(int n, int r) {
  std::size_t p = 1;
  for (int i = 0; i < r; ++i) p *= static_cast<std::size_t>(n);
  return p;
}

// Index of slot `s` in flat index f of a rank-r tensor with extent n.
int slot_index(std::size_t f, std::size_t stride, int n) {
  return static_cast<int>((f / stride) % static_cast<std::size_t>(n));
}

}  // namespace

std::vector<Jet> invert(std::span<const Jet> m, int n, double det_eps) {
  std::vector<Jet> a(m.begin(), m.end());
  std::vector<Jet> inv(static_cast<std::size_t>(n * n), Jet(0.0));
  for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i * n + i)] = Jet(1.0);
  auto at = [n](std::vector<Jet>& v, int r, int c) -> Jet& {
    return v[static_cast<std::size_t>(r * n + c)];
  };
  double det = 1.0;
  double scale = 0.0;
  for (const auto& j : m) scale = std::max(scale, std::abs(j.value));
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(at(a, r, col).value) > std::abs(at(a, piv, col).value)) piv = r;
    }
    if (piv != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(at(a, piv, c), at(a, col, c));
        std::swap(at(inv, piv, c), at(inv, col, c));
      }
      det = -det;
    }
    const Jet p = at(a, col, col);
    det *= p.value;
    if (std::abs(p.value) <= det_eps * std::max(1.0, scale)) {
      throw SingularFrameError("matrix is singular at the evaluation point");
    }
    const Jet pinv = Jet(1.0) / p;
    for (int c = 0; c < n; ++c) {
      at(a, col, c) = at(a, col, c) * pinv;
      at(inv, col, c) = at(inv, col, c) * pinv;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Jet f = at(a, r, col);
      if (f.value == 0.0 && f.dim == 0) continue;
      for (int c = 0; c < n; ++c) {
        at(a, r, c) -= f * at(a, col, c);
        at(inv, r, c) -= f * at(inv, col, c);
      }
    }
  }
  if (!std::isfinite(det) || std::abs(det) < det_eps) {
    throw SingularFrameError("matrix determinant below tolerance");
  }
  return inv;
}

LocalGeometry::LocalGeometry(const ConnectionSpace& space, const ChartPoint& x)
    : space_(&space), x_(x), n_(space.dim()) {
  if (x.dim() != n_) throw ContractError("point dimension does not match the space");
  const int n = n_;
  a_ = space.frame().jets(x);
  if (space.holonomic_identity()) {
    ainv_ = a_;
  } else {
    const auto minv = invert(a_, n, space.det_epsilon());
    ainv_.resize(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i) {
      for (int al = 0; al < n; ++al) {
        ainv_[static_cast<std::size_t>(i * n + al)] = minv[static_cast<std::size_t>(al * n + i)];
      }
    }
  }
  gamma_ = JetTensor::valence(n, 1, 2);
  const auto g = space.connection().jets(x);
  for (std::size_t f = 0; f < g.size(); ++f) gamma_[f] = g[f];
}

Jet LocalGeometry::frame_derivative(const Jet& f, int i) const {
  if (space_->holonomic_identity()) return partial(f, i);
  Jet r(0.0);
  for (int al = 0; al < n_; ++al) r += frame(i, al) * partial(f, al);
  return r;
}

JetTensor LocalGeometry::frame_gradient(const JetTensor& t) const {
  auto slots = t.slots();
  slots.push_back(Variance::lower);
  JetTensor out(n_, slots, t.frame());
  const auto n = static_cast<std::size_t>(n_);
  for (std::size_t f = 0; f < t.size(); ++f) {
    for (int m = 0; m < n_; ++m) out[f * n + static_cast<std::size_t>(m)] = frame_derivative(t[f], m);
  }
  return out;
}

JetTensor LocalGeometry::covariant_derivative(const JetTensor& t) const {
  JetTensor out = frame_gradient(t);
  const int r = t.rank();
  const auto n = static_cast<std::size_t>(n_);
  for (std::size_t f = 0; f < t.size(); ++f) {
    for (int s = 0; s < r; ++s) {
      const std::size_t stride = ipow(n_, r - 1 - s);
      const int a = slot_index(f, stride, n_);
      const std::size_t base = f - static_cast<std::size_t>(a) * stride;
      for (int l = 0; l < n_; ++l) {
        const Jet& tl = t[base + static_cast<std::size_t>(l) * stride];
        if (tl.value == 0.0 && tl.dim == 0) continue;
        for (int m = 0; m < n_; ++m) {
          Jet& o = out[f * n + static_cast<std::size_t>(m)];
          if (t.slot(s) == Variance::upper) {
            o += gamma_(a, l, m) * tl;
          } else {
            o -= gamma_(l, a, m) * tl;
          }
        }
      }
    }
  }
  return out;
}

const JetTensor& LocalGeometry::anholonomy() const {
  if (anholonomy_) return *anholonomy_;
  JetTensor c = JetTensor::valence(n_, 1, 2);
  if (!space_->holonomic_identity()) {
    // dA[j][al][k] = E_k(A_j^al)
    std::vector<Jet> da(static_cast<std::size_t>(n_ * n_ * n_));
    auto idx = [this](int j, int al, int k) {
      return static_cast<std::size_t>((j * n_ + al) * n_ + k);
    };
    for (int j = 0; j < n_; ++j) {
      for (int al = 0; al < n_; ++al) {
        for (int k = 0; k < n_; ++k) da[idx(j, al, k)] = frame_derivative(frame(j, al), k);
      }
    }
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        for (int k = 0; k < n_; ++k) {
          Jet s(0.0);
          for (int al = 0; al < n_; ++al) {
            s += coframe(i, al) * (da[idx(j, al, k)] - da[idx(k, al, j)]);
          }
          c(i, j, k) = -s;
        }
      }
    }
  }
  anholonomy_ = std::move(c);
  return *anholonomy_;
}

const JetTensor& LocalGeometry::torsion() const {
  if (torsion_) return *torsion_;
  const auto& c = anholonomy();
  JetTensor t = JetTensor::valence(n_, 1, 2);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      for (int k = 0; k < n_; ++k) {
        t(i, j, k) = -(gamma_(i, j, k) - gamma_(i, k, j)) - c(i, j, k);
      }
    }
  }
  torsion_ = std::move(t);
  return *torsion_;
}

const JetTensor& LocalGeometry::curvature() const {
  if (curvature_) return *curvature_;
  const auto& c = anholonomy();
  const JetTensor dg = frame_gradient(gamma_);  // [i][j][k][m] = E_m Gamma^i_{jk}
  JetTensor r = JetTensor::valence(n_, 1, 3);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      for (int k = 0; k < n_; ++k) {
        for (int l = 0; l < n_; ++l) {
          if (k == l) continue;
          Jet v = -(dg(i, j, k, l) - dg(i, j, l, k));
          for (int m = 0; m < n_; ++m) {
            v -= gamma_(m, j, k) * gamma_(i, m, l) - gamma_(m, j, l) * gamma_(i, m, k);
            v -= gamma_(i, j, m) * c(m, k, l);
          }
          r(i, j, k, l) = v;
        }
      }
    }
  }
  curvature_ = std::move(r);
  return *curvature_;
}

const JetTensor& LocalGeometry::metric() const {
  if (metric_) return *metric_;
  const auto gj = space_->metric().jets(x_);
  JetTensor g = JetTensor::valence(n_, 0, 2);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      g(i, j) = 0.5 * (gj[static_cast<std::size_t>(i * n_ + j)] + gj[static_cast<std::size_t>(j * n_ + i)]);
    }
  }
  metric_ = std::move(g);
  return *metric_;
}

const JetTensor& LocalGeometry::inverse_metric() const {
  if (inverse_metric_) return *inverse_metric_;
  const auto& g = metric();
  const auto inv = invert(g.data(), n_, space_->det_epsilon());
  JetTensor gi = JetTensor::valence(n_, 2, 0);
  for (std::size_t f = 0; f < inv.size(); ++f) gi[f] = inv[f];
  inverse_metric_ = std::move(gi);
  return *inverse_metric_;
}

JetTensor LocalGeometry::vector(const VectorField& v) const {
  if (v.components.components() != n_) throw ContractError("vector field has wrong component count");
  const auto c = v.components.jets(x_);
  if (v.basis == Basis::coordinate) return from_coordinate_components(c);
  JetTensor out = JetTensor::valence(n_, 1, 0);
  for (int k = 0; k < n_; ++k) out(k) = c[static_cast<std::size_t>(k)];
  return out;
}

std::vector<Jet> LocalGeometry::coordinate_components(const JetTensor& w) const {
  std::vector<Jet> out(static_cast<std::size_t>(n_), Jet(0.0));
  for (int al = 0; al < n_; ++al) {
    for (int k = 0; k < n_; ++k) out[static_cast<std::size_t>(al)] += frame(k, al) * w(k);
  }
  return out;
}

JetTensor LocalGeometry::from_coordinate_components(std::span<const Jet> c) const {
  JetTensor out = JetTensor::valence(n_, 1, 0);
  for (int k = 0; k < n_; ++k) {
    Jet s(0.0);
    for (int al = 0; al < n_; ++al) s += coframe(k, al) * c[static_cast<std::size_t>(al)];
    out(k) = s;
  }
  return out;
}

JetTensor LocalGeometry::tensor(const TensorField& t) const {
  JetTensor out(n_, t.slots);
  if (static_cast<std::size_t>(t.components.components()) != out.size()) {
    throw ContractError("tensor field has wrong component count");
  }
  const auto c = t.components.jets(x_);
  for (std::size_t f = 0; f < c.size(); ++f) out[f] = c[f];
  return out;
}

JetTensor LocalGeometry::sigma(const JetTensor& xi) const {
  const auto& c = anholonomy();
  JetTensor s = JetTensor::valence(n_, 1, 1);
  for (int j = 0; j < n_; ++j) {
    for (int k = 0; k < n_; ++k) {
      Jet v = frame_derivative(xi(j), k);
      for (int l = 0; l < n_; ++l) v += c(j, k, l) * xi(l);
      s(j, k) = v;
    }
  }
  return s;
}

JetTensor LocalGeometry::lie_derivative(const JetTensor& t, const JetTensor& xi) const {
  const JetTensor sig = sigma(xi);
  JetTensor out(n_, t.slots(), t.frame());
  const int r = t.rank();
  for (std::size_t f = 0; f < t.size(); ++f) {
    Jet v(0.0);
    for (int m = 0; m < n_; ++m) v += xi(m) * frame_derivative(t[f], m);
    for (int s = 0; s < r; ++s) {
      const std::size_t stride = ipow(n_, r - 1 - s);
      const int a = slot_index(f, stride, n_);
      const std::size_t base = f - static_cast<std::size_t>(a) * stride;
      for (int l = 0; l < n_; ++l) {
        const Jet& tl = t[base + static_cast<std::size_t>(l) * stride];
        if (t.slot(s) == Variance::upper) {
          v -= sig(a, l) * tl;
        } else {
          v += sig(l, a) * tl;
        }
      }
    }
    out[f] = v;
  }
  return out;
}

JetTensor LocalGeometry::coordinate_connection() const {
  JetTensor out = JetTensor::valence(n_, 1, 2, "coordinate");
  if (space_->holonomic_identity()) {
    for (std::size_t f = 0; f < gamma_.size(); ++f) out[f] = gamma_[f];
    out.set_frame("coordinate");
    return out;
  }
  // Gamma^al_{be ga} = A_i^al ( d_ga A^i_be + A^j_be A^k_ga Gamma^i_{jk} )
  for (int i = 0; i < n_; ++i) {
    for (int be = 0; be < n_; ++be) {
      for (int ga = 0; ga < n_; ++ga) {
        Jet inner = partial(coframe(i, be), ga);
        for (int j = 0; j < n_; ++j) {
          for (int k = 0; k < n_; ++k) inner += coframe(j, be) * coframe(k, ga) * gamma_(i, j, k);
        }
        for (int al = 0; al < n_; ++al) out(al, be, ga) += frame(i, al) * inner;
      }
    }
  }
  return out;
}

// ---- free operations ----

double frame_directional_derivative(const ConnectionSpace& space, const Field& f, int i,
                                    const ChartPoint& x, int component) {
  if (i < 0 || i >= space.dim()) throw ContractError("frame index out of range");
  LocalGeometry g(space, x);
  const auto js = f.jets(x);
  return g.frame_derivative(js.at(static_cast<std::size_t>(component)), i).value;
}

TensorValue covariant_derivative(const ConnectionSpace& space, const TensorField& t,
                                 const ChartPoint& x) {
  LocalGeometry g(space, x);
  return values(g.covariant_derivative(g.tensor(t)));
}

TensorValue second_covariant_derivative(const ConnectionSpace& space, const VectorField& xi,
                                        const ChartPoint& x) {
  LocalGeometry g(space, x);
  return values(g.covariant_derivative(g.covariant_derivative(g.vector(xi))));
}

namespace {

// Gamma' for E_{i'} = P[i'][i] E_i, with P given as jets at the point.
JetTensor transformed_gamma(const LocalGeometry& g, std::span<const Jet> p) {
  const int n = g.dim();
  const auto pinv = invert(p, n, g.space().det_epsilon());
  // Q[i'][i] = A^{i'}_i = Pinv[i][i']
  auto P = [&](int ip, int i) -> const Jet& { return p[static_cast<std::size_t>(ip * n + i)]; };
  auto Q = [&](int ip, int i) -> const Jet& { return pinv[static_cast<std::size_t>(i * n + ip)]; };
  const auto& gam = g.gamma();
  JetTensor out = JetTensor::valence(n, 1, 2);
  for (int ip = 0; ip < n; ++ip) {
    for (int jp = 0; jp < n; ++jp) {
      for (int kp = 0; kp < n; ++kp) {
        Jet v(0.0);
        for (int i = 0; i < n; ++i) {
          Jet inner(0.0);
          for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) inner += P(jp, j) * P(kp, k) * gam(i, j, k);
          }
          // E_{k'}(A^i_{j'}) = P[k'][k] E_k(P[j'][i])
          for (int k = 0; k < n; ++k) inner += P(kp, k) * g.frame_derivative(P(jp, i), k);
          v += Q(ip, i) * inner;
        }
        out(ip, jp, kp) = v;
      }
    }
  }
  return out;
}

}  // namespace

TensorValue transform_connection(const ConnectionSpace& space, const Field& frame_change,
                                 const ChartPoint& x) {
  LocalGeometry g(space, x);
  const auto p = frame_change.jets(x);
  if (static_cast<int>(p.size()) != space.dim() * space.dim()) {
    throw ContractError("frame change must have n*n components");
  }
  return values(transformed_gamma(g, p));
}

ConnectionSpace change_frame(const ConnectionSpace& space, const Field& frame_change,
                             std::string name) {
  const int n = space.dim();
  if (frame_change.components() != n * n) throw ContractError("frame change must have n*n components");
  auto base = std::make_shared<const ConnectionSpace>(space);
  auto point_of = [](std::span<const Jet> x) {
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = x[i].value;
    return ChartPoint(std::move(v));
  };
  Field frame = Field::analytic(n, n * n, [base, frame_change, n, point_of](std::span<const Jet> xs, std::span<Jet> out) {
    const ChartPoint x = point_of(xs);
    const auto a = base->frame().jets(x);
    const auto p = frame_change.jets(x);
    for (int ip = 0; ip < n; ++ip) {
      for (int al = 0; al < n; ++al) {
        Jet s(0.0);
        for (int i = 0; i < n; ++i) s += p[static_cast<std::size_t>(ip * n + i)] * a[static_cast<std::size_t>(i * n + al)];
        out[static_cast<std::size_t>(ip * n + al)] = s;
      }
    }
  });
  Field conn = Field::analytic(n, n * n * n, [base, frame_change, point_of](std::span<const Jet> xs, std::span<Jet> out) {
    const ChartPoint x = point_of(xs);
    LocalGeometry g(*base, x);
    const auto t = transformed_gamma(g, frame_change.jets(x));
    for (std::size_t f = 0; f < t.size(); ++f) out[f] = t[f];
  });
  std::optional<Field> metric;
  if (space.has_metric()) {
    metric = Field::analytic(n, n * n, [base, frame_change, n, point_of](std::span<const Jet> xs, std::span<Jet> out) {
      const ChartPoint x = point_of(xs);
      const auto g = base->metric().jets(x);
      const auto p = frame_change.jets(x);
      for (int ip = 0; ip < n; ++ip) {
        for (int jp = 0; jp < n; ++jp) {
          Jet s(0.0);
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
              s += p[static_cast<std::size_t>(ip * n + i)] * p[static_cast<std::size_t>(jp * n + j)] *
                   g[static_cast<std::size_t>(i * n + j)];
            }
          }
          out[static_cast<std::size_t>(ip * n + jp)] = s;
        }
      }
    });
  }
  return ConnectionSpace(name.empty() ? space.name() + "'" : std::move(name), n, std::move(frame),
                         std::move(conn), std::move(metric));
}

TensorValue coordinate_connection(const ConnectionSpace& space, const ChartPoint& x) {
  LocalGeometry g(space, x);
  return values(g.coordinate_connection());
}

}  // namespace lndev
