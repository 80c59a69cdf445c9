#include "lndev/tensor_ops.hpp"

#include "lndev/error.hpp"

namespace lndev {

JetTensor lie_connection_closed_form(const LocalGeometry& g, const JetTensor& xi) {
  const int n = g.dim();
  const auto& gam = g.gamma();
  const JetTensor sig = g.sigma(xi);
  const JetTensor dsig = g.frame_gradient(sig);  // [i][j][k] = E_k(S^i_j)
  JetTensor out = JetTensor::valence(n, 1, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        Jet v = dsig(i, j, k);
        for (int m = 0; m < n; ++m) {
          v += xi(m) * g.frame_derivative(gam(i, j, k), m);
          v -= gam(m, j, k) * sig(i, m);
          v += gam(i, m, k) * sig(m, j);
          v += gam(i, j, m) * sig(m, k);
        }
        out(i, j, k) = v;
      }
    }
  }
  return out;
}

JetTensor lie_connection_identity(const LocalGeometry& g, const JetTensor& xi) {
  const int n = g.dim();
  const JetTensor d2 = g.covariant_derivative(g.covariant_derivative(xi));
  const auto& r = g.curvature();
  const auto& t = g.torsion();
  JetTensor txi = JetTensor::valence(n, 1, 1);  // T^k_{il} xi^l
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      Jet s(0.0);
      for (int l = 0; l < n; ++l) s += t(k, i, l) * xi(l);
      txi(k, i) = s;
    }
  }
  const JetTensor dtxi = g.covariant_derivative(txi);
  JetTensor out = JetTensor::valence(n, 1, 2);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Jet v = d2(k, i, j) - dtxi(k, i, j);
        for (int l = 0; l < n; ++l) v -= r(k, i, j, l) * xi(l);
        out(k, i, j) = v;
      }
    }
  }
  return out;
}

JetTensor lie_bracket(const LocalGeometry& g, const JetTensor& xi, const JetTensor& u) {
  const int n = g.dim();
  const auto xc = g.coordinate_components(xi);
  const auto uc = g.coordinate_components(u);
  std::vector<Jet> br(static_cast<std::size_t>(n), Jet(0.0));
  for (int al = 0; al < n; ++al) {
    Jet s(0.0);
    for (int be = 0; be < n; ++be) {
      s += xc[static_cast<std::size_t>(be)] * partial(uc[static_cast<std::size_t>(al)], be);
      s -= uc[static_cast<std::size_t>(be)] * partial(xc[static_cast<std::size_t>(al)], be);
    }
    br[static_cast<std::size_t>(al)] = s;
  }
  return g.from_coordinate_components(br);
}

TensorValue anholonomy(const ConnectionSpace& space, const ChartPoint& x) {
  return values(LocalGeometry(space, x).anholonomy());
}

TorsionValue torsion(const ConnectionSpace& space, const ChartPoint& x) {
  return {values(LocalGeometry(space, x).torsion()), x};
}

CurvatureValue curvature(const ConnectionSpace& space, const ChartPoint& x) {
  return {values(LocalGeometry(space, x).curvature()), x};
}

TensorValue ricci(const CurvatureValue& r) { return contract(r.R, 0, 3); }

std::vector<double> lie_bracket(const ConnectionSpace& space, const VectorField& xi,
                                const VectorField& u, const ChartPoint& x) {
  LocalGeometry g(space, x);
  const auto b = values(lie_bracket(g, g.vector(xi), g.vector(u)));
  return {b.data().begin(), b.data().end()};
}

TensorValue lie_derivative_metric(const ConnectionSpace& space, const VectorField& xi,
                                  const ChartPoint& x) {
  LocalGeometry g(space, x);
  return values(g.lie_derivative(g.metric(), g.vector(xi)));
}

LieConnectionValue lie_derivative_connection(const ConnectionSpace& space, const VectorField& xi,
                                             const ChartPoint& x, LieSource source,
                                             const DraggingProbe& probe) {
  switch (source) {
    case LieSource::closed_form: {
      LocalGeometry g(space, x);
      return {values(lie_connection_closed_form(g, g.vector(xi))), x, source};
    }
    case LieSource::identity: {
      LocalGeometry g(space, x);
      return {values(lie_connection_identity(g, g.vector(xi))), x, source};
    }
    case LieSource::dragging:
      return {dragging_oracle(space, xi, x, probe).extrapolated, x, source};
  }
  throw ContractError("unknown Lie derivative source");
}

TensorValue thomas_projective(const ConnectionSpace& space, const ChartPoint& x) {
  LocalGeometry g(space, x);
  return projective_part(values(g.gamma()));
}

}  // namespace lndev
