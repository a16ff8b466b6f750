#pragma once

#include <vector>

#include "common.hpp"

// Independent reference computations, written without the library's routes.
namespace oracle {

using namespace conncalc;

// Closed forms for the vertex model on M_Y, with U^{ab}_{cd} = U(a|Y|+b, c|Y|+d)
// and η flattened as η(y2, y1) at y2|Y| + y1.
inline CMat vertex_s(const CMat& u, int nx, int ny) {
  auto U = [&](int a, int b, int c, int d) { return u(a * ny + b, c * ny + d); };
  CMat s = CMat::Zero(ny * ny, ny * ny);
  for (int y = 0; y < ny; ++y)
    for (int yp = 0; yp < ny; ++yp)
      for (int y2 = 0; y2 < ny; ++y2)
        for (int y1 = 0; y1 < ny; ++y1) {
          cplx acc = 0.0;
          for (int x1 = 0; x1 < nx; ++x1)
            for (int x2 = 0; x2 < nx; ++x2) acc += std::conj(U(x2, y2, x1, y)) * U(x2, y1, x1, yp);
          s(y * ny + yp, y2 * ny + y1) = acc / static_cast<double>(nx);
        }
  return s;
}

// Unweighted adjoint closed form; the weighted adjoint is |X|^2 times this.
inline CMat vertex_s_star(const CMat& u, int nx, int ny) {
  auto U = [&](int a, int b, int c, int d) { return u(a * ny + b, c * ny + d); };
  CMat s = CMat::Zero(ny * ny, ny * ny);
  for (int y = 0; y < ny; ++y)
    for (int yp = 0; yp < ny; ++yp)
      for (int y2 = 0; y2 < ny; ++y2)
        for (int y1 = 0; y1 < ny; ++y1) {
          cplx acc = 0.0;
          for (int x1 = 0; x1 < nx; ++x1)
            for (int x2 = 0; x2 < nx; ++x2) acc += U(x1, y, x2, y2) * std::conj(U(x1, yp, x2, y1));
          s(y * ny + yp, y2 * ny + y1) = acc / static_cast<double>(nx);
        }
  return s;
}

// Embeds a = (a_v) in A_k into A_{k+1}: the w-block is the direct sum over
// (v, edge) of a_v, in ascending (v, edge) order.  Empty on a size mismatch.
inline std::vector<CMat> af_embed(const std::vector<CMat>& a, const IMat& g,
                                  const std::vector<long long>& dims) {
  std::vector<CMat> out;
  for (Eigen::Index w = 0; w < g.rows(); ++w) {
    CMat b = CMat::Zero(dims[static_cast<size_t>(w)], dims[static_cast<size_t>(w)]);
    long long off = 0;
    for (Eigen::Index v = 0; v < g.cols(); ++v)
      for (long long e = 0; e < g(w, v); ++e) {
        const long long n = a[static_cast<size_t>(v)].rows();
        if (off + n > b.rows()) return {};
        b.block(off, off, n, n) = a[static_cast<size_t>(v)];
        off += n;
      }
    if (off != dims[static_cast<size_t>(w)]) return {};
    out.push_back(b);
  }
  return out;
}

inline cplx weighted_trace(const std::vector<CMat>& a, const RVec& w) {
  cplx s = 0.0;
  for (size_t v = 0; v < a.size(); ++v) s += w[static_cast<Eigen::Index>(v)] * a[v].trace();
  return s;
}

// Σ_{u,w} μ_u ν_w tr(η_{u,w}).
inline cplx nt_trace(const NatTrans& eta, const RVec& mu, const RVec& nu) {
  cplx s = 0.0;
  for (int u = 0; u < eta.n_source(); ++u)
    for (int w = 0; w < eta.n_target(); ++w) s += mu[u] * nu[w] * eta.block(u, w).trace();
  return s;
}

}  // namespace oracle
