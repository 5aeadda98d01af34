#include "tearing/geometry/filter_op.hpp"

#include <cmath>
#include <string>

namespace tearing {

namespace {

template <typename T>
struct KeptEdge {
  std::uint32_t i;
  std::uint32_t j;
  T w;
};

template <typename T>
std::vector<KeptEdge<T>> weigh_edges(const Tensor<T>& p, const SparseGraph& candidates, const GraphConfig& cfg) {
  cfg.validate();
  if (p.rank() != 2 || p.rows() != candidates.vertex_count) {
    throw ShapeError("graph filter: positions " + shape_str(p.shape()) + " for " +
                     std::to_string(candidates.vertex_count) + " vertices");
  }
  const std::size_t q = p.cols();
  const T inv_two_eps2 = T(1) / static_cast<T>(2.0 * cfg.epsilon * cfg.epsilon);
  const T threshold = static_cast<T>(cfg.keep_threshold);
  const T radius = static_cast<T>(cfg.radius);
  std::vector<KeptEdge<T>> kept;
  kept.reserve(candidates.edges.size());
  for (const Edge& e : candidates.edges) {
    const T* a = p.data() + e.i * q;
    const T* b = p.data() + e.j * q;
    T d2 = T(0);
    for (std::size_t k = 0; k < q; ++k) {
      const T d = a[k] - b[k];
      d2 += d * d;
    }
    const T w = std::exp(-d2 * inv_two_eps2);
    const bool keep = cfg.mode == TearMode::kDistance2D ? std::sqrt(d2) <= radius : w >= threshold;
    if (keep && w > T(0)) kept.push_back({e.i, e.j, w});
  }
  return kept;
}

template <typename T>
SparseGraph to_graph(const std::vector<KeptEdge<T>>& kept, std::size_t m) {
  SparseGraph g;
  g.vertex_count = m;
  g.edges.reserve(kept.size());
  for (const auto& e : kept) g.edges.push_back({e.i, e.j, static_cast<double>(e.w)});
  return g;
}

}  // namespace

template <typename T>
SparseGraph torn_graph_of(const Tensor<T>& positions, const SparseGraph& candidates, const GraphConfig& cfg) {
  return to_graph(weigh_edges(positions, candidates, cfg), candidates.vertex_count);
}

template <typename T>
Var graph_filter_op(Tape<T>& tape, Var x, Var positions, const SparseGraph& candidates,
                    const GraphConfig& cfg, double lambda, SparseGraph* torn) {
  const Tensor<T>& X = tape.value(x);
  if (X.rank() != 2 || X.cols() != 3 || X.rows() != candidates.vertex_count) {
    throw ShapeError("graph filter: points " + shape_str(X.shape()) + " for " +
                     std::to_string(candidates.vertex_count) + " vertices");
  }
  auto kept = weigh_edges(tape.value(positions), candidates, cfg);
  if (torn) *torn = to_graph(kept, candidates.vertex_count);

  const T lam = static_cast<T>(lambda);
  Tensor<T> out = X;
  for (const auto& e : kept) {
    for (std::size_t k = 0; k < 3; ++k) {
      const T flow = lam * e.w * (X[e.i * 3 + k] - X[e.j * 3 + k]);
      out[e.i * 3 + k] -= flow;
      out[e.j * 3 + k] += flow;
    }
  }

  const T inv_eps2 = T(1) / static_cast<T>(cfg.epsilon * cfg.epsilon);
  return tape.record(std::move(out), {x, positions},
                     [x, positions, lam, inv_eps2, kept = std::move(kept)](Tape<T>& t, std::size_t self) {
    const Tensor<T>& G = t.grad(self);
    const Tensor<T>& X = t.value(x);
    const bool want_x = t.needs_grad(x);
    const bool want_p = t.needs_grad(positions);
    Tensor<T>* gx = want_x ? &t.grad_accumulator(x.id) : nullptr;
    Tensor<T>* gp = want_p ? &t.grad_accumulator(positions.id) : nullptr;
    if (gx) {
      for (std::size_t k = 0; k < G.size(); ++k) (*gx)[k] += G[k];
    }
    const Tensor<T>& P = t.value(positions);
    const std::size_t q = P.cols();
    for (const auto& e : kept) {
      T dw = T(0);
      for (std::size_t k = 0; k < 3; ++k) {
        const T dg = G[e.i * 3 + k] - G[e.j * 3 + k];
        if (gx) {
          (*gx)[e.i * 3 + k] -= lam * e.w * dg;
          (*gx)[e.j * 3 + k] += lam * e.w * dg;
        }
        dw -= lam * dg * (X[e.i * 3 + k] - X[e.j * 3 + k]);
      }
      if (gp) {
        // dw/dp_i = -w (p_i - p_j) / eps^2
        const T coef = -dw * e.w * inv_eps2;
        for (std::size_t k = 0; k < q; ++k) {
          const T diff = P[e.i * q + k] - P[e.j * q + k];
          (*gp)[e.i * q + k] += coef * diff;
          (*gp)[e.j * q + k] -= coef * diff;
        }
      }
    }
  });
}

template Var graph_filter_op<float>(Tape<float>&, Var, Var, const SparseGraph&, const GraphConfig&, double, SparseGraph*);
template Var graph_filter_op<double>(Tape<double>&, Var, Var, const SparseGraph&, const GraphConfig&, double, SparseGraph*);
template SparseGraph torn_graph_of<float>(const Tensor<float>&, const SparseGraph&, const GraphConfig&);
template SparseGraph torn_graph_of<double>(const Tensor<double>&, const SparseGraph&, const GraphConfig&);

}  // namespace tearing
