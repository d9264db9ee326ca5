#include "gravamen/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace gravamen::num {
namespace {

void same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument(std::string(op) + ": operands live on different tapes");
}

void accumulate(Tape& tape, Var target, std::span<const double> delta) {
  auto g = tape.grad(target.id()).data();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

// Index maps for a broadcast binary op; empty maps mean identical shapes.
struct BroadcastMap {
  Shape out;
  std::vector<std::size_t> ia;
  std::vector<std::size_t> ib;
};

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw std::invalid_argument("shapes " + to_string(a) + " and " + to_string(b) + " do not broadcast");
    }
    out[i] = std::max(da, db);
  }
  return out;
}

std::vector<std::size_t> aligned_strides(const Shape& in, const Shape& out) {
  const std::size_t r = out.size();
  std::vector<std::size_t> strides(r, 0);
  std::size_t stride = 1;
  for (std::size_t k = in.size(); k-- > 0;) {
    const std::size_t pos = k + (r - in.size());
    strides[pos] = in[k] == 1 ? 0 : stride;
    stride *= in[k];
  }
  return strides;
}

std::vector<std::size_t> index_map(const Shape& in, const Shape& out) {
  const std::size_t n = numel(out);
  std::vector<std::size_t> map(n);
  if (in == out) {
    for (std::size_t i = 0; i < n; ++i) map[i] = i;
    return map;
  }
  const auto strides = aligned_strides(in, out);
  const std::size_t r = out.size();
  std::vector<std::size_t> idx(r, 0);
  std::size_t offset = 0;
  for (std::size_t o = 0; o < n; ++o) {
    map[o] = offset;
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      offset += strides[d];
      if (idx[d] < out[d]) break;
      offset -= strides[d] * out[d];
      idx[d] = 0;
    }
  }
  return map;
}

BroadcastMap make_map(const Shape& a, const Shape& b) {
  BroadcastMap m;
  if (a == b) {
    m.out = a;
    return m;
  }
  m.out = broadcast_shape(a, b);
  m.ia = index_map(a, m.out);
  m.ib = index_map(b, m.out);
  return m;
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.begin(), small.end(), big.end() - static_cast<std::ptrdiff_t>(small.size()));
}

// `small` equals `big` with some trailing axes collapsed to 1.
bool is_prefix(const Shape& small, const Shape& big) {
  if (small.size() != big.size()) return false;
  std::size_t i = 0;
  while (i < big.size() && small[i] == big[i]) ++i;
  for (; i < big.size(); ++i) {
    if (small[i] != 1) return false;
  }
  return true;
}

// Contiguous broadcast: operand index is i % n (tiled) or i / block (repeated).
struct FastIndex {
  std::size_t n = 1;
  std::size_t block = 0;
  std::size_t operator()(std::size_t i) const { return block ? i / block : i % n; }
};

bool fast_indices(const Shape& a, const Shape& b, Shape& out, FastIndex& fa, FastIndex& fb) {
  const std::size_t na = numel(a), nb = numel(b);
  fa.n = na;
  fb.n = nb;
  if (is_suffix(b, a) || is_prefix(b, a)) {
    out = a;
    if (!is_suffix(b, a) && nb > 0) fb.block = na / nb;
    return true;
  }
  if (is_suffix(a, b) || is_prefix(a, b)) {
    out = b;
    if (!is_suffix(a, b) && na > 0) fa.block = nb / na;
    return true;
  }
  return false;
}

// fwd(x, y) -> z; bwd(x, y, z) -> {dz/dx, dz/dy}
template <class Fwd, class Bwd>
Var binary_op(const char* name, Var a, Var b, Fwd fwd, Bwd bwd) {
  same_tape(a, b, name);
  Tape& tape = a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool ng = tape.needs_grad(a) || tape.needs_grad(b);
  Shape fast_shape;
  FastIndex fa, fb;
  if (fast_indices(av.shape(), bv.shape(), fast_shape, fa, fb)) {
    Tensor out(std::move(fast_shape));
    auto o = out.data();
    if (av.size() == bv.size()) {
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(av[i], bv[i]);
    } else {
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(av[fa(i)], bv[fb(i)]);
    }
    return tape.record(name, std::move(out), ng, [a, b, fa, fb, bwd](Tape& t, const Tensor& g) {
      const Tensor& x = t.value(a.id());
      const Tensor& y = t.value(b.id());
      const bool da = t.needs_grad(a);
      const bool db = t.needs_grad(b);
      std::span<double> ga = da ? t.grad(a.id()).data() : std::span<double>{};
      std::span<double> gb = db ? t.grad(b.id()).data() : std::span<double>{};
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t ia = fa(i);
        const std::size_t ib = fb(i);
        const auto [pa, pb] = bwd(x[ia], y[ib]);
        if (da) ga[ia] += g[i] * pa;
        if (db) gb[ib] += g[i] * pb;
      }
    });
  }
  auto map = std::make_shared<BroadcastMap>(make_map(av.shape(), bv.shape()));
  Tensor out(map->out);
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(av[map->ia[i]], bv[map->ib[i]]);
  return tape.record(name, std::move(out), ng, [a, b, map, bwd](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(a.id());
    const Tensor& y = t.value(b.id());
    const bool da = t.needs_grad(a);
    const bool db = t.needs_grad(b);
    std::span<double> ga = da ? t.grad(a.id()).data() : std::span<double>{};
    std::span<double> gb = db ? t.grad(b.id()).data() : std::span<double>{};
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::size_t ia = map->ia[i];
      const std::size_t ib = map->ib[i];
      const auto [pa, pb] = bwd(x[ia], y[ib]);
      if (da) ga[ia] += g[i] * pa;
      if (db) gb[ib] += g[i] * pb;
    }
  });
}

// fwd(x) -> y; bwd(x, y) -> dy/dx
template <class Fwd, class Bwd>
Var unary_op(const char* name, Var x, Fwd fwd, Bwd bwd) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  const std::size_t out_id = tape.size();
  return tape.record(name, std::move(out), tape.needs_grad(x), [x, out_id, bwd](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x.id());
    const Tensor& yv = t.value(out_id);
    auto gx = t.grad(x.id()).data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * bwd(xv[i], yv[i]);
  });
}

// outer x axis x inner decomposition of a shape around one axis.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t axis = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t ax) {
  AxisSplit s;
  for (std::size_t i = 0; i < ax; ++i) s.outer *= shape[i];
  s.axis = shape[ax];
  for (std::size_t i = ax + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (bv.rank() != 2 || av.rank() < 1 || av.shape().back() != bv.shape()[0]) {
    throw std::invalid_argument("matmul: incompatible shapes " + to_string(av.shape()) + " x " +
                                to_string(bv.shape()));
  }
  const std::size_t k = bv.shape()[0];
  const std::size_t n = bv.shape()[1];
  const std::size_t m = av.size() / k;
  Shape out_shape = av.shape();
  out_shape.back() = n;
  Tensor out(out_shape);
  const double* A = av.data().data();
  const double* B = bv.data().data();
  double* C = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B + p * n;
      double* crow = C + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  Tape& tape = a.tape();
  const bool ng = tape.needs_grad(a) || tape.needs_grad(b);
  return tape.record("matmul", std::move(out), ng, [a, b, m, k, n](Tape& t, const Tensor& g) {
    const double* G = g.data().data();
    if (t.needs_grad(a)) {
      const double* B = t.value(b.id()).data().data();
      double* GA = t.grad(a.id()).data().data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * B[p * n + j];
          GA[i * k + p] += acc;
        }
      }
    }
    if (t.needs_grad(b)) {
      const double* A = t.value(a.id()).data().data();
      double* GB = t.grad(b.id()).data().data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) GB[p * n + j] += aip * G[i * n + j];
        }
      }
    }
  });
}

Var bmm(Var a, Var b) {
  same_tape(a, b, "bmm");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3 || av.shape()[0] != bv.shape()[0] || av.shape()[2] != bv.shape()[1]) {
    throw std::invalid_argument("bmm: incompatible shapes " + to_string(av.shape()) + " x " +
                                to_string(bv.shape()));
  }
  const std::size_t batch = av.shape()[0];
  const std::size_t m = av.shape()[1];
  const std::size_t k = av.shape()[2];
  const std::size_t n = bv.shape()[2];
  Tensor out({batch, m, n});
  const double* A = av.data().data();
  const double* B = bv.data().data();
  double* C = out.data().data();
  for (std::size_t s = 0; s < batch; ++s) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = A[(s * m + i) * k + p];
        const double* brow = B + (s * k + p) * n;
        double* crow = C + (s * m + i) * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }
  Tape& tape = a.tape();
  const bool ng = tape.needs_grad(a) || tape.needs_grad(b);
  return tape.record("bmm", std::move(out), ng, [a, b, batch, m, k, n](Tape& t, const Tensor& g) {
    const double* G = g.data().data();
    const double* A = t.value(a.id()).data().data();
    const double* B = t.value(b.id()).data().data();
    double* GA = t.needs_grad(a) ? t.grad(a.id()).data().data() : nullptr;
    double* GB = t.needs_grad(b) ? t.grad(b.id()).data().data() : nullptr;
    for (std::size_t s = 0; s < batch; ++s) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G + (s * m + i) * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = B + (s * k + p) * n;
          if (GA) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            GA[(s * m + i) * k + p] += acc;
          }
          if (GB) {
            const double aip = A[(s * m + i) * k + p];
            double* gbrow = GB + (s * k + p) * n;
            for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
          }
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return std::pair{1.0, 1.0}; });
}

Var sub(Var a, Var b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return std::pair{1.0, -1.0}; });
}

Var mul(Var a, Var b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double x, double y) { return std::pair{y, x}; });
}

Var div(Var a, Var b) {
  return binary_op(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double x, double y) { return std::pair{1.0 / y, -x / (y * y)}; });
}

Var scale(Var x, double factor) {
  return unary_op(
      "scale", x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var x, double offset) {
  return unary_op(
      "add_scalar", x, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Var min_scalar(Var x, double cap) {
  return unary_op(
      "min_scalar", x, [cap](double v) { return std::min(v, cap); },
      [cap](double v, double) { return v < cap ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
  return unary_op(
      "sigmoid", x, [](double v) { return stable_sigmoid(v); }, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary_op(
      "tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return unary_op(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor softmax_values(const Tensor& x, int axis) {
  const std::size_t ax = normalize_axis(axis, x.rank());
  const AxisSplit s = split_at(x.shape(), ax);
  Tensor out(x.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.axis * s.inner + in;
      double mx = x[base];
      for (std::size_t j = 1; j < s.axis; ++j) mx = std::max(mx, x[base + j * s.inner]);
      double total = 0.0;
      for (std::size_t j = 0; j < s.axis; ++j) {
        const double e = std::exp(x[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < s.axis; ++j) out[base + j * s.inner] /= total;
    }
  }
  return out;
}

Var softmax(Var x, int axis) {
  const std::size_t ax = normalize_axis(axis, x.value().rank());
  Tensor out = softmax_values(x.value(), static_cast<int>(ax));
  const AxisSplit s = split_at(x.shape(), ax);
  Tape& tape = x.tape();
  const std::size_t out_id = tape.size();
  return tape.record("softmax", std::move(out), tape.needs_grad(x), [x, out_id, s](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(out_id);
    auto gx = t.grad(x.id()).data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.axis * s.inner + in;
        double dot = 0.0;
        for (std::size_t j = 0; j < s.axis; ++j) dot += g[base + j * s.inner] * y[base + j * s.inner];
        for (std::size_t j = 0; j < s.axis; ++j) {
          const std::size_t i = base + j * s.inner;
          gx[i] += y[i] * (g[i] - dot);
        }
      }
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  same_tape(x, gamma, "layer_norm");
  same_tape(x, beta, "layer_norm");
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm: eps must be positive");
  const Tensor& xv = x.value();
  const std::size_t d = xv.shape().back();
  if (gamma.value().size() != d || beta.value().size() != d) {
    throw std::invalid_argument("layer_norm: gamma/beta size must equal last axis " + std::to_string(d));
  }
  const std::size_t rows = xv.size() / d;
  Tensor out(xv.shape());
  auto xhat = std::make_shared<std::vector<double>>(xv.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xv[r * d + j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xv[r * d + j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xv[r * d + j] - mu) * is;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  Tape& tape = x.tape();
  const bool ng = tape.needs_grad(x) || tape.needs_grad(gamma) || tape.needs_grad(beta);
  return tape.record("layer_norm", std::move(out), ng,
                     [x, gamma, beta, xhat, inv_std, rows, d](Tape& t, const Tensor& g) {
                       const Tensor& gv = t.value(gamma.id());
                       if (t.needs_grad(gamma)) {
                         auto gg = t.grad(gamma.id()).data();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * (*xhat)[r * d + j];
                       }
                       if (t.needs_grad(beta)) {
                         auto gb = t.grad(beta.id()).data();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
                       }
                       if (t.needs_grad(x)) {
                         auto gx = t.grad(x.id()).data();
                         const double inv_d = 1.0 / static_cast<double>(d);
                         for (std::size_t r = 0; r < rows; ++r) {
                           double mean_dh = 0.0;
                           double mean_dh_h = 0.0;
                           for (std::size_t j = 0; j < d; ++j) {
                             const double dh = g[r * d + j] * gv[j];
                             mean_dh += dh;
                             mean_dh_h += dh * (*xhat)[r * d + j];
                           }
                           mean_dh *= inv_d;
                           mean_dh_h *= inv_d;
                           for (std::size_t j = 0; j < d; ++j) {
                             const double dh = g[r * d + j] * gv[j];
                             gx[r * d + j] += (*inv_std)[r] * (dh - mean_dh - (*xhat)[r * d + j] * mean_dh_h);
                           }
                         }
                       }
                     });
}

Var dropout(Var x, double rate, bool train, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must lie in [0,1)");
  if (!train || rate == 0.0) return x;
  const double keep = 1.0 - rate;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Tensor mask(x.shape());
  for (auto& m : mask.data()) m = unif(rng) < keep ? 1.0 / keep : 0.0;
  Var mv = x.tape().constant(std::move(mask));
  return mul(x, mv);
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& first = parts[0].shape();
  const std::size_t ax = normalize_axis(axis, first.size());
  Shape out_shape = first;
  out_shape[ax] = 0;
  bool ng = false;
  for (const Var& p : parts) {
    same_tape(parts[0], p, "concat");
    const Shape& s = p.shape();
    if (s.size() != first.size()) throw std::invalid_argument("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != ax && s[i] != first[i]) {
        throw std::invalid_argument("concat: shape mismatch " + to_string(s) + " vs " + to_string(first));
      }
    }
    out_shape[ax] += s[ax];
    ng = ng || p.tape().needs_grad(p);
  }
  const AxisSplit os = split_at(out_shape, ax);
  Tensor out(out_shape);
  std::vector<Var> inputs(parts.begin(), parts.end());
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : inputs) {
    offsets.push_back(offset);
    const Tensor& v = p.value();
    const std::size_t len = v.shape()[ax];
    for (std::size_t o = 0; o < os.outer; ++o) {
      const double* src = v.data().data() + o * len * os.inner;
      double* dst = out.data().data() + (o * os.axis + offset) * os.inner;
      std::copy(src, src + len * os.inner, dst);
    }
    offset += len;
  }
  Tape& tape = parts[0].tape();
  return tape.record("concat", std::move(out), ng, [inputs, offsets, os, ax](Tape& t, const Tensor& g) {
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const Var p = inputs[k];
      if (!t.needs_grad(p)) continue;
      const std::size_t len = t.value(p.id()).shape()[ax];
      auto gp = t.grad(p.id()).data();
      for (std::size_t o = 0; o < os.outer; ++o) {
        const double* src = g.data().data() + (o * os.axis + offsets[k]) * os.inner;
        double* dst = gp.data() + o * len * os.inner;
        for (std::size_t i = 0; i < len * os.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Var slice(Var x, int axis, std::size_t start, std::size_t length) {
  const Shape& in_shape = x.shape();
  const std::size_t ax = normalize_axis(axis, in_shape.size());
  if (length == 0 || start + length > in_shape[ax]) {
    throw std::invalid_argument("slice: range [" + std::to_string(start) + "," + std::to_string(start + length) +
                                ") outside axis of size " + std::to_string(in_shape[ax]));
  }
  const AxisSplit s = split_at(in_shape, ax);
  Shape out_shape = in_shape;
  out_shape[ax] = length;
  Tensor out(out_shape);
  const Tensor& xv = x.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    const double* src = xv.data().data() + (o * s.axis + start) * s.inner;
    std::copy(src, src + length * s.inner, out.data().data() + o * length * s.inner);
  }
  Tape& tape = x.tape();
  return tape.record("slice", std::move(out), tape.needs_grad(x), [x, s, start, length](Tape& t, const Tensor& g) {
    auto gx = t.grad(x.id()).data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      const double* src = g.data().data() + o * length * s.inner;
      double* dst = gx.data() + (o * s.axis + start) * s.inner;
      for (std::size_t i = 0; i < length * s.inner; ++i) dst[i] += src[i];
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  Tape& tape = x.tape();
  return tape.record("reshape", std::move(out), tape.needs_grad(x), [x](Tape& t, const Tensor& g) {
    accumulate(t, x, g.data());
  });
}

Var permute(Var x, std::vector<std::size_t> order) {
  const Shape& in = x.shape();
  const std::size_t r = in.size();
  if (order.size() != r) throw std::invalid_argument("permute: order length must equal rank");
  std::vector<bool> seen(r, false);
  for (auto o : order) {
    if (o >= r || seen[o]) throw std::invalid_argument("permute: invalid axis order");
    seen[o] = true;
  }
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = in[order[i]];
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r - 1; i-- > 0;) in_strides[i] = in_strides[i + 1] * in[i + 1];
  // Source offset for each output element, walked with an odometer.
  auto map = std::make_shared<std::vector<std::size_t>>(numel(out_shape));
  std::vector<std::size_t> idx(r, 0);
  std::size_t offset = 0;
  for (std::size_t o = 0; o < map->size(); ++o) {
    (*map)[o] = offset;
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      offset += in_strides[order[d]];
      if (idx[d] < out_shape[d]) break;
      offset -= in_strides[order[d]] * out_shape[d];
      idx[d] = 0;
    }
  }
  Tensor out(out_shape);
  const Tensor& xv = x.value();
  for (std::size_t o = 0; o < map->size(); ++o) out[o] = xv[(*map)[o]];
  Tape& tape = x.tape();
  return tape.record("permute", std::move(out), tape.needs_grad(x), [x, map](Tape& t, const Tensor& g) {
    auto gx = t.grad(x.id()).data();
    for (std::size_t o = 0; o < map->size(); ++o) gx[(*map)[o]] += g[o];
  });
}

Var broadcast_to(Var x, Shape shape) {
  if (broadcast_shape(x.shape(), shape) != shape) {
    throw std::invalid_argument("broadcast_to: cannot broadcast " + to_string(x.shape()) + " to " + to_string(shape));
  }
  auto map = std::make_shared<std::vector<std::size_t>>(index_map(x.shape(), shape));
  Tensor out(shape);
  const Tensor& xv = x.value();
  for (std::size_t o = 0; o < map->size(); ++o) out[o] = xv[(*map)[o]];
  Tape& tape = x.tape();
  return tape.record("broadcast_to", std::move(out), tape.needs_grad(x), [x, map](Tape& t, const Tensor& g) {
    auto gx = t.grad(x.id()).data();
    for (std::size_t o = 0; o < map->size(); ++o) gx[(*map)[o]] += g[o];
  });
}

Var embedding(Var table, std::span<const int> ids, Shape index_shape) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw std::invalid_argument("embedding: table must be rank 2");
  if (numel(index_shape) != ids.size()) throw std::invalid_argument("embedding: index shape does not match ids");
  const std::size_t vocab = tv.shape()[0];
  const std::size_t d = tv.shape()[1];
  auto rows = std::make_shared<std::vector<std::size_t>>();
  rows->reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw std::out_of_range("embedding: id " + std::to_string(id) + " outside table of " + std::to_string(vocab));
    }
    rows->push_back(static_cast<std::size_t>(id));
  }
  Shape out_shape = std::move(index_shape);
  out_shape.push_back(d);
  Tensor out(out_shape);
  for (std::size_t i = 0; i < rows->size(); ++i) {
    const double* src = tv.data().data() + (*rows)[i] * d;
    std::copy(src, src + d, out.data().data() + i * d);
  }
  Tape& tape = table.tape();
  return tape.record("embedding", std::move(out), tape.needs_grad(table), [table, rows, d](Tape& t, const Tensor& g) {
    auto gt = t.grad(table.id()).data();
    for (std::size_t i = 0; i < rows->size(); ++i) {
      double* dst = gt.data() + (*rows)[i] * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += g[i * d + j];
    }
  });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  Tape& tape = x.tape();
  return tape.record("sum", Tensor::scalar(total), tape.needs_grad(x), [x](Tape& t, const Tensor& g) {
    const double gs = g[0];
    for (auto& v : t.grad(x.id()).data()) v += gs;
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Var l2_norm(Var x, int axis) {
  const std::size_t ax = normalize_axis(axis, x.value().rank());
  const AxisSplit s = split_at(x.shape(), ax);
  Shape out_shape = x.shape();
  out_shape[ax] = 1;
  Tensor out(out_shape);
  const Tensor& xv = x.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      double sq = 0.0;
      for (std::size_t j = 0; j < s.axis; ++j) {
        const double v = xv[(o * s.axis + j) * s.inner + in];
        sq += v * v;
      }
      out[o * s.inner + in] = std::sqrt(sq);
    }
  }
  Tape& tape = x.tape();
  const std::size_t out_id = tape.size();
  return tape.record("l2_norm", std::move(out), tape.needs_grad(x), [x, out_id, s](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x.id());
    const Tensor& nv = t.value(out_id);
    auto gx = t.grad(x.id()).data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const double n = nv[o * s.inner + in];
        if (n == 0.0) continue;
        const double gn = g[o * s.inner + in] / n;
        for (std::size_t j = 0; j < s.axis; ++j) {
          const std::size_t i = (o * s.axis + j) * s.inner + in;
          gx[i] += gn * xv[i];
        }
      }
    }
  });
}

Var cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& z = logits.value();
  if (z.rank() != 2 || z.shape()[0] != labels.size()) {
    throw std::invalid_argument("cross_entropy: logits " + to_string(z.shape()) + " vs " +
                                std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = z.shape()[0];
  const std::size_t k = z.shape()[1];
  auto probs = std::make_shared<Tensor>(softmax_values(z, -1));
  auto ys = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw std::out_of_range("cross_entropy: label out of range");
    double mx = z.at(i, 0);
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, z.at(i, j));
    double se = 0.0;
    for (std::size_t j = 0; j < k; ++j) se += std::exp(z.at(i, j) - mx);
    total += mx + std::log(se) - z.at(i, static_cast<std::size_t>(y));
  }
  Tape& tape = logits.tape();
  return tape.record("cross_entropy", Tensor::scalar(total / static_cast<double>(n)), tape.needs_grad(logits),
                     [logits, probs, ys, n, k](Tape& t, const Tensor& g) {
                       auto gz = t.grad(logits.id()).data();
                       const double f = g[0] / static_cast<double>(n);
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < k; ++j) {
                           const double target = static_cast<std::size_t>((*ys)[i]) == j ? 1.0 : 0.0;
                           gz[i * k + j] += f * ((*probs)[i * k + j] - target);
                         }
                       }
                     });
}

Var binary_cross_entropy(Var logits, std::span<const double> targets) {
  const Tensor& z = logits.value();
  if (z.size() != targets.size()) throw std::invalid_argument("binary_cross_entropy: size mismatch");
  const std::size_t n = z.size();
  auto ys = std::make_shared<std::vector<double>>(targets.begin(), targets.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = targets[i];
    if (y < 0.0 || y > 1.0) throw std::out_of_range("binary_cross_entropy: target outside [0,1]");
    const double v = z[i];
    total += std::max(v, 0.0) - v * y + std::log1p(std::exp(-std::abs(v)));
  }
  Tape& tape = logits.tape();
  return tape.record("binary_cross_entropy", Tensor::scalar(total / static_cast<double>(n)),
                     tape.needs_grad(logits), [logits, ys, n](Tape& t, const Tensor& g) {
                       const Tensor& z = t.value(logits.id());
                       auto gz = t.grad(logits.id()).data();
                       const double f = g[0] / static_cast<double>(n);
                       for (std::size_t i = 0; i < n; ++i) gz[i] += f * (stable_sigmoid(z[i]) - (*ys)[i]);
                     });
}

}  // namespace gravamen::num
