#include "pairlock/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pairlock {

namespace {

void check_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) throw std::invalid_argument(std::string(what) + ": unexpected rank");
}

// im2col: col is [C_in*kh*kw, Ho*Wo], padded with zeros.
std::vector<double> im2col(const Tensor& x, int kh, int kw, int stride, int pad, int ho, int wo) {
  const int ci = x.dim(0), h = x.dim(1), w = x.dim(2);
  std::vector<double> col(static_cast<size_t>(ci) * kh * kw * ho * wo, 0.0);
  const size_t plane = static_cast<size_t>(ho) * wo;
  for (int c = 0; c < ci; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        double* dst = col.data() + ((static_cast<size_t>(c) * kh + ki) * kw + kj) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ki - pad;
          if (iy < 0 || iy >= h) { dst += wo; continue; }
          const double* src = x.data.data() + (static_cast<size_t>(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kj - pad;
            *dst++ = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
  return col;
}

void col2im_accumulate(const std::vector<double>& col, int ci, int h, int w, int kh, int kw,
                       int stride, int pad, int ho, int wo, Tensor& dx) {
  const size_t plane = static_cast<size_t>(ho) * wo;
  for (int c = 0; c < ci; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const double* src = col.data() + ((static_cast<size_t>(c) * kh + ki) * kw + kj) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ki - pad;
          if (iy < 0 || iy >= h) { src += wo; continue; }
          double* dst = dx.data.data() + (static_cast<size_t>(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox, ++src) {
            const int ix = ox * stride + kj - pad;
            if (ix >= 0 && ix < w) dst[ix] += *src;
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding) {
  check_rank(x, 3, "conv2d");
  check_rank(w, 4, "conv2d weight");
  const int ci = x.dim(0), h = x.dim(1), ww = x.dim(2);
  const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != ci) throw std::invalid_argument("conv2d: channel mismatch");
  if (stride < 1 || kh < 1 || kw < 1) throw std::invalid_argument("conv2d: bad stride/kernel");
  const int ho = (h + 2 * padding - kh) / stride + 1;
  const int wo = (ww + 2 * padding - kw) / stride + 1;
  if (h + 2 * padding < kh || ww + 2 * padding < kw || ho < 1 || wo < 1)
    throw std::invalid_argument("conv2d: non-positive output dims");

  const std::vector<double> col = im2col(x, kh, kw, stride, padding, ho, wo);
  const int kdim = ci * kh * kw;
  const size_t plane = static_cast<size_t>(ho) * wo;
  Tensor y({co, ho, wo});
  for (int oc = 0; oc < co; ++oc) {
    double* dst = y.data.data() + oc * plane;
    std::fill(dst, dst + plane, b.data[oc]);
    const double* wrow = w.data.data() + static_cast<size_t>(oc) * kdim;
    for (int k = 0; k < kdim; ++k) {
      const double wk = wrow[k];
      if (wk == 0.0) continue;
      const double* src = col.data() + static_cast<size_t>(k) * plane;
      for (size_t i = 0; i < plane; ++i) dst[i] += wk * src[i];
    }
  }
  return y;
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& w, int stride, int padding, const Tensor& dy) {
  const int ci = x.dim(0), h = x.dim(1), ww = x.dim(2);
  const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int ho = dy.dim(1), wo = dy.dim(2);
  const int kdim = ci * kh * kw;
  const size_t plane = static_cast<size_t>(ho) * wo;

  const std::vector<double> col = im2col(x, kh, kw, stride, padding, ho, wo);
  ConvGrads g{Tensor(x.shape), Tensor(w.shape), Tensor({co})};

  std::vector<double> dcol(col.size(), 0.0);
  for (int oc = 0; oc < co; ++oc) {
    const double* dyrow = dy.data.data() + oc * plane;
    double acc = 0.0;
    for (size_t i = 0; i < plane; ++i) acc += dyrow[i];
    g.db.data[oc] = acc;
    double* dwrow = g.dw.data.data() + static_cast<size_t>(oc) * kdim;
    const double* wrow = w.data.data() + static_cast<size_t>(oc) * kdim;
    for (int k = 0; k < kdim; ++k) {
      const double* crow = col.data() + static_cast<size_t>(k) * plane;
      double* dcrow = dcol.data() + static_cast<size_t>(k) * plane;
      const double wk = wrow[k];
      double dw_acc = 0.0;
      for (size_t i = 0; i < plane; ++i) {
        dw_acc += dyrow[i] * crow[i];
        dcrow[i] += wk * dyrow[i];
      }
      dwrow[k] += dw_acc;
    }
  }
  col2im_accumulate(dcol, ci, h, ww, kh, kw, stride, padding, ho, wo, g.dx);
  return g;
}

Tensor transposed_conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
  check_rank(x, 3, "transposed_conv2d");
  check_rank(w, 4, "transposed_conv2d weight");
  const int ci = x.dim(0), h = x.dim(1), ww = x.dim(2);
  const int co = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(0) != ci) throw std::invalid_argument("transposed_conv2d: channel mismatch");
  if (stride < 1) throw std::invalid_argument("transposed_conv2d: bad stride");
  const int ho = (h - 1) * stride + kh;
  const int wo = (ww - 1) * stride + kw;
  Tensor y({co, ho, wo});
  for (int oc = 0; oc < co; ++oc) {
    double* plane = y.data.data() + static_cast<size_t>(oc) * ho * wo;
    std::fill(plane, plane + static_cast<size_t>(ho) * wo, b.data[oc]);
  }
  for (int c = 0; c < ci; ++c) {
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < ww; ++ix) {
        const double v = x.data[(static_cast<size_t>(c) * h + iy) * ww + ix];
        if (v == 0.0) continue;
        for (int oc = 0; oc < co; ++oc) {
          const double* wk = w.data.data() + ((static_cast<size_t>(c) * co + oc) * kh) * kw;
          double* plane = y.data.data() + static_cast<size_t>(oc) * ho * wo;
          for (int ki = 0; ki < kh; ++ki) {
            double* row = plane + static_cast<size_t>(iy * stride + ki) * wo + ix * stride;
            for (int kj = 0; kj < kw; ++kj) row[kj] += v * wk[ki * kw + kj];
          }
        }
      }
    }
  }
  return y;
}

ConvGrads transposed_conv2d_backward(const Tensor& x, const Tensor& w, int stride, const Tensor& dy) {
  const int ci = x.dim(0), h = x.dim(1), ww = x.dim(2);
  const int co = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  const int ho = dy.dim(1), wo = dy.dim(2);
  ConvGrads g{Tensor(x.shape), Tensor(w.shape), Tensor({co})};
  for (int oc = 0; oc < co; ++oc) {
    const double* plane = dy.data.data() + static_cast<size_t>(oc) * ho * wo;
    double acc = 0.0;
    for (size_t i = 0; i < static_cast<size_t>(ho) * wo; ++i) acc += plane[i];
    g.db.data[oc] = acc;
  }
  for (int c = 0; c < ci; ++c) {
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < ww; ++ix) {
        const double xv = x.data[(static_cast<size_t>(c) * h + iy) * ww + ix];
        double dx_acc = 0.0;
        for (int oc = 0; oc < co; ++oc) {
          const double* wk = w.data.data() + ((static_cast<size_t>(c) * co + oc) * kh) * kw;
          double* dwk = g.dw.data.data() + ((static_cast<size_t>(c) * co + oc) * kh) * kw;
          const double* plane = dy.data.data() + static_cast<size_t>(oc) * ho * wo;
          for (int ki = 0; ki < kh; ++ki) {
            const double* row = plane + static_cast<size_t>(iy * stride + ki) * wo + ix * stride;
            for (int kj = 0; kj < kw; ++kj) {
              dx_acc += wk[ki * kw + kj] * row[kj];
              dwk[ki * kw + kj] += xv * row[kj];
            }
          }
        }
        g.dx.data[(static_cast<size_t>(c) * h + iy) * ww + ix] = dx_acc;
      }
    }
  }
  return g;
}

MaxPoolResult max_pool2d_forward(const Tensor& x, int k, int stride) {
  check_rank(x, 3, "max_pool2d");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (k < 1 || stride < 1 || h < k || w < k) throw std::invalid_argument("max_pool2d: window does not fit");
  const int ho = (h - k) / stride + 1;
  const int wo = (w - k) / stride + 1;
  MaxPoolResult r{Tensor({c, ho, wo}), {}};
  r.argmax.resize(r.y.numel());
  size_t out = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        double best = -1e300;
        size_t best_idx = 0;
        for (int ki = 0; ki < k; ++ki) {
          for (int kj = 0; kj < k; ++kj) {
            const size_t idx = (static_cast<size_t>(ch) * h + oy * stride + ki) * w + ox * stride + kj;
            if (x.data[idx] > best) {  // strict: first maximal element wins
              best = x.data[idx];
              best_idx = idx;
            }
          }
        }
        r.y.data[out] = best;
        r.argmax[out] = best_idx;
        ++out;
      }
    }
  }
  return r;
}

Tensor max_pool2d_backward(const Tensor& x, const MaxPoolResult& fwd, const Tensor& dy) {
  Tensor dx(x.shape);
  for (size_t i = 0; i < dy.numel(); ++i) dx.data[fwd.argmax[i]] += dy.data[i];
  return dx;
}

namespace {
inline int aap_lo(int i, int in, int out) { return (i * in) / out; }
inline int aap_hi(int i, int in, int out) { return ((i + 1) * in + out - 1) / out; }
}  // namespace

Tensor adaptive_average_pool2d_forward(const Tensor& x, int out_h, int out_w) {
  check_rank(x, 3, "adaptive_average_pool2d");
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("adaptive_average_pool2d: bad output dims");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y({c, out_h, out_w});
  size_t out = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < out_h; ++oy) {
      const int y0 = aap_lo(oy, h, out_h), y1 = aap_hi(oy, h, out_h);
      for (int ox = 0; ox < out_w; ++ox) {
        const int x0 = aap_lo(ox, w, out_w), x1 = aap_hi(ox, w, out_w);
        double acc = 0.0;
        for (int iy = y0; iy < y1; ++iy)
          for (int ix = x0; ix < x1; ++ix) acc += x.data[(static_cast<size_t>(ch) * h + iy) * w + ix];
        y.data[out++] = acc / ((y1 - y0) * (x1 - x0));
      }
    }
  }
  return y;
}

Tensor adaptive_average_pool2d_backward(const std::vector<int>& x_shape, const Tensor& dy) {
  const int c = x_shape[0], h = x_shape[1], w = x_shape[2];
  const int out_h = dy.dim(1), out_w = dy.dim(2);
  Tensor dx(x_shape);
  size_t out = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < out_h; ++oy) {
      const int y0 = aap_lo(oy, h, out_h), y1 = aap_hi(oy, h, out_h);
      for (int ox = 0; ox < out_w; ++ox) {
        const int x0 = aap_lo(ox, w, out_w), x1 = aap_hi(ox, w, out_w);
        const double g = dy.data[out++] / ((y1 - y0) * (x1 - x0));
        for (int iy = y0; iy < y1; ++iy)
          for (int ix = x0; ix < x1; ++ix) dx.data[(static_cast<size_t>(ch) * h + iy) * w + ix] += g;
      }
    }
  }
  return dx;
}

Tensor fully_connected_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int m = w.dim(0), n = w.dim(1);
  if (static_cast<int>(x.numel()) != n) throw std::invalid_argument("fully_connected: shape mismatch");
  Tensor y({m});
  for (int i = 0; i < m; ++i) {
    const double* row = w.data.data() + static_cast<size_t>(i) * n;
    double acc = b.data[i];
    for (int j = 0; j < n; ++j) acc += row[j] * x.data[j];
    y.data[i] = acc;
  }
  return y;
}

ConvGrads fully_connected_backward(const Tensor& x, const Tensor& w, const Tensor& dy) {
  const int m = w.dim(0), n = w.dim(1);
  ConvGrads g{Tensor(x.shape), Tensor(w.shape), Tensor({m})};
  for (int i = 0; i < m; ++i) {
    const double gy = dy.data[i];
    g.db.data[i] = gy;
    const double* row = w.data.data() + static_cast<size_t>(i) * n;
    double* dwrow = g.dw.data.data() + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      dwrow[j] += gy * x.data[j];
      g.dx.data[j] += gy * row[j];
    }
  }
  return g;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx(x.shape);
  for (size_t i = 0; i < x.numel(); ++i) dx.data[i] = x.data[i] > 0.0 ? dy.data[i] : 0.0;
  return dx;
}

Tensor sigmoid_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx(y.shape);
  for (size_t i = 0; i < y.numel(); ++i) dx.data[i] = dy.data[i] * y.data[i] * (1.0 - y.data[i]);
  return dx;
}

DropoutResult dropout_forward(const Tensor& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
  DropoutResult r{x, Tensor(x.shape)};
  if (!training || rate == 0.0) {
    std::fill(r.mask.data.begin(), r.mask.data.end(), 1.0);
    return r;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  for (size_t i = 0; i < x.numel(); ++i) {
    const double m = rng.uniform() < rate ? 0.0 : keep_scale;
    r.mask.data[i] = m;
    r.y.data[i] = x.data[i] * m;
  }
  return r;
}

Tensor dropout_backward(const DropoutResult& fwd, const Tensor& dy) {
  Tensor dx(dy.shape);
  for (size_t i = 0; i < dy.numel(); ++i) dx.data[i] = dy.data[i] * fwd.mask.data[i];
  return dx;
}

Tensor upsample_nearest2_forward(const Tensor& x) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y({c, 2 * h, 2 * w});
  for (int ch = 0; ch < c; ++ch)
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) {
        const double v = x.data[(static_cast<size_t>(ch) * h + iy) * w + ix];
        double* base = y.data.data() + (static_cast<size_t>(ch) * 2 * h + 2 * iy) * 2 * w + 2 * ix;
        base[0] = base[1] = v;
        base[2 * w] = base[2 * w + 1] = v;
      }
  return y;
}

Tensor upsample_nearest2_backward(const std::vector<int>& x_shape, const Tensor& dy) {
  const int c = x_shape[0], h = x_shape[1], w = x_shape[2];
  Tensor dx(x_shape);
  for (int ch = 0; ch < c; ++ch)
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) {
        const double* base = dy.data.data() + (static_cast<size_t>(ch) * 2 * h + 2 * iy) * 2 * w + 2 * ix;
        dx.data[(static_cast<size_t>(ch) * h + iy) * w + ix] =
            base[0] + base[1] + base[2 * w] + base[2 * w + 1];
      }
  return dx;
}

namespace {

struct LerpAxis {
  std::vector<int> i0, i1;
  std::vector<double> t;
};

LerpAxis lerp_axis(int in, int out) {
  LerpAxis a;
  a.i0.resize(out);
  a.i1.resize(out);
  a.t.resize(out);
  const double s = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double f = (o + 0.5) * s - 0.5;
    if (f < 0) f = 0;
    if (f > in - 1) f = in - 1;
    a.i0[o] = static_cast<int>(f);
    a.i1[o] = std::min(a.i0[o] + 1, in - 1);
    a.t[o] = f - a.i0[o];
  }
  return a;
}

}  // namespace

Tensor resize_bilinear_forward(const Tensor& x, int out_h, int out_w) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (out_h == h && out_w == w) return x;
  const LerpAxis ay = lerp_axis(h, out_h), ax = lerp_axis(w, out_w);
  Tensor y({c, out_h, out_w});
  for (int ch = 0; ch < c; ++ch) {
    const double* src = x.data.data() + static_cast<size_t>(ch) * h * w;
    double* dst = y.data.data() + static_cast<size_t>(ch) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const double* r0 = src + static_cast<size_t>(ay.i0[oy]) * w;
      const double* r1 = src + static_cast<size_t>(ay.i1[oy]) * w;
      const double ty = ay.t[oy];
      for (int ox = 0; ox < out_w; ++ox) {
        const double tx = ax.t[ox];
        const double top = r0[ax.i0[ox]] * (1 - tx) + r0[ax.i1[ox]] * tx;
        const double bot = r1[ax.i0[ox]] * (1 - tx) + r1[ax.i1[ox]] * tx;
        dst[static_cast<size_t>(oy) * out_w + ox] = top * (1 - ty) + bot * ty;
      }
    }
  }
  return y;
}

Tensor resize_bilinear_backward(const std::vector<int>& x_shape, const Tensor& dy) {
  const int c = x_shape[0], h = x_shape[1], w = x_shape[2];
  const int out_h = dy.dim(1), out_w = dy.dim(2);
  if (out_h == h && out_w == w) return dy;
  const LerpAxis ay = lerp_axis(h, out_h), ax = lerp_axis(w, out_w);
  Tensor dx(x_shape);
  for (int ch = 0; ch < c; ++ch) {
    double* dst = dx.data.data() + static_cast<size_t>(ch) * h * w;
    const double* src = dy.data.data() + static_cast<size_t>(ch) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const double ty = ay.t[oy];
      for (int ox = 0; ox < out_w; ++ox) {
        const double tx = ax.t[ox];
        const double g = src[static_cast<size_t>(oy) * out_w + ox];
        dst[static_cast<size_t>(ay.i0[oy]) * w + ax.i0[ox]] += g * (1 - ty) * (1 - tx);
        dst[static_cast<size_t>(ay.i0[oy]) * w + ax.i1[ox]] += g * (1 - ty) * tx;
        dst[static_cast<size_t>(ay.i1[oy]) * w + ax.i0[ox]] += g * ty * (1 - tx);
        dst[static_cast<size_t>(ay.i1[oy]) * w + ax.i1[ox]] += g * ty * tx;
      }
    }
  }
  return dx;
}

SoftmaxXentResult softmax_cross_entropy(const Tensor& logits, const Tensor& target_one_hot) {
  if (logits.numel() != target_one_hot.numel() || logits.numel() < 2)
    throw std::invalid_argument("softmax_cross_entropy: shape mismatch");
  SoftmaxXentResult r;
  r.probs = Tensor(logits.shape);
  r.dlogits = Tensor(logits.shape);
  const double mx = *std::max_element(logits.data.begin(), logits.data.end());
  double denom = 0.0;
  for (size_t i = 0; i < logits.numel(); ++i) {
    r.probs.data[i] = std::exp(logits.data[i] - mx);
    denom += r.probs.data[i];
  }
  for (size_t i = 0; i < logits.numel(); ++i) {
    r.probs.data[i] /= denom;
    const double p = std::max(r.probs.data[i], 1e-300);
    r.loss -= target_one_hot.data[i] * std::log(p);
    r.dlogits.data[i] = r.probs.data[i] - target_one_hot.data[i];
  }
  return r;
}

FrobeniusResult frobenius_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape != target.shape) throw std::invalid_argument("frobenius_loss: shape mismatch");
  FrobeniusResult r;
  r.dpred = Tensor(pred.shape);
  double sq = 0.0;
  for (size_t i = 0; i < pred.numel(); ++i) {
    const double d = target.data[i] - pred.data[i];
    sq += d * d;
  }
  r.loss = std::sqrt(sq);
  if (r.loss > 0.0)
    for (size_t i = 0; i < pred.numel(); ++i)
      r.dpred.data[i] = (pred.data[i] - target.data[i]) / r.loss;
  return r;
}

}  // namespace pairlock
