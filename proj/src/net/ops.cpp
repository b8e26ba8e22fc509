#include "unmix/net/ops.hpp"

#include "unmix/phasesolver.hpp"
#include "unmix/specfun.hpp"

#include <cmath>
#include <stdexcept>

namespace unmix::net::ops {

namespace {

void check_same_shape(const Tape& t, int a, int b, const char* op) {
    if (t.val(a).shape != t.val(b).shape)
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

// Elementwise binary op helper.
template <typename Fwd, typename Bwd>
int binary(Tape& t, int a, int b, const char* name, Fwd fwd, Bwd bwd) {
    check_same_shape(t, a, b, name);
    const Tensor& va = t.val(a);
    const Tensor& vb = t.val(b);
    Tensor out(va.shape);
    for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(va[i], vb[i]);
    bool rg = t.requires_grad(a) || t.requires_grad(b);
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, [&t, a, b, id, bwd] {
        const Tensor& g = t.grad(id);
        const Tensor& va = t.val(a);
        const Tensor& vb = t.val(b);
        bool ga = t.requires_grad(a), gb = t.requires_grad(b);
        Tensor* pa = ga ? &t.grad(a) : nullptr;
        Tensor* pb = gb ? &t.grad(b) : nullptr;
        for (size_t i = 0; i < g.size(); ++i) {
            auto [da, db] = bwd(va[i], vb[i]);
            if (pa) (*pa)[i] += g[i] * da;
            if (pb) (*pb)[i] += g[i] * db;
        }
    });
}

// Elementwise unary op helper; bwd receives (input value, output value).
template <typename Fwd, typename Bwd>
int unary(Tape& t, int a, Fwd fwd, Bwd bwd) {
    const Tensor& va = t.val(a);
    Tensor out(va.shape);
    for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(va[i]);
    bool rg = t.requires_grad(a);
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, [&t, a, id, bwd] {
        const Tensor& g = t.grad(id);
        const Tensor& va = t.val(a);
        const Tensor& vo = t.val(id);
        Tensor& ga = t.grad(a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bwd(va[i], vo[i]);
    });
}

}  // namespace

int add(Tape& t, int a, int b) {
    return binary(t, a, b, "add", [](double x, double y) { return x + y; },
                  [](double, double) { return std::pair{1.0, 1.0}; });
}

int sub(Tape& t, int a, int b) {
    return binary(t, a, b, "sub", [](double x, double y) { return x - y; },
                  [](double, double) { return std::pair{1.0, -1.0}; });
}

int mul(Tape& t, int a, int b) {
    return binary(t, a, b, "mul", [](double x, double y) { return x * y; },
                  [](double x, double y) { return std::pair{y, x}; });
}

int divide(Tape& t, int a, int b) {
    return binary(t, a, b, "divide", [](double x, double y) { return x / y; },
                  [](double x, double y) {
                      return std::pair{1.0 / y, -x / (y * y)};
                  });
}

int add_const(Tape& t, int a, double c) {
    return unary(t, a, [c](double x) { return x + c; },
                 [](double, double) { return 1.0; });
}

int mul_const(Tape& t, int a, double c) {
    return unary(t, a, [c](double x) { return x * c; },
                 [c](double, double) { return c; });
}

int pow_const(Tape& t, int a, double p) {
    return unary(t, a, [p](double x) { return std::pow(x, p); },
                 [p](double x, double) { return p * std::pow(x, p - 1.0); });
}

int relu(Tape& t, int a) {
    return unary(t, a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

int tanh_(Tape& t, int a) {
    return unary(t, a, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
}

int sigmoid(Tape& t, int a) {
    return unary(t, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                 [](double, double y) { return y * (1.0 - y); });
}

int softplus(Tape& t, int a) {
    return unary(t, a,
                 [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
                 [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

int exp_(Tape& t, int a) {
    return unary(t, a, [](double x) { return std::exp(x); },
                 [](double, double y) { return y; });
}

int log_(Tape& t, int a) {
    return unary(t, a, [](double x) { return std::log(x); },
                 [](double x, double) { return 1.0 / x; });
}

int abs_(Tape& t, int a) {
    return unary(t, a, [](double x) { return std::fabs(x); },
                 [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

int sin_(Tape& t, int a) {
    return unary(t, a, [](double x) { return std::sin(x); },
                 [](double x, double) { return std::cos(x); });
}

int cos_(Tape& t, int a) {
    return unary(t, a, [](double x) { return std::cos(x); },
                 [](double x, double) { return -std::sin(x); });
}

int clamp_nonneg_passthrough(Tape& t, int a) {
    return unary(t, a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double, double) { return 1.0; });
}

int sum(Tape& t, int a) {
    const Tensor& va = t.val(a);
    Tensor out{1};
    for (size_t i = 0; i < va.size(); ++i) out[0] += va[i];
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), t.requires_grad(a), [&t, a, id] {
        double g = t.grad(id)[0];
        Tensor& ga = t.grad(a);
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
}

int smul(Tape& t, int s, int a) {
    if (t.val(s).size() != 1) throw std::invalid_argument("smul: scalar expected");
    const Tensor& va = t.val(a);
    double sv = t.val(s)[0];
    Tensor out(va.shape);
    for (size_t i = 0; i < out.size(); ++i) out[i] = sv * va[i];
    bool rg = t.requires_grad(a) || t.requires_grad(s);
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, [&t, s, a, id] {
        const Tensor& g = t.grad(id);
        const Tensor& va = t.val(a);
        double sv = t.val(s)[0];
        if (t.requires_grad(s)) {
            double acc = 0.0;
            for (size_t i = 0; i < g.size(); ++i) acc += g[i] * va[i];
            t.grad(s)[0] += acc;
        }
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad(a);
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sv;
        }
    });
}

int sadd(Tape& t, int s, int a) {
    if (t.val(s).size() != 1) throw std::invalid_argument("sadd: scalar expected");
    const Tensor& va = t.val(a);
    double sv = t.val(s)[0];
    Tensor out(va.shape);
    for (size_t i = 0; i < out.size(); ++i) out[i] = sv + va[i];
    bool rg = t.requires_grad(a) || t.requires_grad(s);
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, [&t, s, a, id] {
        const Tensor& g = t.grad(id);
        if (t.requires_grad(s)) {
            double acc = 0.0;
            for (size_t i = 0; i < g.size(); ++i) acc += g[i];
            t.grad(s)[0] += acc;
        }
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad(a);
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
    });
}

int concat_rows(Tape& t, const std::vector<int>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
    int length = t.val(parts[0]).shape.back();
    int rows = 0;
    bool rg = false;
    for (int p : parts) {
        const Tensor& v = t.val(p);
        if (v.shape.back() != length)
            throw std::invalid_argument("concat_rows: length mismatch");
        rows += v.shape.size() == 1 ? 1 : v.shape[0];
        rg = rg || t.requires_grad(p);
    }
    Tensor out{rows, length};
    size_t off = 0;
    for (int p : parts) {
        const Tensor& v = t.val(p);
        std::copy(v.v.begin(), v.v.end(), out.v.begin() + off);
        off += v.size();
    }
    int id = static_cast<int>(t.num_nodes());
    std::vector<int> ps = parts;
    return t.emplace(std::move(out), rg, [&t, ps, id] {
        const Tensor& g = t.grad(id);
        size_t off = 0;
        for (int p : ps) {
            size_t n = t.val(p).size();
            if (t.requires_grad(p)) {
                Tensor& gp = t.grad(p);
                for (size_t i = 0; i < n; ++i) gp[i] += g[off + i];
            }
            off += n;
        }
    });
}

int slice_row(Tape& t, int a, int row) {
    const Tensor& va = t.val(a);
    if (va.shape.size() != 2) throw std::invalid_argument("slice_row: rank-2 expected");
    int length = va.shape[1];
    return slice(t, a, row * length, length);
}

int slice(Tape& t, int a, int lo, int len) {
    const Tensor& va = t.val(a);
    if (lo < 0 || lo + len > static_cast<int>(va.size()))
        throw std::invalid_argument("slice: out of range");
    Tensor out{len};
    std::copy(va.v.begin() + lo, va.v.begin() + lo + len, out.v.begin());
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), t.requires_grad(a), [&t, a, lo, len, id] {
        const Tensor& g = t.grad(id);
        Tensor& ga = t.grad(a);
        for (int i = 0; i < len; ++i) ga[lo + i] += g[i];
    });
}

int stack2(Tape& t, int a, int b) {
    check_same_shape(t, a, b, "stack2");
    return concat_rows(t, {a, b});
}

int pick(Tape& t, int a, int idx) { return slice(t, a, idx, 1); }

int gather(Tape& t, int a, std::vector<int> idx) {
    const Tensor& va = t.val(a);
    Tensor out{static_cast<int>(idx.size())};
    for (size_t i = 0; i < idx.size(); ++i) out[i] = va[idx[i]];
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), t.requires_grad(a), [&t, a, idx, id] {
        const Tensor& g = t.grad(id);
        Tensor& ga = t.grad(a);
        for (size_t i = 0; i < idx.size(); ++i) ga[idx[i]] += g[i];
    });
}

int cmag(Tape& t, int a) {
    const Tensor& va = t.val(a);
    if (va.shape.size() != 2 || va.shape[0] != 2)
        throw std::invalid_argument("cmag: [2, L] expected");
    int length = va.shape[1];
    Tensor out{length};
    for (int l = 0; l < length; ++l)
        out[l] = std::hypot(va[l], va[length + l]);
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), t.requires_grad(a), [&t, a, length, id] {
        const Tensor& g = t.grad(id);
        const Tensor& va = t.val(a);
        const Tensor& m = t.val(id);
        Tensor& ga = t.grad(a);
        for (int l = 0; l < length; ++l) {
            if (m[l] == 0.0) continue;
            ga[l] += g[l] * va[l] / m[l];
            ga[length + l] += g[l] * va[length + l] / m[l];
        }
    });
}

int phase_angles(Tape& t, int a) {
    const Tensor& va = t.val(a);
    if (va.shape.size() != 2 || va.shape[0] != 2)
        throw std::invalid_argument("phase_angles: [2, n] expected");
    int n = va.shape[1];
    Tensor out{n};
    for (int h = 0; h < n; ++h) {
        double re = va[h], im = va[n + h];
        if (re == 0.0 && im == 0.0) {
            out[h] = 0.0;
        } else {
            double phi = std::atan2(im, re);
            out[h] = phi >= M_PI ? -M_PI : phi;
        }
    }
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), t.requires_grad(a), [&t, a, n, id] {
        const Tensor& g = t.grad(id);
        const Tensor& va = t.val(a);
        Tensor& ga = t.grad(a);
        for (int h = 0; h < n; ++h) {
            double re = va[h], im = va[n + h];
            double r2 = re * re + im * im;
            if (r2 == 0.0) continue;
            ga[h] += g[h] * (-im / r2);
            ga[n + h] += g[h] * (re / r2);
        }
    });
}

int conv1d(Tape& t, int x, int w, int bias, int stride) {
    const Tensor& vx = t.val(x);
    const Tensor& vw = t.val(w);
    const Tensor& vb = t.val(bias);
    if (vx.shape.size() != 2 || vw.shape.size() != 3)
        throw std::invalid_argument("conv1d: bad ranks");
    int cin = vx.shape[0], len = vx.shape[1];
    int cout = vw.shape[0], k = vw.shape[2];
    if (vw.shape[1] != cin || vb.shape[0] != cout)
        throw std::invalid_argument("conv1d: shape mismatch");
    if (len % stride != 0)
        throw std::invalid_argument("conv1d: length not divisible by stride");
    int pad = k / 2;
    int lout = len / stride;

    Tensor out{cout, lout};
    for (int o = 0; o < cout; ++o) {
        double* orow = out.v.data() + static_cast<size_t>(o) * lout;
        for (int tt = 0; tt < lout; ++tt) orow[tt] = vb[o];
        for (int c = 0; c < cin; ++c) {
            const double* xrow = vx.v.data() + static_cast<size_t>(c) * len;
            const double* wrow = vw.v.data() + (static_cast<size_t>(o) * cin + c) * k;
            for (int kk = 0; kk < k; ++kk) {
                double wv = wrow[kk];
                if (wv == 0.0) continue;
                int base = kk - pad;
                int t0 = std::max(0, (-base + stride - 1) / stride);
                int t1 = std::min(lout, (len - base + stride - 1) / stride);
                for (int tt = t0; tt < t1; ++tt)
                    orow[tt] += wv * xrow[tt * stride + base];
            }
        }
    }

    bool rg = t.requires_grad(x) || t.requires_grad(w) || t.requires_grad(bias);
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg,
                     [&t, x, w, bias, stride, cin, cout, len, k, pad, lout, id] {
        const Tensor& g = t.grad(id);
        const Tensor& vx = t.val(x);
        const Tensor& vw = t.val(w);
        bool need_x = t.requires_grad(x);
        bool need_w = t.requires_grad(w);
        bool need_b = t.requires_grad(bias);
        Tensor* gx = need_x ? &t.grad(x) : nullptr;
        Tensor* gw = need_w ? &t.grad(w) : nullptr;
        Tensor* gb = need_b ? &t.grad(bias) : nullptr;
        for (int o = 0; o < cout; ++o) {
            const double* grow = g.v.data() + static_cast<size_t>(o) * lout;
            if (need_b) {
                double acc = 0.0;
                for (int tt = 0; tt < lout; ++tt) acc += grow[tt];
                (*gb)[o] += acc;
            }
            for (int c = 0; c < cin; ++c) {
                const double* xrow = vx.v.data() + static_cast<size_t>(c) * len;
                const double* wrow = vw.v.data() + (static_cast<size_t>(o) * cin + c) * k;
                double* gxrow = need_x ? gx->v.data() + static_cast<size_t>(c) * len : nullptr;
                double* gwrow = need_w ? gw->v.data() + (static_cast<size_t>(o) * cin + c) * k : nullptr;
                for (int kk = 0; kk < k; ++kk) {
                    int base = kk - pad;
                    int t0 = std::max(0, (-base + stride - 1) / stride);
                    int t1 = std::min(lout, (len - base + stride - 1) / stride);
                    if (need_w) {
                        double acc = 0.0;
                        for (int tt = t0; tt < t1; ++tt)
                            acc += grow[tt] * xrow[tt * stride + base];
                        gwrow[kk] += acc;
                    }
                    if (need_x) {
                        double wv = wrow[kk];
                        for (int tt = t0; tt < t1; ++tt)
                            gxrow[tt * stride + base] += grow[tt] * wv;
                    }
                }
            }
        }
    });
}

int conv1d_transpose(Tape& t, int x, int w, int bias, int stride) {
    const Tensor& vx = t.val(x);
    const Tensor& vw = t.val(w);
    const Tensor& vb = t.val(bias);
    if (vx.shape.size() != 2 || vw.shape.size() != 3)
        throw std::invalid_argument("conv1d_transpose: bad ranks");
    int cin = vx.shape[0], len = vx.shape[1];
    int cout = vw.shape[1], k = vw.shape[2];
    if (vw.shape[0] != cin || vb.shape[0] != cout)
        throw std::invalid_argument("conv1d_transpose: shape mismatch");
    int lout = len * stride;
    int crop = k > stride ? (k - stride) / 2 : 0;

    Tensor out{cout, lout};
    for (int o = 0; o < cout; ++o) {
        double* orow = out.v.data() + static_cast<size_t>(o) * lout;
        for (int u = 0; u < lout; ++u) orow[u] = vb[o];
        for (int c = 0; c < cin; ++c) {
            const double* xrow = vx.v.data() + static_cast<size_t>(c) * len;
            const double* wrow = vw.v.data() + (static_cast<size_t>(c) * cout + o) * k;
            for (int kk = 0; kk < k; ++kk) {
                double wv = wrow[kk];
                if (wv == 0.0) continue;
                int base = kk - crop;
                for (int tt = 0; tt < len; ++tt) {
                    int u = tt * stride + base;
                    if (u >= 0 && u < lout) orow[u] += wv * xrow[tt];
                }
            }
        }
    }

    bool rg = t.requires_grad(x) || t.requires_grad(w) || t.requires_grad(bias);
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg,
                     [&t, x, w, bias, stride, cin, cout, len, k, crop, lout, id] {
        const Tensor& g = t.grad(id);
        const Tensor& vx = t.val(x);
        const Tensor& vw = t.val(w);
        bool need_x = t.requires_grad(x);
        bool need_w = t.requires_grad(w);
        bool need_b = t.requires_grad(bias);
        Tensor* gx = need_x ? &t.grad(x) : nullptr;
        Tensor* gw = need_w ? &t.grad(w) : nullptr;
        Tensor* gb = need_b ? &t.grad(bias) : nullptr;
        for (int o = 0; o < cout; ++o) {
            const double* grow = g.v.data() + static_cast<size_t>(o) * lout;
            if (need_b) {
                double acc = 0.0;
                for (int u = 0; u < lout; ++u) acc += grow[u];
                (*gb)[o] += acc;
            }
            for (int c = 0; c < cin; ++c) {
                const double* xrow = vx.v.data() + static_cast<size_t>(c) * len;
                const double* wrow = vw.v.data() + (static_cast<size_t>(c) * cout + o) * k;
                double* gxrow = need_x ? gx->v.data() + static_cast<size_t>(c) * len : nullptr;
                double* gwrow = need_w ? gw->v.data() + (static_cast<size_t>(c) * cout + o) * k : nullptr;
                for (int kk = 0; kk < k; ++kk) {
                    int base = kk - crop;
                    double wv = wrow[kk];
                    double acc_w = 0.0;
                    for (int tt = 0; tt < len; ++tt) {
                        int u = tt * stride + base;
                        if (u < 0 || u >= lout) continue;
                        if (need_w) acc_w += grow[u] * xrow[tt];
                        if (need_x) gxrow[tt] += grow[u] * wv;
                    }
                    if (need_w) gwrow[kk] += acc_w;
                }
            }
        }
    });
}

int log_softmax_pick(Tape& t, int logits, const std::vector<char>& mask, int k,
                     double r) {
    const Tensor& vl = t.val(logits);
    int n = static_cast<int>(vl.size());
    if (static_cast<int>(mask.size()) != n)
        throw std::invalid_argument("log_softmax_pick: mask length mismatch");
    if (k < 0 || k >= n || !mask[k])
        throw std::invalid_argument("log_softmax_pick: picked index masked out");
    double mx = -1e300;
    for (int i = 0; i < n; ++i)
        if (mask[i]) mx = std::max(mx, vl[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i)
        if (mask[i]) z += std::exp(r * (vl[i] - mx));
    Tensor out{1};
    out[0] = r * (vl[k] - mx) - std::log(z);
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), t.requires_grad(logits),
                     [&t, logits, mask, k, r, n, mx, z, id] {
        double g = t.grad(id)[0];
        const Tensor& vl = t.val(logits);
        Tensor& gl = t.grad(logits);
        for (int i = 0; i < n; ++i) {
            if (!mask[i]) continue;
            double p = std::exp(r * (vl[i] - mx)) / z;
            gl[i] += g * r * ((i == k ? 1.0 : 0.0) - p);
        }
    });
}

int bernoulli_lift_logdensity(Tape& t, int z, int u, double r) {
    if (t.val(z).size() != 1)
        throw std::invalid_argument("bernoulli_lift_logdensity: scalar logit expected");
    double zv = t.val(z)[0];
    // log sigma(z) and log sigma(-z) via softplus for stability.
    auto softplus_f = [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); };
    double a1 = -softplus_f(-zv);
    double a0 = -softplus_f(zv);
    double au = u ? a1 : a0;
    double mx = std::max(r * a1, r * a0);
    double lse = mx + std::log(std::exp(r * a1 - mx) + std::exp(r * a0 - mx));
    Tensor out{1};
    out[0] = r * au - lse;
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), t.requires_grad(z), [&t, z, u, r, id] {
        double g = t.grad(id)[0];
        double zv = t.val(z)[0];
        double p = 1.0 / (1.0 + std::exp(-zv));
        double q = 1.0 - p;
        // d a1/dz = q, d a0/dz = -p; lifted posterior weight of u=1 is
        // sigma(r z).
        double w1 = 1.0 / (1.0 + std::exp(-r * zv));
        double dau = u ? q : -p;
        t.grad(z)[0] += g * r * (dau - (w1 * q - (1.0 - w1) * p));
    });
}

int gamma_logdensity(Tape& t, int alpha, int beta, double b) {
    if (t.val(alpha).size() != 1 || t.val(beta).size() != 1)
        throw std::invalid_argument("gamma_logdensity: scalar parameters expected");
    if (!(b > 0.0)) throw std::invalid_argument("gamma_logdensity: draw must be positive");
    double a = t.val(alpha)[0];
    double be = t.val(beta)[0];
    Tensor out{1};
    out[0] = a * std::log(be) - std::lgamma(a) + (a - 1.0) * std::log(b) - be * b;
    int id = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), t.requires_grad(alpha) || t.requires_grad(beta),
                     [&t, alpha, beta, b, id] {
        double g = t.grad(id)[0];
        double a = t.val(alpha)[0];
        double be = t.val(beta)[0];
        if (t.requires_grad(alpha))
            t.grad(alpha)[0] += g * (std::log(be) - digamma(a) + std::log(b));
        if (t.requires_grad(beta))
            t.grad(beta)[0] += g * (a / be - b);
    });
}

int peak_superposition(Tape& t, int amps, int nu_tilde, int sigma, int nu,
                       double b, const GaborConfig& cfg) {
    const Tensor& va = t.val(amps);
    if (va.shape.size() != 2 || va.shape[0] != 2)
        throw std::invalid_argument("peak_superposition: amplitudes must be [2, n_har]");
    int n_har = va.shape[1];
    double nt = t.val(nu_tilde)[0];
    double sg = t.val(sigma)[0];
    double f1 = cfg.beta_hz * (static_cast<double>(nu) + nt);
    PeakBasis basis = make_peak_basis(f1, b, sg, n_har, cfg);

    Tensor out{2, cfg.n_spc};
    for (int h = 0; h < n_har; ++h) {
        const auto& col = basis.cols[h];
        double are = va[h], aim = va[n_har + h];
        for (size_t i = 0; i < col.values.size(); ++i) {
            int l = col.lo + static_cast<int>(i);
            out[l] += are * col.values[i];
            out[cfg.n_spc + l] += aim * col.values[i];
        }
    }

    bool rg = t.requires_grad(amps) || t.requires_grad(nu_tilde) || t.requires_grad(sigma);
    int id = static_cast<int>(t.num_nodes());
    int n_spc = cfg.n_spc;
    double beta = cfg.beta_hz;
    return t.emplace(std::move(out), rg,
                     [&t, amps, nu_tilde, sigma, basis, n_har, n_spc, beta, b, id] {
        const Tensor& g = t.grad(id);
        const Tensor& va = t.val(amps);
        double sg = basis.sigma_hz;
        bool need_a = t.requires_grad(amps);
        bool need_nt = t.requires_grad(nu_tilde);
        bool need_sg = t.requires_grad(sigma);
        double grad_f1 = 0.0, grad_sigma = 0.0;
        for (int h = 0; h < n_har; ++h) {
            const auto& col = basis.cols[h];
            double are = va[h], aim = va[n_har + h];
            double acc_re = 0.0, acc_im = 0.0, acc_d = 0.0, acc_d2 = 0.0;
            for (size_t i = 0; i < col.values.size(); ++i) {
                int l = col.lo + static_cast<int>(i);
                double gre = g[l], gim = g[n_spc + l];
                double gv = col.values[i];
                acc_re += gre * gv;
                acc_im += gim * gv;
                double d = beta * l - basis.freqs[h];
                double common = (gre * are + gim * aim) * gv;
                acc_d += common * d;
                acc_d2 += common * d * d;
            }
            if (need_a) {
                Tensor& ga = t.grad(amps);
                ga[h] += acc_re;
                ga[n_har + h] += acc_im;
            }
            double hh = static_cast<double>(h + 1);
            double root = std::sqrt(1.0 + b * hh * hh);
            grad_f1 += acc_d / (sg * sg) * hh * root;
            grad_sigma += acc_d2 / (sg * sg * sg);
        }
        if (need_nt) t.grad(nu_tilde)[0] += grad_f1 * beta;
        if (need_sg) t.grad(sigma)[0] += grad_sigma;
    });
}

int lsq_solve(Tape& t, int v, int nu_tilde, int sigma, int nu, double b,
              int n_har, const GaborConfig& cfg) {
    const Tensor& vv = t.val(v);
    if (vv.shape.size() != 2 || vv.shape[0] != 2 || vv.shape[1] != cfg.n_spc)
        throw std::invalid_argument("lsq_solve: rhs must be [2, n_spc]");
    double nt = t.val(nu_tilde)[0];
    double sg = t.val(sigma)[0];
    double f1 = cfg.beta_hz * (static_cast<double>(nu) + nt);
    PeakBasis basis = make_peak_basis(f1, b, sg, n_har, cfg);
    double reg = default_reg(basis);

    ComplexVec rhs(cfg.n_spc);
    for (int l = 0; l < cfg.n_spc; ++l) rhs[l] = {vv[l], vv[cfg.n_spc + l]};
    ComplexVec c = solve_coeffs(basis, rhs, reg);

    Tensor out{2, n_har};
    for (int h = 0; h < n_har; ++h) {
        out[h] = c[h].real();
        out[n_har + h] = c[h].imag();
    }

    bool rg = t.requires_grad(v) || t.requires_grad(nu_tilde) || t.requires_grad(sigma);
    int id = static_cast<int>(t.num_nodes());
    int n_spc = cfg.n_spc;
    double beta = cfg.beta_hz;
    return t.emplace(std::move(out), rg,
                     [&t, v, nu_tilde, sigma, basis, reg, n_har, n_spc, beta, id] {
        const Tensor& g = t.grad(id);
        const Tensor& vv = t.val(v);
        ComplexVec rhs(n_spc), upstream(n_har);
        for (int l = 0; l < n_spc; ++l) rhs[l] = {vv[l], vv[n_spc + l]};
        for (int h = 0; h < n_har; ++h) upstream[h] = {g[h], g[n_har + h]};
        CoeffGrad cg = solve_coeffs_grad(basis, rhs, reg, upstream);
        RegGrad rg = default_reg_grad(basis);
        if (t.requires_grad(v)) {
            Tensor& gv = t.grad(v);
            for (int l = 0; l < n_spc; ++l) {
                gv[l] += cg.grad_v[l].real();
                gv[n_spc + l] += cg.grad_v[l].imag();
            }
        }
        if (t.requires_grad(nu_tilde))
            t.grad(nu_tilde)[0] += (cg.grad_f1 + cg.grad_reg * rg.df1) * beta;
        if (t.requires_grad(sigma))
            t.grad(sigma)[0] += cg.grad_sigma + cg.grad_reg * rg.dsigma;
    });
}

}  // namespace unmix::net::ops
