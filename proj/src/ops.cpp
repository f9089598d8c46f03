#include "ssag/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ssag {

namespace {

bool g_backward_fault = false;

using detail::TensorData;
using DPtr = std::shared_ptr<TensorData>;

bool grad_wanted(std::initializer_list<const Tensor*> inputs) {
    if (!active_tape()) return false;
    for (const Tensor* t : inputs)
        if (t->defined() && t->requires_grad()) return true;
    return false;
}

void record_node(Tensor& result, std::function<void()> back) {
    Tape* tape = active_tape();
    TensorData* d = result.raw();
    d->requires_grad = true;
    d->grad.assign(d->data.size(), 0.0);
    d->leaf = false;
    d->tape = tape;
    d->tape_gen = tape->generation();
    d->node_index = tape->record(std::move(back), result.handle());
}

void require_rank(const Tensor& t, int rank, const char* what) {
    if (t.rank() != rank)
        throw dimension_error(std::string(what) + ": expected rank " + std::to_string(rank) +
                              ", got shape " + shape_str(t.shape()));
}

// c[m x n] += op(a) * op(b)
void gemm_acc(double* c, const double* a, const double* b, int m, int n, int k, bool ta, bool tb) {
    if (!ta && !tb) {
        for (int i = 0; i < m; ++i) {
            const double* arow = a + static_cast<std::size_t>(i) * k;
            double* crow = c + static_cast<std::size_t>(i) * n;
            for (int l = 0; l < k; ++l) {
                const double av = arow[l];
                if (av == 0.0) continue;
                const double* brow = b + static_cast<std::size_t>(l) * n;
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else if (ta && !tb) { // a stored k x m
        for (int l = 0; l < k; ++l) {
            const double* arow = a + static_cast<std::size_t>(l) * m;
            const double* brow = b + static_cast<std::size_t>(l) * n;
            for (int i = 0; i < m; ++i) {
                const double av = arow[i];
                if (av == 0.0) continue;
                double* crow = c + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else if (!ta && tb) { // b stored n x k
        for (int i = 0; i < m; ++i) {
            const double* arow = a + static_cast<std::size_t>(i) * k;
            double* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                const double* brow = b + static_cast<std::size_t>(j) * k;
                double acc = 0.0;
                for (int l = 0; l < k; ++l) acc += arow[l] * brow[l];
                crow[j] += acc;
            }
        }
    } else { // a stored k x m, b stored n x k
        for (int i = 0; i < m; ++i) {
            double* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                const double* brow = b + static_cast<std::size_t>(j) * k;
                double acc = 0.0;
                for (int l = 0; l < k; ++l) acc += a[static_cast<std::size_t>(l) * m + i] * brow[l];
                crow[j] += acc;
            }
        }
    }
}

} // namespace

void debug_inject_backward_fault(bool enabled) { g_backward_fault = enabled; }

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b) {
    require_rank(a, 2, "matmul lhs");
    require_rank(b, 2, "matmul rhs");
    const int m = a.dim(0);
    const int k = a.dim(1);
    const int bk = transpose_b ? b.dim(1) : b.dim(0);
    const int n = transpose_b ? b.dim(0) : b.dim(1);
    if (k != bk)
        throw dimension_error("matmul: inner dimensions differ, lhs " + shape_str(a.shape()) +
                              " vs rhs " + shape_str(b.shape()) + (transpose_b ? " (transposed)" : ""));

    Tensor out = Tensor::zeros({m, n});
    gemm_acc(out.data(), a.data(), b.data(), m, n, k, false, transpose_b);

    if (grad_wanted({&a, &b})) {
        DPtr ad = a.handle(), bd = b.handle(), od = out.handle();
        record_node(out, [ad, bd, od, m, n, k, transpose_b]() {
            const double* g = od->grad.data();
            if (ad->requires_grad) {
                // dA = dC * B^T   (or dC * B when b was transposed)
                gemm_acc(ad->grad.data(), g, bd->data.data(), m, k, n, false, !transpose_b);
            }
            if (bd->requires_grad) {
                if (!transpose_b) // dB = A^T * dC
                    gemm_acc(bd->grad.data(), ad->data.data(), g, k, n, m, true, false);
                else // dB = dC^T * A
                    gemm_acc(bd->grad.data(), g, ad->data.data(), n, k, m, true, false);
            }
        });
    }
    return out;
}

Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b) {
    require_rank(x, 2, "affine input");
    require_rank(W, 2, "affine weight");
    require_rank(b, 1, "affine bias");
    const int n = x.dim(0), din = x.dim(1);
    const int dout = W.dim(1);
    if (W.dim(0) != din || b.dim(0) != dout)
        throw dimension_error("affine: x " + shape_str(x.shape()) + " incompatible with W " +
                              shape_str(W.shape()) + ", b " + shape_str(b.shape()));

    Tensor out = Tensor::zeros({n, dout});
    gemm_acc(out.data(), x.data(), W.data(), n, dout, din, false, false);
    double* o = out.data();
    const double* bias = b.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dout; ++j) o[static_cast<std::size_t>(i) * dout + j] += bias[j];

    if (grad_wanted({&x, &W, &b})) {
        DPtr xd = x.handle(), wd = W.handle(), bd = b.handle(), od = out.handle();
        record_node(out, [xd, wd, bd, od, n, din, dout]() {
            const double* g = od->grad.data();
            if (xd->requires_grad) gemm_acc(xd->grad.data(), g, wd->data.data(), n, din, dout, false, true);
            if (wd->requires_grad) gemm_acc(wd->grad.data(), xd->data.data(), g, din, dout, n, true, false);
            if (bd->requires_grad) {
                double* bg = bd->grad.data();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < dout; ++j) bg[j] += g[static_cast<std::size_t>(i) * dout + j];
            }
        });
    }
    return out;
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride, int padding) {
    require_rank(x, 4, "conv2d input");
    require_rank(kernel, 4, "conv2d kernel");
    if (stride < 1) throw config_error("conv2d: stride must be positive");
    if (padding < 0) throw config_error("conv2d: padding must be non-negative");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int f = kernel.dim(0), kc = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
    if (kc != c)
        throw dimension_error("conv2d: kernel channels " + shape_str(kernel.shape()) +
                              " do not match input " + shape_str(x.shape()));
    if (kh > h + 2 * padding || kw > w + 2 * padding)
        throw dimension_error("conv2d: kernel " + shape_str(kernel.shape()) +
                              " larger than padded input " + shape_str(x.shape()) +
                              " with padding " + std::to_string(padding));
    const int oh = (h + 2 * padding - kh) / stride + 1;
    const int ow = (w + 2 * padding - kw) / stride + 1;

    Tensor out = Tensor::zeros({n, f, oh, ow});
    {
        const double* xs = x.data();
        const double* ks = kernel.data();
        double* os = out.data();
        for (int b = 0; b < n; ++b)
            for (int fo = 0; fo < f; ++fo)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        double acc = 0.0;
                        for (int ci = 0; ci < c; ++ci)
                            for (int ky = 0; ky < kh; ++ky) {
                                const int iy = oy * stride + ky - padding;
                                if (iy < 0 || iy >= h) continue;
                                for (int kx = 0; kx < kw; ++kx) {
                                    const int ix = ox * stride + kx - padding;
                                    if (ix < 0 || ix >= w) continue;
                                    acc += xs[((static_cast<std::size_t>(b) * c + ci) * h + iy) * w + ix] *
                                           ks[((static_cast<std::size_t>(fo) * c + ci) * kh + ky) * kw + kx];
                                }
                            }
                        os[((static_cast<std::size_t>(b) * f + fo) * oh + oy) * ow + ox] = acc;
                    }
    }

    if (grad_wanted({&x, &kernel})) {
        DPtr xd = x.handle(), kd = kernel.handle(), od = out.handle();
        record_node(out, [xd, kd, od, n, c, h, w, f, kh, kw, oh, ow, stride, padding]() {
            const double* g = od->grad.data();
            const double* xs = xd->data.data();
            const double* ks = kd->data.data();
            for (int b = 0; b < n; ++b)
                for (int fo = 0; fo < f; ++fo)
                    for (int oy = 0; oy < oh; ++oy)
                        for (int ox = 0; ox < ow; ++ox) {
                            const double go = g[((static_cast<std::size_t>(b) * f + fo) * oh + oy) * ow + ox];
                            if (go == 0.0) continue;
                            for (int ci = 0; ci < c; ++ci)
                                for (int ky = 0; ky < kh; ++ky) {
                                    const int iy = oy * stride + ky - padding;
                                    if (iy < 0 || iy >= h) continue;
                                    for (int kx = 0; kx < kw; ++kx) {
                                        const int ix = ox * stride + kx - padding;
                                        if (ix < 0 || ix >= w) continue;
                                        const std::size_t xi = ((static_cast<std::size_t>(b) * c + ci) * h + iy) * w + ix;
                                        const std::size_t ki = ((static_cast<std::size_t>(fo) * c + ci) * kh + ky) * kw + kx;
                                        if (kd->requires_grad) kd->grad[ki] += go * xs[xi];
                                        if (xd->requires_grad) xd->grad[xi] += go * ks[ki];
                                    }
                                }
                        }
        });
    }
    return out;
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BnState& state,
                  Mode mode, double momentum, double eps) {
    if (eps <= 0.0) throw config_error("batch_norm: eps must be positive");
    if (x.rank() != 2 && x.rank() != 4)
        throw dimension_error("batch_norm: expected rank 2 or 4 input, got " + shape_str(x.shape()));
    const int features = x.dim(1);
    if (gamma.dim(0) != features || beta.dim(0) != features)
        throw dimension_error("batch_norm: gamma/beta length must match feature count " + std::to_string(features));
    if (static_cast<int>(state.run_mean.size()) != features)
        throw dimension_error("batch_norm: running state sized " + std::to_string(state.run_mean.size()) +
                              " for " + std::to_string(features) + " features");
    const int n = x.dim(0);
    if (n < 1) throw contract_error("batch_norm: empty batch");
    const int spatial = (x.rank() == 4) ? x.dim(2) * x.dim(3) : 1;
    const std::size_t nr = static_cast<std::size_t>(n) * static_cast<std::size_t>(spatial);

    // index of element (row i, feature j, spatial s)
    auto idx = [features, spatial](int i, int j, int s) {
        return (static_cast<std::size_t>(i) * features + j) * spatial + s;
    };

    std::vector<double> mean(static_cast<std::size_t>(features), 0.0);
    std::vector<double> var(static_cast<std::size_t>(features), 0.0);
    const double* xs = x.data();
    if (mode == Mode::Train) {
        for (int j = 0; j < features; ++j) {
            double m = 0.0;
            for (int i = 0; i < n; ++i)
                for (int s = 0; s < spatial; ++s) m += xs[idx(i, j, s)];
            m /= static_cast<double>(nr);
            double v = 0.0;
            for (int i = 0; i < n; ++i)
                for (int s = 0; s < spatial; ++s) {
                    const double dv = xs[idx(i, j, s)] - m;
                    v += dv * dv;
                }
            v /= static_cast<double>(nr);
            mean[static_cast<std::size_t>(j)] = m;
            var[static_cast<std::size_t>(j)] = v;
            state.run_mean[static_cast<std::size_t>(j)] = (1.0 - momentum) * state.run_mean[static_cast<std::size_t>(j)] + momentum * m;
            state.run_var[static_cast<std::size_t>(j)] = (1.0 - momentum) * state.run_var[static_cast<std::size_t>(j)] + momentum * v;
        }
    } else {
        mean = state.run_mean;
        var = state.run_var;
    }

    Tensor out = Tensor::zeros(x.shape());
    std::vector<double> inv_std(static_cast<std::size_t>(features));
    for (int j = 0; j < features; ++j) inv_std[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(var[static_cast<std::size_t>(j)] + eps);
    {
        double* o = out.data();
        const double* gms = gamma.data();
        const double* bts = beta.data();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < features; ++j)
                for (int s = 0; s < spatial; ++s) {
                    const std::size_t p = idx(i, j, s);
                    o[p] = gms[j] * (xs[p] - mean[static_cast<std::size_t>(j)]) * inv_std[static_cast<std::size_t>(j)] + bts[j];
                }
    }

    if (grad_wanted({&x, &gamma, &beta})) {
        DPtr xd = x.handle(), gd = gamma.handle(), bd = beta.handle(), od = out.handle();
        const bool train = (mode == Mode::Train);
        record_node(out, [xd, gd, bd, od, mean, inv_std, n, features, spatial, nr, train, idx]() {
            const double* g = od->grad.data();
            const double* xs2 = xd->data.data();
            const double* gm = gd->data.data();
            const double m_count = static_cast<double>(nr);
            for (int j = 0; j < features; ++j) {
                const double mu = mean[static_cast<std::size_t>(j)];
                const double istd = inv_std[static_cast<std::size_t>(j)];
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int s = 0; s < spatial; ++s) {
                        const std::size_t p = idx(i, j, s);
                        const double xhat = (xs2[p] - mu) * istd;
                        sum_dy += g[p];
                        sum_dy_xhat += g[p] * xhat;
                    }
                if (gd->requires_grad) gd->grad[static_cast<std::size_t>(j)] += sum_dy_xhat;
                if (bd->requires_grad) bd->grad[static_cast<std::size_t>(j)] += sum_dy;
                if (xd->requires_grad) {
                    if (train) {
                        for (int i = 0; i < n; ++i)
                            for (int s = 0; s < spatial; ++s) {
                                const std::size_t p = idx(i, j, s);
                                const double xhat = (xs2[p] - mu) * istd;
                                xd->grad[p] += gm[j] * istd / m_count *
                                               (m_count * g[p] - sum_dy - xhat * sum_dy_xhat);
                            }
                    } else {
                        for (int i = 0; i < n; ++i)
                            for (int s = 0; s < spatial; ++s) {
                                const std::size_t p = idx(i, j, s);
                                xd->grad[p] += gm[j] * istd * g[p];
                            }
                    }
                }
            }
        });
    }
    return out;
}

namespace {

template <typename Fwd, typename Bwd>
Tensor elementwise_unary(const Tensor& x, Fwd fwd, Bwd bwd_from_y) {
    Tensor out = Tensor::zeros(x.shape());
    const double* xs = x.data();
    double* o = out.data();
    const std::size_t sz = x.size();
    for (std::size_t i = 0; i < sz; ++i) o[i] = fwd(xs[i]);
    if (grad_wanted({&x})) {
        DPtr xd = x.handle(), od = out.handle();
        record_node(out, [xd, od, bwd_from_y]() {
            if (!xd->requires_grad) return;
            const std::size_t sz2 = od->data.size();
            for (std::size_t i = 0; i < sz2; ++i)
                xd->grad[i] += od->grad[i] * bwd_from_y(xd->data[i], od->data[i]);
        });
    }
    return out;
}

} // namespace

Tensor relu(const Tensor& x) {
    return elementwise_unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double xv, double) { return xv > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
    return elementwise_unary(
        x, [](double v) { return std::tanh(v); },
        [](double, double yv) {
            double d = 1.0 - yv * yv;
            if (g_backward_fault) d *= 1.05;
            return d;
        });
}

Tensor sigmoid(const Tensor& x) {
    return elementwise_unary(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double, double yv) { return yv * (1.0 - yv); });
}

Tensor softmax(const Tensor& x) {
    if (x.rank() < 1) throw dimension_error("softmax: needs at least rank 1");
    const int last = x.dim(x.rank() - 1);
    const std::size_t rows = x.size() / static_cast<std::size_t>(last);
    Tensor out = Tensor::zeros(x.shape());
    const double* xs = x.data();
    double* o = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xs + r * last;
        double* orow = o + r * last;
        double mx = row[0];
        for (int j = 1; j < last; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int j = 0; j < last; ++j) {
            orow[j] = std::exp(row[j] - mx);
            z += orow[j];
        }
        for (int j = 0; j < last; ++j) orow[j] /= z;
    }
    if (grad_wanted({&x})) {
        DPtr xd = x.handle(), od = out.handle();
        record_node(out, [xd, od, last, rows]() {
            if (!xd->requires_grad) return;
            for (std::size_t r = 0; r < rows; ++r) {
                const double* y = od->data.data() + r * last;
                const double* gy = od->grad.data() + r * last;
                double dot = 0.0;
                for (int j = 0; j < last; ++j) dot += gy[j] * y[j];
                for (int j = 0; j < last; ++j) xd->grad[r * last + j] += y[j] * (gy[j] - dot);
            }
        });
    }
    return out;
}

Tensor activation(ActKind kind, const Tensor& x) {
    switch (kind) {
        case ActKind::Relu: return relu(x);
        case ActKind::Tanh: return tanh(x);
        case ActKind::Sigmoid: return sigmoid(x);
        case ActKind::Softmax: return softmax(x);
    }
    throw config_error("activation: unknown kind");
}

Tensor dropout(const Tensor& x, double rate, Rng& rng, Mode mode) {
    if (rate < 0.0 || rate >= 1.0) throw config_error("dropout: rate must be in [0,1)");
    if (mode == Mode::Eval || rate == 0.0) return x;
    const double keep = 1.0 - rate;
    auto mask = std::make_shared<std::vector<double>>(x.size());
    for (double& mv : *mask) mv = (rng.uniform() < keep) ? 1.0 / keep : 0.0;
    Tensor out = Tensor::zeros(x.shape());
    const double* xs = x.data();
    double* o = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = xs[i] * (*mask)[i];
    if (grad_wanted({&x})) {
        DPtr xd = x.handle(), od = out.handle();
        record_node(out, [xd, od, mask]() {
            if (!xd->requires_grad) return;
            for (std::size_t i = 0; i < od->data.size(); ++i) xd->grad[i] += od->grad[i] * (*mask)[i];
        });
    }
    return out;
}

namespace {

template <typename Op, typename BackA, typename BackB>
Tensor elementwise_binary(const Tensor& a, const Tensor& b, const char* name, Op op, BackA ba, BackB bb) {
    if (a.shape() != b.shape())
        throw dimension_error(std::string(name) + ": shapes differ, " + shape_str(a.shape()) + " vs " +
                              shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const double* as = a.data();
    const double* bs = b.data();
    double* o = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) o[i] = op(as[i], bs[i]);
    if (grad_wanted({&a, &b})) {
        DPtr ad = a.handle(), bd = b.handle(), od = out.handle();
        record_node(out, [ad, bd, od, ba, bb]() {
            for (std::size_t i = 0; i < od->data.size(); ++i) {
                const double g = od->grad[i];
                if (ad->requires_grad) ad->grad[i] += g * ba(ad->data[i], bd->data[i]);
                if (bd->requires_grad) bd->grad[i] += g * bb(ad->data[i], bd->data[i]);
            }
        });
    }
    return out;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Tensor scale(const Tensor& x, double s) {
    Tensor out = Tensor::zeros(x.shape());
    const double* xs = x.data();
    double* o = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = xs[i] * s;
    if (grad_wanted({&x})) {
        DPtr xd = x.handle(), od = out.handle();
        record_node(out, [xd, od, s]() {
            if (!xd->requires_grad) return;
            for (std::size_t i = 0; i < od->data.size(); ++i) xd->grad[i] += od->grad[i] * s;
        });
    }
    return out;
}

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x.data()[i];
    Tensor out = Tensor::scalar(acc);
    if (grad_wanted({&x})) {
        DPtr xd = x.handle(), od = out.handle();
        record_node(out, [xd, od]() {
            if (!xd->requires_grad) return;
            const double g = od->grad[0];
            for (double& gv : xd->grad) gv += g;
        });
    }
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw contract_error("concat_cols: no inputs");
    const int n = parts[0].dim(0);
    int total = 0;
    for (const Tensor& p : parts) {
        require_rank(p, 2, "concat_cols input");
        if (p.dim(0) != n)
            throw dimension_error("concat_cols: row counts differ, " + shape_str(parts[0].shape()) + " vs " +
                                  shape_str(p.shape()));
        total += p.dim(1);
    }
    Tensor out = Tensor::zeros({n, total});
    double* o = out.data();
    int col = 0;
    for (const Tensor& p : parts) {
        const int pc = p.dim(1);
        const double* ps = p.data();
        for (int i = 0; i < n; ++i)
            std::memcpy(o + static_cast<std::size_t>(i) * total + col, ps + static_cast<std::size_t>(i) * pc,
                        static_cast<std::size_t>(pc) * sizeof(double));
        col += pc;
    }

    bool want = false;
    for (const Tensor& p : parts)
        if (active_tape() && p.requires_grad()) want = true;
    if (want) {
        std::vector<DPtr> pds;
        pds.reserve(parts.size());
        for (const Tensor& p : parts) pds.push_back(p.handle());
        DPtr od = out.handle();
        record_node(out, [pds, od, n, total]() {
            int col2 = 0;
            for (const DPtr& pd : pds) {
                const int pc = pd->shape[1];
                if (pd->requires_grad) {
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < pc; ++j)
                            pd->grad[static_cast<std::size_t>(i) * pc + j] +=
                                od->grad[static_cast<std::size_t>(i) * total + col2 + j];
                }
                col2 += pc;
            }
        });
    }
    return out;
}

Tensor slice_cols(const Tensor& x, int start, int len) {
    require_rank(x, 2, "slice_cols input");
    const int n = x.dim(0), d = x.dim(1);
    if (start < 0 || len < 1 || start + len > d)
        throw dimension_error("slice_cols: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                              ") out of " + shape_str(x.shape()));
    Tensor out = Tensor::zeros({n, len});
    const double* xs = x.data();
    double* o = out.data();
    for (int i = 0; i < n; ++i)
        std::memcpy(o + static_cast<std::size_t>(i) * len, xs + static_cast<std::size_t>(i) * d + start,
                    static_cast<std::size_t>(len) * sizeof(double));
    if (grad_wanted({&x})) {
        DPtr xd = x.handle(), od = out.handle();
        record_node(out, [xd, od, n, d, start, len]() {
            if (!xd->requires_grad) return;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < len; ++j)
                    xd->grad[static_cast<std::size_t>(i) * d + start + j] += od->grad[static_cast<std::size_t>(i) * len + j];
        });
    }
    return out;
}

Tensor reshape(const Tensor& x, std::vector<int> new_shape) {
    if (shape_numel(new_shape) != x.size())
        throw dimension_error("reshape: " + shape_str(x.shape()) + " to " + shape_str(new_shape) +
                              " changes element count");
    Tensor out = Tensor::from(new_shape, x.values());
    if (grad_wanted({&x})) {
        DPtr xd = x.handle(), od = out.handle();
        record_node(out, [xd, od]() {
            if (!xd->requires_grad) return;
            for (std::size_t i = 0; i < od->grad.size(); ++i) xd->grad[i] += od->grad[i];
        });
    }
    return out;
}

Tensor flatten_rows(const Tensor& x) {
    const int n = x.dim(0);
    const int rest = static_cast<int>(x.size() / static_cast<std::size_t>(n));
    return reshape(x, {n, rest});
}

Tensor repeat_cols(const Tensor& x, int d) {
    require_rank(x, 2, "repeat_cols input");
    if (x.dim(1) != 1) throw dimension_error("repeat_cols: expected n x 1, got " + shape_str(x.shape()));
    const int n = x.dim(0);
    Tensor out = Tensor::zeros({n, d});
    const double* xs = x.data();
    double* o = out.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) o[static_cast<std::size_t>(i) * d + j] = xs[i];
    if (grad_wanted({&x})) {
        DPtr xd = x.handle(), od = out.handle();
        record_node(out, [xd, od, n, d]() {
            if (!xd->requires_grad) return;
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j = 0; j < d; ++j) acc += od->grad[static_cast<std::size_t>(i) * d + j];
                xd->grad[static_cast<std::size_t>(i)] += acc;
            }
        });
    }
    return out;
}

Tensor sum_rows_grouped(const Tensor& x, int m) {
    require_rank(x, 2, "sum_rows_grouped input");
    const int rows = x.dim(0), d = x.dim(1);
    if (m < 1 || rows % m != 0)
        throw dimension_error("sum_rows_grouped: row count " + std::to_string(rows) +
                              " not divisible by group size " + std::to_string(m));
    const int g = rows / m;
    Tensor out = Tensor::zeros({g, d});
    const double* xs = x.data();
    double* o = out.data();
    for (int i = 0; i < g; ++i)
        for (int p = 0; p < m; ++p)
            for (int j = 0; j < d; ++j)
                o[static_cast<std::size_t>(i) * d + j] += xs[(static_cast<std::size_t>(i) * m + p) * d + j];
    if (grad_wanted({&x})) {
        DPtr xd = x.handle(), od = out.handle();
        record_node(out, [xd, od, g, m, d]() {
            if (!xd->requires_grad) return;
            for (int i = 0; i < g; ++i)
                for (int p = 0; p < m; ++p)
                    for (int j = 0; j < d; ++j)
                        xd->grad[(static_cast<std::size_t>(i) * m + p) * d + j] += od->grad[static_cast<std::size_t>(i) * d + j];
        });
    }
    return out;
}

Tensor bce_loss(const Tensor& p, const std::vector<double>& targets) {
    if (p.size() != targets.size())
        throw dimension_error("bce_loss: " + std::to_string(p.size()) + " probabilities vs " +
                              std::to_string(targets.size()) + " targets");
    const std::size_t n = p.size();
    if (n == 0) throw contract_error("bce_loss: empty input");
    double acc = 0.0;
    const double* ps = p.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double pc = std::clamp(ps[i], kLogClamp, 1.0 - kLogClamp);
        acc -= targets[i] * std::log(pc) + (1.0 - targets[i]) * std::log(1.0 - pc);
    }
    Tensor out = Tensor::scalar(acc / static_cast<double>(n));
    if (grad_wanted({&p})) {
        DPtr pd = p.handle(), od = out.handle();
        auto tgt = targets;
        record_node(out, [pd, od, tgt, n]() {
            if (!pd->requires_grad) return;
            const double g = od->grad[0] / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double pv = pd->data[i];
                if (pv < kLogClamp || pv > 1.0 - kLogClamp) continue; // clamped: flat
                pd->grad[i] += g * (-tgt[i] / pv + (1.0 - tgt[i]) / (1.0 - pv));
            }
        });
    }
    return out;
}

Tensor ce_loss(const Tensor& probs, const std::vector<int>& labels) {
    require_rank(probs, 2, "ce_loss probs");
    const int n = probs.dim(0), k = probs.dim(1);
    if (static_cast<std::size_t>(n) != labels.size())
        throw dimension_error("ce_loss: " + std::to_string(n) + " rows vs " + std::to_string(labels.size()) +
                              " labels");
    for (int i = 0; i < n; ++i)
        if (labels[static_cast<std::size_t>(i)] < 0 || labels[static_cast<std::size_t>(i)] >= k)
            throw index_error("ce_loss: label " + std::to_string(labels[static_cast<std::size_t>(i)]) +
                              " out of range for " + std::to_string(k) + " classes (row " + std::to_string(i) + ")");
    double acc = 0.0;
    const double* ps = probs.data();
    for (int i = 0; i < n; ++i) {
        const double pv = std::clamp(ps[static_cast<std::size_t>(i) * k + labels[static_cast<std::size_t>(i)]],
                                     kLogClamp, 1.0 - kLogClamp);
        acc -= std::log(pv);
    }
    Tensor out = Tensor::scalar(acc / static_cast<double>(n));
    if (grad_wanted({&probs})) {
        DPtr pd = probs.handle(), od = out.handle();
        auto lab = labels;
        record_node(out, [pd, od, lab, n, k]() {
            if (!pd->requires_grad) return;
            const double g = od->grad[0] / static_cast<double>(n);
            for (int i = 0; i < n; ++i) {
                const std::size_t pos = static_cast<std::size_t>(i) * k + lab[static_cast<std::size_t>(i)];
                const double pv = pd->data[pos];
                if (pv < kLogClamp || pv > 1.0 - kLogClamp) continue;
                pd->grad[pos] += g * (-1.0 / pv);
            }
        });
    }
    return out;
}

} // namespace ssag
