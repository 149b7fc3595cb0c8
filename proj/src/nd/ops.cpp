#include "mmei/nd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

#include "mmei/error.hpp"

namespace mmei::nd {
namespace {

Tape* common_tape(std::initializer_list<const Tensor*> xs) {
    Tape* tape = nullptr;
    for (const Tensor* x : xs) {
        if (!x->tracked()) continue;
        if (tape && tape != x->tape()) throw ParameterError("op mixes tensors from different tapes");
        tape = x->tape();
    }
    return tape;
}

std::vector<NodeId> tracked_ids(std::initializer_list<const Tensor*> xs) {
    std::vector<NodeId> ids;
    for (const Tensor* x : xs) {
        if (x->tracked()) ids.push_back(x->node());
    }
    return ids;
}

void require_2d(const Tensor& x, const char* op) {
    if (x.rank() != 2) throw ShapeError(std::string(op) + ": expected a 2-D tensor, got " + shape_str(x.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

// C[m×n] += A[m×k]·B[k×n], with optional transposes on A or B.
void gemm_acc(std::span<const double> a, std::span<const double> b, std::span<double> c,
              std::size_t m, std::size_t k, std::size_t n, bool trans_a, bool trans_b) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = trans_a ? a[p * m + i] : a[i * k + p];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                const double bv = trans_b ? b[j * k + p] : b[p * n + j];
                c[i * n + j] += av * bv;
            }
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    std::vector<double> out(m * n, 0.0);
    gemm_acc(a.data(), b.data(), out, m, k, n, false, false);
    Tensor result({m, n}, std::move(out));

    Tape* tape = common_tape({&a, &b});
    if (!tape) return result;
    const NodeId ia = a.node(), ib = b.node();
    return tape->record(std::move(result), tracked_ids({&a, &b}),
                        [av = a.values(), bv = b.values(), ia, ib, m, k, n](std::span<const double> g, GradBuffer& grads) {
                            if (ia != kUntracked) gemm_acc(g, bv, grads.at(ia), m, n, k, false, true);
                            if (ib != kUntracked) gemm_acc(av, g, grads.at(ib), k, m, n, true, false);
                        });
}

Tensor transpose(const Tensor& x) {
    require_2d(x, "transpose");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x.data()[i * n + j];
    Tensor result({n, m}, std::move(out));
    if (!x.tracked()) return result;
    const NodeId ix = x.node();
    return x.tape()->record(std::move(result), {ix}, [ix, m, n](std::span<const double> g, GradBuffer& grads) {
        auto gx = grads.at(ix);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[j * m + i];
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    Tensor result(a.shape(), std::move(out));
    Tape* tape = common_tape({&a, &b});
    if (!tape) return result;
    const NodeId ia = a.node(), ib = b.node();
    return tape->record(std::move(result), tracked_ids({&a, &b}), [ia, ib](std::span<const double> g, GradBuffer& grads) {
        for (NodeId id : {ia, ib}) {
            if (id == kUntracked) continue;
            auto gx = grads.at(id);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    Tensor result(a.shape(), std::move(out));
    Tape* tape = common_tape({&a, &b});
    if (!tape) return result;
    const NodeId ia = a.node(), ib = b.node();
    return tape->record(std::move(result), tracked_ids({&a, &b}), [ia, ib](std::span<const double> g, GradBuffer& grads) {
        if (ia != kUntracked) {
            auto ga = grads.at(ia);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (ib != kUntracked) {
            auto gb = grads.at(ib);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    Tensor result(a.shape(), std::move(out));
    Tape* tape = common_tape({&a, &b});
    if (!tape) return result;
    const NodeId ia = a.node(), ib = b.node();
    return tape->record(std::move(result), tracked_ids({&a, &b}),
                        [av = a.values(), bv = b.values(), ia, ib](std::span<const double> g, GradBuffer& grads) {
                            if (ia != kUntracked) {
                                auto ga = grads.at(ia);
                                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                            }
                            if (ib != kUntracked) {
                                auto gb = grads.at(ib);
                                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                            }
                        });
}

Tensor scale(const Tensor& x, double c) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * x.data()[i];
    Tensor result(x.shape(), std::move(out));
    if (!x.tracked()) return result;
    const NodeId ix = x.node();
    return x.tape()->record(std::move(result), {ix}, [ix, c](std::span<const double> g, GradBuffer& grads) {
        auto gx = grads.at(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += c * g[i];
    });
}

Tensor add_row(const Tensor& x, const Tensor& row) {
    require_2d(x, "add_row");
    require_2d(row, "add_row");
    const std::size_t m = x.rows(), n = x.cols();
    if (row.rows() != 1 || row.cols() != n) {
        throw ShapeError("add_row: cannot broadcast " + shape_str(row.shape()) + " over " + shape_str(x.shape()));
    }
    std::vector<double> out(x.values());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += row.data()[j];
    Tensor result(x.shape(), std::move(out));
    Tape* tape = common_tape({&x, &row});
    if (!tape) return result;
    const NodeId ix = x.node(), ir = row.node();
    return tape->record(std::move(result), tracked_ids({&x, &row}), [ix, ir, m, n](std::span<const double> g, GradBuffer& grads) {
        if (ix != kUntracked) {
            auto gx = grads.at(ix);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (ir != kUntracked) {
            auto gr = grads.at(ir);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
        }
    });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, x.data()[i]);
    Tensor result(x.shape(), std::move(out));
    if (!x.tracked()) return result;
    const NodeId ix = x.node();
    return x.tape()->record(std::move(result), {ix}, [xv = x.values(), ix](std::span<const double> g, GradBuffer& grads) {
        auto gx = grads.at(ix);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (xv[i] > 0.0) gx[i] += g[i];
    });
}

Tensor softmax_rows(const Tensor& x) {
    require_2d(x, "softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = x.data().data() + i * n;
        const double mx = *std::max_element(row, row + n);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = std::exp(row[j] - mx);
            z += out[i * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
    }
    Tensor result({m, n}, out);
    if (!x.tracked()) return result;
    const NodeId ix = x.node();
    return x.tape()->record(std::move(result), {ix}, [y = std::move(out), ix, m, n](std::span<const double> g, GradBuffer& grads) {
        auto gx = grads.at(ix);
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
            for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
        }
    });
}

Tensor neg_log_sigmoid(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = x.data()[i];
        out[i] = std::max(-v, 0.0) + std::log1p(std::exp(-std::abs(v)));
    }
    Tensor result(x.shape(), std::move(out));
    if (!x.tracked()) return result;
    const NodeId ix = x.node();
    return x.tape()->record(std::move(result), {ix}, [xv = x.values(), ix](std::span<const double> g, GradBuffer& grads) {
        auto gx = grads.at(ix);
        for (std::size_t i = 0; i < g.size(); ++i) {
            // d/dx softplus(-x) = -σ(-x)
            const double v = xv[i];
            const double sig_neg = v >= 0 ? std::exp(-v) / (1.0 + std::exp(-v)) : 1.0 / (1.0 + std::exp(v));
            gx[i] -= g[i] * sig_neg;
        }
    });
}

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    Tensor result = Tensor::scalar(s);
    if (!x.tracked()) return result;
    const NodeId ix = x.node();
    return x.tape()->record(std::move(result), {ix}, [ix](std::span<const double> g, GradBuffer& grads) {
        for (double& v : grads.at(ix)) v += g[0];
    });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor mean_rows(const Tensor& x) {
    require_2d(x, "mean_rows");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += x.data()[i * n + j];
    for (double& v : out) v /= static_cast<double>(m);
    Tensor result({1, n}, std::move(out));
    if (!x.tracked()) return result;
    const NodeId ix = x.node();
    return x.tape()->record(std::move(result), {ix}, [ix, m, n](std::span<const double> g, GradBuffer& grads) {
        auto gx = grads.at(ix);
        const double w = 1.0 / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += w * g[j];
    });
}

Tensor rows_dot(const Tensor& a, const Tensor& b) {
    require_2d(a, "rows_dot");
    require_same_shape(a, b, "rows_dot");
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i] += a.data()[i * n + j] * b.data()[i * n + j];
    Tensor result({m, 1}, std::move(out));
    Tape* tape = common_tape({&a, &b});
    if (!tape) return result;
    const NodeId ia = a.node(), ib = b.node();
    return tape->record(std::move(result), tracked_ids({&a, &b}),
                        [av = a.values(), bv = b.values(), ia, ib, m, n](std::span<const double> g, GradBuffer& grads) {
                            if (ia != kUntracked) {
                                auto ga = grads.at(ia);
                                for (std::size_t i = 0; i < m; ++i)
                                    for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i] * bv[i * n + j];
                            }
                            if (ib != kUntracked) {
                                auto gb = grads.at(ib);
                                for (std::size_t i = 0; i < m; ++i)
                                    for (std::size_t j = 0; j < n; ++j) gb[i * n + j] += g[i] * av[i * n + j];
                            }
                        });
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    require_2d(parts[0], "concat_rows");
    const std::size_t n = parts[0].cols();
    std::size_t m = 0;
    Tape* tape = nullptr;
    for (const Tensor& p : parts) {
        require_2d(p, "concat_rows");
        if (p.cols() != n) throw ShapeError("concat_rows: width mismatch " + shape_str(parts[0].shape()) + " vs " + shape_str(p.shape()));
        m += p.rows();
        if (p.tracked()) {
            if (tape && tape != p.tape()) throw ParameterError("op mixes tensors from different tapes");
            tape = p.tape();
        }
    }
    std::vector<double> out;
    out.reserve(m * n);
    std::vector<NodeId> inputs;
    std::vector<std::pair<NodeId, std::size_t>> segments;  // (node, offset)
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        out.insert(out.end(), p.data().begin(), p.data().end());
        if (p.tracked()) {
            inputs.push_back(p.node());
            segments.emplace_back(p.node(), offset);
        }
        offset += p.size();
    }
    Tensor result({m, n}, std::move(out));
    if (!tape) return result;
    return tape->record(std::move(result), std::move(inputs), [segments](std::span<const double> g, GradBuffer& grads) {
        for (const auto& [id, off] : segments) {
            auto gx = grads.at(id);
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[off + i];
        }
    });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
    require_2d(x, "gather_rows");
    if (rows.empty()) throw ShapeError("gather_rows: empty index list");
    const std::size_t n = x.cols();
    std::vector<double> out;
    out.reserve(rows.size() * n);
    for (std::size_t r : rows) {
        if (r >= x.rows()) throw IndexError("gather_rows: row " + std::to_string(r) + " out of range for " + shape_str(x.shape()));
        auto row = x.data().subspan(r * n, n);
        out.insert(out.end(), row.begin(), row.end());
    }
    Tensor result({rows.size(), n}, std::move(out));
    if (!x.tracked()) return result;
    const NodeId ix = x.node();
    return x.tape()->record(std::move(result), {ix},
                            [idx = std::vector<std::size_t>(rows.begin(), rows.end()), ix, n](std::span<const double> g, GradBuffer& grads) {
                                auto gx = grads.at(ix);
                                for (std::size_t i = 0; i < idx.size(); ++i)
                                    for (std::size_t j = 0; j < n; ++j) gx[idx[i] * n + j] += g[i * n + j];
                            });
}

Tensor cross_entropy(const Tensor& probs, std::span<const std::size_t> labels) {
    require_2d(probs, "cross_entropy");
    const std::size_t m = probs.rows(), c = probs.cols();
    if (labels.size() != m) {
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(m) + " rows");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (labels[i] >= c) {
            throw IndexError("cross_entropy: label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(c) + ")");
        }
        total -= std::log(std::max(probs.data()[i * c + labels[i]], kLogClamp));
    }
    Tensor result = Tensor::scalar(total / static_cast<double>(m));
    if (!probs.tracked()) return result;
    const NodeId ip = probs.node();
    return probs.tape()->record(
        std::move(result), {ip},
        [pv = probs.values(), lab = std::vector<std::size_t>(labels.begin(), labels.end()), ip, m, c](std::span<const double> g, GradBuffer& grads) {
            auto gp = grads.at(ip);
            for (std::size_t i = 0; i < m; ++i) {
                const double p = pv[i * c + lab[i]];
                if (p > kLogClamp) gp[i * c + lab[i]] -= g[0] / (p * static_cast<double>(m));
            }
        });
}

Tensor dropout(const Tensor& x, double p, Mode mode, std::mt19937_64& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw ParameterError("dropout probability must lie in [0, 1), got " + std::to_string(p));
    if (mode == Mode::Eval || p == 0.0) return x;
    std::bernoulli_distribution keep(1.0 - p);
    const double s = 1.0 / (1.0 - p);
    std::vector<double> mask(x.size());
    for (double& v : mask) v = keep(rng) ? s : 0.0;
    return mul(x, Tensor(x.shape(), std::move(mask)));
}

}  // namespace mmei::nd
