#include "dmmpose/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dmmpose {

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("access to an unbound Var");
  return tape_->value(id_);
}

Var Tape::record(Tensor value, bool requires_grad, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad && grad_enabled_;
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) { return record(std::move(value), false, nullptr); }

Var Tape::param(const ParamSet& set, ParamId id) {
  if (id >= set.size()) throw std::out_of_range("parameter id out of range");
  if (!grad_enabled_) return constant(set.value(id));
  Binding* binding = nullptr;
  for (auto& b : bindings_)
    if (b.set == &set) binding = &b;
  if (!binding) {
    bindings_.push_back({&set, std::vector<long>(set.size(), -1)});
    binding = &bindings_.back();
  }
  if (binding->leaf.size() < set.size()) binding->leaf.resize(set.size(), -1);
  if (binding->leaf[id] >= 0) return Var(this, static_cast<std::size_t>(binding->leaf[id]));
  Node node;
  node.value = set.value(id);
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  binding->leaf[id] = static_cast<long>(nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_ref(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Tensor::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::invalid_argument("loss does not belong to this tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1)
    throw std::invalid_argument("backward requires a scalar loss, got shape " + shape_string(lv));
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;
  grad_ref(loss.id())(0, 0) = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, i);
  }
}

Gradients Tape::gradients(const ParamSet& set) const {
  Gradients out = zeros_like(set);
  for (const auto& b : bindings_) {
    if (b.set != &set) continue;
    for (std::size_t i = 0; i < b.leaf.size() && i < out.size(); ++i) {
      if (b.leaf[i] < 0) continue;
      const Tensor& g = nodes_[static_cast<std::size_t>(b.leaf[i])].grad;
      if (g.size() != 0) out[i] = g;
    }
  }
  return out;
}

namespace ad {
namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw std::invalid_argument("unbound Var passed to op");
  return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw std::invalid_argument("operands live on different tapes");
  return t;
}

bool needs(const Var& a) { return a.tape()->requires_grad(a); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                                shape_string(b));
}

// Element-wise unary op whose derivative is a function of (input, output).
template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Tape& t = tape_of(a);
  Tensor out = a.value().unaryExpr(fwd);
  const std::size_t ia = a.id();
  return t.record(std::move(out), needs(a), [ia, deriv](Tape& tp, std::size_t self) {
    const Tensor& x = tp.value(ia);
    const Tensor& y = tp.value(self);
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad_ref(ia);
    for (Eigen::Index k = 0; k < g.size(); ++k)
      ga.data()[k] += g.data()[k] * deriv(x.data()[k], y.data()[k]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimension mismatch " + shape_string(a.value()) +
                                " x " + shape_string(b.value()));
  Tensor out = a.value() * b.value();
  const std::size_t ia = a.id(), ib = b.id();
  const bool na = needs(a), nb = needs(b);
  return t.record(std::move(out), na || nb, [ia, ib, na, nb](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (na) tp.grad_ref(ia).noalias() += g * tp.value(ib).transpose();
    if (nb) tp.grad_ref(ib).noalias() += tp.value(ia).transpose() * g;
  });
}

namespace {

Var add_signed(Var a, Var b, double sign) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool broadcast = bv.rows() == 1 && av.rows() != 1 && bv.cols() == av.cols();
  if (!broadcast) require_same_shape(av, bv, sign > 0 ? "add" : "sub");
  Tensor out = broadcast ? Tensor(av.rowwise() + sign * bv.row(0))
                         : Tensor(av + sign * bv);
  const std::size_t ia = a.id(), ib = b.id();
  const bool na = needs(a), nb = needs(b);
  return t.record(std::move(out), na || nb,
                  [ia, ib, na, nb, broadcast, sign](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    if (na) tp.grad_ref(ia) += g;
                    if (nb) {
                      if (broadcast)
                        tp.grad_ref(ib) += sign * g.colwise().sum();
                      else
                        tp.grad_ref(ib) += sign * g;
                    }
                  });
}

}  // namespace

Var add(Var a, Var b) { return add_signed(a, b, 1.0); }
Var sub(Var a, Var b) { return add_signed(a, b, -1.0); }

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value().cwiseProduct(b.value());
  const std::size_t ia = a.id(), ib = b.id();
  const bool na = needs(a), nb = needs(b);
  return t.record(std::move(out), na || nb, [ia, ib, na, nb](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (na) tp.grad_ref(ia) += g.cwiseProduct(tp.value(ib));
    if (nb) tp.grad_ref(ib) += g.cwiseProduct(tp.value(ia));
  });
}

Var scale(Var a, double c) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  return t.record(a.value() * c, needs(a), [ia, c](Tape& tp, std::size_t self) {
    tp.grad_ref(ia) += c * tp.grad(self);
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var one_minus(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  Tensor out = (1.0 - a.value().array()).matrix();
  return t.record(std::move(out), needs(a),
                  [ia](Tape& tp, std::size_t self) { tp.grad_ref(ia) -= tp.grad(self); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp_min(Var a, double lo) {
  return unary(
      a, [lo](double x) { return x < lo ? lo : x; },
      [lo](double x, double) { return x < lo ? 0.0 : 1.0; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return x < lo ? lo : x > hi ? hi : x; },
      [lo, hi](double x, double) { return x < lo || x > hi ? 0.0 : 1.0; });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no operands");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  bool any = false;
  for (const auto& p : parts) {
    if (p.tape() != &t) throw std::invalid_argument("concat_cols: operands on different tapes");
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    cols += p.cols();
    any = any || needs(p);
  }
  Tensor out(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> offsets;
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(c);
    c += p.cols();
  }
  return t.record(std::move(out), any, [ids, offsets](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      Tensor& gk = tp.grad_ref(ids[k]);
      gk += g.middleCols(offsets[k], gk.cols());
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.cols())
    throw std::invalid_argument("slice_cols: range out of bounds");
  Tensor out = a.value().middleCols(start, count);
  const std::size_t ia = a.id();
  return t.record(std::move(out), needs(a), [ia, start, count](Tape& tp, std::size_t self) {
    tp.grad_ref(ia).middleCols(start, count) += tp.grad(self);
  });
}

Var broadcast_rows(Var a, Eigen::Index rows) {
  Tape& t = tape_of(a);
  if (a.rows() != 1) throw std::invalid_argument("broadcast_rows: expected a single row");
  Tensor out = a.value().replicate(rows, 1);
  const std::size_t ia = a.id();
  return t.record(std::move(out), needs(a), [ia](Tape& tp, std::size_t self) {
    tp.grad_ref(ia) += tp.grad(self).colwise().sum();
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  Tensor out(1, 1);
  out(0, 0) = a.value().sum();
  const std::size_t ia = a.id();
  return t.record(std::move(out), needs(a), [ia](Tape& tp, std::size_t self) {
    tp.grad_ref(ia).array() += tp.grad(self)(0, 0);
  });
}

Var row_sum(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.value().rowwise().sum();
  const std::size_t ia = a.id();
  return t.record(std::move(out), needs(a), [ia](Tape& tp, std::size_t self) {
    Tensor& ga = tp.grad_ref(ia);
    ga.colwise() += tp.grad(self).col(0);
  });
}

Var gaussian_log_pdf_rows(Var x, Var mean, Var log_var) {
  Tape& t = tape_of(x, mean);
  tape_of(x, log_var);
  require_same_shape(x.value(), mean.value(), "gaussian_log_pdf");
  require_same_shape(x.value(), log_var.value(), "gaussian_log_pdf");
  const auto& xv = x.value().array();
  const auto& mv = mean.value().array();
  const auto& lv = log_var.value().array();
  constexpr double half_log_2pi = 0.91893853320467274178;
  Tensor terms = (-half_log_2pi - 0.5 * lv - (xv - mv).square() * (-lv).exp() * 0.5).matrix();
  Tensor out = terms.rowwise().sum();
  const std::size_t ix = x.id(), im = mean.id(), il = log_var.id();
  const bool nx = needs(x), nm = needs(mean), nl = needs(log_var);
  return t.record(std::move(out), nx || nm || nl,
                  [ix, im, il, nx, nm, nl](Tape& tp, std::size_t self) {
                    const auto g = tp.grad(self).col(0);
                    const auto xa = tp.value(ix).array();
                    const auto ma = tp.value(im).array();
                    const auto la = tp.value(il).array();
                    const Eigen::ArrayXXd prec = (-la).exp();
                    const Eigen::ArrayXXd diff = xa - ma;
                    // d/dmean = diff / var
                    Eigen::ArrayXXd dmean = diff * prec;
                    dmean.colwise() *= g.array();
                    if (nm) tp.grad_ref(im).array() += dmean;
                    if (nx) tp.grad_ref(ix).array() -= dmean;
                    if (nl) {
                      Eigen::ArrayXXd dlv = -0.5 + 0.5 * diff.square() * prec;
                      dlv.colwise() *= g.array();
                      tp.grad_ref(il).array() += dlv;
                    }
                  });
}

Var gaussian_kl_rows(Var q_mean, Var q_log_var, Var p_mean, Var p_log_var) {
  Tape& t = tape_of(q_mean, q_log_var);
  tape_of(q_mean, p_mean);
  tape_of(q_mean, p_log_var);
  require_same_shape(q_mean.value(), q_log_var.value(), "gaussian_kl");
  require_same_shape(q_mean.value(), p_mean.value(), "gaussian_kl");
  require_same_shape(q_mean.value(), p_log_var.value(), "gaussian_kl");
  const auto qm = q_mean.value().array();
  const auto ql = q_log_var.value().array();
  const auto pm = p_mean.value().array();
  const auto pl = p_log_var.value().array();
  const Eigen::ArrayXXd ratio = ql - pl;
  Tensor terms = (0.5 * (ratio.unaryExpr([](double v) { return std::expm1(v) - v; }) +
                         (qm - pm).square() * (-pl).exp()))
                     .matrix();
  Tensor out = terms.rowwise().sum();
  const std::size_t iqm = q_mean.id(), iql = q_log_var.id(), ipm = p_mean.id(), ipl = p_log_var.id();
  const bool nqm = needs(q_mean), nql = needs(q_log_var), npm = needs(p_mean),
             npl = needs(p_log_var);
  return t.record(
      std::move(out), nqm || nql || npm || npl,
      [iqm, iql, ipm, ipl, nqm, nql, npm, npl](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).col(0).array();
        const auto qm = tp.value(iqm).array();
        const auto ql = tp.value(iql).array();
        const auto pm = tp.value(ipm).array();
        const auto pl = tp.value(ipl).array();
        const Eigen::ArrayXXd pprec = (-pl).exp();
        const Eigen::ArrayXXd qvar = ql.exp();
        const Eigen::ArrayXXd diff = qm - pm;
        if (nqm || npm) {
          Eigen::ArrayXXd dm = diff * pprec;
          dm.colwise() *= g;
          if (nqm) tp.grad_ref(iqm).array() += dm;
          if (npm) tp.grad_ref(ipm).array() -= dm;
        }
        if (nql) {
          Eigen::ArrayXXd d = 0.5 * (qvar * pprec - 1.0);
          d.colwise() *= g;
          tp.grad_ref(iql).array() += d;
        }
        if (npl) {
          Eigen::ArrayXXd d = 0.5 * (1.0 - (qvar + diff.square()) * pprec);
          d.colwise() *= g;
          tp.grad_ref(ipl).array() += d;
        }
      });
}

Var reparam_sample(Var mean, Var log_var, const Tensor& eps) {
  Tape& t = tape_of(mean, log_var);
  require_same_shape(mean.value(), eps, "reparam_sample");
  require_same_shape(mean.value(), log_var.value(), "reparam_sample");
  Var sd = exp(scale(log_var, 0.5));
  return add(mean, mul(sd, t.constant(eps)));
}

Var softmax_cross_entropy_rows(Var logits, std::span<const int> labels) {
  Tape& t = tape_of(logits);
  const Tensor& z = logits.value();
  if (static_cast<Eigen::Index>(labels.size()) != z.rows())
    throw std::invalid_argument("softmax_cross_entropy: label count does not match rows");
  Tensor probs(z.rows(), z.cols());
  Tensor out(z.rows(), 1);
  std::vector<int> lab(labels.begin(), labels.end());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const int y = lab[static_cast<std::size_t>(r)];
    if (y < 0 || y >= z.cols()) throw std::invalid_argument("softmax_cross_entropy: label out of range");
    const double m = z.row(r).maxCoeff();
    const auto e = (z.row(r).array() - m).exp();
    const double s = e.sum();
    probs.row(r) = e / s;
    out(r, 0) = -(z(r, y) - m - std::log(s));
  }
  const std::size_t il = logits.id();
  return t.record(std::move(out), needs(logits),
                  [il, probs = std::move(probs), lab = std::move(lab)](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad(self);
                    Tensor& gl = tp.grad_ref(il);
                    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
                      gl.row(r) += g(r, 0) * probs.row(r);
                      gl(r, lab[static_cast<std::size_t>(r)]) -= g(r, 0);
                    }
                  });
}

}  // namespace ad
}  // namespace dmmpose
