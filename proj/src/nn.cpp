#include "releaseflow/nn.hpp"

#include <cmath>
#include <string>

#include "releaseflow/error.hpp"

namespace releaseflow::nn {

void MlpArchitecture::validate() const {
  require(input_dim == 2, "the network takes exactly two inputs (x, t)");
  require(output_dim == 1, "the network has exactly one output");
  require(hidden_layers >= 0, "hidden_layers must be >= 0");
  require(neurons_per_layer >= 1, "neurons_per_layer must be >= 1");
}

Eigen::Index MlpArchitecture::offset(int layer) const noexcept {
  Eigen::Index off = 0;
  for (int l = 0; l < layer; ++l) {
    off += static_cast<Eigen::Index>(fan_in(l) + 1) * fan_out(l);
  }
  return off;
}

std::uint64_t MlpArchitecture::digest() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int v : {input_dim, hidden_layers, neurons_per_layer, output_dim}) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) {
      h ^= (u >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

MlpParams::MlpParams(const MlpArchitecture& arch)
    : arch_(arch), values_(Eigen::VectorXd::Zero(arch.param_count())) {
  arch_.validate();
}

MlpParams::MlpParams(const MlpArchitecture& arch, Eigen::VectorXd values)
    : arch_(arch), values_(std::move(values)) {
  arch_.validate();
  require(values_.size() == arch_.param_count(),
          "parameter vector has length " + std::to_string(values_.size()) + ", expected " +
              std::to_string(arch_.param_count()));
}

Eigen::Map<const Eigen::MatrixXd> MlpParams::weight(int layer) const {
  return {values_.data() + arch_.offset(layer), arch_.fan_out(layer), arch_.fan_in(layer)};
}
Eigen::Map<Eigen::MatrixXd> MlpParams::weight(int layer) {
  return {values_.data() + arch_.offset(layer), arch_.fan_out(layer), arch_.fan_in(layer)};
}
Eigen::Map<const Eigen::VectorXd> MlpParams::bias(int layer) const {
  return {values_.data() + arch_.offset(layer) +
              static_cast<Eigen::Index>(arch_.fan_out(layer)) * arch_.fan_in(layer),
          arch_.fan_out(layer)};
}
Eigen::Map<Eigen::VectorXd> MlpParams::bias(int layer) {
  return {values_.data() + arch_.offset(layer) +
              static_cast<Eigen::Index>(arch_.fan_out(layer)) * arch_.fan_in(layer),
          arch_.fan_out(layer)};
}

MlpParams init_params(const MlpArchitecture& arch, std::uint64_t seed) {
  MlpParams p(arch);
  Rng rng(seed);
  for (int l = 0; l < arch.layer_count(); ++l) {
    const double stddev = std::sqrt(2.0 / (arch.fan_in(l) + arch.fan_out(l)));
    auto w = p.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = stddev * rng.normal();
    }
  }
  return p;
}

DropoutMask DropoutMask::sample(const MlpArchitecture& arch, double p_keep, Rng& rng) {
  require(p_keep > 0.0 && p_keep <= 1.0, "p_keep must lie in (0, 1]");
  DropoutMask m{p_keep, {}};
  m.keep.reserve(static_cast<std::size_t>(arch.hidden_layers));
  for (int l = 0; l < arch.hidden_layers; ++l) {
    Eigen::VectorXd k(arch.neurons_per_layer);
    for (Eigen::Index i = 0; i < k.size(); ++i) k[i] = rng.bernoulli(p_keep) ? 1.0 : 0.0;
    m.keep.push_back(std::move(k));
  }
  return m;
}

DropoutMask DropoutMask::sample(const MlpArchitecture& arch, double p_keep, std::uint64_t seed) {
  Rng rng(seed);
  return sample(arch, p_keep, rng);
}

DropoutMask DropoutMask::all_kept(const MlpArchitecture& arch, double p_keep) {
  require(p_keep > 0.0 && p_keep <= 1.0, "p_keep must lie in (0, 1]");
  DropoutMask m{p_keep, {}};
  for (int l = 0; l < arch.hidden_layers; ++l) {
    m.keep.push_back(Eigen::VectorXd::Ones(arch.neurons_per_layer));
  }
  return m;
}

Eigen::ArrayXXd fast_tanh(const Eigen::ArrayXXd& a) {
  // 1 - 2 / (exp(2a) + 1); Eigen vectorizes exp for doubles but not tanh.
  return 1.0 - 2.0 / ((2.0 * a).exp() + 1.0);
}

Tape::Tape(const MlpParams& params, const Eigen::Ref<const Eigen::VectorXd>& xs,
           const Eigen::Ref<const Eigen::VectorXd>& ts, bool with_derivatives,
           const DropoutMask* mask)
    : params_(params), n_(xs.size()), streams_(with_derivatives ? 4 : 1) {
  require(xs.size() == ts.size(), "x and t batches differ in length");
  const MlpArchitecture& arch = params.arch();
  const int hidden = arch.hidden_layers;
  if (mask != nullptr) {
    require(static_cast<int>(mask->keep.size()) == hidden,
            "dropout mask does not match the architecture");
  }
  const Eigen::Index n = n_;
  const Eigen::Index width = streams_ * n;

  Eigen::MatrixXd input = Eigen::MatrixXd::Zero(2, width);
  input.row(0).head(n) = xs.transpose();
  input.row(1).head(n) = ts.transpose();
  if (with_derivatives) {
    input.row(0).segment(n, n).setOnes();      // dx/dx
    input.row(1).segment(2 * n, n).setOnes();  // dt/dt
  }
  post_.push_back(std::move(input));

  for (int l = 0; l <= hidden; ++l) {
    Eigen::MatrixXd z = params.weight(l) * post_.back();
    z.leftCols(n).colwise() += params.bias(l);
    if (l == hidden) {
      output_ = std::move(z);
      break;
    }
    Eigen::VectorXd c;
    if (mask != nullptr) c = mask->keep[static_cast<std::size_t>(l)] / mask->p_keep;

    Eigen::ArrayXXd th = fast_tanh(z.leftCols(n).array());
    Eigen::MatrixXd h(z.rows(), width);
    h.leftCols(n) = th.matrix();
    if (with_derivatives) {
      const Eigen::ArrayXXd s = 1.0 - th.square();
      const Eigen::ArrayXXd q = -2.0 * th * s;
      const auto zx = z.middleCols(n, n).array();
      h.middleCols(n, n) = (s * zx).matrix();
      h.middleCols(2 * n, n) = (s * z.middleCols(2 * n, n).array()).matrix();
      h.middleCols(3 * n, n) = (s * z.middleCols(3 * n, n).array() + q * zx.square()).matrix();
    }
    if (mask != nullptr) h = c.asDiagonal() * h;
    scale_.push_back(std::move(c));
    tanh_.push_back(th.matrix());
    pre_.push_back(std::move(z));
    post_.push_back(std::move(h));
  }
}

Eigen::RowVectorXd Tape::u() const { return output_.leftCols(n_); }

FieldDerivatives Tape::derivatives() const {
  require(has_derivatives(), "tape was recorded without derivative streams");
  return {output_.leftCols(n_), output_.middleCols(n_, n_), output_.middleCols(2 * n_, n_),
          output_.middleCols(3 * n_, n_)};
}

void Tape::backward(const Eigen::Ref<const Eigen::RowVectorXd>& adj_u,
                    Eigen::Ref<Eigen::VectorXd> grad) const {
  const Eigen::RowVectorXd none;
  backward(adj_u, none, none, grad);
}

void Tape::backward(const Eigen::Ref<const Eigen::RowVectorXd>& adj_u,
                    const Eigen::Ref<const Eigen::RowVectorXd>& adj_ut,
                    const Eigen::Ref<const Eigen::RowVectorXd>& adj_uxx,
                    Eigen::Ref<Eigen::VectorXd> grad) const {
  const MlpParams& params = params_;
  const MlpArchitecture& arch = params.arch();
  const Eigen::Index n = n_;
  require(adj_u.size() == n, "adjoint length does not match the batch");
  require(grad.size() == arch.param_count(), "gradient buffer has the wrong length");
  const bool derivs = has_derivatives();
  if (!derivs) {
    require(adj_ut.size() == 0 && adj_uxx.size() == 0,
            "derivative adjoints need a tape recorded with derivatives");
  } else {
    require(adj_ut.size() == n && adj_uxx.size() == n, "adjoint length does not match the batch");
  }

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(1, streams_ * n);
  g.leftCols(n) = adj_u;
  if (derivs) {
    g.middleCols(2 * n, n) = adj_ut;
    g.middleCols(3 * n, n) = adj_uxx;
  }

  for (int l = arch.hidden_layers; l >= 0; --l) {
    const Eigen::Index off = arch.offset(l);
    const Eigen::Index w_size = static_cast<Eigen::Index>(arch.fan_out(l)) * arch.fan_in(l);
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + off, arch.fan_out(l), arch.fan_in(l));
    gw.noalias() += g * post_[static_cast<std::size_t>(l)].transpose();
    grad.segment(off + w_size, arch.fan_out(l)) += g.leftCols(n).rowwise().sum();
    if (l == 0) break;

    const auto hidx = static_cast<std::size_t>(l - 1);
    Eigen::MatrixXd hbar = params.weight(l).transpose() * g;
    if (scale_[hidx].size() > 0) hbar = scale_[hidx].asDiagonal() * hbar;

    const Eigen::ArrayXXd th = tanh_[hidx].array();
    const Eigen::ArrayXXd s = 1.0 - th.square();
    Eigen::MatrixXd next(hbar.rows(), hbar.cols());
    if (!derivs) {
      next = (hbar.array() * s).matrix();
    } else {
      const Eigen::ArrayXXd q = -2.0 * th * s;
      const Eigen::ArrayXXd p = s * (6.0 * th.square() - 2.0);
      const Eigen::MatrixXd& z = pre_[hidx];
      const auto zx = z.middleCols(n, n).array();
      const auto zt = z.middleCols(2 * n, n).array();
      const auto zxx = z.middleCols(3 * n, n).array();
      const auto hb = hbar.leftCols(n).array();
      const auto hbx = hbar.middleCols(n, n).array();
      const auto hbt = hbar.middleCols(2 * n, n).array();
      const auto hbxx = hbar.middleCols(3 * n, n).array();
      next.leftCols(n) = (hb * s + (hbx * zx + hbt * zt + hbxx * zxx) * q + hbxx * zx.square() * p).matrix();
      next.middleCols(n, n) = (hbx * s + 2.0 * hbxx * q * zx).matrix();
      next.middleCols(2 * n, n) = (hbt * s).matrix();
      next.middleCols(3 * n, n) = (hbxx * s).matrix();
    }
    g = std::move(next);
  }
}

Eigen::RowVectorXd forward(const MlpParams& params, const Eigen::Ref<const Eigen::VectorXd>& xs,
                           const Eigen::Ref<const Eigen::VectorXd>& ts, const DropoutMask* mask) {
  return Tape(params, xs, ts, false, mask).u();
}

double forward(const MlpParams& params, double x, double t, const DropoutMask* mask) {
  Eigen::VectorXd xs(1), ts(1);
  xs << x;
  ts << t;
  return forward(params, xs, ts, mask)[0];
}

Eigen::VectorXd grad_params(const MlpParams& params, const Eigen::Ref<const Eigen::VectorXd>& xs,
                            const Eigen::Ref<const Eigen::VectorXd>& ts,
                            const Eigen::Ref<const Eigen::RowVectorXd>& adjoints,
                            const DropoutMask* mask) {
  Tape tape(params, xs, ts, false, mask);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.arch().param_count());
  tape.backward(adjoints, grad);
  return grad;
}

FieldDerivatives input_derivatives(const MlpParams& params,
                                   const Eigen::Ref<const Eigen::VectorXd>& xs,
                                   const Eigen::Ref<const Eigen::VectorXd>& ts,
                                   const DropoutMask* mask) {
  return Tape(params, xs, ts, true, mask).derivatives();
}

PointDerivatives input_derivatives(const MlpParams& params, double x, double t) {
  Eigen::VectorXd xs(1), ts(1);
  xs << x;
  ts << t;
  const FieldDerivatives d = input_derivatives(params, xs, ts);
  return {d.u[0], d.u_t[0], d.u_xx[0]};
}

}  // namespace releaseflow::nn
